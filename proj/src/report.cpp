#include "lideval/report.hpp"

#include "lideval/csv.hpp"
#include "lideval/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace lideval::report {

namespace fs = std::filesystem;
using nlohmann::json;

Format format_from_string(std::string_view s)
{
    if (s == "md" || s == "markdown") return Format::markdown;
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    throw ValidationError(fmt::format("unknown report format '{}' (expected md|csv|json)", s));
}

namespace {

std::string cell_for(const eval::IndicatorColumn& c, double v)
{
    if (c.id == "peak_delay" && c.scaling != eval::Scaling::normalized) {
        return csv::fixed(v, 0);
    }
    if (c.scaling == eval::Scaling::normalized) {
        return csv::fixed(v, 3);
    }
    if (c.id.ends_with("_reduction")) {
        return csv::fixed(v, 1);
    }
    return csv::fixed(v, 3);
}

Table land_use_table(const project::ProjectConfig& cfg, const project::PipelineResult& res)
{
    Table t{"land_use_runoff", "Runoff by land use at the design depth",
            {"no", "land_use", "runoff_coefficient", "area_ha", "runoff_m3"},
            {}};
    if (!res.sizing) {
        return t;
    }
    // Land uses merged by name across subcatchments, first appearance order.
    std::vector<hydrology::LandUse> merged;
    for (const auto& sc : cfg.subcatchments) {
        for (const auto& u : sc.land_uses) {
            auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& m) { return m.name == u.name; });
            if (it == merged.end()) {
                merged.push_back(u);
            } else if (std::abs(it->runoff_coefficient - u.runoff_coefficient) < 1e-12) {
                it->area_ha += u.area_ha;
            } else {
                merged.push_back(u);
            }
        }
    }
    const double h = cfg.sizing.target_depth_mm;
    for (std::size_t i = 0; i < merged.size(); ++i) {
        const auto& u = merged[i];
        t.rows.push_back({std::to_string(i + 1), u.name, csv::fixed(u.runoff_coefficient, 2), csv::fixed(u.area_ha, 2),
                          csv::fixed(hydrology::runoff_volume(u.runoff_coefficient, h, u.area_ha), 0)});
    }
    t.rows.push_back({"", "total", csv::fixed(res.sizing->runoff_coeff, 4), csv::fixed(res.sizing->catchment_area_ha, 2),
                      csv::fixed(res.sizing->design_volume_m3, 0)});
    return t;
}

Table scenario_table(const project::ProjectConfig& cfg, const project::PipelineResult& res)
{
    Table t{"scenario_areas", "Facility footprint per scenario (ha) and static control capacity", {"scenario"}, {}};
    for (const auto k : lid::all_kinds) {
        t.header.emplace_back(lid::to_string(k));
    }
    for (const auto* h : {"total_ha", "capacity_m3", "required_m3", "needs_redesign"}) {
        t.header.emplace_back(h);
    }
    for (const auto& sc : cfg.scenarios) {
        std::vector<std::string> row{sc.name};
        const auto areas = sc.area_by_kind();
        for (const auto k : lid::all_kinds) {
            const auto it = areas.find(k);
            row.push_back(csv::fixed(it == areas.end() ? 0.0 : it->second, 3));
        }
        row.push_back(csv::fixed(sc.total_area_ha(), 3));
        const auto c = std::find_if(res.compliance.begin(), res.compliance.end(),
                                    [&](const auto& x) { return x.scenario == sc.name; });
        if (c != res.compliance.end()) {
            row.push_back(csv::fixed(c->capacity_m3, 0));
            row.push_back(csv::fixed(c->required_m3, 0));
            row.push_back(c->needs_redesign ? "yes" : "no");
        } else {
            row.push_back(csv::fixed(lid::control_capacity(sc, cfg.catalog), 0));
            row.push_back("");
            row.push_back("");
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table weight_table(const project::PipelineResult& res)
{
    Table t{"weights", "Indicator weights", {"node", "parent", "local_weight", "global_weight", "consistency_ratio"}, {}};
    const auto& tree = res.tree;
    std::function<void(const WeightNode&, const std::string&)> visit = [&](const WeightNode& n,
                                                                           const std::string& parent) {
        std::string cr;
        for (const auto& c : res.consistency) {
            if (c.node == n.name && c.report.cr_defined) {
                cr = csv::fixed(c.report.cr, 3);
            }
        }
        t.rows.push_back({n.name, parent, csv::fixed(parent.empty() ? 1.0 : n.weight, 3),
                          csv::fixed(tree.global_weight(n.name), 3), cr});
        for (const auto& c : n.children) {
            visit(c, n.name);
        }
    };
    if (!tree.root().name.empty()) {
        visit(tree.root(), "");
    }
    return t;
}

Table indicator_rows(std::string name, std::string title, const std::vector<std::string>& scenarios,
                     const std::vector<eval::IndicatorColumn>& cols)
{
    Table t{std::move(name), std::move(title), {"scenario"}, {}};
    for (const auto& c : cols) {
        t.header.push_back(c.id);
    }
    for (std::size_t r = 0; r < scenarios.size(); ++r) {
        std::vector<std::string> row{scenarios[r]};
        for (const auto& c : cols) {
            row.push_back(cell_for(c, c.values[r]));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table benefit_table(const project::PipelineResult& res)
{
    Table t{"benefits", "Individual and comprehensive benefits", {"scenario"}, {}};
    const auto& root = res.tree.root();
    for (const auto& c : root.children) {
        t.header.push_back(c.name);
    }
    t.header.push_back(root.name.empty() ? "comprehensive" : root.name);
    t.header.push_back("rank");
    const auto& rep = res.report;
    for (std::size_t s = 0; s < rep.scenarios.size(); ++s) {
        std::vector<std::string> row{rep.scenarios[s]};
        for (const auto& c : root.children) {
            row.push_back(csv::fixed(rep.scores(c.name)[s], 3));
        }
        row.push_back(csv::fixed(rep.scores(root.name)[s], 3));
        const auto& order = rep.ranking.order;
        row.push_back(std::to_string(std::find(order.begin(), order.end(), rep.scenarios[s]) - order.begin() + 1));
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string csv_cell(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

void write_text(const fs::path& path, const std::string& body)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    }
}

} // namespace

std::vector<Table> build_tables(const project::ProjectConfig& cfg, const project::PipelineResult& res)
{
    std::vector<Table> out;
    out.push_back(land_use_table(cfg, res));
    out.push_back(scenario_table(cfg, res));
    out.push_back(weight_table(res));
    out.push_back(indicator_rows("raw_indicators", "Indicator values before normalisation", res.report.scenarios,
                                 res.raw.columns()));
    out.push_back(indicator_rows("normalized_indicators", "Normalised indicator values", res.report.scenarios,
                                 res.report.normalized.columns()));
    out.push_back(benefit_table(res));
    return out;
}

Table indicator_table(const eval::IndicatorTable& table, std::string name, std::string title)
{
    return indicator_rows(std::move(name), std::move(title), table.scenarios(), table.columns());
}

std::string to_markdown(const std::vector<Table>& tables)
{
    std::string md;
    for (const auto& t : tables) {
        md += "## " + t.title + "\n\n|";
        for (const auto& h : t.header) {
            md += " " + h + " |";
        }
        md += "\n|";
        for (std::size_t i = 0; i < t.header.size(); ++i) {
            md += "---|";
        }
        md += "\n";
        for (const auto& row : t.rows) {
            md += "|";
            for (const auto& c : row) {
                md += " " + c + " |";
            }
            md += "\n";
        }
        md += "\n";
    }
    return md;
}

std::string to_csv(const Table& table)
{
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out += (i ? "," : "") + csv_cell(cells[i]);
        }
        out += "\n";
    };
    line(table.header);
    for (const auto& r : table.rows) {
        line(r);
    }
    return out;
}

json to_json(const std::vector<Table>& tables)
{
    json arr = json::array();
    for (const auto& t : tables) {
        arr.push_back({{"name", t.name}, {"title", t.title}, {"header", t.header}, {"rows", t.rows}});
    }
    return {{"tables", arr}};
}

std::vector<fs::path> write_report(const std::vector<Table>& tables, const fs::path& dir, Format format)
{
    std::vector<fs::path> written;
    switch (format) {
    case Format::markdown:
        written.push_back(dir / "report.md");
        write_text(written.back(), to_markdown(tables));
        break;
    case Format::csv:
        for (const auto& t : tables) {
            written.push_back(dir / "tables" / (t.name + ".csv"));
            write_text(written.back(), to_csv(t));
        }
        break;
    case Format::json:
        written.push_back(dir / "report.json");
        write_text(written.back(), to_json(tables).dump(2) + "\n");
        break;
    }
    return written;
}

json benefit_to_json(const eval::BenefitReport& report)
{
    json nodes = json::array();
    for (const auto& n : report.nodes) {
        nodes.push_back({{"name", n.name}, {"depth", n.depth}, {"scores", n.scores}});
    }
    json cols = json::array();
    for (const auto& c : report.normalized.columns()) {
        cols.push_back({{"id", c.id}, {"scaling", std::string(eval::to_string(c.scaling))}, {"values", c.values}});
    }
    return {
        {"scenarios", report.scenarios},
        {"nodes", nodes},
        {"normalized", cols},
        {"ranking", {{"order", report.ranking.order}, {"scores", report.ranking.scores}, {"tie", report.ranking.tie}}},
        {"warnings", report.warnings},
    };
}

eval::BenefitReport benefit_from_json(const json& j)
{
    try {
        eval::BenefitReport r;
        r.scenarios = j.at("scenarios").get<std::vector<std::string>>();
        for (const auto& n : j.at("nodes")) {
            r.nodes.push_back(
                {n.at("name").get<std::string>(), n.at("depth").get<std::size_t>(), n.at("scores").get<std::vector<double>>()});
        }
        r.normalized = eval::IndicatorTable(r.scenarios);
        for (const auto& c : j.at("normalized")) {
            r.normalized.add_column(c.at("id").get<std::string>(), c.at("values").get<std::vector<double>>(),
                                    eval::scaling_from_string(c.at("scaling").get<std::string>()));
        }
        const auto& rk = j.at("ranking");
        r.ranking.order = rk.at("order").get<std::vector<std::string>>();
        r.ranking.scores = rk.at("scores").get<std::vector<double>>();
        r.ranking.tie = rk.at("tie").get<bool>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw ValidationError(fmt::format("malformed benefit report: {}", e.what()));
    }
}

json manifest_to_json(const project::RunManifest& m)
{
    return {
        {"timestamp", m.timestamp},
        {"config_hash", m.config_hash},
        {"module_versions", m.module_versions},
        {"storms", m.storms},
        {"files", m.files},
        {"summary_files", m.summary_files},
    };
}

} // namespace lideval::report
