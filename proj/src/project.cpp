#include "lideval/project.hpp"

#include "lideval/csv.hpp"
#include "lideval/error.hpp"
#include "lideval/report.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace lideval::project {

namespace fs = std::filesystem;
using nlohmann::json;
using Issue = ConfigError::Issue;

namespace {

const std::map<std::string, std::string> module_versions{
    {"ahp", "1.0.0"},     {"cli", "1.0.0"},     {"evaluator", "1.0.0"}, {"hydrology", "1.0.0"},
    {"lid", "1.0.0"},     {"metrics", "1.0.0"}, {"quality", "1.0.0"},   {"storm_gen", "1.0.0"},
};

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw ValidationError(fmt::format("cannot open '{}'", p.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Reads typed fields out of the config JSON and records every problem with its path.
class Reader {
public:
    explicit Reader(fs::path base)
        : base_(std::move(base))
    {
    }

    std::vector<Issue> issues;
    /// Contents of every referenced file, folded into the config hash.
    std::string referenced;

    void issue(std::string where, std::string message) { issues.push_back({std::move(where), std::move(message)}); }

    void check_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed)
    {
        if (!j.is_object()) {
            issue(where, "expected an object");
            return;
        }
        for (const auto& [key, value] : j.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                issue(where, fmt::format("unknown key '{}'", key));
            }
        }
    }

    double number(const json& j, const char* key, const std::string& where, std::optional<double> fallback)
    {
        if (!j.contains(key)) {
            if (!fallback) {
                issue(where, fmt::format("missing '{}'", key));
                return 0.0;
            }
            return *fallback;
        }
        const auto& v = j.at(key);
        if (!v.is_number()) {
            issue(where + "." + key, "expected a number");
            return fallback.value_or(0.0);
        }
        return v.get<double>();
    }

    std::string text(const json& j, const char* key, const std::string& where, std::optional<std::string> fallback)
    {
        if (!j.contains(key)) {
            if (!fallback) {
                issue(where, fmt::format("missing '{}'", key));
                return {};
            }
            return *fallback;
        }
        const auto& v = j.at(key);
        if (!v.is_string()) {
            issue(where + "." + key, "expected a string");
            return fallback.value_or("");
        }
        return v.get<std::string>();
    }

    bool flag(const json& j, const char* key, const std::string& where, bool fallback)
    {
        if (!j.contains(key)) {
            return fallback;
        }
        if (!j.at(key).is_boolean()) {
            issue(where + "." + key, "expected true or false");
            return fallback;
        }
        return j.at(key).get<bool>();
    }

    const json* array(const json& j, const char* key, const std::string& where, bool required = false)
    {
        if (!j.contains(key)) {
            if (required) {
                issue(where, fmt::format("missing '{}'", key));
            }
            return nullptr;
        }
        if (!j.at(key).is_array()) {
            issue(where + "." + key, "expected an array");
            return nullptr;
        }
        return &j.at(key);
    }

    const json* object(const json& j, const char* key, const std::string& where)
    {
        if (!j.contains(key)) {
            return nullptr;
        }
        if (!j.at(key).is_object()) {
            issue(where + "." + key, "expected an object");
            return nullptr;
        }
        return &j.at(key);
    }

    std::vector<double> numbers(const json& j, const std::string& where)
    {
        std::vector<double> out;
        if (!j.is_array()) {
            issue(where, "expected an array of numbers");
            return out;
        }
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number()) {
                issue(fmt::format("{}[{}]", where, i), "expected a number");
                continue;
            }
            out.push_back(j[i].get<double>());
        }
        return out;
    }

    std::vector<std::string> strings(const json& j, const std::string& where)
    {
        std::vector<std::string> out;
        if (!j.is_array()) {
            issue(where, "expected an array of strings");
            return out;
        }
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_string()) {
                issue(fmt::format("{}[{}]", where, i), "expected a string");
                continue;
            }
            out.push_back(j[i].get<std::string>());
        }
        return out;
    }

    fs::path resolve(const std::string& file) const
    {
        fs::path p(file);
        return p.is_absolute() ? p : base_ / p;
    }

    /// Runs `f`, turning a thrown ValidationError into an issue at `where`.
    template <class F>
    bool guard(const std::string& where, F&& f)
    {
        try {
            f();
            return true;
        } catch (const ConfigError& e) {
            for (const auto& i : e.issues()) {
                issue(where + "." + i.where, i.message);
            }
        } catch (const std::exception& e) {
            issue(where, e.what());
        }
        return false;
    }

private:
    fs::path base_;
};

hydrology::Subcatchment parse_subcatchment(Reader& r, const json& j, const std::string& where)
{
    r.check_keys(j, where,
                 {"id", "area_ha", "impervious_fraction", "width_m", "slope", "depression_storage_impervious_mm",
                  "depression_storage_pervious_mm", "manning_n_impervious", "manning_n_pervious", "horton",
                  "land_uses", "outlet"});
    hydrology::Subcatchment sc;
    if (!j.is_object()) {
        return sc;
    }
    sc.id = r.text(j, "id", where, std::nullopt);
    sc.area_ha = r.number(j, "area_ha", where, std::nullopt);
    sc.impervious_fraction = r.number(j, "impervious_fraction", where, std::nullopt);
    sc.width_m = r.number(j, "width_m", where, std::nullopt);
    sc.slope = r.number(j, "slope", where, std::nullopt);
    sc.depression_storage_impervious_mm =
        r.number(j, "depression_storage_impervious_mm", where, sc.depression_storage_impervious_mm);
    sc.depression_storage_pervious_mm =
        r.number(j, "depression_storage_pervious_mm", where, sc.depression_storage_pervious_mm);
    sc.manning_n_impervious = r.number(j, "manning_n_impervious", where, sc.manning_n_impervious);
    sc.manning_n_pervious = r.number(j, "manning_n_pervious", where, sc.manning_n_pervious);
    sc.outlet = r.text(j, "outlet", where, std::nullopt);
    if (const auto* h = r.object(j, "horton", where)) {
        const auto hw = where + ".horton";
        r.check_keys(*h, hw, {"f0", "fc", "k"});
        sc.horton.f0 = r.number(*h, "f0", hw, sc.horton.f0);
        sc.horton.fc = r.number(*h, "fc", hw, sc.horton.fc);
        sc.horton.k = r.number(*h, "k", hw, sc.horton.k);
    }
    if (const auto* lu = r.array(j, "land_uses", where, true)) {
        for (std::size_t i = 0; i < lu->size(); ++i) {
            const auto w = fmt::format("{}.land_uses[{}]", where, i);
            const auto& e = (*lu)[i];
            r.check_keys(e, w, {"name", "runoff_coefficient", "area_ha", "surface"});
            if (!e.is_object()) {
                continue;
            }
            hydrology::LandUse u;
            u.name = r.text(e, "name", w, std::nullopt);
            u.runoff_coefficient = r.number(e, "runoff_coefficient", w, std::nullopt);
            u.area_ha = r.number(e, "area_ha", w, std::nullopt);
            u.surface = r.text(e, "surface", w, u.surface);
            sc.land_uses.push_back(std::move(u));
        }
    }
    r.guard(where, [&] { sc.validate(); });
    return sc;
}

hydrology::Link parse_link(Reader& r, const json& j, const std::string& where)
{
    r.check_keys(j, where, {"id", "from", "to", "lag_s", "capacity_lps"});
    hydrology::Link l;
    if (!j.is_object()) {
        return l;
    }
    l.id = r.text(j, "id", where, std::nullopt);
    l.from = r.text(j, "from", where, std::nullopt);
    l.to = r.text(j, "to", where, std::nullopt);
    l.lag_s = r.number(j, "lag_s", where, 0.0);
    if (j.contains("capacity_lps")) {
        l.capacity_lps = r.number(j, "capacity_lps", where, std::nullopt);
    }
    if (l.lag_s < 0.0) {
        r.issue(where + ".lag_s", "lag must be non-negative");
    }
    if (l.capacity_lps && !(*l.capacity_lps > 0.0)) {
        r.issue(where + ".capacity_lps", "capacity must be positive");
    }
    return l;
}

quality::PollutantSpec parse_pollutant(Reader& r, const json& j, const std::string& where)
{
    r.check_keys(j, where,
                 {"name", "buildup_max_kg_ha", "half_saturation_days", "washoff_coeff", "washoff_exponent",
                  "surface_factors", "removal"});
    quality::PollutantSpec p;
    if (!j.is_object()) {
        return p;
    }
    p.name = r.text(j, "name", where, std::nullopt);
    p.buildup_max_kg_ha = r.number(j, "buildup_max_kg_ha", where, std::nullopt);
    p.half_saturation_days = r.number(j, "half_saturation_days", where, std::nullopt);
    p.washoff_coeff = r.number(j, "washoff_coeff", where, std::nullopt);
    p.washoff_exponent = r.number(j, "washoff_exponent", where, std::nullopt);
    if (const auto* sf = r.object(j, "surface_factors", where)) {
        for (const auto& [k, v] : sf->items()) {
            p.surface_factors[k] = r.number(*sf, k.c_str(), where + ".surface_factors", std::nullopt);
        }
    }
    if (const auto* rm = r.object(j, "removal", where)) {
        for (const auto& [k, v] : rm->items()) {
            const auto w = where + ".removal." + k;
            r.guard(w, [&] { p.removal[lid::kind_from_string(k)] = r.number(*rm, k.c_str(), w, std::nullopt); });
        }
    }
    r.guard(where, [&] { p.validate(); });
    return p;
}

void parse_catalog(Reader& r, const json& j, lid::LidCatalog& catalog)
{
    for (const auto& [name, body] : j.items()) {
        const auto where = "lid_catalog." + name;
        lid::LidKind kind{};
        if (!r.guard(where, [&] { kind = lid::kind_from_string(name); })) {
            continue;
        }
        r.check_keys(body, where,
                     {"unit_capacity_m3_per_m2", "berm_mm", "soil_thickness_mm", "soil_porosity",
                      "soil_conductivity_mm_hr", "storage_thickness_mm", "storage_void_ratio",
                      "underdrain_coeff_per_hr", "seepage_mm_hr", "favorability", "unit_cost_weight"});
        if (!body.is_object()) {
            continue;
        }
        auto s = lid::default_spec(kind);
        s.unit_capacity_m3_per_m2 = r.number(body, "unit_capacity_m3_per_m2", where, s.unit_capacity_m3_per_m2);
        s.berm_mm = r.number(body, "berm_mm", where, s.berm_mm);
        s.soil_thickness_mm = r.number(body, "soil_thickness_mm", where, s.soil_thickness_mm);
        s.soil_porosity = r.number(body, "soil_porosity", where, s.soil_porosity);
        s.soil_conductivity_mm_hr = r.number(body, "soil_conductivity_mm_hr", where, s.soil_conductivity_mm_hr);
        s.storage_thickness_mm = r.number(body, "storage_thickness_mm", where, s.storage_thickness_mm);
        s.storage_void_ratio = r.number(body, "storage_void_ratio", where, s.storage_void_ratio);
        s.underdrain_coeff_per_hr = r.number(body, "underdrain_coeff_per_hr", where, s.underdrain_coeff_per_hr);
        s.seepage_mm_hr = r.number(body, "seepage_mm_hr", where, s.seepage_mm_hr);
        s.unit_cost_weight = r.number(body, "unit_cost_weight", where, s.unit_cost_weight);
        if (const auto* fav = r.object(body, "favorability", where)) {
            for (const auto& [k, v] : fav->items()) {
                s.favorability[k] = r.number(*fav, k.c_str(), where + ".favorability", std::nullopt);
            }
        }
        if (r.guard(where, [&] { s.validate(); })) {
            catalog.set(std::move(s));
        }
    }
}

lid::Scenario parse_scenario(Reader& r, const json& j, const std::string& where)
{
    r.check_keys(j, where, {"name", "placements"});
    lid::Scenario s;
    if (!j.is_object()) {
        return s;
    }
    s.name = r.text(j, "name", where, std::nullopt);
    if (const auto* ps = r.array(j, "placements", where)) {
        for (std::size_t i = 0; i < ps->size(); ++i) {
            const auto w = fmt::format("{}.placements[{}]", where, i);
            const auto& e = (*ps)[i];
            r.check_keys(e, w, {"subcatchment", "kind", "area_ha", "treated_fraction"});
            if (!e.is_object()) {
                continue;
            }
            lid::LidPlacement p;
            p.subcatchment = r.text(e, "subcatchment", w, std::nullopt);
            const auto kind = r.text(e, "kind", w, std::nullopt);
            r.guard(w + ".kind", [&] { p.kind = lid::kind_from_string(kind); });
            p.area_ha = r.number(e, "area_ha", w, std::nullopt);
            if (p.area_ha < 0.0) {
                r.issue(w + ".area_ha", "area must be non-negative");
            }
            if (e.contains("treated_fraction")) {
                p.treated_fraction = r.number(e, "treated_fraction", w, std::nullopt);
                if (*p.treated_fraction < 0.0 || *p.treated_fraction > 1.0) {
                    r.issue(w + ".treated_fraction", "must lie in [0, 1]");
                }
            }
            s.placements.push_back(std::move(p));
        }
    }
    return s;
}

WeightNode parse_tree_node(Reader& r, const json& j, const std::string& where)
{
    r.check_keys(j, where, {"name", "weight", "children", "indicator", "polarity", "source", "mode"});
    WeightNode n;
    if (!j.is_object()) {
        return n;
    }
    n.name = r.text(j, "name", where, std::nullopt);
    n.weight = r.number(j, "weight", where, 1.0);
    if (const auto* ch = r.array(j, "children", where)) {
        for (std::size_t i = 0; i < ch->size(); ++i) {
            n.children.push_back(parse_tree_node(r, (*ch)[i], fmt::format("{}.children[{}]", where, i)));
        }
    }
    if (n.children.empty()) {
        LeafBinding b;
        b.indicator = r.text(j, "indicator", where, n.name);
        r.guard(where, [&] {
            b.polarity = polarity_from_string(r.text(j, "polarity", where, "benefit"));
            b.source = source_from_string(r.text(j, "source", where, "direct"));
            b.mode = facility_mode_from_string(r.text(j, "mode", where, "favorability"));
        });
        n.leaf = b;
    }
    return n;
}

ahp::PairwiseMatrix parse_matrix(Reader& r, const json& j, const std::string& where)
{
    r.check_keys(j, where, {"labels", "upper", "entries"});
    ahp::PairwiseMatrix m;
    if (!j.is_object() || !j.contains("labels")) {
        r.issue(where, "a matrix needs 'labels' and either 'upper' or 'entries'");
        return m;
    }
    const auto labels = r.strings(j.at("labels"), where + ".labels");
    r.guard(where, [&] {
        if (j.contains("upper")) {
            m = ahp::PairwiseMatrix::from_upper(labels, r.numbers(j.at("upper"), where + ".upper"));
        } else if (j.contains("entries")) {
            std::vector<double> flat;
            const auto& rows = j.at("entries");
            for (std::size_t i = 0; rows.is_array() && i < rows.size(); ++i) {
                const auto row = r.numbers(rows[i], fmt::format("{}.entries[{}]", where, i));
                flat.insert(flat.end(), row.begin(), row.end());
            }
            m = ahp::PairwiseMatrix(labels, flat);
        } else {
            throw ValidationError("a matrix needs 'upper' or 'entries'");
        }
    });
    return m;
}

eval::IndicatorTable parse_direct(Reader& r, const json& j, const std::string& where)
{
    r.check_keys(j, where, {"scaling", "csv", "scenarios", "columns"});
    eval::IndicatorTable t;
    if (!j.is_object()) {
        return t;
    }
    eval::Scaling scaling = eval::Scaling::raw;
    r.guard(where + ".scaling", [&] { scaling = eval::scaling_from_string(r.text(j, "scaling", where, "raw")); });
    if (j.contains("csv")) {
        const auto path = r.resolve(r.text(j, "csv", where, std::nullopt));
        r.guard(where + ".csv", [&] {
            const auto body = read_file(path);
            r.referenced += body;
            std::istringstream in(body);
            t = eval::read_indicator_csv(in, scaling);
        });
        return t;
    }
    if (!j.contains("scenarios") || !j.contains("columns")) {
        r.issue(where, "direct indicators need 'csv' or both 'scenarios' and 'columns'");
        return t;
    }
    r.guard(where, [&] {
        t = eval::IndicatorTable(r.strings(j.at("scenarios"), where + ".scenarios"));
        const auto& cols = j.at("columns");
        if (!cols.is_object()) {
            throw ValidationError("'columns' must map indicator ids to value arrays");
        }
        for (const auto& [id, values] : cols.items()) {
            t.add_column(id, r.numbers(values, where + ".columns." + id), scaling);
        }
    });
    return t;
}

void parse_body(Reader& r, const json& root, ProjectConfig& cfg)
{
    r.check_keys(root, "config",
                 {"schema_version", "name", "catchment", "sizing", "pollutants", "antecedent_dry_days", "lid_catalog",
                  "scenarios", "storms", "simulation", "hierarchy", "leaf_overrides", "matrices", "matrices_csv",
                  "force_inconsistent", "indicators", "output"});
    if (!root.is_object()) {
        return;
    }
    if (!root.contains("schema_version")) {
        r.issue("schema_version", "missing schema version tag");
    } else if (!root.at("schema_version").is_number_integer() || root.at("schema_version").get<int>() != schema_version) {
        r.issue("schema_version", fmt::format("unsupported schema version (expected {})", schema_version));
    }
    cfg.name = r.text(root, "name", "config", "project");

    if (const auto* c = r.object(root, "catchment", "config")) {
        r.check_keys(*c, "catchment", {"subcatchments", "links", "outfalls"});
        if (const auto* scs = r.array(*c, "subcatchments", "catchment")) {
            for (std::size_t i = 0; i < scs->size(); ++i) {
                cfg.subcatchments.push_back(
                    parse_subcatchment(r, (*scs)[i], fmt::format("catchment.subcatchments[{}]", i)));
            }
        }
        if (const auto* ls = r.array(*c, "links", "catchment")) {
            for (std::size_t i = 0; i < ls->size(); ++i) {
                cfg.links.push_back(parse_link(r, (*ls)[i], fmt::format("catchment.links[{}]", i)));
            }
        }
        if (c->contains("outfalls")) {
            cfg.outfalls = r.strings(c->at("outfalls"), "catchment.outfalls");
        }
    }

    if (const auto* s = r.object(root, "sizing", "config")) {
        r.check_keys(*s, "sizing",
                     {"target_depth_mm", "existing_facilities", "rain_record_csv", "target_atrcr", "capacity_tolerance_m3"});
        cfg.sizing.target_depth_mm = r.number(*s, "target_depth_mm", "sizing", cfg.sizing.target_depth_mm);
        cfg.sizing.target_atrcr = r.number(*s, "target_atrcr", "sizing", cfg.sizing.target_atrcr);
        cfg.sizing.capacity_tolerance_m3 =
            r.number(*s, "capacity_tolerance_m3", "sizing", cfg.sizing.capacity_tolerance_m3);
        if (cfg.sizing.capacity_tolerance_m3 < 0.0) {
            r.issue("sizing.capacity_tolerance_m3", "must be non-negative");
        }
        if (cfg.sizing.target_depth_mm < 0.0) {
            r.issue("sizing.target_depth_mm", "must be non-negative");
        }
        if (!(cfg.sizing.target_atrcr > 0.0 && cfg.sizing.target_atrcr < 1.0)) {
            r.issue("sizing.target_atrcr", "must lie strictly between 0 and 1");
        }
        if (const auto* ex = r.array(*s, "existing_facilities", "sizing")) {
            for (std::size_t i = 0; i < ex->size(); ++i) {
                const auto w = fmt::format("sizing.existing_facilities[{}]", i);
                r.check_keys((*ex)[i], w, {"label", "volume_m3"});
                if (!(*ex)[i].is_object()) {
                    continue;
                }
                lid::ExistingFacility f{r.text((*ex)[i], "label", w, std::nullopt),
                                        r.number((*ex)[i], "volume_m3", w, std::nullopt)};
                if (f.volume_m3 < 0.0) {
                    r.issue(w + ".volume_m3", "must be non-negative");
                }
                cfg.sizing.existing.push_back(std::move(f));
            }
        }
        if (s->contains("rain_record_csv")) {
            cfg.sizing.rain_record_csv = r.resolve(r.text(*s, "rain_record_csv", "sizing", std::nullopt));
            r.guard("sizing.rain_record_csv", [&] {
                const auto body = read_file(*cfg.sizing.rain_record_csv);
                r.referenced += body;
                std::istringstream in(body);
                (void)storm::read_rain_record_csv(in);
            });
        }
    }

    if (const auto* ps = r.array(root, "pollutants", "config")) {
        for (std::size_t i = 0; i < ps->size(); ++i) {
            cfg.pollutants.push_back(parse_pollutant(r, (*ps)[i], fmt::format("pollutants[{}]", i)));
        }
    }
    cfg.antecedent_dry_days = r.number(root, "antecedent_dry_days", "config", cfg.antecedent_dry_days);
    if (cfg.antecedent_dry_days < 0.0) {
        r.issue("antecedent_dry_days", "must be non-negative");
    }
    if (const auto* cat = r.object(root, "lid_catalog", "config")) {
        parse_catalog(r, *cat, cfg.catalog);
    }
    if (const auto* ss = r.array(root, "scenarios", "config")) {
        for (std::size_t i = 0; i < ss->size(); ++i) {
            cfg.scenarios.push_back(parse_scenario(r, (*ss)[i], fmt::format("scenarios[{}]", i)));
        }
    }

    if (const auto* st = r.object(root, "storms", "config")) {
        r.check_keys(*st, "storms", {"depths_mm", "duration_min", "peak_ratio", "step_s", "idf"});
        StormSettings s;
        if (st->contains("depths_mm")) {
            s.depths_mm = r.numbers(st->at("depths_mm"), "storms.depths_mm");
        }
        s.duration_min = r.number(*st, "duration_min", "storms", s.duration_min);
        s.peak_ratio = r.number(*st, "peak_ratio", "storms", s.peak_ratio);
        s.step_s = r.number(*st, "step_s", "storms", s.step_s);
        if (const auto* idf = r.object(*st, "idf", "storms")) {
            r.check_keys(*idf, "storms.idf", {"a", "b", "n"});
            s.idf.a = r.number(*idf, "a", "storms.idf", s.idf.a);
            s.idf.b = r.number(*idf, "b", "storms.idf", s.idf.b);
            s.idf.n = r.number(*idf, "n", "storms.idf", s.idf.n);
        }
        r.guard("storms", [&] { (void)build_storms(s); });
        cfg.storms = std::move(s);
    }

    if (const auto* sim = r.object(root, "simulation", "config")) {
        r.check_keys(*sim, "simulation", {"step_s", "tail_s", "evaporation_mm_hr", "threads"});
        cfg.simulation.step_s = r.number(*sim, "step_s", "simulation", cfg.simulation.step_s);
        cfg.simulation.tail_s = r.number(*sim, "tail_s", "simulation", cfg.simulation.tail_s);
        cfg.simulation.evaporation_mm_hr =
            r.number(*sim, "evaporation_mm_hr", "simulation", cfg.simulation.evaporation_mm_hr);
        const double threads = r.number(*sim, "threads", "simulation", 0.0);
        if (threads < 0.0 || threads != std::floor(threads)) {
            r.issue("simulation.threads", "must be a non-negative integer");
        } else {
            cfg.threads = static_cast<unsigned>(threads);
        }
        if (!(cfg.simulation.step_s > 0.0)) {
            r.issue("simulation.step_s", "must be positive");
        }
        if (cfg.simulation.tail_s < 0.0) {
            r.issue("simulation.tail_s", "must be non-negative");
        }
        if (cfg.simulation.evaporation_mm_hr < 0.0) {
            r.issue("simulation.evaporation_mm_hr", "must be non-negative");
        }
    }

    if (root.contains("hierarchy")) {
        cfg.hierarchy = WeightTree(parse_tree_node(r, root.at("hierarchy"), "hierarchy"));
    }
    if (const auto* ov = r.object(root, "leaf_overrides", "config")) {
        for (const auto& [id, body] : ov->items()) {
            const auto where = "leaf_overrides." + id;
            r.check_keys(body, where, {"source", "polarity", "mode"});
            auto* node = cfg.hierarchy.find(id);
            if (!node || !node->leaf) {
                r.issue(where, fmt::format("no leaf named '{}' in the hierarchy", id));
                continue;
            }
            r.guard(where, [&] {
                if (body.contains("source")) node->leaf->source = source_from_string(r.text(body, "source", where, ""));
                if (body.contains("polarity")) node->leaf->polarity = polarity_from_string(r.text(body, "polarity", where, ""));
                if (body.contains("mode")) node->leaf->mode = facility_mode_from_string(r.text(body, "mode", where, ""));
            });
        }
    }
    if (const auto* ms = r.object(root, "matrices", "config")) {
        for (const auto& [node, body] : ms->items()) {
            cfg.matrices[node] = parse_matrix(r, body, "matrices." + node);
        }
    }
    if (root.contains("matrices_csv")) {
        const auto path = r.resolve(r.text(root, "matrices_csv", "config", std::nullopt));
        r.guard("matrices_csv", [&] {
            const auto body = read_file(path);
            r.referenced += body;
            std::istringstream in(body);
            for (auto& [node, m] : ahp::read_matrices_csv(in)) {
                if (cfg.matrices.count(node)) {
                    throw ValidationError(fmt::format("matrix for '{}' given twice", node));
                }
                cfg.matrices[node] = std::move(m);
            }
        });
    }
    cfg.force_inconsistent = r.flag(root, "force_inconsistent", "config", false);

    if (const auto* ind = r.object(root, "indicators", "config")) {
        r.check_keys(*ind, "indicators", {"direct"});
        if (const auto* d = r.array(*ind, "direct", "indicators")) {
            for (std::size_t i = 0; i < d->size(); ++i) {
                cfg.direct.push_back(parse_direct(r, (*d)[i], fmt::format("indicators.direct[{}]", i)));
            }
        }
    }
    if (const auto* out = r.object(root, "output", "config")) {
        r.check_keys(*out, "output", {"directory"});
        cfg.output_dir = r.resolve(r.text(*out, "directory", "output", "out"));
    } else {
        cfg.output_dir = r.resolve("out");
    }
}

bool is_environmental_indicator(const ProjectConfig& cfg, const std::string& id)
{
    if (id == "runoff_reduction" || id == "peak_reduction" || id == "peak_delay") {
        return true;
    }
    return std::any_of(cfg.pollutants.begin(), cfg.pollutants.end(),
                       [&](const auto& p) { return eval::pollutant_indicator(p.name) == id; });
}

const eval::IndicatorColumn* find_direct(const ProjectConfig& cfg, const std::string& id,
                                         const eval::IndicatorTable** owner = nullptr)
{
    for (const auto& t : cfg.direct) {
        if (t.has(id)) {
            if (owner) {
                *owner = &t;
            }
            return &t.column(id);
        }
    }
    return nullptr;
}

} // namespace

std::string fnv1a_hex(const std::string& text)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return fmt::format("{:016x}", h);
}

std::vector<std::pair<std::string, storm::Hyetograph>> build_storms(const StormSettings& s)
{
    std::vector<std::pair<std::string, storm::Hyetograph>> out;
    const auto suite = storm::design_storm_suite(s.depths_mm, s.duration_min, s.peak_ratio, s.idf, s.step_s);
    for (std::size_t i = 0; i < suite.size(); ++i) {
        out.emplace_back(fmt::format("chicago_{:g}mm", s.depths_mm[i]), suite[i]);
    }
    return out;
}

ahp::WeightedTree weighted_hierarchy(const ProjectConfig& cfg)
{
    if (cfg.matrices.empty()) {
        return {cfg.hierarchy, {}};
    }
    return ahp::weight_tree(cfg.hierarchy, cfg.matrices, cfg.force_inconsistent);
}

void validate_config(const ProjectConfig& cfg)
{
    std::vector<Issue> issues;
    auto issue = [&](std::string where, std::string msg) { issues.push_back({std::move(where), std::move(msg)}); };

    std::map<std::string, const hydrology::Subcatchment*> by_id;
    for (std::size_t i = 0; i < cfg.subcatchments.size(); ++i) {
        const auto& sc = cfg.subcatchments[i];
        if (!by_id.emplace(sc.id, &sc).second) {
            issue(fmt::format("catchment.subcatchments[{}]", i), fmt::format("duplicate subcatchment id '{}'", sc.id));
        }
    }

    const std::set<std::string> outfalls(cfg.outfalls.begin(), cfg.outfalls.end());
    if (outfalls.size() != cfg.outfalls.size()) {
        issue("catchment.outfalls", "an outfall is listed twice");
    }
    if (!cfg.subcatchments.empty() && cfg.outfalls.empty()) {
        issue("catchment.outfalls", "at least one outfall is required");
    }
    std::set<std::string> link_ids;
    std::set<std::string> has_outgoing;
    std::set<std::string> nodes;
    for (std::size_t i = 0; i < cfg.links.size(); ++i) {
        const auto& l = cfg.links[i];
        const auto w = fmt::format("catchment.links[{}]", i);
        if (!link_ids.insert(l.id).second) {
            issue(w, fmt::format("duplicate link id '{}'", l.id));
        }
        if (outfalls.count(l.from)) {
            issue(w, fmt::format("outfall '{}' cannot have an outgoing link", l.from));
        }
        has_outgoing.insert(l.from);
        nodes.insert(l.from);
        nodes.insert(l.to);
    }
    try {
        (void)hydrology::route({}, cfg.links);
    } catch (const std::exception& e) {
        issue("catchment.links", e.what());
    }
    for (const auto& n : nodes) {
        if (!has_outgoing.count(n) && !outfalls.count(n)) {
            issue("catchment.links", fmt::format("node '{}' has no outgoing link and is not a declared outfall", n));
        }
    }
    for (std::size_t i = 0; i < cfg.subcatchments.size(); ++i) {
        const auto& sc = cfg.subcatchments[i];
        if (!has_outgoing.count(sc.outlet) && !outfalls.count(sc.outlet)) {
            issue(fmt::format("catchment.subcatchments[{}].outlet", i),
                  fmt::format("outlet '{}' is neither an outfall nor the start of a link", sc.outlet));
        }
    }

    std::set<std::string> names;
    for (std::size_t s = 0; s < cfg.scenarios.size(); ++s) {
        const auto& sc = cfg.scenarios[s];
        const auto w = fmt::format("scenarios[{}]", s);
        if (sc.name.empty()) {
            issue(w, "scenario without a name");
        } else if (sc.name == "baseline") {
            issue(w, "'baseline' is reserved for the run without facilities");
        } else if (!names.insert(sc.name).second) {
            issue(w, fmt::format("duplicate scenario name '{}'", sc.name));
        }
        std::map<std::string, double> used;
        for (std::size_t p = 0; p < sc.placements.size(); ++p) {
            const auto& pl = sc.placements[p];
            if (!by_id.count(pl.subcatchment)) {
                issue(fmt::format("{}.placements[{}]", w, p),
                      fmt::format("unknown subcatchment '{}'", pl.subcatchment));
                continue;
            }
            if (!cfg.catalog.contains(pl.kind)) {
                issue(fmt::format("{}.placements[{}]", w, p),
                      fmt::format("no catalog entry for {}", lid::to_string(pl.kind)));
            }
            used[pl.subcatchment] += pl.area_ha;
        }
        for (const auto& [id, area] : used) {
            const auto* host = by_id.at(id);
            if (area > host->area_ha * (1.0 + 1e-9)) {
                issue(w, fmt::format("LID area {:.4f} ha exceeds the area of subcatchment '{}' ({:.4f} ha)", area, id,
                                     host->area_ha));
                continue;
            }
            try {
                (void)hydrology::treated_shares(*host, sc.placements);
            } catch (const std::exception& e) {
                issue(w, e.what());
            }
        }
    }

    try {
        cfg.hierarchy.validate();
    } catch (const std::exception& e) {
        issue("hierarchy", e.what());
    }
    try {
        (void)weighted_hierarchy(cfg);
    } catch (const std::exception& e) {
        issue("matrices", e.what());
    }

    std::set<std::string> direct_ids;
    for (std::size_t i = 0; i < cfg.direct.size(); ++i) {
        const auto& t = cfg.direct[i];
        const auto w = fmt::format("indicators.direct[{}]", i);
        const std::set<std::string> listed(t.scenarios().begin(), t.scenarios().end());
        if (listed != names) {
            issue(w, "direct indicator scenarios must match the configured scenarios");
        }
        for (const auto& c : t.columns()) {
            if (!direct_ids.insert(c.id).second) {
                issue(w, fmt::format("indicator '{}' supplied twice", c.id));
            }
        }
    }

    if (!cfg.scenarios.empty()) {
        const bool can_simulate = cfg.storms && !cfg.subcatchments.empty();
        for (const auto* leaf : cfg.hierarchy.leaves()) {
            if (!leaf->leaf) {
                continue;
            }
            const auto& b = *leaf->leaf;
            const auto w = "hierarchy." + leaf->name;
            switch (b.source) {
            case IndicatorSource::simulated:
                if (!can_simulate) {
                    issue(w, "simulated indicator needs storms and a catchment");
                } else if (!is_environmental_indicator(cfg, b.indicator)) {
                    issue(w, fmt::format("'{}' is not a simulated indicator", b.indicator));
                }
                break;
            case IndicatorSource::facility_derived:
                if (b.mode == FacilityMode::favorability) {
                    for (const auto kind : lid::all_kinds) {
                        if (cfg.catalog.contains(kind) && !cfg.catalog.at(kind).favorability.count(b.indicator)) {
                            issue(w, fmt::format("{} has no favourability score for '{}'", lid::to_string(kind),
                                                 b.indicator));
                        }
                    }
                }
                break;
            case IndicatorSource::direct:
                if (!find_direct(cfg, b.indicator)) {
                    issue(w, fmt::format("no direct values supplied for '{}'", b.indicator));
                }
                break;
            }
        }
    }

    if (!issues.empty()) {
        throw ConfigError(std::move(issues));
    }
}

ProjectConfig parse_config(const std::string& json_text, const fs::path& base_dir)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::vector<Issue>{{"json", e.what()}});
    }
    Reader r(base_dir);
    ProjectConfig cfg;
    parse_body(r, root, cfg);
    if (!r.issues.empty()) {
        // Report the cross-section problems in the same batch, except those under a path that
        // already failed to parse.
        const auto parse_issues = r.issues;
        try {
            validate_config(cfg);
        } catch (const ConfigError& e) {
            for (const auto& i : e.issues()) {
                const bool covered = std::any_of(parse_issues.begin(), parse_issues.end(), [&](const Issue& p) {
                    return i.where.rfind(p.where, 0) == 0 || p.where.rfind(i.where, 0) == 0;
                });
                if (!covered) {
                    r.issues.push_back(i);
                }
            }
        } catch (const std::exception&) {
        }
        throw ConfigError(std::move(r.issues));
    }
    validate_config(cfg);
    cfg.hash = fnv1a_hex(root.dump() + r.referenced);
    return cfg;
}

ProjectConfig load_config(const fs::path& path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(std::vector<Issue>{{"file", e.what()}});
    }
    return parse_config(text, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

SizingSummary sizing_summary(const ProjectConfig& cfg)
{
    std::vector<hydrology::LandUse> uses;
    SizingSummary s;
    for (const auto& sc : cfg.subcatchments) {
        uses.insert(uses.end(), sc.land_uses.begin(), sc.land_uses.end());
        s.catchment_area_ha += sc.area_ha;
    }
    s.runoff_coeff = hydrology::composite_runoff_coefficient(uses);
    s.design_volume_m3 = hydrology::runoff_volume(s.runoff_coeff, cfg.sizing.target_depth_mm, s.catchment_area_ha);
    s.existing = lid::existing_capacity(cfg.sizing.existing, s.runoff_coeff, s.catchment_area_ha);
    s.required_m3 =
        lid::required_volume(cfg.sizing.target_depth_mm, s.runoff_coeff, s.catchment_area_ha, s.existing.volume_m3);
    if (cfg.sizing.rain_record_csv) {
        const auto record = storm::read_rain_record_csv(cfg.sizing.rain_record_csv->string());
        s.target_depth_atrcr = storm::atrcr(record, cfg.sizing.target_depth_mm);
    }
    return s;
}

namespace {

template <class F>
auto in_stage(const char* name, F&& f)
{
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

void accumulate(std::map<std::string, hydrology::Hydrograph>& into, const std::string& node, double step_s,
                const std::vector<double>& series)
{
    auto& h = into[node];
    h.site = node;
    h.step_s = step_s;
    if (h.flows_lps.size() < series.size()) {
        h.flows_lps.resize(series.size(), 0.0);
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        h.flows_lps[k] += series[k];
    }
}

std::vector<double> sum_series(const std::map<std::string, hydrology::Hydrograph>& parts)
{
    std::vector<double> total;
    for (const auto& [site, h] : parts) {
        if (total.size() < h.flows_lps.size()) {
            total.resize(h.flows_lps.size(), 0.0);
        }
        for (std::size_t k = 0; k < h.flows_lps.size(); ++k) {
            total[k] += h.flows_lps[k];
        }
    }
    return total;
}

RunResult run_one(const ProjectConfig& cfg, const std::string& scenario, std::span<const lid::LidPlacement> placements,
                  const std::string& storm_name, const storm::Hyetograph& storm)
{
    RunResult r;
    r.scenario = scenario;
    r.storm = storm_name;
    const double dt = cfg.simulation.step_s;
    std::map<std::string, hydrology::Hydrograph> node_flow;
    std::map<std::string, std::map<std::string, hydrology::Hydrograph>> node_load;
    for (const auto& sc : cfg.subcatchments) {
        const auto res = hydrology::simulate_subcatchment(sc, storm, placements, cfg.catalog, cfg.simulation);
        r.max_closure_error = std::max(r.max_closure_error, res.balance.closure_error());
        accumulate(node_flow, sc.outlet, dt, res.outflow.flows_lps);
        for (const auto& p : cfg.pollutants) {
            const auto q = quality::simulate_quality(sc, res, p, cfg.antecedent_dry_days);
            accumulate(node_load[p.name], sc.outlet, dt, q.outlet.loads_kg);
        }
    }
    auto routed = hydrology::route(node_flow, cfg.links);
    r.outfalls = std::move(routed.outfalls);
    r.over_capacity = std::move(routed.over_capacity);
    for (const auto& o : cfg.outfalls) {
        if (!r.outfalls.count(o)) {
            r.outfalls[o] = hydrology::Hydrograph{o, dt, {}};
        }
    }
    std::map<std::string, double> loads;
    for (const auto& p : cfg.pollutants) {
        const auto lr = hydrology::route(node_load[p.name], cfg.links);
        quality::Pollutograph pg{"total", dt, sum_series(lr.outfalls)};
        loads[p.name] = quality::event_load(pg);
        r.pollutographs[p.name] = std::move(pg);
    }
    r.summary = eval::summarize(r.outfalls, std::move(loads));
    return r;
}

std::string file_safe(const std::string& name)
{
    std::string out;
    for (char c : name) {
        out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_';
    }
    return out;
}

std::string utc_now()
{
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    return storm::format_iso8601(now);
}

class Writer {
public:
    explicit Writer(fs::path root)
        : root_(std::move(root))
    {
        fs::create_directories(root_);
    }

    /// Writes `body` to `rel` under the root and returns `rel`.
    std::string put(const std::string& rel, const std::string& body)
    {
        const auto path = root_ / rel;
        fs::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
        }
        out << body;
        if (!out) {
            throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
        }
        return rel;
    }

private:
    fs::path root_;
};

void write_outputs(const ProjectConfig& cfg, PipelineResult& res, const fs::path& dir)
{
    Writer w(dir);
    auto& m = res.manifest;
    for (std::size_t i = 0; i < res.storms.size(); ++i) {
        std::ostringstream os;
        storm::write_hyetograph_csv(os, res.storms[i]);
        m.summary_files.push_back(w.put("storms/" + file_safe(res.storm_names[i]) + ".csv", os.str()));
    }
    for (const auto& run : res.runs) {
        const auto base = "runs/" + file_safe(run.scenario) + "/" + file_safe(run.storm) + "/";
        auto& files = m.files[run.scenario];
        for (const auto& [site, h] : run.outfalls) {
            std::ostringstream os;
            hydrology::write_hydrograph_csv(os, h);
            files.push_back(w.put(base + "hydrograph_" + file_safe(site) + ".csv", os.str()));
        }
        const hydrology::Hydrograph total{"total", cfg.simulation.step_s, sum_series(run.outfalls)};
        for (const auto& [name, pg] : run.pollutographs) {
            std::ostringstream os;
            quality::write_pollutograph_csv(os, pg, total);
            files.push_back(w.put(base + "pollutograph_" + file_safe(name) + ".csv", os.str()));
        }
    }
    if (res.sizing) {
        std::ostringstream os;
        os << "scenario,capacity_m3,required_m3,needs_redesign\n";
        for (const auto& c : res.compliance) {
            os << c.scenario << ',' << csv::fixed(c.capacity_m3, 3) << ',' << csv::fixed(c.required_m3, 3) << ','
               << (c.needs_redesign ? "true" : "false") << '\n';
        }
        m.summary_files.push_back(w.put("compliance.csv", os.str()));
    }
    if (res.simulated) {
        std::ostringstream os;
        eval::write_indicator_csv(os, *res.simulated);
        m.summary_files.push_back(w.put("simulated_indicators.csv", os.str()));
    }
    if (!res.report.scenarios.empty()) {
        std::ostringstream raw;
        eval::write_indicator_csv(raw, res.raw);
        m.summary_files.push_back(w.put("indicators_raw.csv", raw.str()));
        std::ostringstream norm;
        eval::write_indicator_csv(norm, res.report.normalized);
        m.summary_files.push_back(w.put("indicators_normalized.csv", norm.str()));
    }
    {
        std::ostringstream os;
        os << "rank,scenario,score\n";
        for (std::size_t i = 0; i < res.report.ranking.order.size(); ++i) {
            os << i + 1 << ',' << res.report.ranking.order[i] << ',' << csv::fixed(res.report.ranking.scores[i], 6)
               << '\n';
        }
        m.summary_files.push_back(w.put("ranking.csv", os.str()));
    }
    m.summary_files.push_back(w.put("benefit_report.json", report::benefit_to_json(res.report).dump(2) + "\n"));
    m.summary_files.push_back(w.put("manifest.json", ""));
    w.put("manifest.json", report::manifest_to_json(m).dump(2) + "\n");
}

} // namespace

PipelineResult run_pipeline(const ProjectConfig& cfg, const RunOptions& opts)
{
    PipelineResult res;
    res.manifest.timestamp = opts.timestamp.value_or(utc_now());
    res.manifest.config_hash = cfg.hash;
    res.manifest.module_versions = module_versions;

    if (cfg.storms) {
        in_stage("storms", [&] {
            for (auto& [name, h] : build_storms(*cfg.storms)) {
                res.storm_names.push_back(name);
                res.storms.push_back(std::move(h));
            }
            return 0;
        });
        res.manifest.storms = res.storm_names;
    }

    if (!cfg.subcatchments.empty()) {
        res.sizing = in_stage("sizing", [&] { return sizing_summary(cfg); });
    }

    const bool simulate = !opts.skip_simulation && !res.storms.empty() && !cfg.subcatchments.empty();
    if (simulate) {
        in_stage("simulation", [&] {
            struct Task {
                std::string scenario;
                std::span<const lid::LidPlacement> placements;
                std::size_t storm;
            };
            std::vector<Task> tasks;
            for (std::size_t k = 0; k < res.storms.size(); ++k) {
                tasks.push_back({"baseline", {}, k});
            }
            for (const auto& sc : cfg.scenarios) {
                for (std::size_t k = 0; k < res.storms.size(); ++k) {
                    tasks.push_back({sc.name, sc.placements, k});
                }
            }
            res.runs.resize(tasks.size());
            std::vector<std::exception_ptr> errors(tasks.size());
            std::atomic<std::size_t> next{0};
            auto worker = [&] {
                for (std::size_t i = next++; i < tasks.size(); i = next++) {
                    try {
                        const auto& t = tasks[i];
                        res.runs[i] = run_one(cfg, t.scenario, t.placements, res.storm_names[t.storm], res.storms[t.storm]);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            };
            unsigned n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
            n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, tasks.size()));
            {
                std::vector<std::jthread> pool;
                for (unsigned i = 1; i < n_threads; ++i) {
                    pool.emplace_back(worker);
                }
                worker();
            }
            for (std::size_t i = 0; i < errors.size(); ++i) {
                if (errors[i]) {
                    try {
                        std::rethrow_exception(errors[i]);
                    } catch (const std::exception& e) {
                        throw StageError("simulation",
                                         fmt::format("{} under {}: {}", tasks[i].scenario,
                                                     res.storm_names[tasks[i].storm], e.what()));
                    }
                }
            }
            for (const auto& run : res.runs) {
                for (const auto& l : run.over_capacity) {
                    res.warnings.push_back(
                        fmt::format("{} under {}: link '{}' exceeds its capacity", run.scenario, run.storm, l));
                }
            }
            return 0;
        });

        if (!cfg.scenarios.empty()) {
            res.simulated = in_stage("indicators", [&] {
                const auto n_storms = res.storms.size();
                std::vector<eval::EventSummary> baseline;
                for (std::size_t k = 0; k < n_storms; ++k) {
                    baseline.push_back(res.runs[k].summary);
                }
                std::vector<std::string> names;
                std::vector<std::vector<eval::EventSummary>> per;
                for (std::size_t s = 0; s < cfg.scenarios.size(); ++s) {
                    names.push_back(cfg.scenarios[s].name);
                    per.emplace_back();
                    for (std::size_t k = 0; k < n_storms; ++k) {
                        per.back().push_back(res.runs[n_storms * (s + 1) + k].summary);
                    }
                }
                return eval::evaluate_environmental(baseline, names, per);
            });
        }
    }

    if (res.sizing) {
        in_stage("compliance", [&] {
            for (const auto& sc : cfg.scenarios) {
                ScenarioCompliance c;
                c.scenario = sc.name;
                c.capacity_m3 = lid::control_capacity(sc, cfg.catalog);
                c.required_m3 = res.sizing->required_m3;
                c.needs_redesign = c.capacity_m3 < c.required_m3 - cfg.sizing.capacity_tolerance_m3;
                if (sc.total_area_ha() > 0.0) {
                    c.area_proportions = lid::area_proportions(sc);
                }
                if (c.needs_redesign) {
                    res.warnings.push_back(fmt::format("scenario '{}' controls {:.0f} m3 of the required {:.0f} m3",
                                                       sc.name, c.capacity_m3, c.required_m3));
                }
                res.compliance.push_back(std::move(c));
            }
            return 0;
        });
    }

    if (opts.evaluate) {
        const auto weighted = in_stage("weights", [&] { return weighted_hierarchy(cfg); });
        res.tree = weighted.tree;
        res.consistency = weighted.consistency;

        std::vector<std::string> names;
        for (const auto& sc : cfg.scenarios) {
            names.push_back(sc.name);
        }
        res.raw = in_stage("indicators", [&] {
            eval::IndicatorTable raw(names);
            for (const auto* leaf : res.tree.leaves()) {
                const auto& b = *leaf->leaf;
                if (names.empty()) {
                    raw.add_column(b.indicator, {});
                    continue;
                }
                switch (b.source) {
                case IndicatorSource::simulated: {
                    if (!res.simulated) {
                        throw ValidationError(
                            fmt::format("leaf '{}' needs simulated indicators but no simulation ran", leaf->name));
                    }
                    raw.add_column(b.indicator, res.simulated->column(b.indicator).values);
                    break;
                }
                case IndicatorSource::facility_derived:
                    raw.add_column(b.indicator, eval::facility_indicator_scores(cfg.scenarios, cfg.catalog, b));
                    break;
                case IndicatorSource::direct: {
                    const eval::IndicatorTable* owner = nullptr;
                    const auto* col = find_direct(cfg, b.indicator, &owner);
                    if (!col) {
                        throw ValidationError(fmt::format("no direct values for '{}'", b.indicator));
                    }
                    std::vector<double> values;
                    for (const auto& n : names) {
                        const auto& sc = owner->scenarios();
                        const auto pos = static_cast<std::size_t>(std::find(sc.begin(), sc.end(), n) - sc.begin());
                        if (pos == sc.size()) {
                            throw ValidationError(fmt::format("direct values for '{}' lack scenario '{}'", b.indicator, n));
                        }
                        values.push_back(col->values[pos]);
                    }
                    raw.add_column(b.indicator, std::move(values), col->scaling);
                    break;
                }
                }
            }
            eval::apply_polarity(raw, res.tree);
            return raw;
        });

        if (names.empty()) {
            res.report = in_stage("rollup", [&] { return eval::rollup(res.tree, res.raw); });
        } else {
            auto normalized = in_stage("normalization", [&] {
                eval::NormalizeOptions no;
                no.uniform_zero_columns = true;
                return eval::normalize(res.raw, no);
            });
            res.report = in_stage("rollup", [&] { return eval::rollup(res.tree, normalized.table); });
            res.report.warnings = normalized.warnings;
            res.warnings.insert(res.warnings.end(), normalized.warnings.begin(), normalized.warnings.end());
        }
    }

    if (opts.out_dir) {
        in_stage("output", [&] {
            write_outputs(cfg, res, *opts.out_dir);
            return 0;
        });
    }
    return res;
}

} // namespace lideval::project
