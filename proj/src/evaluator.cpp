#include "lideval/evaluator.hpp"

#include "lideval/csv.hpp"
#include "lideval/error.hpp"
#include "lideval/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>

namespace lideval::eval {

std::string_view to_string(Scaling s) noexcept
{
    switch (s) {
    case Scaling::raw: return "raw";
    case Scaling::reciprocal: return "reciprocal";
    case Scaling::normalized: return "normalized";
    }
    return "raw";
}

Scaling scaling_from_string(std::string_view s)
{
    if (s == "raw") return Scaling::raw;
    if (s == "reciprocal") return Scaling::reciprocal;
    if (s == "normalized") return Scaling::normalized;
    throw ValidationError(fmt::format("unknown scaling '{}' (expected raw|reciprocal|normalized)", s));
}

IndicatorTable::IndicatorTable(std::vector<std::string> scenarios)
    : scenarios_(std::move(scenarios))
{
    std::vector<std::string> sorted = scenarios_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ValidationError("indicator table lists a scenario twice");
    }
}

void IndicatorTable::add_column(std::string id, std::vector<double> values, Scaling scaling)
{
    if (has(id)) {
        throw ValidationError(fmt::format("indicator '{}' already present", id));
    }
    if (values.size() != scenarios_.size()) {
        throw ValidationError(fmt::format("indicator '{}' has {} values for {} scenarios", id, values.size(),
                                          scenarios_.size()));
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw ValidationError(fmt::format("indicator '{}' has a non-finite value", id));
        }
    }
    columns_.push_back({std::move(id), std::move(values), scaling});
}

bool IndicatorTable::has(std::string_view id) const noexcept
{
    return std::any_of(columns_.begin(), columns_.end(), [&](const auto& c) { return c.id == id; });
}

const IndicatorColumn& IndicatorTable::column(std::string_view id) const
{
    for (const auto& c : columns_) {
        if (c.id == id) {
            return c;
        }
    }
    throw ValidationError(fmt::format("no indicator column '{}'", id));
}

IndicatorColumn& IndicatorTable::column(std::string_view id)
{
    return const_cast<IndicatorColumn&>(std::as_const(*this).column(id));
}

void IndicatorTable::merge(const IndicatorTable& other)
{
    if (other.scenarios_ != scenarios_) {
        throw ValidationError("cannot merge indicator tables over different scenarios");
    }
    for (const auto& c : other.columns_) {
        add_column(c.id, c.values, c.scaling);
    }
}

NormalizedTable normalize(const IndicatorTable& table, const NormalizeOptions& opts)
{
    const auto m = table.scenarios().size();
    if (m == 0) {
        throw ValidationError("cannot normalise a table without scenarios");
    }
    NormalizedTable out{IndicatorTable(table.scenarios()), {}};
    for (const auto& col : table.columns()) {
        std::vector<double> x = col.values;
        if (col.scaling == Scaling::normalized) {
            const double sum = std::accumulate(x.begin(), x.end(), 0.0);
            if (std::abs(sum - 1.0) > opts.prenormalized_tolerance) {
                throw ValidationError(fmt::format("normalised indicator '{}' sums to {:.4f}", col.id, sum));
            }
            out.table.add_column(col.id, std::move(x), Scaling::normalized);
            continue;
        }
        if (col.scaling == Scaling::reciprocal) {
            for (double& v : x) {
                if (!(v > 0.0)) {
                    throw ValidationError(fmt::format("cost indicator '{}' needs positive values for 1/x", col.id));
                }
                v = 1.0 / v;
            }
        }
        if (std::any_of(x.begin(), x.end(), [](double v) { return v < 0.0; })) {
            out.warnings.push_back(fmt::format("indicator '{}' has negative values", col.id));
        }
        const double sum = std::accumulate(x.begin(), x.end(), 0.0);
        if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) {
            if (!opts.uniform_zero_columns) {
                throw ValidationError(fmt::format("indicator '{}' is zero for every scenario", col.id));
            }
            out.warnings.push_back(
                fmt::format("indicator '{}' is zero for every scenario; using 1/{} for each", col.id, m));
            std::fill(x.begin(), x.end(), 1.0 / static_cast<double>(m));
        } else if (!(sum > 0.0)) {
            throw ValidationError(fmt::format("indicator '{}' has a non-positive column sum {}", col.id, sum));
        } else {
            for (double& v : x) {
                v /= sum;
            }
        }
        out.table.add_column(col.id, std::move(x), Scaling::normalized);
    }
    return out;
}

void apply_polarity(IndicatorTable& table, const WeightTree& tree)
{
    for (const auto* leaf : tree.leaves()) {
        const auto& b = *leaf->leaf;
        if (b.polarity != Polarity::cost || b.source != IndicatorSource::direct || !table.has(b.indicator)) {
            continue;
        }
        auto& col = table.column(b.indicator);
        if (col.scaling == Scaling::raw) {
            col.scaling = Scaling::reciprocal;
        }
    }
}

Ranking rank(std::span<const std::string> scenarios, std::span<const double> scores)
{
    if (scenarios.size() != scores.size()) {
        throw ValidationError("ranking needs one score per scenario");
    }
    std::vector<std::size_t> idx(scenarios.size());
    std::iota(idx.begin(), idx.end(), 0);
    constexpr double tie_eps = 1e-12;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (std::abs(scores[a] - scores[b]) > tie_eps) {
            return scores[a] > scores[b];
        }
        return scenarios[a] < scenarios[b];
    });
    Ranking r;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        r.order.push_back(scenarios[idx[k]]);
        r.scores.push_back(scores[idx[k]]);
        if (k > 0 && std::abs(r.scores[k] - r.scores[k - 1]) <= tie_eps) {
            r.tie = true;
        }
    }
    return r;
}

const std::vector<double>& BenefitReport::scores(std::string_view node) const
{
    for (const auto& n : nodes) {
        if (n.name == node) {
            return n.scores;
        }
    }
    throw ValidationError(fmt::format("benefit report has no node '{}'", node));
}

BenefitReport rollup(const WeightTree& tree, const IndicatorTable& normalized)
{
    tree.validate();
    const auto m = normalized.scenarios().size();
    BenefitReport rep;
    rep.scenarios = normalized.scenarios();
    rep.normalized = normalized;

    // Post-order evaluation into pre-order slots.
    std::function<std::vector<double>(const WeightNode&, std::size_t)> visit = [&](const WeightNode& n,
                                                                                   std::size_t depth) {
        const auto slot = rep.nodes.size();
        rep.nodes.push_back({n.name, depth, {}});
        std::vector<double> s(m, 0.0);
        if (n.is_leaf()) {
            const auto& id = n.leaf->indicator;
            if (!normalized.has(id)) {
                throw ValidationError(fmt::format("leaf '{}' has no indicator column '{}'", n.name, id));
            }
            s = normalized.column(id).values;
        } else {
            for (const auto& c : n.children) {
                const auto cs = visit(c, depth + 1);
                for (std::size_t k = 0; k < m; ++k) {
                    s[k] += c.weight * cs[k];
                }
            }
        }
        rep.nodes[slot].scores = s;
        return s;
    };
    const auto root = visit(tree.root(), 0);
    rep.ranking = rank(rep.scenarios, root);
    return rep;
}

std::vector<double> facility_indicator_scores(std::span<const lid::Scenario> scenarios, const lid::LidCatalog& catalog,
                                              const LeafBinding& binding)
{
    std::vector<double> out;
    out.reserve(scenarios.size());
    for (const auto& sc : scenarios) {
        double sum = 0.0;
        for (const auto& [kind, area] : sc.area_by_kind()) {
            const auto& spec = catalog.at(kind);
            if (binding.mode == FacilityMode::favorability) {
                const auto it = spec.favorability.find(binding.indicator);
                if (it == spec.favorability.end()) {
                    throw ValidationError(fmt::format("{} has no favourability score for '{}'", lid::to_string(kind),
                                                      binding.indicator));
                }
                sum += area * it->second;
            } else {
                sum += area * spec.unit_cost_weight;
            }
        }
        if (binding.mode == FacilityMode::reciprocal_cost) {
            if (!(sum > 0.0)) {
                throw ValidationError(
                    fmt::format("scenario '{}' has no costed facility area for '{}'", sc.name, binding.indicator));
            }
            sum = 1.0 / sum;
        }
        out.push_back(sum);
    }
    return out;
}

EventSummary summarize(const std::map<std::string, hydrology::Hydrograph>& outfalls,
                       std::map<std::string, double> loads_kg)
{
    hydrology::Hydrograph total;
    total.site = "total";
    bool first = true;
    for (const auto& [site, h] : outfalls) {
        if (first) {
            total.step_s = h.step_s;
            first = false;
        } else if (h.step_s != total.step_s) {
            throw ValidationError(fmt::format("outfall '{}' uses a different time step", site));
        }
        if (h.flows_lps.size() > total.flows_lps.size()) {
            total.flows_lps.resize(h.flows_lps.size(), 0.0);
        }
        for (std::size_t k = 0; k < h.flows_lps.size(); ++k) {
            total.flows_lps[k] += h.flows_lps[k];
        }
    }
    EventSummary e;
    e.loads_kg = std::move(loads_kg);
    if (total.flows_lps.empty()) {
        return e;
    }
    e.volume_m3 = total.volume_m3();
    const auto p = metrics::peak_stats(total);
    e.peak_lps = p.peak_flow_lps;
    e.peak_time_s = p.peak_time_s;
    return e;
}

std::string pollutant_indicator(std::string_view pollutant)
{
    std::string id;
    for (char c : pollutant) {
        id += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return id + "_reduction";
}

IndicatorTable evaluate_environmental(std::span<const EventSummary> baseline,
                                      std::span<const std::string> scenario_names,
                                      std::span<const std::vector<EventSummary>> scenarios)
{
    if (scenario_names.size() != scenarios.size()) {
        throw ValidationError("one result set per scenario is required");
    }
    if (baseline.empty()) {
        throw ValidationError("environmental indicators need at least one storm");
    }
    const auto n_storms = static_cast<double>(baseline.size());
    for (std::size_t k = 0; k < baseline.size(); ++k) {
        if (!(baseline[k].volume_m3 > 0.0)) {
            throw ValidationError(fmt::format("baseline runoff volume is zero for storm {}", k + 1));
        }
    }
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
        if (scenarios[s].size() != baseline.size()) {
            throw ValidationError(fmt::format("scenario '{}' was run under {} storms, baseline under {}",
                                              scenario_names[s], scenarios[s].size(), baseline.size()));
        }
    }

    const auto m = scenarios.size();
    std::vector<double> runoff(m, 0.0), peak(m, 0.0), delay(m, 0.0);
    std::map<std::string, std::vector<double>> loads;
    for (const auto& [name, kg] : baseline.front().loads_kg) {
        loads[name].assign(m, 0.0);
    }
    for (std::size_t s = 0; s < m; ++s) {
        for (std::size_t k = 0; k < baseline.size(); ++k) {
            const auto& b = baseline[k];
            const auto& e = scenarios[s][k];
            runoff[s] += metrics::reduction(b.volume_m3, e.volume_m3).percent / n_storms;
            peak[s] += metrics::reduction(b.peak_lps, e.peak_lps).percent / n_storms;
            delay[s] += (e.peak_time_s - b.peak_time_s) / 60.0 / n_storms;
            for (auto& [name, col] : loads) {
                const auto bl = b.loads_kg.find(name);
                const auto sl = e.loads_kg.find(name);
                if (bl == b.loads_kg.end() || sl == e.loads_kg.end()) {
                    throw ValidationError(fmt::format("pollutant '{}' missing from a storm result", name));
                }
                if (!(bl->second > 0.0)) {
                    throw ValidationError(fmt::format("baseline load of '{}' is zero for storm {}", name, k + 1));
                }
                col[s] += metrics::reduction(bl->second, sl->second).percent / n_storms;
            }
        }
    }

    IndicatorTable t({scenario_names.begin(), scenario_names.end()});
    t.add_column("runoff_reduction", std::move(runoff));
    t.add_column("peak_reduction", std::move(peak));
    t.add_column("peak_delay", std::move(delay));
    for (auto& [name, col] : loads) {
        t.add_column(pollutant_indicator(name), std::move(col));
    }
    return t;
}

WeightTree perturb_weight(const WeightTree& tree, const std::string& node, double delta)
{
    WeightTree out = tree;
    if (delta == 0.0) {
        return out;
    }
    const auto* parent = tree.parent_of(node);
    if (!parent) {
        throw ValidationError(fmt::format("cannot perturb '{}': not a child node of the tree", node));
    }
    auto* p = out.find(parent->name);
    auto it = std::find_if(p->children.begin(), p->children.end(), [&](const auto& c) { return c.name == node; });
    const double w = it->weight;
    const double nw = w + delta;
    if (nw < 0.0 || nw > 1.0) {
        throw ValidationError(fmt::format("weight of '{}' would become {:.4f}", node, nw));
    }
    const double rest = 1.0 - w;
    if (p->children.size() < 2 || rest <= 0.0) {
        throw ValidationError(fmt::format("'{}' has no sibling weight to rebalance against", node));
    }
    for (auto& c : p->children) {
        if (c.name == node) {
            c.weight = nw;
        } else {
            c.weight *= (1.0 - nw) / rest;
        }
    }
    return out;
}

std::vector<SensitivityRow> weight_sensitivity(const WeightTree& tree, const IndicatorTable& normalized,
                                               const std::string& node, double delta)
{
    if (!(delta >= 0.0)) {
        throw ValidationError("sensitivity delta must be non-negative");
    }
    const auto base = rollup(tree, normalized).ranking;
    std::vector<SensitivityRow> rows;
    for (double d : {-delta, 0.0, delta}) {
        const auto t = perturb_weight(tree, node, d);
        SensitivityRow row;
        row.delta = d;
        row.weight = t.find(node)->weight;
        row.ranking = rollup(t, normalized).ranking;
        row.top_changed = !base.order.empty() && row.ranking.order.front() != base.order.front();
        rows.push_back(std::move(row));
    }
    return rows;
}

IndicatorTable read_indicator_csv(std::istream& in, Scaling scaling)
{
    const auto rows = csv::read_rows(in);
    if (rows.empty() || rows.front().empty() || rows.front().front() != "scenario") {
        throw ValidationError("indicator CSV must start with a header 'scenario,<indicator>,...'");
    }
    const auto& header = rows.front();
    std::vector<std::string> scenarios;
    std::vector<std::vector<double>> cols(header.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) {
            throw ValidationError(fmt::format("indicator CSV row {}: expected {} fields", r + 1, header.size()));
        }
        scenarios.push_back(rows[r][0]);
        for (std::size_t c = 1; c < header.size(); ++c) {
            cols[c - 1].push_back(
                csv::to_double(rows[r][c], fmt::format("indicator CSV row {}, column '{}'", r + 1, header[c])));
        }
    }
    IndicatorTable t(std::move(scenarios));
    for (std::size_t c = 1; c < header.size(); ++c) {
        t.add_column(header[c], std::move(cols[c - 1]), scaling);
    }
    return t;
}

void write_indicator_csv(std::ostream& out, const IndicatorTable& table, int decimals)
{
    out << "scenario";
    for (const auto& c : table.columns()) {
        out << ',' << c.id;
    }
    out << '\n';
    for (std::size_t r = 0; r < table.scenarios().size(); ++r) {
        out << table.scenarios()[r];
        for (const auto& c : table.columns()) {
            out << ',' << csv::fixed(c.values[r], decimals);
        }
        out << '\n';
    }
}

} // namespace lideval::eval
