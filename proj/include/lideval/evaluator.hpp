#pragma once

#include "lideval/hydrology.hpp"
#include "lideval/lid.hpp"
#include "lideval/weight_tree.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lideval::eval {

/// How a column's values relate to the linear normalisation X / sum(X).
enum class Scaling {
    raw,
    /// Lower is better: 1/X is normalised.
    reciprocal,
    /// Already normalised elsewhere; taken verbatim.
    normalized,
};

std::string_view to_string(Scaling s) noexcept;
Scaling scaling_from_string(std::string_view s);

struct IndicatorColumn {
    std::string id;
    std::vector<double> values;
    Scaling scaling = Scaling::raw;
};

/// Scenarios as rows, indicators as columns.
class IndicatorTable {
public:
    IndicatorTable() = default;
    explicit IndicatorTable(std::vector<std::string> scenarios);

    const std::vector<std::string>& scenarios() const noexcept { return scenarios_; }
    const std::vector<IndicatorColumn>& columns() const noexcept { return columns_; }
    std::vector<IndicatorColumn>& columns() noexcept { return columns_; }

    /// Throws on a duplicate id, a length mismatch or a non-finite value.
    void add_column(std::string id, std::vector<double> values, Scaling scaling = Scaling::raw);
    bool has(std::string_view id) const noexcept;
    const IndicatorColumn& column(std::string_view id) const;
    IndicatorColumn& column(std::string_view id);

    /// Appends the columns of `other`, which must list the same scenarios in the same order.
    void merge(const IndicatorTable& other);

private:
    std::vector<std::string> scenarios_;
    std::vector<IndicatorColumn> columns_;
};

struct NormalizeOptions {
    /// Replace an all-zero column by 1/M (with a warning) instead of failing.
    bool uniform_zero_columns = false;
    /// Allowed deviation from 1 of the sum of a column marked `normalized`.
    double prenormalized_tolerance = 0.005;
};

struct NormalizedTable {
    IndicatorTable table;
    std::vector<std::string> warnings;
};

/// I = X / sum_m X per column; reciprocal columns use 1/X; normalized columns pass through.
NormalizedTable normalize(const IndicatorTable& table, const NormalizeOptions& opts = {});

/// Marks raw columns bound to cost-polarity direct leaves as reciprocal.
void apply_polarity(IndicatorTable& table, const WeightTree& tree);

struct NodeScores {
    std::string name;
    std::size_t depth = 0;
    std::vector<double> scores;
};

struct Ranking {
    /// Scenario names by descending score; equal scores keep name order.
    std::vector<std::string> order;
    std::vector<double> scores;
    bool tie = false;
};

/// Orders scenarios by descending score. Scores within 1e-12 of each other tie.
Ranking rank(std::span<const std::string> scenarios, std::span<const double> scores);

struct BenefitReport {
    std::vector<std::string> scenarios;
    /// Every tree node in pre-order, root first.
    std::vector<NodeScores> nodes;
    IndicatorTable normalized;
    Ranking ranking;
    std::vector<std::string> warnings;

    const std::vector<double>& scores(std::string_view node) const;
};

/// Weighted summation from the leaves up. Every leaf needs a column in `normalized`.
BenefitReport rollup(const WeightTree& tree, const IndicatorTable& normalized);

/// Raw facility-derived value per scenario for one leaf binding.
std::vector<double> facility_indicator_scores(std::span<const lid::Scenario> scenarios, const lid::LidCatalog& catalog,
                                              const LeafBinding& binding);

/// Outfall totals for one storm.
struct EventSummary {
    double volume_m3 = 0.0;
    double peak_lps = 0.0;
    double peak_time_s = 0.0;
    /// Event load per pollutant name.
    std::map<std::string, double> loads_kg;
};

/// Sums the outfall hydrographs step by step and takes volume and peak of the combined series.
EventSummary summarize(const std::map<std::string, hydrology::Hydrograph>& outfalls,
                       std::map<std::string, double> loads_kg);

/// Indicator id of a pollutant's load reduction, e.g. "tss_reduction".
std::string pollutant_indicator(std::string_view pollutant);

/// Per scenario: runoff, peak and pollutant-load reductions in percent and the peak delay in
/// minutes, each averaged over the storms. `scenarios[s][k]` is scenario s under storm k and
/// `baseline[k]` the undeveloped-LID run under the same storm.
IndicatorTable evaluate_environmental(std::span<const EventSummary> baseline,
                                      std::span<const std::string> scenario_names,
                                      std::span<const std::vector<EventSummary>> scenarios);

/// Copy of `tree` with `node`'s weight moved by `delta`, siblings rescaled to keep the sum at 1.
WeightTree perturb_weight(const WeightTree& tree, const std::string& node, double delta);

struct SensitivityRow {
    double delta = 0.0;
    double weight = 0.0;
    Ranking ranking;
    bool top_changed = false;
};

/// Rankings with `node` perturbed by -delta, 0 and +delta.
std::vector<SensitivityRow> weight_sensitivity(const WeightTree& tree, const IndicatorTable& normalized,
                                               const std::string& node, double delta);

/// CSV with header `scenario,<indicator>,...`, one row per scenario.
IndicatorTable read_indicator_csv(std::istream& in, Scaling scaling = Scaling::raw);
void write_indicator_csv(std::ostream& out, const IndicatorTable& table, int decimals = 6);

} // namespace lideval::eval
