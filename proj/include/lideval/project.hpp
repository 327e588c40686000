#pragma once

#include "lideval/ahp.hpp"
#include "lideval/evaluator.hpp"
#include "lideval/hydrology.hpp"
#include "lideval/lid.hpp"
#include "lideval/quality.hpp"
#include "lideval/storm_gen.hpp"
#include "lideval/weight_tree.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lideval::project {

inline constexpr int schema_version = 1;

struct StormSettings {
    std::vector<double> depths_mm{16.0, 26.0, 36.0};
    double duration_min = 90.0;
    double peak_ratio = 0.5;
    double step_s = 60.0;
    storm::IdfParams idf;
};

struct SizingSettings {
    double target_depth_mm = 26.0;
    std::vector<lid::ExistingFacility> existing;
    /// Optional historical record; when set the target depth is checked against `target_atrcr`.
    std::optional<std::filesystem::path> rain_record_csv;
    double target_atrcr = 0.75;
    /// Shortfall below the required volume still accepted as compliant (area rounding).
    double capacity_tolerance_m3 = 10.0;
};

struct ProjectConfig {
    std::string name;
    std::vector<hydrology::Subcatchment> subcatchments;
    std::vector<hydrology::Link> links;
    std::vector<std::string> outfalls;
    SizingSettings sizing;
    std::vector<quality::PollutantSpec> pollutants;
    double antecedent_dry_days = 7.0;
    lid::LidCatalog catalog = lid::LidCatalog::defaults();
    std::vector<lid::Scenario> scenarios;
    std::optional<StormSettings> storms;
    hydrology::SimulationOptions simulation;
    /// Worker threads for the scenario x storm runs; 0 picks the hardware concurrency.
    unsigned threads = 0;
    WeightTree hierarchy = sponge_city_hierarchy();
    std::map<std::string, ahp::PairwiseMatrix> matrices;
    bool force_inconsistent = false;
    /// Externally supplied indicator columns.
    std::vector<eval::IndicatorTable> direct;
    std::filesystem::path output_dir = "out";
    /// FNV-1a 64 of the canonical JSON text.
    std::string hash;
};

/// Parses and validates a project file. Problems are collected and thrown together as a
/// ConfigError; relative file references resolve against the project file's directory.
ProjectConfig load_config(const std::filesystem::path& path);
ProjectConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = ".");

/// Cross-section checks on an already built config; throws ConfigError listing every issue.
void validate_config(const ProjectConfig& cfg);

std::string fnv1a_hex(const std::string& text);

struct SizingSummary {
    double catchment_area_ha = 0.0;
    double runoff_coeff = 0.0;
    double design_volume_m3 = 0.0;
    lid::ExistingCapacity existing;
    double required_m3 = 0.0;
    /// ATRCR of the target depth when a rain record is configured.
    std::optional<double> target_depth_atrcr;
};

SizingSummary sizing_summary(const ProjectConfig& cfg);

struct ScenarioCompliance {
    std::string scenario;
    double capacity_m3 = 0.0;
    double required_m3 = 0.0;
    /// Capacity falls short of the required volume and the design has to be reworked.
    bool needs_redesign = false;
    std::map<lid::LidKind, double> area_proportions;
};

/// One storm run of one scenario (or the baseline).
struct RunResult {
    std::string scenario;
    std::string storm;
    std::map<std::string, hydrology::Hydrograph> outfalls;
    /// Outfall-total pollutographs per pollutant.
    std::map<std::string, quality::Pollutograph> pollutographs;
    eval::EventSummary summary;
    double max_closure_error = 0.0;
    std::vector<std::string> over_capacity;
};

struct RunManifest {
    std::string timestamp;
    std::string config_hash;
    std::map<std::string, std::string> module_versions;
    std::vector<std::string> storms;
    /// Result file paths (relative to the output directory) per scenario, "baseline" included.
    std::map<std::string, std::vector<std::string>> files;
    std::vector<std::string> summary_files;
};

struct PipelineResult {
    RunManifest manifest;
    /// Present when the project defines a catchment.
    std::optional<SizingSummary> sizing;
    std::vector<ScenarioCompliance> compliance;
    std::vector<storm::Hyetograph> storms;
    std::vector<std::string> storm_names;
    /// Baseline runs first (one per storm), then scenario-major order.
    std::vector<RunResult> runs;
    std::optional<eval::IndicatorTable> simulated;
    WeightTree tree;
    std::vector<ahp::NodeConsistency> consistency;
    eval::IndicatorTable raw;
    eval::BenefitReport report;
    std::vector<std::string> warnings;
};

struct RunOptions {
    /// Write result files here; nothing is written when unset.
    std::optional<std::filesystem::path> out_dir;
    /// Fixed timestamp for the manifest; the current UTC time when unset.
    std::optional<std::string> timestamp;
    /// Skip the scenario simulations even when storms and a catchment are configured.
    bool skip_simulation = false;
    /// Stop after the simulations and the capacity check.
    bool evaluate = true;
};

/// Storms, baseline and scenario simulations, indicator tables, weights, normalisation, roll-up,
/// ranking and the capacity check. A failing stage is rethrown as StageError naming it.
PipelineResult run_pipeline(const ProjectConfig& cfg, const RunOptions& opts = {});

/// Design storms with their display names ("chicago_26mm").
std::vector<std::pair<std::string, storm::Hyetograph>> build_storms(const StormSettings& s);

/// The weighted tree: matrices applied over the hierarchy where given.
ahp::WeightedTree weighted_hierarchy(const ProjectConfig& cfg);

} // namespace lideval::project
