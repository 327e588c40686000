#pragma once

#include "lideval/evaluator.hpp"
#include "lideval/project.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace lideval::report {

enum class Format { markdown, csv, json };

Format format_from_string(std::string_view s);

/// A rendered table: every cell is already rounded text.
struct Table {
    std::string name;
    std::string title;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Land-use runoff, scenario areas and capacities, weights, raw indicators, normalised
/// indicators and benefits, in that order. Benefits use 3 decimals, percentages 1, delays whole minutes.
std::vector<Table> build_tables(const project::ProjectConfig& cfg, const project::PipelineResult& result);

/// Scenario rows of an indicator table, rounded per indicator kind.
Table indicator_table(const eval::IndicatorTable& table, std::string name, std::string title);

std::string to_markdown(const std::vector<Table>& tables);
std::string to_csv(const Table& table);
nlohmann::json to_json(const std::vector<Table>& tables);

/// Writes report.md, one CSV per table under tables/, or report.json. Returns the written paths.
std::vector<std::filesystem::path> write_report(const std::vector<Table>& tables, const std::filesystem::path& dir,
                                                Format format);

/// Full-precision serialisation of a benefit report.
nlohmann::json benefit_to_json(const eval::BenefitReport& report);
eval::BenefitReport benefit_from_json(const nlohmann::json& j);

nlohmann::json manifest_to_json(const project::RunManifest& m);

} // namespace lideval::report
