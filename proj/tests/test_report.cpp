#include "lideval/error.hpp"
#include "lideval/report.hpp"

#include "reference_case.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace lideval;
using namespace lideval::report;
namespace fs = std::filesystem;

namespace {

const fs::path source_dir = LIDEVAL_SOURCE_DIR;

const Table& table_named(const std::vector<Table>& tables, const std::string& name)
{
    for (const auto& t : tables) {
        if (t.name == name) {
            return t;
        }
    }
    throw std::runtime_error("no table " + name);
}

} // namespace

TEST_CASE("benefit table matches the reference cells at three decimals")
{
    const auto cfg = project::load_config(source_dir / "tests" / "data" / "direct_only.json");
    const auto res = project::run_pipeline(cfg);
    const auto tables = build_tables(cfg, res);
    const auto& b = table_named(tables, "benefits");
    CHECK(b.header == std::vector<std::string>{"scenario", "environmental", "economic", "social", "comprehensive",
                                               "rank"});
    REQUIRE(b.rows.size() == 5);
    const char* ranks[] = {"2", "3", "4", "1", "5"};
    for (std::size_t s = 0; s < 5; ++s) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(std::abs(std::stod(b.rows[s][j + 1]) - reference::benefits[s][j]) <= 0.001 + 1e-12);
            CHECK(b.rows[s][j + 1].size() == 5);
        }
        CHECK(b.rows[s][5] == ranks[s]);
    }
    const auto& raw = table_named(tables, "raw_indicators");
    CHECK(raw.rows[0][1] == "19.3");
    CHECK(raw.rows[0][3] == "3");
}

TEST_CASE("empty results render headers only")
{
    const project::ProjectConfig cfg;
    const project::PipelineResult res;
    const auto tables = build_tables(cfg, res);
    REQUIRE(tables.size() == 6);
    for (const auto& t : tables) {
        CAPTURE(t.name);
        CHECK(t.rows.empty());
        CHECK_FALSE(t.header.empty());
    }
    const auto md = to_markdown(tables);
    CHECK(md.find("## Individual and comprehensive benefits") != std::string::npos);
}

TEST_CASE("markdown and csv rendering")
{
    const Table t{"t", "Title", {"a", "b"}, {{"1", "x,y"}, {"2", "say \"hi\""}}};
    CHECK(to_markdown({t}) == "## Title\n\n| a | b |\n|---|---|\n| 1 | x,y |\n| 2 | say \"hi\" |\n\n");
    CHECK(to_csv(t) == "a,b\n1,\"x,y\"\n2,\"say \"\"hi\"\"\"\n");
    const auto j = to_json({t});
    CHECK(j.at("tables")[0].at("rows")[0][1] == "x,y");
}

TEST_CASE("benefit report JSON round trip")
{
    const auto cfg = project::load_config(source_dir / "tests" / "data" / "direct_only.json");
    const auto rep = project::run_pipeline(cfg).report;
    const auto text = benefit_to_json(rep).dump();
    const auto back = benefit_from_json(nlohmann::json::parse(text));
    CHECK(back.scenarios == rep.scenarios);
    REQUIRE(back.nodes.size() == rep.nodes.size());
    for (std::size_t i = 0; i < rep.nodes.size(); ++i) {
        CHECK(back.nodes[i].name == rep.nodes[i].name);
        CHECK(back.nodes[i].depth == rep.nodes[i].depth);
        CHECK(back.nodes[i].scores == rep.nodes[i].scores);
    }
    CHECK(back.ranking.order == rep.ranking.order);
    CHECK(back.ranking.scores == rep.ranking.scores);
    CHECK(back.normalized.columns().size() == rep.normalized.columns().size());
    CHECK(benefit_to_json(back).dump() == text);
    CHECK_THROWS_AS(benefit_from_json(nlohmann::json::parse(R"({"scenarios": []})")), ValidationError);
}

TEST_CASE("report files")
{
    const auto dir = fs::temp_directory_path() / "lideval_test_report";
    fs::remove_all(dir);
    const Table t{"t", "Title", {"a"}, {{"1"}}};
    CHECK(write_report({t}, dir, Format::markdown) == std::vector<fs::path>{dir / "report.md"});
    CHECK(write_report({t}, dir, Format::csv) == std::vector<fs::path>{dir / "tables" / "t.csv"});
    CHECK(write_report({t}, dir, Format::json) == std::vector<fs::path>{dir / "report.json"});
    std::ifstream in(dir / "tables" / "t.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "a");
    fs::remove_all(dir);
    CHECK(format_from_string("md") == Format::markdown);
    CHECK_THROWS_AS(format_from_string("pdf"), ValidationError);
}
