#include "lideval/error.hpp"
#include "lideval/evaluator.hpp"

#include "reference_case.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace lideval;
using namespace lideval::eval;

namespace {

double column_sum(const IndicatorColumn& c)
{
    return std::accumulate(c.values.begin(), c.values.end(), 0.0);
}

WeightTree single_leaf()
{
    WeightNode root{"root", 1.0, {}, std::nullopt};
    root.children.push_back({"x", 1.0, {}, LeafBinding{"x"}});
    return WeightTree(root);
}

WeightTree two_leaves(double wa)
{
    WeightNode root{"root", 1.0, {}, std::nullopt};
    root.children.push_back({"a", wa, {}, LeafBinding{"a"}});
    root.children.push_back({"b", 1.0 - wa, {}, LeafBinding{"b"}});
    return WeightTree(root);
}

BenefitReport reference_report()
{
    auto raw = reference::direct_tables();
    const auto tree = sponge_city_hierarchy();
    apply_polarity(raw, tree);
    return rollup(tree, normalize(raw).table);
}

} // namespace

TEST_CASE("normalisation divides by the column sum")
{
    IndicatorTable t({"a", "b", "c"});
    t.add_column("x", {2, 3, 5});
    t.add_column("y", {4, 4, 4});
    const auto n = normalize(t).table;
    CHECK(n.column("x").values[0] == doctest::Approx(0.2));
    CHECK(n.column("x").values[1] == doctest::Approx(0.3));
    CHECK(n.column("x").values[2] == doctest::Approx(0.5));
    for (double v : n.column("y").values) {
        CHECK(v == doctest::Approx(1.0 / 3.0));
    }
}

TEST_CASE("normalised runoff reduction column")
{
    const auto n = normalize(reference::direct_tables()).table;
    const double expected[] = {0.2119, 0.1877, 0.1954, 0.2151, 0.1899};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(std::abs(n.column("runoff_reduction").values[i] - expected[i]) <= 1e-4);
    }
}

TEST_CASE("zero columns error or become uniform")
{
    IndicatorTable t({"a", "b", "c", "d"});
    t.add_column("delay", {0, 0, 0, 0});
    CHECK_THROWS_WITH_AS(normalize(t), doctest::Contains("delay"), ValidationError);
    NormalizeOptions o;
    o.uniform_zero_columns = true;
    const auto n = normalize(t, o);
    for (double v : n.table.column("delay").values) {
        CHECK(v == doctest::Approx(0.25));
    }
    CHECK(n.warnings.size() == 1);
}

TEST_CASE("reciprocal and pre-normalised columns")
{
    IndicatorTable t({"a", "b"});
    t.add_column("cost", {2, 4}, Scaling::reciprocal);
    t.add_column("given", {0.4, 0.6}, Scaling::normalized);
    const auto n = normalize(t).table;
    CHECK(n.column("cost").values[0] == doctest::Approx(2.0 / 3.0));
    CHECK(n.column("cost").values[1] == doctest::Approx(1.0 / 3.0));
    CHECK(n.column("given").values[1] == 0.6);

    IndicatorTable off({"a", "b"});
    off.add_column("given", {0.4, 0.5}, Scaling::normalized);
    CHECK_THROWS_AS(normalize(off), ValidationError);
    IndicatorTable zero_cost({"a", "b"});
    zero_cost.add_column("cost", {0, 4}, Scaling::reciprocal);
    CHECK_THROWS_AS(normalize(zero_cost), ValidationError);
}

TEST_CASE("normalisation is idempotent and scale-free")
{
    auto t = reference::direct_tables();
    const auto once = normalize(t).table;
    IndicatorTable again_in(once.scenarios());
    for (const auto& c : once.columns()) {
        again_in.add_column(c.id, c.values, Scaling::raw);
    }
    const auto twice = normalize(again_in).table;
    for (const auto& c : once.columns()) {
        for (std::size_t i = 0; i < c.values.size(); ++i) {
            CHECK(twice.column(c.id).values[i] == doctest::Approx(c.values[i] / column_sum(c)).epsilon(1e-12));
        }
    }

    const auto base = reference_report();
    auto scaled = reference::direct_tables();
    for (auto& v : scaled.column("peak_reduction").values) {
        v *= 37.0;
    }
    const auto tree = sponge_city_hierarchy();
    apply_polarity(scaled, tree);
    const auto rep = rollup(tree, normalize(scaled).table);
    CHECK(rep.ranking.order == base.ranking.order);
    for (const auto& node : base.nodes) {
        for (std::size_t i = 0; i < node.scores.size(); ++i) {
            CHECK(rep.scores(node.name)[i] == doctest::Approx(node.scores[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("indicator table invariants")
{
    IndicatorTable t({"a", "b"});
    t.add_column("x", {1, 2});
    CHECK_THROWS_AS(t.add_column("x", {1, 2}), ValidationError);
    CHECK_THROWS_AS(t.add_column("y", {1}), ValidationError);
    CHECK_THROWS_AS(t.add_column("z", {1, NAN}), ValidationError);
    CHECK_THROWS_AS(IndicatorTable({"a", "a"}), ValidationError);
    CHECK_THROWS_AS((void)t.column("missing"), ValidationError);
}

TEST_CASE("benefit roll-up reproduces the reference benefits")
{
    const auto rep = reference_report();
    double worst = 0.0;
    for (std::size_t s = 0; s < 5; ++s) {
        for (std::size_t j = 0; j < 4; ++j) {
            worst = std::max(worst, std::abs(rep.scores(reference::benefit_nodes[j])[s] - reference::benefits[s][j]));
        }
    }
    CHECK(worst <= 0.001);
    CHECK(rep.ranking.order == reference::expected_order);
    CHECK_FALSE(rep.ranking.tie);
}

TEST_CASE("comprehensive score is the weighted sum of its children")
{
    const auto rep = reference_report();
    for (std::size_t s = 0; s < 5; ++s) {
        const double combined = 0.608 * rep.scores("environmental")[s] + 0.272 * rep.scores("economic")[s] +
                                0.120 * rep.scores("social")[s];
        CHECK(rep.scores("comprehensive")[s] == doctest::Approx(combined).epsilon(1e-9));
    }
}

TEST_CASE("node scores sum to one over scenarios for exactly normalised leaves")
{
    auto raw = reference::direct_tables();
    for (auto& c : raw.columns()) {
        c.scaling = Scaling::raw;
    }
    const auto rep = rollup(sponge_city_hierarchy(), normalize(raw).table);
    for (const auto& node : rep.nodes) {
        CAPTURE(node.name);
        CHECK(std::accumulate(node.scores.begin(), node.scores.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("roll-up is linear")
{
    const auto tree = two_leaves(0.3);
    IndicatorTable x({"p", "q"});
    x.add_column("a", {0.1, 0.9}, Scaling::normalized);
    x.add_column("b", {0.5, 0.5}, Scaling::normalized);
    IndicatorTable y({"p", "q"});
    y.add_column("a", {0.7, 0.3}, Scaling::normalized);
    y.add_column("b", {0.2, 0.8}, Scaling::normalized);
    IndicatorTable mix({"p", "q"});
    for (const char* id : {"a", "b"}) {
        std::vector<double> v;
        for (std::size_t i = 0; i < 2; ++i) {
            v.push_back(2.0 * x.column(id).values[i] + 0.5 * y.column(id).values[i]);
        }
        mix.add_column(id, v, Scaling::normalized);
    }
    const auto rx = rollup(tree, x);
    const auto ry = rollup(tree, y);
    const auto rm = rollup(tree, mix);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(rm.scores("root")[i] == doctest::Approx(2.0 * rx.scores("root")[i] + 0.5 * ry.scores("root")[i]));
    }
}

TEST_CASE("single-leaf roll-up is the column itself")
{
    IndicatorTable t({"a", "b", "c"});
    t.add_column("x", {0.2, 0.5, 0.3}, Scaling::normalized);
    const auto rep = rollup(single_leaf(), t);
    CHECK(rep.scores("root") == t.column("x").values);
    IndicatorTable missing({"a", "b", "c"});
    missing.add_column("y", {0.2, 0.5, 0.3});
    CHECK_THROWS_WITH(rollup(single_leaf(), missing), doctest::Contains("x"));
}

TEST_CASE("ranking and ties")
{
    const std::vector<std::string> names{"c", "a", "b"};
    const std::vector<double> same{0.5, 0.5, 0.5};
    const auto r = rank(names, same);
    CHECK(r.tie);
    CHECK(r.order == std::vector<std::string>{"a", "b", "c"});
    const std::vector<double> distinct{0.1, 0.3, 0.2};
    const auto d = rank(names, distinct);
    CHECK_FALSE(d.tie);
    CHECK(d.order == std::vector<std::string>{"a", "b", "c"});
    CHECK(d.scores == std::vector<double>{0.3, 0.2, 0.1});
}

TEST_CASE("facility-derived indicator scores")
{
    auto catalog = lid::LidCatalog::defaults();
    const std::vector<lid::Scenario> s{
        {"one", {{"S", lid::LidKind::bio_retention, 1.0, std::nullopt}}},
        {"three", {{"S", lid::LidKind::bio_retention, 3.0, std::nullopt}}},
    };
    LeafBinding fav{"landscape", Polarity::benefit, IndicatorSource::facility_derived, FacilityMode::favorability};
    const auto a = facility_indicator_scores(s, catalog, fav);
    CHECK(a[1] / a[0] == doctest::Approx(3.0));

    const std::vector<lid::Scenario> s2{
        {"two", {{"S", lid::LidKind::bio_retention, 2.0, std::nullopt}}},
        {"four", {{"S", lid::LidKind::bio_retention, 4.0, std::nullopt}}},
    };
    LeafBinding cost{"construction_cost", Polarity::cost, IndicatorSource::facility_derived,
                     FacilityMode::reciprocal_cost};
    const auto b = facility_indicator_scores(s2, catalog, cost);
    CHECK(b[0] == doctest::Approx(0.5));
    CHECK(b[1] == doctest::Approx(0.25));
    IndicatorTable t({"two", "four"});
    t.add_column("construction_cost", b);
    const auto n = normalize(t).table;
    CHECK(n.column("construction_cost").values[0] == doctest::Approx(2.0 / 3.0));

    LeafBinding unknown{"glamour", Polarity::benefit, IndicatorSource::facility_derived, FacilityMode::favorability};
    CHECK_THROWS_AS(facility_indicator_scores(s, catalog, unknown), ValidationError);
}

TEST_CASE("pre-normalised reference columns sum to one within rounding")
{
    const auto t = reference::direct_tables();
    for (const auto& c : reference::economic_social) {
        CHECK(std::abs(column_sum(t.column(c.id)) - 1.0) <= 0.002);
    }
}

TEST_CASE("cost polarity applies to raw direct columns only")
{
    IndicatorTable t(reference::scenario_names());
    t.add_column("construction_cost", {1, 2, 3, 4, 5});
    t.add_column("maintenance_cost", {0.2, 0.2, 0.2, 0.2, 0.2}, Scaling::normalized);
    apply_polarity(t, sponge_city_hierarchy());
    CHECK(t.column("construction_cost").scaling == Scaling::reciprocal);
    CHECK(t.column("maintenance_cost").scaling == Scaling::normalized);
}

TEST_CASE("environmental indicators from event summaries")
{
    auto ev = [](double v, double peak, double t, double tss) {
        return EventSummary{v, peak, t, {{"TSS", tss}}};
    };
    const std::vector<EventSummary> base{ev(100, 50, 600, 10), ev(200, 80, 1200, 20)};
    const std::vector<std::string> names{"same", "better"};
    const std::vector<std::vector<EventSummary>> runs{
        base,
        {ev(80, 40, 660, 8), ev(160, 60, 1380, 15)},
    };
    const auto t = evaluate_environmental(base, names, runs);
    CHECK(t.column("runoff_reduction").values[0] == doctest::Approx(0.0));
    CHECK(t.column("runoff_reduction").values[1] == doctest::Approx(20.0));
    CHECK(t.column("peak_reduction").values[1] == doctest::Approx((20.0 + 25.0) / 2.0));
    CHECK(t.column("peak_delay").values[1] == doctest::Approx((1.0 + 3.0) / 2.0));
    CHECK(t.column(pollutant_indicator("TSS")).values[1] == doctest::Approx((20.0 + 25.0) / 2.0));
    for (const auto& c : t.columns()) {
        CHECK(c.values[0] == doctest::Approx(0.0));
    }

    const std::vector<EventSummary> dry{ev(0, 0, 0, 1)};
    const std::vector<std::vector<EventSummary>> one{{ev(0, 0, 0, 1)}};
    const std::vector<std::string> n1{"x"};
    CHECK_THROWS_AS(evaluate_environmental(dry, n1, one), ValidationError);
}

TEST_CASE("event summaries add the outfalls step by step")
{
    const std::map<std::string, hydrology::Hydrograph> outs{
        {"A", {"A", 60.0, {0, 10, 0}}},
        {"B", {"B", 60.0, {0, 0, 12, 0}}},
    };
    const auto s = summarize(outs, {{"TN", 1.0}});
    CHECK(s.volume_m3 == doctest::Approx(22.0 * 60.0 / 1000.0));
    CHECK(s.peak_lps == doctest::Approx(12.0));
    CHECK(s.peak_time_s == doctest::Approx(120.0));
    CHECK(pollutant_indicator("TSS") == "tss_reduction");
}

TEST_CASE("weight perturbation keeps siblings summing to one")
{
    const auto tree = sponge_city_hierarchy();
    const auto p = perturb_weight(tree, "environmental", -0.108);
    CHECK(p.find("environmental")->weight == doctest::Approx(0.5));
    const double sum = p.find("environmental")->weight + p.find("economic")->weight + p.find("social")->weight;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(p.find("economic")->weight / p.find("social")->weight == doctest::Approx(0.272 / 0.120));
    CHECK_NOTHROW(p.validate());
    CHECK_THROWS_AS(perturb_weight(tree, "environmental", 0.5), ValidationError);
    CHECK_THROWS_AS(perturb_weight(tree, "nowhere", 0.1), ValidationError);

    auto raw = reference::direct_tables();
    apply_polarity(raw, tree);
    const auto norm = normalize(raw).table;
    const auto rows = weight_sensitivity(tree, norm, "environmental", 0.0);
    for (const auto& r : rows) {
        CHECK(r.ranking.order == reference::expected_order);
        CHECK_FALSE(r.top_changed);
    }
    const auto moved = weight_sensitivity(tree, norm, "environmental", 0.1);
    REQUIRE(moved.size() == 3);
    CHECK(moved[0].weight == doctest::Approx(0.508));
    CHECK(moved[2].weight == doctest::Approx(0.708));
}

TEST_CASE("indicator csv round trip")
{
    const auto t = reference::direct_tables();
    std::ostringstream out;
    write_indicator_csv(out, t);
    std::istringstream in(out.str());
    const auto back = read_indicator_csv(in);
    CHECK(back.scenarios() == t.scenarios());
    for (const auto& c : t.columns()) {
        for (std::size_t i = 0; i < c.values.size(); ++i) {
            CHECK(back.column(c.id).values[i] == doctest::Approx(c.values[i]).epsilon(1e-9));
        }
    }
    std::istringstream bad("name,x\na,1\n");
    CHECK_THROWS_AS(read_indicator_csv(bad), ValidationError);
}
