#include "lideval/error.hpp"
#include "lideval/metrics.hpp"

#include <doctest.h>

#include <numeric>
#include <sstream>
#include <vector>

using namespace lideval;
using namespace lideval::metrics;

TEST_CASE("nse hand cases")
{
    const std::vector<double> o{1, 2, 3};
    CHECK(nse(o, o).nse == 1.0);
    const std::vector<double> mean(3, 2.0);
    CHECK(nse(o, mean).nse == 0.0);
    const std::vector<double> s{1, 2, 4};
    const auto r = nse(o, s);
    CHECK(r.nse == 0.5);
    CHECK_FALSE(r.pass);
    CHECK(r.n_points == 3);
}

TEST_CASE("nse identity and mean benchmark on pseudo-random series")
{
    unsigned seed = 42;
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> o;
        for (int i = 0; i < 50; ++i) {
            seed = seed * 1664525u + 1013904223u;
            o.push_back(static_cast<double>((seed >> 12) % 1000) / 10.0);
        }
        const double m = std::accumulate(o.begin(), o.end(), 0.0) / static_cast<double>(o.size());
        const std::vector<double> flat(o.size(), m);
        CHECK(nse(o, o).nse == doctest::Approx(1.0));
        CHECK(nse(o, o).pass);
        CHECK(nse(o, flat).nse == doctest::Approx(0.0).epsilon(1e-12));
        std::vector<double> off = o;
        off[3] += 5.0;
        CHECK(nse(o, off).nse < 1.0);
    }
}

TEST_CASE("nse input checks")
{
    const std::vector<double> flat{2, 2, 2};
    CHECK_THROWS_WITH_AS(nse(flat, flat), doctest::Contains("zero variance"), ValidationError);
    const std::vector<double> one{1};
    CHECK_THROWS_AS(nse(one, one), ValidationError);
    const std::vector<double> a{1, 2};
    const std::vector<double> b{1, 2, 3};
    CHECK_THROWS_AS(nse(a, b), ValidationError);
}

TEST_CASE("nse against a hydrograph at observed times")
{
    const hydrology::Hydrograph sim{"A", 60.0, {0, 10, 20, 10, 0}};
    const TimeSeries obs{{30, 60, 150, 240}, {5, 10, 15, 0}};
    CHECK(nse(obs, sim).nse == doctest::Approx(1.0));
    const std::vector<double> at{-10, 0, 90, 1000};
    const auto v = resample({{0, 60, 120}, {0, 6, 12}}, at);
    CHECK(v == std::vector<double>{0, 0, 9, 12});
}

TEST_CASE("peak statistics take the earliest maximum")
{
    CHECK(peak_stats({"A", 60.0, {4, 4, 4}}).index == 0);
    const auto p = peak_stats({"A", 60.0, {0, 5, 3}});
    CHECK(p.peak_flow_lps == 5.0);
    CHECK(p.peak_time_s == 60.0);
    const auto tri = peak_stats({"A", 30.0, {0, 2, 4, 6, 8, 6, 4, 2, 0}});
    CHECK(tri.index == 4);
    CHECK(tri.peak_time_s == 120.0);
    CHECK_THROWS_AS(peak_stats({"A", 60.0, {}}), ValidationError);
}

TEST_CASE("reduction percentages")
{
    CHECK(reduction(100, 80).percent == doctest::Approx(20.0));
    CHECK(reduction(100, 100).percent == 0.0);
    const auto worse = reduction(100, 110);
    CHECK(worse.percent == doctest::Approx(-10.0));
    CHECK(worse.worsened);
    for (double d : {0.5, 3.0, 17.0}) {
        CHECK(reduction(40, 40 + d).percent == doctest::Approx(-100.0 * d / 40));
        CHECK(reduction(40, 40 - d).percent == doctest::Approx(100.0 * d / 40));
    }
    CHECK_THROWS_AS(reduction(0, 1), ValidationError);
}

TEST_CASE("observed csv")
{
    std::istringstream in("t_s,value\n0,1.5\n60,2\n");
    const auto ts = read_observed_csv(in);
    CHECK(ts.t_s == std::vector<double>{0, 60});
    CHECK(ts.values == std::vector<double>{1.5, 2});
    std::istringstream unordered("t_s,value\n60,1\n0,2\n");
    CHECK_THROWS_AS(read_observed_csv(unordered), ValidationError);
}
