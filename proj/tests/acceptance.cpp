// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit when any criterion fails.

#include "lideval/ahp.hpp"
#include "lideval/error.hpp"
#include "lideval/hydrology.hpp"
#include "lideval/lid.hpp"
#include "lideval/metrics.hpp"
#include "lideval/project.hpp"
#include "lideval/storm_gen.hpp"

#include "oracles.hpp"
#include "reference_case.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/core.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace lideval;
namespace fs = std::filesystem;

namespace {

const fs::path source_dir = LIDEVAL_SOURCE_DIR;
const fs::path example = source_dir / "projects" / "sports_center.json";

// Collects the failed sub-checks of one criterion.
class Gate {
public:
    void check(bool ok, const std::string& what)
    {
        ++count_;
        if (!ok) {
            failures_.push_back(what);
        }
    }
    bool passed() const { return failures_.empty(); }
    std::size_t count() const { return count_; }
    const std::vector<std::string>& failures() const { return failures_; }

private:
    std::size_t count_ = 0;
    std::vector<std::string> failures_;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void sizing(Gate& g)
{
    const double v = hydrology::runoff_volume(reference::stated_psi, 26.0, reference::stated_area_ha);
    g.check(std::abs(v - 9987.0) <= 2.0, fmt::format("total runoff {:.1f} m3", v));
    for (const auto& r : reference::land_uses) {
        const double rv = hydrology::runoff_volume(r.coeff, 26.0, r.area_ha);
        g.check(std::abs(rv - r.runoff_m3) <= 2.0, fmt::format("{} runoff {:.1f} vs {}", r.name, rv, r.runoff_m3));
    }
    const double psi = hydrology::composite_runoff_coefficient(reference::land_use_list());
    g.check(std::abs(psi - reference::stated_psi) < 5e-4, fmt::format("composite coefficient {:.5f}", psi));
}

void capacity(Gate& g)
{
    const std::vector<lid::ExistingFacility> f{{"tanks", 1108}, {"sunken green", 571}, {"pond", 50}};
    const auto e = lid::existing_capacity(f, reference::stated_psi, reference::stated_area_ha);
    g.check(std::abs(e.depth_mm - 4.50) <= 0.05, fmt::format("existing depth {:.3f} mm", e.depth_mm));
    const double req = lid::required_volume(26.0, reference::stated_psi, reference::stated_area_ha, e.volume_m3);
    g.check(std::abs(req - 8258.0) <= 2.0, fmt::format("required volume {:.1f} m3", req));

    const auto catalog = lid::LidCatalog::defaults();
    for (std::size_t i = 0; i < 5; ++i) {
        const double cap = lid::control_capacity(reference::scenario(i), catalog);
        g.check(cap >= 8248.0 && cap <= 8268.0, fmt::format("scenario {} capacity {:.1f} m3", i + 1, cap));
    }
    const auto p = lid::area_proportions(reference::scenario(3));
    g.check(std::abs(p.at(lid::LidKind::bio_retention) - 0.345) <= 0.002, "scenario 4 bio-retention share");
    g.check(std::abs(p.at(lid::LidKind::sunken_green) - 0.460) <= 0.002, "scenario 4 sunken green share");

    const auto cfg = project::load_config(example);
    const auto s = project::sizing_summary(cfg);
    g.check(std::abs(s.required_m3 - 8258.0) <= 2.0, fmt::format("example required {:.1f} m3", s.required_m3));
}

void benefits(Gate& g)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = project::load_config(source_dir / "tests" / "data" / "direct_only.json");
    const auto res = project::run_pipeline(cfg);
    const double elapsed = seconds_since(t0);
    for (std::size_t s = 0; s < 5; ++s) {
        for (std::size_t j = 0; j < 4; ++j) {
            const double v = res.report.scores(reference::benefit_nodes[j])[s];
            g.check(std::abs(v - reference::benefits[s][j]) <= 0.001 + 1e-12,
                    fmt::format("scenario {} {} {:.4f} vs {:.3f}", s + 1, reference::benefit_nodes[j], v,
                                reference::benefits[s][j]));
        }
    }
    g.check(res.report.ranking.order == reference::expected_order, "ranking order");
    g.check(elapsed < 1.0, fmt::format("evaluation took {:.3f} s", elapsed));
}

double dense_lambda_max(const ahp::PairwiseMatrix& m)
{
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        }
    }
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(a, false).eigenvalues();
    double best = ev(0).real();
    for (Eigen::Index i = 1; i < n; ++i) {
        best = std::max(best, ev(i).real());
    }
    return best;
}

void weights(Gate& g)
{
    for (std::size_t n : {3u, 4u, 7u}) {
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < n; ++i) {
            labels.push_back("c" + std::to_string(i));
        }
        const ahp::PairwiseMatrix ones(labels, std::vector<double>(n * n, 1.0));
        const auto w = ahp::derive_weights(ones);
        for (double x : w.weights) {
            g.check(std::abs(x - 1.0 / static_cast<double>(n)) <= 1e-9, fmt::format("all-ones {}x{}", n, n));
        }
    }
    for (const auto& grp : reference::weight_groups()) {
        const auto m = ahp::PairwiseMatrix::from_weights(grp.children, grp.weights);
        const auto w = ahp::derive_weights(m);
        for (std::size_t i = 0; i < grp.weights.size(); ++i) {
            g.check(std::abs(w.weights[i] - grp.weights[i]) <= 1e-6, fmt::format("{} weights", grp.parent));
        }
        g.check(std::abs(ahp::consistency(m).cr) <= 1e-9, fmt::format("{} CR", grp.parent));
    }
    const std::vector<double> upper{2.0, 6.0, 4.0};
    const auto m3 = ahp::PairwiseMatrix::from_upper({"a", "b", "c"}, upper);
    const double lam = ahp::consistency(m3).lambda_max;
    const double oracle = dense_lambda_max(m3);
    g.check(std::abs(lam - oracle) <= 1e-4, fmt::format("3x3 lambda {:.6f} vs {:.6f}", lam, oracle));

    const std::vector<double> bad{9.0, 1.0 / 9.0, 9.0};
    const auto inconsistent = ahp::PairwiseMatrix::from_upper({"runoff_reduction", "peak_reduction", "peak_delay"}, bad);
    g.check(ahp::consistency(inconsistent).cr >= 0.1, "inconsistent matrix CR");
    bool rejected = false;
    try {
        (void)ahp::weight_tree(sponge_city_hierarchy(), {{"water_quantity", inconsistent}});
    } catch (const ValidationError&) {
        rejected = true;
    }
    g.check(rejected, "CR >= 0.1 rejected");
}

void storms(Gate& g)
{
    const std::vector<double> depths{16.0, 26.0, 36.0};
    for (double d : depths) {
        const auto h = storm::chicago_hyetograph(d, 90.0, 0.5, storm::IdfParams{}, 60.0);
        double sum = 0.0;
        for (double i : h.intensities_mm_per_hr) {
            sum += i * h.step_s / 3600.0;
        }
        g.check(std::abs(sum - d) / d <= 0.001, fmt::format("{} mm storm integrates to {:.4f}", d, sum));
        const double peak_min = (static_cast<double>(h.peak_index()) + 0.5) * h.step_s / 60.0;
        g.check(std::abs(peak_min - 45.0) <= h.step_s / 60.0, fmt::format("{} mm peak at {:.1f} min", d, peak_min));
        const auto twice = storm::chicago_hyetograph(2.0 * d, 90.0, 0.5, storm::IdfParams{}, 60.0);
        bool doubled = twice.intensities_mm_per_hr.size() == h.intensities_mm_per_hr.size();
        for (std::size_t k = 0; doubled && k < h.intensities_mm_per_hr.size(); ++k) {
            doubled = std::abs(twice.intensities_mm_per_hr[k] - 2.0 * h.intensities_mm_per_hr[k]) <=
                      1e-9 * std::max(1.0, h.intensities_mm_per_hr[k]);
        }
        g.check(doubled, fmt::format("{} mm doubling", d));
    }
}

void simulation(Gate& g)
{
    const hydrology::HortonParams hp{76.2, 3.81, 4.14};
    const double f = hydrology::horton_rate(hp, 0.5);
    g.check(std::abs(f - 12.95) <= 0.01, fmt::format("Horton rate {:.4f} mm/hr", f));

    // Overland plane against the 1 s explicit oracle.
    hydrology::Subcatchment sc;
    sc.id = "P";
    sc.area_ha = 1.0;
    sc.impervious_fraction = 0.0;
    sc.width_m = 500.0;
    sc.slope = 0.01;
    sc.manning_n_pervious = 0.05;
    sc.depression_storage_pervious_mm = 0.0;
    sc.horton = {12.0, 12.0, 1.0};
    sc.outlet = "OUT";
    hydrology::SimulationOptions opts;
    opts.tail_s = 3600.0;
    storm::Hyetograph block;
    block.step_s = 300.0;
    block.intensities_mm_per_hr = {60.0};
    const auto r = hydrology::simulate_subcatchment(sc, block, {}, lid::LidCatalog::defaults(), opts);
    const auto plane = oracle::euler_plane(1.0e4, 500.0, 0.01, 0.05, 0.0, 12.0, 60.0, 300.0, 300.0 + 3600.0, 60.0);
    const double ref = plane.back();
    g.check(std::abs(r.outflow.volume_m3() - ref) / ref <= 0.01,
            fmt::format("plane runoff {:.3f} vs oracle {:.3f} m3", r.outflow.volume_m3(), ref));

    // Bio-retention unit against the same style of oracle.
    const auto spec = lid::default_spec(lid::LidKind::bio_retention);
    std::vector<double> runon{40.0, 20.0};
    runon.resize(2 + 36, 0.0);
    const auto u = lid::simulate_lid_unit(spec, 100.0, runon, {}, 600.0);
    const auto o = oracle::euler_unit(spec, 100.0, runon, 600.0, 600.0 * static_cast<double>(runon.size()));
    const double out = u.overflow_m3 + u.underdrain_m3;
    g.check(std::abs(out - o.outflow_m3) / o.outflow_m3 <= 0.01,
            fmt::format("unit outflow {:.3f} vs oracle {:.3f} m3", out, o.outflow_m3));
    g.check(std::abs(u.infiltration_m3 - o.infiltration_m3) / o.infiltration_m3 <= 0.01,
            fmt::format("unit infiltration {:.3f} vs oracle {:.3f} m3", u.infiltration_m3, o.infiltration_m3));

    const auto cfg = project::load_config(example);
    project::RunOptions ro;
    ro.timestamp = "fixed";
    const auto res = project::run_pipeline(cfg, ro);
    const std::size_t n_storms = res.storm_names.size();
    for (const auto& run : res.runs) {
        g.check(run.max_closure_error <= 0.005,
                fmt::format("{} {} closure {:.5f}", run.scenario, run.storm, run.max_closure_error));
    }
    for (std::size_t i = n_storms; i < res.runs.size(); ++i) {
        const auto& base = res.runs[i % n_storms].summary.loads_kg;
        for (const auto& [p, load] : res.runs[i].summary.loads_kg) {
            g.check(load <= base.at(p) + 1e-9, fmt::format("{} {} {} load above baseline", res.runs[i].scenario,
                                                           res.runs[i].storm, p));
        }
    }
    g.check(res.simulated.has_value(), "simulated indicators present");
    if (res.simulated) {
        const auto& col = res.simulated->column("runoff_reduction").values;
        for (std::size_t s = 0; s < col.size(); ++s) {
            g.check(col[s] >= 10.0 && col[s] <= 30.0, fmt::format("scenario {} runoff reduction {:.1f}%", s + 1, col[s]));
        }
    }
}

void calibration(Gate& g)
{
    const std::vector<double> o{1, 2, 3};
    g.check(metrics::nse(o, o).nse == 1.0, "nse identical");
    g.check(std::abs(metrics::nse(o, std::vector<double>(3, 2.0)).nse) <= 1e-12, "nse mean");
    g.check(std::abs(metrics::nse(o, std::vector<double>{1, 2, 4}).nse - 0.5) <= 1e-12, "nse hand case");

    const std::vector<double> three{10, 20, 30};
    const auto rec = storm::RainRecord::from_depths(three);
    const double a = storm::atrcr(rec, 20.0);
    g.check(std::abs(a - 0.8333) <= 1e-4, fmt::format("atrcr {:.5f}", a));
    const double h = storm::invert_atrcr(rec, 50.0 / 60.0);
    g.check(std::abs(h - 20.0) <= 0.01, fmt::format("inverted depth {:.4f} mm", h));
}

std::map<std::string, std::string> read_tree(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            std::ifstream in(e.path(), std::ios::binary);
            std::ostringstream s;
            s << in.rdbuf();
            out[fs::relative(e.path(), dir).generic_string()] = s.str();
        }
    }
    return out;
}

void determinism(Gate& g)
{
    const auto base = fs::temp_directory_path() / "lideval_acceptance";
    fs::remove_all(base);
    std::vector<std::map<std::string, std::string>> trees;
    for (const char* name : {"a", "b"}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto cfg = project::load_config(example);
        project::RunOptions ro;
        ro.out_dir = base / name;
        (void)project::run_pipeline(cfg, ro);
        const double elapsed = seconds_since(t0);
        g.check(elapsed < 10.0, fmt::format("run {} took {:.2f} s", name, elapsed));
        trees.push_back(read_tree(base / name));
    }
    g.check(trees[0].size() == trees[1].size() && !trees[0].empty(), "same file set");
    for (const auto& [path, body] : trees[0]) {
        const auto it = trees[1].find(path);
        if (it == trees[1].end()) {
            g.check(false, path + " missing in second run");
            continue;
        }
        if (path == "manifest.json") {
            auto ja = nlohmann::json::parse(body);
            auto jb = nlohmann::json::parse(it->second);
            ja.erase("timestamp");
            jb.erase("timestamp");
            g.check(ja == jb, "manifest differs beyond the timestamp");
        } else {
            g.check(body == it->second, path + " differs");
        }
    }
    fs::remove_all(base);
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<void(Gate&)>>> criteria{
        {"design runoff volume and composite coefficient", sizing},
        {"existing capacity, required volume and scenario capacities", capacity},
        {"benefit scores and ranking from direct indicator tables", benefits},
        {"AHP weights and consistency", weights},
        {"design storm mass, peak position and linearity", storms},
        {"simulation mass balance, oracles and indicator ranges", simulation},
        {"NSE and ATRCR", calibration},
        {"deterministic reruns within the time budget", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Gate g;
        try {
            criteria[i].second(g);
        } catch (const std::exception& e) {
            g.check(false, std::string("exception: ") + e.what());
        }
        fmt::print("{} criterion {}: {} ({} checks)\n", g.passed() ? "PASS" : "FAIL", i + 1, criteria[i].first,
                   g.count());
        for (const auto& f : g.failures()) {
            fmt::print("    failed: {}\n", f);
        }
        failed += g.passed() ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
