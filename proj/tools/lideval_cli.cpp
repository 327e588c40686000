// Command-line front end: design storms, ATRCR statistics, scenario simulation, AHP weights,
// benefit evaluation, ranking with weight sensitivity, and report rendering.

#include "lideval/ahp.hpp"
#include "lideval/csv.hpp"
#include "lideval/error.hpp"
#include "lideval/evaluator.hpp"
#include "lideval/project.hpp"
#include "lideval/report.hpp"
#include "lideval/storm_gen.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace lideval;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_invalid = 2;
constexpr int exit_runtime = 3;

struct Common {
    std::string config;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool config_required = true)
{
    auto* opt = cmd->add_option("--config", c.config, "Project file (JSON)");
    if (config_required) {
        opt->required();
    }
    cmd->add_option("--out", c.out, "Output directory (defaults to the project's output directory)");
}

fs::path out_dir(const Common& c, const project::ProjectConfig* cfg)
{
    if (!c.out.empty()) {
        return c.out;
    }
    return cfg ? cfg->output_dir : fs::path("out");
}

std::ofstream open_out(const fs::path& p)
{
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write '{}'", p.string()));
    }
    return out;
}

void print_benefits(const project::ProjectConfig& cfg, const project::PipelineResult& res)
{
    const auto tables = report::build_tables(cfg, res);
    std::cout << report::to_markdown({tables.back()});
}

int cmd_validate(const Common& c)
{
    const auto cfg = project::load_config(c.config);
    fmt::print("{}: valid ({} subcatchments, {} links, {} scenarios, {} pollutants), hash {}\n", cfg.name,
               cfg.subcatchments.size(), cfg.links.size(), cfg.scenarios.size(), cfg.pollutants.size(), cfg.hash);
    return exit_ok;
}

struct StormArgs {
    std::vector<double> depths;
    double duration = 90.0;
    double ratio = 0.5;
    double step = 60.0;
    double a = storm::IdfParams{}.a;
    double b = storm::IdfParams{}.b;
    double n = storm::IdfParams{}.n;
};

int cmd_storm(const Common& c, const StormArgs& a)
{
    project::StormSettings s;
    std::optional<project::ProjectConfig> cfg;
    if (!c.config.empty()) {
        cfg = project::load_config(c.config);
        if (!cfg->storms) {
            throw ValidationError("the project has no 'storms' section");
        }
        s = *cfg->storms;
    } else {
        s.duration_min = a.duration;
        s.peak_ratio = a.ratio;
        s.step_s = a.step;
        s.idf = {a.a, a.b, a.n};
    }
    if (!a.depths.empty()) {
        s.depths_mm = a.depths;
    }
    const auto dir = out_dir(c, cfg ? &*cfg : nullptr) / "storms";
    for (const auto& [name, h] : project::build_storms(s)) {
        auto out = open_out(dir / (name + ".csv"));
        storm::write_hyetograph_csv(out, h);
        fmt::print("{}: {:.3f} mm over {:g} min, peak {:.2f} mm/hr at minute {:g}\n", name, h.total_depth_mm(),
                   h.duration_min(), h.intensities_mm_per_hr[h.peak_index()], h.peak_index() * h.step_s / 60.0);
    }
    return exit_ok;
}

struct AtrcrArgs {
    std::string record;
    std::vector<double> depths;
    std::optional<double> target;
    double min_event = 2.0;
};

int cmd_atrcr(const Common& c, const AtrcrArgs& a)
{
    std::optional<project::ProjectConfig> cfg;
    fs::path record_path = a.record;
    if (record_path.empty()) {
        if (c.config.empty()) {
            throw ValidationError("give --record or a --config with sizing.rain_record_csv");
        }
        cfg = project::load_config(c.config);
        if (!cfg->sizing.rain_record_csv) {
            throw ValidationError("the project has no sizing.rain_record_csv");
        }
        record_path = *cfg->sizing.rain_record_csv;
    }
    const auto record = storm::read_rain_record_csv(record_path.string());
    storm::AtrcrOptions opts;
    opts.min_event_depth_mm = a.min_event;
    std::vector<double> depths = a.depths;
    if (depths.empty()) {
        for (int h = 0; h <= 60; h += 2) {
            depths.push_back(h);
        }
    }
    auto out = open_out(out_dir(c, cfg ? &*cfg : nullptr) / "atrcr.csv");
    out << "depth_mm,atrcr\n";
    for (const auto& p : storm::atrcr_curve(record, depths, opts)) {
        out << csv::fixed(p.depth_mm, 2) << ',' << csv::fixed(p.control_rate, 6) << '\n';
    }
    if (a.target) {
        fmt::print("depth for ATRCR {:.3f}: {:.2f} mm\n", *a.target, storm::invert_atrcr(record, *a.target, opts));
    }
    return exit_ok;
}

int cmd_simulate(const Common& c)
{
    const auto cfg = project::load_config(c.config);
    project::RunOptions opts;
    opts.out_dir = out_dir(c, &cfg);
    opts.evaluate = false;
    const auto res = project::run_pipeline(cfg, opts);
    if (res.runs.empty()) {
        throw ValidationError("nothing to simulate: the project needs storms and a catchment");
    }
    double worst = 0.0;
    for (const auto& r : res.runs) {
        worst = std::max(worst, r.max_closure_error);
    }
    fmt::print("{} runs, worst mass-balance closure {:.4f}%\n", res.runs.size(), worst * 100.0);
    if (res.simulated) {
        std::cout << report::to_markdown({report::indicator_table(*res.simulated, "simulated", "Simulated indicators")});
    }
    for (const auto& w : res.warnings) {
        fmt::print(stderr, "warning: {}\n", w);
    }
    return exit_ok;
}

struct WeightArgs {
    std::string matrix;
    bool geometric = false;
};

int cmd_weights(const Common& c, const WeightArgs& a)
{
    if (!a.matrix.empty()) {
        std::ifstream in(a.matrix);
        if (!in) {
            throw ValidationError(fmt::format("cannot open '{}'", a.matrix));
        }
        const auto m = ahp::read_matrix_csv(in);
        const auto w = a.geometric ? ahp::derive_weights_geometric(m) : ahp::derive_weights(m);
        const auto cr = ahp::consistency(m);
        for (std::size_t i = 0; i < w.labels.size(); ++i) {
            fmt::print("{},{:.6f}\n", w.labels[i], w.weights[i]);
        }
        fmt::print("lambda_max {:.6f}, CI {:.6f}, RI {:.2f}, CR {:.4f} ({})\n", cr.lambda_max, cr.ci, cr.ri, cr.cr,
                   cr.pass ? "acceptable" : "inconsistent");
        for (const auto& warn : m.scale_warnings()) {
            fmt::print(stderr, "warning: {}\n", warn);
        }
        return cr.pass ? exit_ok : exit_invalid;
    }
    if (c.config.empty()) {
        throw ValidationError("give --config or --matrix");
    }
    const auto cfg = project::load_config(c.config);
    const auto weighted = project::weighted_hierarchy(cfg);
    project::PipelineResult res;
    res.tree = weighted.tree;
    res.consistency = weighted.consistency;
    const auto tables = report::build_tables(cfg, res);
    const auto& wt = tables[2];
    auto out = open_out(out_dir(c, &cfg) / "weights.csv");
    out << report::to_csv(wt);
    std::cout << report::to_markdown({wt});
    return exit_ok;
}

int cmd_evaluate(const Common& c)
{
    const auto cfg = project::load_config(c.config);
    project::RunOptions opts;
    opts.out_dir = out_dir(c, &cfg);
    const auto res = project::run_pipeline(cfg, opts);
    print_benefits(cfg, res);
    for (const auto& w : res.warnings) {
        fmt::print(stderr, "warning: {}\n", w);
    }
    return exit_ok;
}

struct RankArgs {
    std::string node;
    double delta = 0.05;
};

int cmd_rank(const Common& c, const RankArgs& a)
{
    const auto cfg = project::load_config(c.config);
    project::RunOptions opts;
    opts.out_dir = out_dir(c, &cfg);
    const auto res = project::run_pipeline(cfg, opts);
    const auto& rk = res.report.ranking;
    for (std::size_t i = 0; i < rk.order.size(); ++i) {
        fmt::print("{}. {} ({:.3f})\n", i + 1, rk.order[i], rk.scores[i]);
    }
    if (rk.tie) {
        fmt::print("note: some scenarios tie; ties are listed in name order\n");
    }
    if (!a.node.empty()) {
        const auto rows = eval::weight_sensitivity(res.tree, res.report.normalized, a.node, a.delta);
        auto out = open_out(*opts.out_dir / "sensitivity.csv");
        out << "node,delta,weight,ranking,top_changed\n";
        for (const auto& r : rows) {
            std::string order;
            for (const auto& s : r.ranking.order) {
                order += (order.empty() ? "" : " > ") + s;
            }
            out << a.node << ',' << csv::fixed(r.delta, 4) << ',' << csv::fixed(r.weight, 4) << ',' << order << ','
                << (r.top_changed ? "true" : "false") << '\n';
            fmt::print("{} {:+.3f} (weight {:.3f}): {}{}\n", a.node, r.delta, r.weight, order,
                       r.top_changed ? "  [top scenario changes]" : "");
        }
    }
    return exit_ok;
}

struct ReportArgs {
    std::string format = "all";
};

int cmd_report(const Common& c, const ReportArgs& a)
{
    const auto cfg = project::load_config(c.config);
    project::RunOptions opts;
    opts.out_dir = out_dir(c, &cfg);
    const auto res = project::run_pipeline(cfg, opts);
    const auto tables = report::build_tables(cfg, res);
    std::vector<report::Format> formats;
    if (a.format == "all") {
        formats = {report::Format::markdown, report::Format::csv, report::Format::json};
    } else {
        formats = {report::format_from_string(a.format)};
    }
    for (const auto f : formats) {
        for (const auto& p : report::write_report(tables, *opts.out_dir, f)) {
            fmt::print("wrote {}\n", p.string());
        }
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"LID scenario simulation and multi-criteria evaluation"};
    app.require_subcommand(1);

    Common common;
    StormArgs storm_args;
    AtrcrArgs atrcr_args;
    WeightArgs weight_args;
    RankArgs rank_args;
    ReportArgs report_args;
    double target = 0.0;

    auto* validate = app.add_subcommand("validate", "Check a project file and report every problem found");
    add_common(validate, common);

    auto* storm = app.add_subcommand("storm", "Write Chicago design hyetographs");
    add_common(storm, common, false);
    storm->add_option("--depth", storm_args.depths, "Storm depths, mm (repeatable)");
    storm->add_option("--duration", storm_args.duration, "Duration, minutes");
    storm->add_option("--ratio", storm_args.ratio, "Peak position ratio r");
    storm->add_option("--step", storm_args.step, "Time step, s");
    storm->add_option("--idf-a", storm_args.a, "IDF scale A");
    storm->add_option("--idf-b", storm_args.b, "IDF offset b, minutes");
    storm->add_option("--idf-n", storm_args.n, "IDF exponent n");

    auto* atrcr = app.add_subcommand("atrcr", "ATRCR curve of a rainfall record");
    add_common(atrcr, common, false);
    atrcr->add_option("--record", atrcr_args.record, "CSV with header date,depth_mm");
    atrcr->add_option("--depth", atrcr_args.depths, "Capture depths, mm (repeatable)");
    auto* target_opt = atrcr->add_option("--target", target, "Report the depth reaching this control rate");
    atrcr->add_option("--min-event", atrcr_args.min_event, "Ignore events at or below this depth, mm");

    auto* simulate = app.add_subcommand("simulate", "Run baseline and scenario simulations");
    add_common(simulate, common);

    auto* weights = app.add_subcommand("weights", "Derive AHP weights and consistency ratios");
    add_common(weights, common, false);
    weights->add_option("--matrix", weight_args.matrix, "Single pairwise matrix CSV instead of a project");
    weights->add_flag("--geometric", weight_args.geometric, "Use row geometric means instead of the eigenvector");

    auto* evaluate = app.add_subcommand("evaluate", "Run the full pipeline and print the benefits");
    add_common(evaluate, common);

    auto* rank = app.add_subcommand("rank", "Rank scenarios, optionally with a weight sensitivity check");
    add_common(rank, common);
    rank->add_option("--perturb", rank_args.node, "Hierarchy node whose weight is perturbed");
    rank->add_option("--delta", rank_args.delta, "Perturbation size");

    auto* rep = app.add_subcommand("report", "Render the result tables");
    add_common(rep, common);
    rep->add_option("--format", report_args.format, "md, csv, json or all")
        ->check(CLI::IsMember({"md", "markdown", "csv", "json", "all"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_invalid;
    }

    try {
        if (validate->parsed()) return cmd_validate(common);
        if (storm->parsed()) return cmd_storm(common, storm_args);
        if (atrcr->parsed()) {
            if (target_opt->count()) {
                atrcr_args.target = target;
            }
            return cmd_atrcr(common, atrcr_args);
        }
        if (simulate->parsed()) return cmd_simulate(common);
        if (weights->parsed()) return cmd_weights(common, weight_args);
        if (evaluate->parsed()) return cmd_evaluate(common);
        if (rank->parsed()) return cmd_rank(common, rank_args);
        if (rep->parsed()) return cmd_report(common, report_args);
    } catch (const ConfigError& e) {
        fmt::print(stderr, "invalid project: {}\n", e.what());
        return exit_invalid;
    } catch (const ValidationError& e) {
        fmt::print(stderr, "invalid input: {}\n", e.what());
        return exit_invalid;
    } catch (const StageError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return exit_runtime;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return exit_runtime;
    }
    return exit_invalid;
}
