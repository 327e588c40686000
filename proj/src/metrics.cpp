#include "lideval/metrics.hpp"

#include "lideval/csv.hpp"
#include "lideval/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>

namespace lideval::metrics {

FitReport nse(std::span<const double> observed, std::span<const double> simulated)
{
    if (observed.size() != simulated.size()) {
        throw ValidationError(fmt::format("NSE needs equal lengths (observed {}, simulated {})", observed.size(), simulated.size()));
    }
    if (observed.size() < 2) {
        throw ValidationError("NSE needs at least two points");
    }
    const double mean = std::accumulate(observed.begin(), observed.end(), 0.0) / static_cast<double>(observed.size());
    double residual = 0.0;
    double variance = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        residual += (observed[i] - simulated[i]) * (observed[i] - simulated[i]);
        variance += (observed[i] - mean) * (observed[i] - mean);
    }
    if (variance <= 0.0) {
        throw ValidationError("zero variance in observed series");
    }
    FitReport r;
    r.nse = 1.0 - residual / variance;
    r.n_points = observed.size();
    r.pass = r.nse > 0.5;
    return r;
}

std::vector<double> resample(const TimeSeries& series, std::span<const double> times)
{
    if (series.t_s.size() != series.values.size() || series.t_s.empty()) {
        throw ValidationError("series to resample must be non-empty with matching time and value counts");
    }
    if (!std::is_sorted(series.t_s.begin(), series.t_s.end())) {
        throw ValidationError("series times must be sorted");
    }
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) {
        const auto it = std::lower_bound(series.t_s.begin(), series.t_s.end(), t);
        if (it == series.t_s.begin()) {
            out.push_back(series.values.front());
        } else if (it == series.t_s.end()) {
            out.push_back(series.values.back());
        } else {
            const auto i = static_cast<std::size_t>(it - series.t_s.begin());
            const double t0 = series.t_s[i - 1];
            const double t1 = series.t_s[i];
            const double w = t1 > t0 ? (t - t0) / (t1 - t0) : 1.0;
            out.push_back(series.values[i - 1] + w * (series.values[i] - series.values[i - 1]));
        }
    }
    return out;
}

FitReport nse(const TimeSeries& observed, const hydrology::Hydrograph& simulated)
{
    TimeSeries sim;
    sim.values = simulated.flows_lps;
    sim.t_s.resize(sim.values.size());
    for (std::size_t k = 0; k < sim.t_s.size(); ++k) {
        sim.t_s[k] = static_cast<double>(k) * simulated.step_s;
    }
    const auto at_obs = resample(sim, observed.t_s);
    return nse(observed.values, at_obs);
}

PeakStats peak_stats(const hydrology::Hydrograph& h)
{
    if (h.flows_lps.empty()) {
        throw ValidationError("peak of an empty hydrograph");
    }
    const auto it = std::max_element(h.flows_lps.begin(), h.flows_lps.end());
    PeakStats p;
    p.index = static_cast<std::size_t>(it - h.flows_lps.begin());
    p.peak_flow_lps = *it;
    p.peak_time_s = static_cast<double>(p.index) * h.step_s;
    return p;
}

Reduction reduction(double base, double scen)
{
    if (!(base > 0.0)) {
        throw ValidationError(fmt::format("reduction needs a positive baseline (got {})", base));
    }
    Reduction r;
    r.percent = (base - scen) / base * 100.0;
    r.worsened = r.percent < 0.0;
    return r;
}

TimeSeries read_observed_csv(std::istream& in)
{
    const auto rows = csv::read_rows(in);
    if (rows.empty() || rows.front().size() != 2 || rows.front()[0] != "t_s" || rows.front()[1] != "value") {
        throw ValidationError("observed CSV must start with the header 't_s,value'");
    }
    TimeSeries ts;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto ctx = fmt::format("observed CSV row {}", i + 1);
        if (rows[i].size() != 2) {
            throw ValidationError(ctx + ": expected 2 fields");
        }
        const double t = csv::to_double(rows[i][0], ctx);
        if (!ts.t_s.empty() && !(t > ts.t_s.back())) {
            throw ValidationError(ctx + ": times must be strictly increasing");
        }
        ts.t_s.push_back(t);
        ts.values.push_back(csv::to_double(rows[i][1], ctx));
    }
    return ts;
}

} // namespace lideval::metrics
