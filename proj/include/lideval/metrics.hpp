#pragma once

#include "lideval/hydrology.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lideval::metrics {

struct FitReport {
    double nse = 0.0;
    std::size_t n_points = 0;
    /// nse > 0.5
    bool pass = false;
};

/// Nash-Sutcliffe efficiency 1 - sum (O - S)^2 / sum (O - mean O)^2.
FitReport nse(std::span<const double> observed, std::span<const double> simulated);

struct TimeSeries {
    std::vector<double> t_s;
    std::vector<double> values;
};

/// Linear interpolation of `series` at `times`; outside the sampled range the end values hold.
std::vector<double> resample(const TimeSeries& series, std::span<const double> times);

/// NSE of a simulated hydrograph against observations at the observed timestamps.
FitReport nse(const TimeSeries& observed, const hydrology::Hydrograph& simulated);

struct PeakStats {
    double peak_flow_lps = 0.0;
    double peak_time_s = 0.0;
    std::size_t index = 0;
};

/// First (earliest) step attaining the maximum.
PeakStats peak_stats(const hydrology::Hydrograph& h);

struct Reduction {
    double percent = 0.0;
    /// Scenario is worse than the baseline.
    bool worsened = false;
};

/// (base - scen) / base * 100; negative values are kept and flagged.
Reduction reduction(double base, double scen);

/// CSV `t_s,value` with strictly increasing times.
TimeSeries read_observed_csv(std::istream& in);

} // namespace lideval::metrics
