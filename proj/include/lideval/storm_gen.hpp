#pragma once

#include <chrono>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lideval::storm {

using TimePoint = std::chrono::sys_seconds;

struct RainEvent {
    TimePoint date;
    double depth_mm = 0.0;
};

/// Discrete rainfall events, dates strictly increasing, depths >= 0.
class RainRecord {
public:
    RainRecord() = default;
    explicit RainRecord(std::vector<RainEvent> events);

    /// Convenience for fixtures: consecutive daily events starting 2000-01-01.
    static RainRecord from_depths(std::span<const double> depths_mm);

    const std::vector<RainEvent>& events() const noexcept { return events_; }
    bool empty() const noexcept { return events_.empty(); }

private:
    std::vector<RainEvent> events_;
};

struct AtrcrOptions {
    /// Events at or below this depth are left out of the statistics.
    double min_event_depth_mm = 2.0;
};

struct AtrcrPoint {
    double depth_mm = 0.0;
    double control_rate = 0.0;
};

/// Fraction of total rainfall volume captured when every event is retained up to `depth`.
double atrcr(const RainRecord& record, double depth_mm, const AtrcrOptions& opts = {});

std::vector<AtrcrPoint> atrcr_curve(const RainRecord& record, std::span<const double> depths_mm,
                                    const AtrcrOptions& opts = {});

/// Smallest capture depth (to 0.01 mm) whose control rate reaches `target`.
double invert_atrcr(const RainRecord& record, double target, const AtrcrOptions& opts = {});

struct GaugeSample {
    TimePoint time;
    double depth_mm = 0.0;
};

/// Splits continuous gauge data into events; a dry spell of at least `min_dry_gap` starts a new one.
RainRecord segment_events(std::span<const GaugeSample> samples,
                          std::chrono::seconds min_dry_gap = std::chrono::hours(6));

/// Intensity-duration-frequency constants i = A / (t + b)^n, t in minutes.
struct IdfParams {
    double a = 20.0;
    double b = 10.0;
    double n = 0.75;

    void validate() const;
};

struct Hyetograph {
    double step_s = 60.0;
    std::vector<double> intensities_mm_per_hr;
    double peak_ratio = 0.5;

    double duration_min() const noexcept { return step_s * static_cast<double>(intensities_mm_per_hr.size()) / 60.0; }
    double total_depth_mm() const noexcept;
    /// Index of the first maximal ordinate.
    std::size_t peak_index() const noexcept;
};

/// Chicago design storm, rescaled so that its depth is exactly `depth_mm`.
Hyetograph chicago_hyetograph(double depth_mm, double duration_min, double peak_ratio,
                              const IdfParams& idf, double step_s);

std::vector<Hyetograph> design_storm_suite(std::span<const double> depths_mm, double duration_min,
                                           double peak_ratio, const IdfParams& idf, double step_s);

/// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM" or "YYYY-MM-DDTHH:MM:SS" (also with a space separator).
TimePoint parse_iso8601(const std::string& text);
std::string format_iso8601(TimePoint t);

/// CSV with header `date,depth_mm`.
RainRecord read_rain_record_csv(std::istream& in);
RainRecord read_rain_record_csv(const std::string& path);

/// CSV `t_min,intensity_mm_per_hr`; t is the start of each interval.
void write_hyetograph_csv(std::ostream& out, const Hyetograph& h);

} // namespace lideval::storm
