#include "lideval/storm_gen.hpp"

#include "lideval/csv.hpp"
#include "lideval/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace lideval::storm {

namespace chr = std::chrono;

RainRecord::RainRecord(std::vector<RainEvent> events)
    : events_(std::move(events))
{
    for (std::size_t i = 0; i < events_.size(); ++i) {
        if (!(events_[i].depth_mm >= 0.0) || !std::isfinite(events_[i].depth_mm)) {
            throw ValidationError(fmt::format("rain event {} has invalid depth {}", i, events_[i].depth_mm));
        }
        if (i > 0 && events_[i].date <= events_[i - 1].date) {
            throw ValidationError(fmt::format("rain event dates must be strictly increasing (event {} at {})", i,
                                              format_iso8601(events_[i].date)));
        }
    }
}

RainRecord RainRecord::from_depths(std::span<const double> depths_mm)
{
    std::vector<RainEvent> events;
    events.reserve(depths_mm.size());
    const TimePoint start = chr::sys_days{chr::year{2000} / chr::January / 1};
    for (std::size_t i = 0; i < depths_mm.size(); ++i) {
        events.push_back({start + chr::days{static_cast<long>(i)}, depths_mm[i]});
    }
    return RainRecord(std::move(events));
}

namespace {

struct FilteredTotals {
    std::vector<double> depths;
    double total = 0.0;
};

FilteredTotals filtered(const RainRecord& record, const AtrcrOptions& opts)
{
    if (record.empty()) {
        throw ValidationError("no rainfall events");
    }
    FilteredTotals f;
    for (const auto& e : record.events()) {
        if (e.depth_mm > opts.min_event_depth_mm) {
            f.depths.push_back(e.depth_mm);
            f.total += e.depth_mm;
        }
    }
    if (f.depths.empty() || f.total <= 0.0) {
        throw ValidationError("no rainfall events above the minimum event depth");
    }
    return f;
}

double control_rate(const FilteredTotals& f, double depth_mm)
{
    double captured = 0.0;
    for (double p : f.depths) {
        captured += std::min(p, depth_mm);
    }
    return captured / f.total;
}

} // namespace

double atrcr(const RainRecord& record, double depth_mm, const AtrcrOptions& opts)
{
    if (!(depth_mm >= 0.0)) {
        throw ValidationError(fmt::format("capture depth must be >= 0 (got {})", depth_mm));
    }
    return control_rate(filtered(record, opts), depth_mm);
}

std::vector<AtrcrPoint> atrcr_curve(const RainRecord& record, std::span<const double> depths_mm,
                                    const AtrcrOptions& opts)
{
    const auto f = filtered(record, opts);
    std::vector<AtrcrPoint> out;
    out.reserve(depths_mm.size());
    for (double h : depths_mm) {
        if (!(h >= 0.0)) {
            throw ValidationError(fmt::format("capture depth must be >= 0 (got {})", h));
        }
        out.push_back({h, control_rate(f, h)});
    }
    return out;
}

double invert_atrcr(const RainRecord& record, double target, const AtrcrOptions& opts)
{
    if (!(target > 0.0) || target >= 1.0) {
        throw ValidationError(fmt::format("target control rate must lie in (0, 1) (got {})", target));
    }
    const auto f = filtered(record, opts);
    double lo = 0.0;
    double hi = *std::max_element(f.depths.begin(), f.depths.end());
    // invariant: rate(lo) < target <= rate(hi)
    while (hi - lo > 0.005) {
        const double mid = 0.5 * (lo + hi);
        if (control_rate(f, mid) >= target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

RainRecord segment_events(std::span<const GaugeSample> samples, chr::seconds min_dry_gap)
{
    std::vector<RainEvent> events;
    TimePoint last_wet{};
    bool have_wet = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (i > 0 && s.time <= samples[i - 1].time) {
            throw ValidationError("gauge samples must be strictly increasing in time");
        }
        if (!(s.depth_mm >= 0.0)) {
            throw ValidationError(fmt::format("gauge sample at {} has negative depth", format_iso8601(s.time)));
        }
        if (s.depth_mm <= 0.0) {
            continue;
        }
        if (!have_wet || s.time - last_wet >= min_dry_gap) {
            events.push_back({s.time, 0.0});
        }
        events.back().depth_mm += s.depth_mm;
        last_wet = s.time;
        have_wet = true;
    }
    return RainRecord(std::move(events));
}

void IdfParams::validate() const
{
    if (n >= 1.0) {
        throw ValidationError(fmt::format("divergent IDF exponent (n = {})", n));
    }
    if (!(a > 0.0) || !(b >= 0.0) || !(n >= 0.0)) {
        throw ValidationError(fmt::format("invalid IDF parameters (A = {}, b = {}, n = {})", a, b, n));
    }
}

double Hyetograph::total_depth_mm() const noexcept
{
    return std::accumulate(intensities_mm_per_hr.begin(), intensities_mm_per_hr.end(), 0.0) * step_s / 3600.0;
}

std::size_t Hyetograph::peak_index() const noexcept
{
    const auto it = std::max_element(intensities_mm_per_hr.begin(), intensities_mm_per_hr.end());
    return static_cast<std::size_t>(std::distance(intensities_mm_per_hr.begin(), it));
}

Hyetograph chicago_hyetograph(double depth_mm, double duration_min, double peak_ratio, const IdfParams& idf,
                              double step_s)
{
    idf.validate();
    if (!(depth_mm > 0.0)) {
        throw ValidationError(fmt::format("storm depth must be > 0 (got {})", depth_mm));
    }
    if (!(peak_ratio > 0.0 && peak_ratio < 1.0)) {
        throw ValidationError(fmt::format("peak ratio must lie in (0, 1) (got {})", peak_ratio));
    }
    if (!(duration_min > 0.0) || !(step_s > 0.0)) {
        throw ValidationError("storm duration and step must be positive");
    }
    const double steps_exact = duration_min * 60.0 / step_s;
    const auto count = static_cast<std::size_t>(std::llround(steps_exact));
    if (count == 0 || std::abs(steps_exact - static_cast<double>(count)) > 1e-9 * steps_exact) {
        throw ValidationError(fmt::format("step {} s does not divide the duration {} min", step_s, duration_min));
    }

    // Depth from the IDF curve for a storm of length tau minutes. Its derivative is the
    // instantaneous Chicago intensity, so differencing this mass curve gives exact step means.
    const auto idf_depth = [&](double tau) { return tau <= 0.0 ? 0.0 : idf.a * tau / std::pow(tau + idf.b, idf.n); };
    const double peak_t = peak_ratio * duration_min;
    const double r = peak_ratio;
    const auto mass = [&](double t) {
        if (t <= peak_t) {
            return r * idf_depth(duration_min) - r * idf_depth((peak_t - t) / r);
        }
        return r * idf_depth(duration_min) + (1.0 - r) * idf_depth((t - peak_t) / (1.0 - r));
    };

    Hyetograph h;
    h.step_s = step_s;
    h.peak_ratio = peak_ratio;
    h.intensities_mm_per_hr.resize(count);
    const double step_min = step_s / 60.0;
    double prev = mass(0.0);
    for (std::size_t k = 0; k < count; ++k) {
        const double t1 = (k + 1 == count) ? duration_min : static_cast<double>(k + 1) * step_min;
        const double next = mass(t1);
        h.intensities_mm_per_hr[k] = std::max(0.0, next - prev);
        prev = next;
    }
    const double raw = std::accumulate(h.intensities_mm_per_hr.begin(), h.intensities_mm_per_hr.end(), 0.0);
    if (!(raw > 0.0)) {
        throw ComputationError("Chicago storm shape has zero mass");
    }
    const double scale = depth_mm * 3600.0 / (raw * step_s);
    for (double& v : h.intensities_mm_per_hr) {
        v *= scale;
    }
    return h;
}

std::vector<Hyetograph> design_storm_suite(std::span<const double> depths_mm, double duration_min,
                                           double peak_ratio, const IdfParams& idf, double step_s)
{
    std::vector<Hyetograph> out;
    out.reserve(depths_mm.size());
    for (double d : depths_mm) {
        out.push_back(chicago_hyetograph(d, duration_min, peak_ratio, idf, step_s));
    }
    return out;
}

TimePoint parse_iso8601(const std::string& text)
{
    int y = 0;
    unsigned mo = 0;
    unsigned d = 0;
    int hh = 0;
    int mm = 0;
    int ss = 0;
    char sep = 0;
    int consumed = 0;
    const auto s = std::string(csv::trim(text));
    bool ok = false;
    if (std::sscanf(s.c_str(), "%d-%u-%u%n", &y, &mo, &d, &consumed) == 3 && consumed == static_cast<int>(s.size())) {
        ok = true;
    } else if (std::sscanf(s.c_str(), "%d-%u-%u%c%d:%d:%d%n", &y, &mo, &d, &sep, &hh, &mm, &ss, &consumed) == 7
               && consumed == static_cast<int>(s.size()) && (sep == 'T' || sep == ' ')) {
        ok = true;
    } else if (std::sscanf(s.c_str(), "%d-%u-%u%c%d:%d%n", &y, &mo, &d, &sep, &hh, &mm, &consumed) == 6
               && consumed == static_cast<int>(s.size()) && (sep == 'T' || sep == ' ')) {
        ss = 0;
        ok = true;
    }
    const chr::year_month_day ymd{chr::year{y}, chr::month{mo}, chr::day{d}};
    if (!ok || !ymd.ok() || hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 60) {
        throw ValidationError(fmt::format("'{}' is not an ISO-8601 date", text));
    }
    return chr::sys_days{ymd} + chr::hours{hh} + chr::minutes{mm} + chr::seconds{ss};
}

std::string format_iso8601(TimePoint t)
{
    const auto day = chr::floor<chr::days>(t);
    const chr::year_month_day ymd{day};
    const chr::hh_mm_ss hms{t - day};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hms.hours().count(),
                       hms.minutes().count(), hms.seconds().count());
}

RainRecord read_rain_record_csv(std::istream& in)
{
    const auto rows = csv::read_rows(in);
    if (rows.empty() || rows.front().size() < 2 || rows.front()[0] != "date" || rows.front()[1] != "depth_mm") {
        throw ValidationError("rainfall CSV must start with the header 'date,depth_mm'");
    }
    std::vector<RainEvent> events;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const auto ctx = fmt::format("rainfall CSV row {}", i + 1);
        if (row.size() != 2) {
            throw ValidationError(ctx + ": expected 2 fields");
        }
        events.push_back({parse_iso8601(row[0]), csv::to_double(row[1], ctx)});
    }
    return RainRecord(std::move(events));
}

RainRecord read_rain_record_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open rainfall record '" + path + "'");
    }
    return read_rain_record_csv(in);
}

void write_hyetograph_csv(std::ostream& out, const Hyetograph& h)
{
    out << "t_min,intensity_mm_per_hr\n";
    for (std::size_t k = 0; k < h.intensities_mm_per_hr.size(); ++k) {
        out << csv::fixed(static_cast<double>(k) * h.step_s / 60.0, 3) << ','
            << csv::fixed(h.intensities_mm_per_hr[k], 6) << '\n';
    }
}

} // namespace lideval::storm
