#include "lideval/hydrology.hpp"

#include "lideval/csv.hpp"
#include "lideval/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

namespace lideval::hydrology {

void HortonParams::validate() const
{
    if (!(fc >= 0.0) || !(f0 >= fc) || !(k > 0.0)) {
        throw ValidationError(fmt::format("Horton parameters need f0 >= fc >= 0 and k > 0 (f0={}, fc={}, k={})", f0, fc, k));
    }
}

double horton_rate(const HortonParams& p, double hours)
{
    if (!(hours >= 0.0)) {
        throw ValidationError(fmt::format("Horton time must be >= 0 (got {})", hours));
    }
    return p.fc + (p.f0 - p.fc) * std::exp(-p.k * hours);
}

double horton_cumulative(const HortonParams& p, double hours)
{
    if (!(hours >= 0.0)) {
        throw ValidationError(fmt::format("Horton time must be >= 0 (got {})", hours));
    }
    return p.fc * hours + (p.f0 - p.fc) / p.k * (1.0 - std::exp(-p.k * hours));
}

double composite_runoff_coefficient(std::span<const LandUse> land_uses)
{
    if (land_uses.empty()) {
        throw ValidationError("composite runoff coefficient needs at least one land use");
    }
    double weighted = 0.0;
    double area = 0.0;
    for (const auto& lu : land_uses) {
        if (!(lu.area_ha > 0.0)) {
            throw ValidationError(fmt::format("land use '{}' must have area > 0", lu.name));
        }
        if (!(lu.runoff_coefficient >= 0.0 && lu.runoff_coefficient <= 1.0)) {
            throw ValidationError(fmt::format("land use '{}' runoff coefficient must lie in [0, 1]", lu.name));
        }
        weighted += lu.runoff_coefficient * lu.area_ha;
        area += lu.area_ha;
    }
    return weighted / area;
}

double runoff_volume(double runoff_coeff, double depth_mm, double area_ha)
{
    if (!(runoff_coeff >= 0.0) || !(depth_mm >= 0.0) || !(area_ha >= 0.0)) {
        throw ValidationError("runoff volume inputs must be >= 0");
    }
    return 10.0 * runoff_coeff * depth_mm * area_ha;
}

void Subcatchment::validate() const
{
    const auto fail = [&](const std::string& what) { throw ValidationError(fmt::format("subcatchment '{}': {}", id, what)); };
    if (!(area_ha > 0.0)) fail("area must be > 0");
    if (!(impervious_fraction >= 0.0 && impervious_fraction <= 1.0)) fail("impervious fraction must lie in [0, 1]");
    if (!(width_m > 0.0) || !(slope > 0.0)) fail("width and slope must be > 0");
    if (!(depression_storage_impervious_mm >= 0.0) || !(depression_storage_pervious_mm >= 0.0)) fail("depression storage must be >= 0");
    if (!(manning_n_impervious > 0.0) || !(manning_n_pervious > 0.0)) fail("Manning n must be > 0");
    horton.validate();
    if (!land_uses.empty()) {
        double sum = 0.0;
        for (const auto& lu : land_uses) {
            if (!(lu.area_ha >= 0.0) || !(lu.runoff_coefficient >= 0.0 && lu.runoff_coefficient <= 1.0)) {
                fail(fmt::format("land use '{}' has an invalid area or runoff coefficient", lu.name));
            }
            sum += lu.area_ha;
        }
        if (std::abs(sum - area_ha) > 1e-3 * area_ha) {
            fail(fmt::format("land-use areas sum to {} ha, expected {} ha", sum, area_ha));
        }
    }
    if (outlet.empty()) fail("outlet is not set");
}

double Hydrograph::volume_m3() const noexcept
{
    return std::accumulate(flows_lps.begin(), flows_lps.end(), 0.0) * step_s / 1000.0;
}

double WaterBalance::closure_error() const noexcept
{
    const double out = runoff_m3 + infiltration_m3 + evaporation_m3 + surface_storage_m3 + lid_storage_m3;
    if (rainfall_m3 <= 0.0) {
        return std::abs(out);
    }
    return std::abs(rainfall_m3 - out) / rainfall_m3;
}

namespace {

/// Rain depth (mm) falling in [t0, t1) seconds of a piecewise-constant hyetograph.
double rain_depth(const storm::Hyetograph& h, double t0, double t1)
{
    const double end = h.step_s * static_cast<double>(h.intensities_mm_per_hr.size());
    t0 = std::max(t0, 0.0);
    t1 = std::min(t1, end);
    if (t1 <= t0) {
        return 0.0;
    }
    double depth = 0.0;
    auto k = static_cast<std::size_t>(std::floor(t0 / h.step_s));
    while (k < h.intensities_mm_per_hr.size()) {
        const double a = std::max(t0, static_cast<double>(k) * h.step_s);
        const double b = std::min(t1, static_cast<double>(k + 1) * h.step_s);
        if (b <= a) {
            break;
        }
        depth += h.intensities_mm_per_hr[k] * (b - a) / 3600.0;
        ++k;
    }
    return depth;
}

/// One overland-flow plane (pervious or impervious part of a subcatchment).
struct Subarea {
    double area_m2 = 0.0;
    double depression_mm = 0.0;
    /// Outflow coefficient so that q[mm/s] = alpha * (d - ds)^(5/3) with d in mm.
    double alpha = 0.0;
    bool pervious = false;
    double depth_mm = 0.0;

    double outflow_rate(double d) const noexcept
    {
        const double excess = d - depression_mm;
        return excess > 0.0 ? alpha * std::pow(excess, 5.0 / 3.0) : 0.0;
    }
};

struct SubareaFlux {
    double runoff_mm = 0.0;
    double infiltration_mm = 0.0;
    double evaporation_mm = 0.0;
};

// Explicit Heun (predictor-corrector) integration of dd/dt = i - f - e - q(d) over one step.
// The step is split whenever a single Euler estimate would move the depth by more than 0.25 mm or
// the step is long compared with the reservoir's linearised response time.
SubareaFlux advance(Subarea& s, double rain_mm, double dt_s, double t_start_s, const HortonParams& horton,
                    double evap_mm_hr)
{
    SubareaFlux out;
    if (s.area_m2 <= 0.0) {
        return out;
    }
    const double evap_rate = evap_mm_hr / 3600.0;
    const auto infil_capacity = [&](double t0, double t1) {
        if (!s.pervious) {
            return 0.0;
        }
        return horton_cumulative(horton, t1 / 3600.0) - horton_cumulative(horton, t0 / 3600.0);
    };

    int substeps = 1;
    {
        const double q = s.outflow_rate(s.depth_mm);
        const double loss = std::min(infil_capacity(t_start_s, t_start_s + dt_s), s.depth_mm + rain_mm);
        const double change = std::abs(rain_mm - loss - q * dt_s);
        substeps = std::max(substeps, static_cast<int>(std::ceil(change / 0.25)));
        const double d_max = std::max(s.depth_mm, s.depth_mm + rain_mm);
        const double excess = d_max - s.depression_mm;
        if (excess > 0.0) {
            const double relax_rate = 5.0 / 3.0 * s.outflow_rate(d_max) / excess;
            substeps = std::max(substeps, static_cast<int>(std::ceil(relax_rate * dt_s / 0.2)));
        }
        substeps = std::min(substeps, 20000);
    }

    const double h = dt_s / substeps;
    const double rain_sub = rain_mm / substeps;
    for (int i = 0; i < substeps; ++i) {
        const double t0 = t_start_s + i * h;
        double avail = s.depth_mm + rain_sub;
        const double infil = std::min(infil_capacity(t0, t0 + h), avail);
        avail -= infil;
        const double evap = std::min(evap_rate * h, avail);
        avail -= evap;
        const double q1 = s.outflow_rate(s.depth_mm);
        const double predicted = std::max(avail - q1 * h, 0.0);
        const double q2 = s.outflow_rate(predicted);
        const double runoff = std::clamp(0.5 * (q1 + q2) * h, 0.0, std::max(avail - s.depression_mm, 0.0));
        s.depth_mm = avail - runoff;
        out.runoff_mm += runoff;
        out.infiltration_mm += infil;
        out.evaporation_mm += evap;
    }
    return out;
}

void check_steps(double storm_step, double sim_step)
{
    if (!(storm_step > 0.0) || !(sim_step > 0.0)) {
        throw ValidationError("time steps must be > 0");
    }
    const double big = std::max(storm_step, sim_step);
    const double small = std::min(storm_step, sim_step);
    const double ratio = big / small;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw ValidationError(fmt::format("storm step {} s and simulation step {} s must divide one another", storm_step, sim_step));
    }
}

} // namespace

std::vector<TreatedShare> treated_shares(const Subcatchment& sc, std::span<const lid::LidPlacement> placements)
{
    double default_area = 0.0;
    for (const auto& p : placements) {
        if (p.subcatchment == sc.id && !p.treated_fraction) {
            default_area += p.area_ha;
        }
    }
    std::vector<TreatedShare> out;
    double total = 0.0;
    for (const auto& p : placements) {
        if (p.subcatchment != sc.id) {
            continue;
        }
        double f = 0.0;
        if (p.treated_fraction) {
            f = *p.treated_fraction;
            if (!(f >= 0.0 && f <= 1.0)) {
                throw ValidationError(fmt::format("subcatchment '{}': treated fraction must lie in [0, 1]", sc.id));
            }
        } else if (default_area > 0.0) {
            f = sc.impervious_fraction * p.area_ha / default_area;
        }
        if (p.area_ha <= 0.0) {
            f = 0.0;
        }
        total += f;
        out.push_back({p.kind, f});
    }
    if (total > 1.0 + 1e-9) {
        throw ValidationError(fmt::format("subcatchment '{}': treated fractions sum to {} (> 1)", sc.id, total));
    }
    return out;
}

SubcatchmentResult simulate_subcatchment(const Subcatchment& sc, const storm::Hyetograph& storm,
                                         std::span<const lid::LidPlacement> placements,
                                         const lid::LidCatalog& catalog, const SimulationOptions& opts)
{
    sc.validate();
    check_steps(storm.step_s, opts.step_s);
    if (!(opts.tail_s >= 0.0) || !(opts.evaporation_mm_hr >= 0.0)) {
        throw ValidationError("simulation tail and evaporation must be >= 0");
    }

    struct Unit {
        lid::LidUnit unit;
        double area_m2;
        double fraction;
    };
    std::vector<Unit> units;
    double lid_area_ha = 0.0;
    const auto shares = treated_shares(sc, placements);
    {
        std::size_t i = 0;
        for (const auto& p : placements) {
            if (p.subcatchment != sc.id) {
                continue;
            }
            if (!(p.area_ha >= 0.0)) {
                throw ValidationError(fmt::format("subcatchment '{}': negative LID area", sc.id));
            }
            lid_area_ha += p.area_ha;
            if (p.area_ha > 0.0) {
                units.push_back({lid::LidUnit(catalog.at(p.kind)), p.area_ha * 1.0e4, shares[i].fraction});
            }
            ++i;
        }
    }
    if (lid_area_ha > sc.area_ha * (1.0 + 1e-9)) {
        throw ValidationError(fmt::format("subcatchment '{}': LID area {} ha exceeds subcatchment area {} ha", sc.id,
                                          lid_area_ha, sc.area_ha));
    }

    const double total_m2 = sc.area_ha * 1.0e4;
    const double surface_m2 = std::max(0.0, (sc.area_ha - lid_area_ha) * 1.0e4);
    const double sqrt_slope = std::sqrt(sc.slope);
    // SI Manning outflow per unit area is W/A/n * sqrt(S) * (d[m])^(5/3) m/s; rescale to mm units.
    const double mm_scale = 1000.0 * std::pow(1.0e-3, 5.0 / 3.0);
    Subarea imperv{surface_m2 * sc.impervious_fraction, sc.depression_storage_impervious_mm,
                   mm_scale * sc.width_m / total_m2 / sc.manning_n_impervious * sqrt_slope, false};
    Subarea perv{surface_m2 * (1.0 - sc.impervious_fraction), sc.depression_storage_pervious_mm,
                 mm_scale * sc.width_m / total_m2 / sc.manning_n_pervious * sqrt_slope, true};

    const double storm_end = storm.step_s * static_cast<double>(storm.intensities_mm_per_hr.size());
    const auto n_steps = static_cast<std::size_t>(std::ceil((storm_end + opts.tail_s) / opts.step_s - 1e-9));
    const double dt = opts.step_s;

    SubcatchmentResult r;
    r.outflow.site = sc.id;
    r.outflow.step_s = dt;
    r.outflow.flows_lps.assign(n_steps, 0.0);
    r.surface_runoff_mm_hr.assign(n_steps, 0.0);
    r.surface_area_ha = surface_m2 / 1.0e4;
    r.treated = shares;

    double treated_total = 0.0;
    for (const auto& u : units) {
        treated_total += u.fraction;
    }

    auto& wb = r.balance;
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t0 = static_cast<double>(k) * dt;
        const double rain_mm = rain_depth(storm, t0, t0 + dt);
        wb.rainfall_m3 += rain_mm * total_m2 / 1000.0;

        const auto fi = advance(imperv, rain_mm, dt, t0, sc.horton, opts.evaporation_mm_hr);
        const auto fp = advance(perv, rain_mm, dt, t0, sc.horton, opts.evaporation_mm_hr);
        const double surface_runoff_m3 = (fi.runoff_mm * imperv.area_m2 + fp.runoff_mm * perv.area_m2) / 1000.0;
        wb.infiltration_m3 += fp.infiltration_mm * perv.area_m2 / 1000.0;
        wb.evaporation_m3 += (fi.evaporation_mm * imperv.area_m2 + fp.evaporation_mm * perv.area_m2) / 1000.0;
        if (surface_m2 > 0.0) {
            r.surface_runoff_mm_hr[k] = surface_runoff_m3 * 1000.0 / surface_m2 * 3600.0 / dt;
        }

        double outlet_m3 = surface_runoff_m3 * (1.0 - treated_total);
        for (auto& u : units) {
            const double inflow_mm = u.fraction * surface_runoff_m3 * 1000.0 / u.area_m2 + rain_mm;
            const auto f = u.unit.step(inflow_mm, dt);
            outlet_m3 += (f.overflow_mm + f.underdrain_mm) * u.area_m2 / 1000.0;
            wb.infiltration_m3 += f.infiltration_mm * u.area_m2 / 1000.0;
        }
        r.outflow.flows_lps[k] = outlet_m3 * 1000.0 / dt;
        wb.runoff_m3 += outlet_m3;
    }
    wb.surface_storage_m3 = (imperv.depth_mm * imperv.area_m2 + perv.depth_mm * perv.area_m2) / 1000.0;
    for (const auto& u : units) {
        wb.lid_storage_m3 += u.unit.stored_mm() * u.area_m2 / 1000.0;
    }
    return r;
}

namespace {

std::string describe_cycle(const std::map<std::string, std::string>& next, const std::string& start)
{
    // Walk downstream until a node repeats; empty when the walk reaches an outfall instead.
    std::vector<std::string> path;
    std::set<std::string> seen;
    std::string cur = start;
    while (!seen.count(cur)) {
        seen.insert(cur);
        path.push_back(cur);
        const auto it = next.find(cur);
        if (it == next.end()) {
            return {};
        }
        cur = it->second;
    }
    const auto first = std::find(path.begin(), path.end(), cur);
    std::string out;
    for (auto it = first; it != path.end(); ++it) {
        out += *it + " -> ";
    }
    return out + cur;
}

} // namespace

RoutingResult route(const std::map<std::string, Hydrograph>& inflows, std::span<const Link> links)
{
    std::optional<double> step;
    for (const auto& [site, h] : inflows) {
        if (step && std::abs(*step - h.step_s) > 1e-9) {
            throw ValidationError("all routed hydrographs must share one time step");
        }
        step = h.step_s;
        for (double q : h.flows_lps) {
            if (!(q >= 0.0) || !std::isfinite(q)) {
                throw ValidationError(fmt::format("hydrograph at '{}' has a negative or non-finite flow", site));
            }
        }
    }

    std::map<std::string, const Link*> outgoing;
    std::map<std::string, std::string> next;
    std::set<std::string> nodes;
    for (const auto& [site, h] : inflows) {
        nodes.insert(site);
    }
    for (const auto& l : links) {
        if (!(l.lag_s >= 0.0)) {
            throw ValidationError(fmt::format("link '{}' has a negative lag", l.id));
        }
        if (outgoing.count(l.from)) {
            throw ValidationError(fmt::format("node '{}' has more than one outgoing link", l.from));
        }
        outgoing[l.from] = &l;
        next[l.from] = l.to;
        nodes.insert(l.from);
        nodes.insert(l.to);
    }

    // Kahn's algorithm over the drainage graph; leftovers sit on or upstream of a cycle.
    std::map<std::string, int> indegree;
    for (const auto& n : nodes) {
        indegree[n] = 0;
    }
    for (const auto& l : links) {
        ++indegree[l.to];
    }
    std::vector<std::string> order;
    std::vector<std::string> ready;
    for (const auto& [n, d] : indegree) {
        if (d == 0) {
            ready.push_back(n);
        }
    }
    while (!ready.empty()) {
        auto n = ready.front();
        ready.erase(ready.begin());
        order.push_back(n);
        if (auto it = next.find(n); it != next.end()) {
            if (--indegree[it->second] == 0) {
                ready.push_back(it->second);
            }
        }
    }
    if (order.size() != nodes.size()) {
        for (const auto& [n, d] : indegree) {
            if (d > 0) {
                if (auto cycle = describe_cycle(next, n); !cycle.empty()) {
                    throw ValidationError("drainage network contains a cycle: " + cycle);
                }
            }
        }
        throw ValidationError("drainage network contains a cycle");
    }

    const double dt = step.value_or(60.0);
    std::map<std::string, std::vector<double>> totals;
    for (const auto& [site, h] : inflows) {
        totals[site] = h.flows_lps;
    }
    RoutingResult result;
    for (const auto& n : order) {
        auto& series = totals[n];
        const auto link_it = outgoing.find(n);
        if (link_it == outgoing.end()) {
            result.outfalls[n] = Hydrograph{n, dt, series};
            continue;
        }
        const Link& l = *link_it->second;
        if (l.capacity_lps && !series.empty() && *std::max_element(series.begin(), series.end()) > *l.capacity_lps) {
            result.over_capacity.push_back(l.id);
        }
        const auto shift = static_cast<std::size_t>(std::llround(l.lag_s / dt));
        auto& down = totals[l.to];
        if (!series.empty() && down.size() < series.size() + shift) {
            down.resize(series.size() + shift, 0.0);
        }
        for (std::size_t k = 0; k < series.size(); ++k) {
            down[k + shift] += series[k];
        }
    }
    return result;
}

void write_hydrograph_csv(std::ostream& out, const Hydrograph& h)
{
    out << "t_s,flow_Lps\n";
    for (std::size_t k = 0; k < h.flows_lps.size(); ++k) {
        out << csv::fixed(static_cast<double>(k) * h.step_s, 0) << ',' << csv::fixed(h.flows_lps[k], 6) << '\n';
    }
}

} // namespace lideval::hydrology
