#include "lideval/quality.hpp"

#include "lideval/csv.hpp"
#include "lideval/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>
#include <ostream>

namespace lideval::quality {

double PollutantSpec::surface_factor(const std::string& surface) const
{
    const auto it = surface_factors.find(surface);
    return it == surface_factors.end() ? 1.0 : it->second;
}

double PollutantSpec::removal_for(lid::LidKind kind) const
{
    const auto it = removal.find(kind);
    return it == removal.end() ? 0.0 : it->second;
}

void PollutantSpec::validate() const
{
    if (!(buildup_max_kg_ha > 0.0) || !(half_saturation_days > 0.0) || !(washoff_coeff > 0.0)) {
        throw ValidationError(fmt::format("pollutant '{}': C1, C2 and C3 must be > 0", name));
    }
    if (!(washoff_exponent >= 0.0)) {
        throw ValidationError(fmt::format("pollutant '{}': washoff exponent must be >= 0", name));
    }
    for (const auto& [surface, f] : surface_factors) {
        if (!(f >= 0.0)) {
            throw ValidationError(fmt::format("pollutant '{}': surface factor for '{}' must be >= 0", name, surface));
        }
    }
    for (const auto& [kind, r] : removal) {
        if (!(r >= 0.0 && r <= 1.0)) {
            throw ValidationError(
                fmt::format("pollutant '{}': removal fraction for '{}' must lie in [0, 1]", name, lid::to_string(kind)));
        }
    }
}

double buildup(const PollutantSpec& spec, double antecedent_dry_days)
{
    if (!(antecedent_dry_days >= 0.0)) {
        throw ValidationError(fmt::format("antecedent dry period must be >= 0 (got {})", antecedent_dry_days));
    }
    return spec.buildup_max_kg_ha * antecedent_dry_days / (spec.half_saturation_days + antecedent_dry_days);
}

double washoff_step(const PollutantSpec& spec, double runoff_mm_hr, double available_kg, double dt_s)
{
    if (!(runoff_mm_hr >= 0.0) || !(available_kg >= 0.0) || !(dt_s >= 0.0)) {
        throw ValidationError("washoff inputs must be >= 0");
    }
    if (runoff_mm_hr == 0.0 || available_kg == 0.0) {
        return 0.0;
    }
    const double exponent = spec.washoff_coeff * std::pow(runoff_mm_hr, spec.washoff_exponent) * dt_s / 3600.0;
    return available_kg * -std::expm1(-exponent);
}

Pollutograph apply_lid_removal(const Pollutograph& p, double treated_fraction, double removal_fraction)
{
    if (!(treated_fraction >= 0.0 && treated_fraction <= 1.0) || !(removal_fraction >= 0.0 && removal_fraction <= 1.0)) {
        throw ValidationError("treated and removal fractions must lie in [0, 1]");
    }
    Pollutograph out = p;
    const double keep = 1.0 - treated_fraction * removal_fraction;
    for (double& l : out.loads_kg) {
        l *= keep;
    }
    return out;
}

double event_load(const Pollutograph& p)
{
    return std::accumulate(p.loads_kg.begin(), p.loads_kg.end(), 0.0);
}

double event_mean_concentration(const Pollutograph& p, const hydrology::Hydrograph& flow)
{
    if (std::abs(p.step_s - flow.step_s) > 1e-9) {
        throw ValidationError("pollutograph and hydrograph steps differ");
    }
    const double mass_kg = event_load(p);
    const double volume_l = flow.volume_m3() * 1000.0;
    if (volume_l <= 0.0) {
        if (mass_kg == 0.0) {
            return 0.0;
        }
        throw ValidationError("event mean concentration undefined: load without flow");
    }
    return mass_kg * 1.0e6 / volume_l;
}

QualityResult simulate_quality(const hydrology::Subcatchment& sc, const hydrology::SubcatchmentResult& runoff,
                               const PollutantSpec& spec, double antecedent_dry_days)
{
    spec.validate();
    const double per_ha = buildup(spec, antecedent_dry_days);
    double initial = 0.0;
    if (sc.land_uses.empty()) {
        initial = per_ha * runoff.surface_area_ha;
    } else {
        // LID footprints are carved out of every land use in proportion to its area.
        const double scale = runoff.surface_area_ha / sc.area_ha;
        for (const auto& lu : sc.land_uses) {
            initial += per_ha * spec.surface_factor(lu.surface) * lu.area_ha * scale;
        }
    }

    double treated = 0.0;
    double treated_removal = 0.0;
    for (const auto& share : runoff.treated) {
        treated += share.fraction;
        treated_removal += share.fraction * spec.removal_for(share.kind);
    }
    const double mean_removal = treated > 0.0 ? treated_removal / treated : 0.0;

    QualityResult r;
    r.initial_kg = initial;
    Pollutograph washed{sc.id, runoff.outflow.step_s, std::vector<double>(runoff.surface_runoff_mm_hr.size(), 0.0)};
    double remaining = initial;
    for (std::size_t k = 0; k < runoff.surface_runoff_mm_hr.size(); ++k) {
        const double w = washoff_step(spec, runoff.surface_runoff_mm_hr[k], remaining, washed.step_s);
        remaining -= w;
        washed.loads_kg[k] = w;
    }
    r.washed_off_kg = initial - remaining;
    r.residual_kg = remaining;
    r.outlet = apply_lid_removal(washed, std::min(treated, 1.0), mean_removal);
    r.removed_by_lid_kg = r.washed_off_kg - event_load(r.outlet);
    return r;
}

void write_pollutograph_csv(std::ostream& out, const Pollutograph& p, const hydrology::Hydrograph& flow)
{
    out << "t_s,load_kg,conc_mg_L\n";
    for (std::size_t k = 0; k < p.loads_kg.size(); ++k) {
        out << csv::fixed(static_cast<double>(k) * p.step_s, 0) << ',' << csv::fixed(p.loads_kg[k], 9) << ',';
        const double q = k < flow.flows_lps.size() ? flow.flows_lps[k] : 0.0;
        if (q > 0.0) {
            out << csv::fixed(p.loads_kg[k] * 1.0e6 / (q * p.step_s), 6);
        }
        out << '\n';
    }
}

} // namespace lideval::quality
