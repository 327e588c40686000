#pragma once

#include "lideval/hydrology.hpp"
#include "lideval/lid.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace lideval::quality {

/// Saturation buildup B = C1 t / (C2 + t) and exponential washoff rate C3 q^C4 B.
struct PollutantSpec {
    std::string name;
    double buildup_max_kg_ha = 0.0;   // C1
    double half_saturation_days = 0.0; // C2
    double washoff_coeff = 0.0;        // C3, (mm/hr)^-C4 per hr
    double washoff_exponent = 1.0;     // C4
    /// Multiplier on C1 per land-use surface class; classes not listed use 1.
    std::map<std::string, double> surface_factors;
    /// Fraction of the load entering a facility that it removes.
    std::map<lid::LidKind, double> removal;

    double surface_factor(const std::string& surface) const;
    double removal_for(lid::LidKind kind) const;
    void validate() const;
};

struct Pollutograph {
    std::string site;
    double step_s = 60.0;
    std::vector<double> loads_kg;
};

/// Mass on the surface after `antecedent_dry_days`, kg/ha.
double buildup(const PollutantSpec& spec, double antecedent_dry_days);

/// Mass removed from `available_kg` by runoff `runoff_mm_hr` over `dt_s`, exact exponential decay.
double washoff_step(const PollutantSpec& spec, double runoff_mm_hr, double available_kg, double dt_s);

/// out = in * (1 - treated_fraction * removal_fraction) per step.
Pollutograph apply_lid_removal(const Pollutograph& p, double treated_fraction, double removal_fraction);

double event_load(const Pollutograph& p);

/// Total mass over total flow volume, mg/L. Zero when both are zero.
double event_mean_concentration(const Pollutograph& p, const hydrology::Hydrograph& flow);

struct QualityResult {
    Pollutograph outlet;
    double initial_kg = 0.0;
    double washed_off_kg = 0.0;
    double residual_kg = 0.0;
    double removed_by_lid_kg = 0.0;
};

/// Buildup on the subcatchment's non-LID surface (area-weighted over its land uses) washed off
/// by the simulated surface runoff, then reduced by the LID units the runoff is routed through.
QualityResult simulate_quality(const hydrology::Subcatchment& sc, const hydrology::SubcatchmentResult& runoff,
                               const PollutantSpec& spec, double antecedent_dry_days);

/// CSV `t_s,load_kg,conc_mg_L`; concentration is left empty where the flow is zero.
void write_pollutograph_csv(std::ostream& out, const Pollutograph& p, const hydrology::Hydrograph& flow);

} // namespace lideval::quality
