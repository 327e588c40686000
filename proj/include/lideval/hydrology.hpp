#pragma once

#include "lideval/lid.hpp"
#include "lideval/storm_gen.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lideval::hydrology {

/// Horton infiltration capacity f(t) = fc + (f0 - fc) exp(-k t); rates mm/hr, k 1/hr.
struct HortonParams {
    double f0 = 76.2;
    double fc = 3.81;
    double k = 4.14;

    void validate() const;
};

/// Infiltration capacity at `hours` since the start of the event.
double horton_rate(const HortonParams& p, double hours);

/// Closed-form integral of the Horton capacity over [0, hours], mm.
double horton_cumulative(const HortonParams& p, double hours);

struct LandUse {
    std::string name;
    double runoff_coefficient = 0.0;
    double area_ha = 0.0;
    /// Buildup surface class ("road", "roof", "green", ...).
    std::string surface = "other";
};

/// Area-weighted mean runoff coefficient.
double composite_runoff_coefficient(std::span<const LandUse> land_uses);

/// Rational runoff volume W = 10 * psi * h * F, m3 (h in mm, F in ha).
double runoff_volume(double runoff_coeff, double depth_mm, double area_ha);

struct Subcatchment {
    std::string id;
    double area_ha = 0.0;
    double impervious_fraction = 0.0;
    double width_m = 0.0;
    double slope = 0.0;
    double depression_storage_impervious_mm = 1.27;
    double depression_storage_pervious_mm = 2.5;
    double manning_n_impervious = 0.012;
    double manning_n_pervious = 0.15;
    HortonParams horton;
    std::vector<LandUse> land_uses;
    std::string outlet;

    void validate() const;
};

struct Link {
    std::string id;
    std::string from;
    std::string to;
    double lag_s = 0.0;
    std::optional<double> capacity_lps;
};

struct Hydrograph {
    std::string site;
    double step_s = 60.0;
    std::vector<double> flows_lps;

    double volume_m3() const noexcept;
};

struct WaterBalance {
    double rainfall_m3 = 0.0;
    double runoff_m3 = 0.0;
    double infiltration_m3 = 0.0;
    double evaporation_m3 = 0.0;
    /// Water left ponded on the surface at the end of the run.
    double surface_storage_m3 = 0.0;
    /// Water held in LID units at the end of the run.
    double lid_storage_m3 = 0.0;

    /// |rain - (runoff + infiltration + evaporation + storage)| / rain; absolute when rain is zero.
    double closure_error() const noexcept;
};

struct SimulationOptions {
    double step_s = 60.0;
    /// Simulated time after the storm ends.
    double tail_s = 6.0 * 3600.0;
    double evaporation_mm_hr = 0.0;
};

struct TreatedShare {
    lid::LidKind kind = lid::LidKind::bio_retention;
    double fraction = 0.0;
};

struct SubcatchmentResult {
    Hydrograph outflow;
    WaterBalance balance;
    /// Runoff generated by the non-LID surface, mm/hr over that surface, per step.
    std::vector<double> surface_runoff_mm_hr;
    double surface_area_ha = 0.0;
    /// Effective fraction of surface runoff routed to each placement.
    std::vector<TreatedShare> treated;
};

/// Resolved treated fraction per placement (defaults applied), in placement order.
std::vector<TreatedShare> treated_shares(const Subcatchment& sc, std::span<const lid::LidPlacement> placements);

/// Nonlinear-reservoir runoff from the pervious and impervious subareas, Horton losses on the
/// pervious part, and any LID units placed in the subcatchment. Placements for other
/// subcatchments are ignored.
SubcatchmentResult simulate_subcatchment(const Subcatchment& sc, const storm::Hyetograph& storm,
                                         std::span<const lid::LidPlacement> placements,
                                         const lid::LidCatalog& catalog, const SimulationOptions& opts = {});

struct RoutingResult {
    std::map<std::string, Hydrograph> outfalls;
    /// Links whose peak conveyed flow exceeded their capacity.
    std::vector<std::string> over_capacity;
};

/// Translation routing: every link delays its upstream node's total flow by round(lag/step) steps.
/// Nodes without an outgoing link are outfalls.
RoutingResult route(const std::map<std::string, Hydrograph>& inflows, std::span<const Link> links);

/// CSV `t_s,flow_Lps`.
void write_hydrograph_csv(std::ostream& out, const Hydrograph& h);

} // namespace lideval::hydrology
