#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lideval::lid {

enum class LidKind { bio_retention, grassed_swale, sunken_green, permeable_pavement, storage_tank };

inline constexpr std::array<LidKind, 5> all_kinds{LidKind::bio_retention, LidKind::grassed_swale,
                                                   LidKind::sunken_green, LidKind::permeable_pavement,
                                                   LidKind::storage_tank};

std::string_view to_string(LidKind k) noexcept;

/// Accepts canonical names and a fixed set of aliases ("bioretention", "swale", "cistern", ...).
/// Anything else is a ValidationError.
LidKind kind_from_string(std::string_view name);

/// Layered facility description. Depths in mm, rates in mm/hr, underdrain coefficient in 1/hr.
struct LidSpec {
    LidKind kind = LidKind::bio_retention;
    double unit_capacity_m3_per_m2 = 0.0;

    double berm_mm = 0.0;
    double soil_thickness_mm = 0.0;
    double soil_porosity = 1.0;
    double soil_conductivity_mm_hr = 0.0;
    double storage_thickness_mm = 0.0;
    double storage_void_ratio = 1.0;
    double underdrain_coeff_per_hr = 0.0;
    /// Exfiltration into native soil from the lowest layer.
    double seepage_mm_hr = 0.0;

    /// Indicator id -> dimensionless favourability score (economic/social leaves).
    std::map<std::string, double> favorability;
    double unit_cost_weight = 1.0;

    /// Water held when every layer is full, mm over the facility footprint.
    double static_capacity_mm() const noexcept;
    void validate() const;
};

/// Default layer parameters; static capacity equals the unit capacity of each kind.
LidSpec default_spec(LidKind kind);

class LidCatalog {
public:
    /// Catalog holding `default_spec` for every kind.
    static LidCatalog defaults();

    void set(LidSpec spec);
    const LidSpec& at(LidKind kind) const;
    bool contains(LidKind kind) const noexcept { return specs_.count(kind) != 0; }

private:
    std::map<LidKind, LidSpec> specs_;
};

struct LidPlacement {
    std::string subcatchment;
    LidKind kind = LidKind::bio_retention;
    double area_ha = 0.0;
    /// Fraction of the host subcatchment's surface runoff sent to this facility.
    /// Unset means the host's impervious fraction, shared among its placements by area.
    std::optional<double> treated_fraction;
};

struct Scenario {
    std::string name;
    std::vector<LidPlacement> placements;

    /// Total footprint per kind, ha.
    std::map<LidKind, double> area_by_kind() const;
    double total_area_ha() const;
};

/// Static runoff-control capacity, m3: sum of footprint times unit capacity.
double control_capacity(const Scenario& scenario, const LidCatalog& catalog);

struct ExistingFacility {
    std::string label;
    double volume_m3 = 0.0;
};

struct ExistingCapacity {
    double volume_m3 = 0.0;
    /// Rainfall depth the existing volume controls over the whole catchment.
    double depth_mm = 0.0;
};

ExistingCapacity existing_capacity(std::span<const ExistingFacility> facilities, double runoff_coeff,
                                   double catchment_area_ha);

/// Volume still to be controlled by new facilities: max(0, 10*psi*h*F - existing).
double required_volume(double target_depth_mm, double runoff_coeff, double catchment_area_ha, double existing_m3);

/// Splits `required_m3` by volume share and converts to footprint, ha. Shares must sum to 1.
std::map<LidKind, double> allocate_areas(double required_m3, const std::map<LidKind, double>& shares,
                                         const LidCatalog& catalog);

/// Fraction of the scenario's total LID footprint taken by each kind present.
std::map<LidKind, double> area_proportions(const Scenario& scenario);

/// Event-scale layered water balance of one facility. State is depth of water in each layer, mm.
class LidUnit {
public:
    struct Flux {
        double inflow_mm = 0.0;
        double overflow_mm = 0.0;
        double underdrain_mm = 0.0;
        double infiltration_mm = 0.0;
    };

    explicit LidUnit(const LidSpec& spec);

    /// Advances by `dt_s`, receiving `inflow_mm` spread evenly over the interval.
    /// Sub-steps internally so no single transfer exceeds 1 mm.
    Flux step(double inflow_mm, double dt_s);

    double stored_mm() const noexcept { return surface_ + soil_ + storage_; }
    double surface_mm() const noexcept { return surface_; }
    double soil_mm() const noexcept { return soil_; }
    double storage_mm() const noexcept { return storage_; }

private:
    Flux substep(double inflow_mm, double hours);

    LidSpec spec_;
    double soil_cap_ = 0.0;
    double storage_cap_ = 0.0;
    double surface_ = 0.0;
    double soil_ = 0.0;
    double storage_ = 0.0;
};

struct LidUnitResult {
    double step_s = 0.0;
    /// Underdrain plus overflow leaving the unit, L/s per step.
    std::vector<double> outflow_lps;
    double inflow_m3 = 0.0;
    double overflow_m3 = 0.0;
    double underdrain_m3 = 0.0;
    double infiltration_m3 = 0.0;
    double storage_change_m3 = 0.0;

    double balance_error() const noexcept;
};

/// Runs a unit of `area_m2` starting empty. `runon_lps` is inflow from the contributing surface,
/// `rain_mm_per_hr` falls directly on the unit; both sampled per `dt_s` (shorter series are zero-padded).
LidUnitResult simulate_lid_unit(const LidSpec& spec, double area_m2, std::span<const double> runon_lps,
                                std::span<const double> rain_mm_per_hr, double dt_s);

} // namespace lideval::lid
