#include "lideval/lid.hpp"

#include "lideval/error.hpp"
#include "lideval/hydrology.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace lideval::lid {

std::string_view to_string(LidKind k) noexcept
{
    switch (k) {
    case LidKind::bio_retention: return "bio_retention";
    case LidKind::grassed_swale: return "grassed_swale";
    case LidKind::sunken_green: return "sunken_green";
    case LidKind::permeable_pavement: return "permeable_pavement";
    case LidKind::storage_tank: return "storage_tank";
    }
    return "unknown";
}

LidKind kind_from_string(std::string_view name)
{
    struct Alias {
        std::string_view name;
        LidKind kind;
    };
    static constexpr Alias table[] = {
        {"bio_retention", LidKind::bio_retention},
        {"bioretention", LidKind::bio_retention},
        {"bio-retention", LidKind::bio_retention},
        {"grassed_swale", LidKind::grassed_swale},
        {"swale", LidKind::grassed_swale},
        {"sunken_green", LidKind::sunken_green},
        {"sunken_green_space", LidKind::sunken_green},
        {"permeable_pavement", LidKind::permeable_pavement},
        {"porous_pavement", LidKind::permeable_pavement},
        {"storage_tank", LidKind::storage_tank},
        {"rain_tank", LidKind::storage_tank},
        {"cistern", LidKind::storage_tank},
    };
    for (const auto& a : table) {
        if (a.name == name) {
            return a.kind;
        }
    }
    throw ValidationError(fmt::format("unknown LID kind '{}'", name));
}

double LidSpec::static_capacity_mm() const noexcept
{
    return berm_mm + soil_porosity * soil_thickness_mm + storage_void_ratio * storage_thickness_mm;
}

void LidSpec::validate() const
{
    const auto name = to_string(kind);
    if (!(unit_capacity_m3_per_m2 > 0.0)) {
        throw ValidationError(fmt::format("{}: unit capacity must be > 0", name));
    }
    if (!(soil_porosity > 0.0 && soil_porosity <= 1.0) || !(storage_void_ratio > 0.0 && storage_void_ratio <= 1.0)) {
        throw ValidationError(fmt::format("{}: porosity and void ratio must lie in (0, 1]", name));
    }
    for (double v : {berm_mm, soil_thickness_mm, soil_conductivity_mm_hr, storage_thickness_mm,
                     underdrain_coeff_per_hr, seepage_mm_hr, unit_cost_weight}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ValidationError(fmt::format("{}: layer parameters must be finite and >= 0", name));
        }
    }
    if (soil_thickness_mm > 0.0 && !(soil_conductivity_mm_hr > 0.0)) {
        throw ValidationError(fmt::format("{}: a soil layer needs a positive conductivity", name));
    }
    if (!(static_capacity_mm() > 0.0)) {
        throw ValidationError(fmt::format("{}: facility holds no water", name));
    }
    for (const auto& [indicator, score] : favorability) {
        if (!(score >= 0.0)) {
            throw ValidationError(fmt::format("{}: favourability for '{}' must be >= 0", name, indicator));
        }
    }
}

LidSpec default_spec(LidKind kind)
{
    LidSpec s;
    s.kind = kind;
    switch (kind) {
    case LidKind::bio_retention:
        // 150 + 0.3*300 + 0.3*200 = 300 mm
        s.unit_capacity_m3_per_m2 = 0.30;
        s.berm_mm = 150.0;
        s.soil_thickness_mm = 300.0;
        s.soil_porosity = 0.3;
        s.soil_conductivity_mm_hr = 50.0;
        s.storage_thickness_mm = 200.0;
        s.storage_void_ratio = 0.3;
        s.underdrain_coeff_per_hr = 0.5;
        s.seepage_mm_hr = 5.0;
        s.favorability = {{"construction_cost", 3}, {"maintenance_cost", 5}, {"design_feasibility", 7},
                          {"engineering_feasibility", 4}, {"operation_stability", 7}, {"water_reuse", 4},
                          {"landscape", 9}, {"ecological", 9}};
        s.unit_cost_weight = 1.0;
        break;
    case LidKind::grassed_swale:
        s.unit_capacity_m3_per_m2 = 0.15;
        s.berm_mm = 150.0;
        s.seepage_mm_hr = 10.0;
        s.favorability = {{"construction_cost", 7}, {"maintenance_cost", 6}, {"design_feasibility", 6},
                          {"engineering_feasibility", 7}, {"operation_stability", 5}, {"water_reuse", 3},
                          {"landscape", 6}, {"ecological", 6}};
        s.unit_cost_weight = 0.4;
        break;
    case LidKind::sunken_green:
        // 100 + 0.5*150 + 0.25*300 = 250 mm
        s.unit_capacity_m3_per_m2 = 0.25;
        s.berm_mm = 100.0;
        s.soil_thickness_mm = 150.0;
        s.soil_porosity = 0.5;
        s.soil_conductivity_mm_hr = 30.0;
        s.storage_thickness_mm = 300.0;
        s.storage_void_ratio = 0.25;
        s.seepage_mm_hr = 8.0;
        s.favorability = {{"construction_cost", 8}, {"maintenance_cost", 7}, {"design_feasibility", 7},
                          {"engineering_feasibility", 6}, {"operation_stability", 7}, {"water_reuse", 4},
                          {"landscape", 7}, {"ecological", 8}};
        s.unit_cost_weight = 0.3;
        break;
    case LidKind::permeable_pavement:
        // 0.2*100 + 0.3*100 = 50 mm
        s.unit_capacity_m3_per_m2 = 0.05;
        s.soil_thickness_mm = 100.0;
        s.soil_porosity = 0.2;
        s.soil_conductivity_mm_hr = 250.0;
        s.storage_thickness_mm = 100.0;
        s.storage_void_ratio = 0.3;
        s.underdrain_coeff_per_hr = 1.0;
        s.seepage_mm_hr = 3.0;
        s.favorability = {{"construction_cost", 4}, {"maintenance_cost", 3}, {"design_feasibility", 5},
                          {"engineering_feasibility", 5}, {"operation_stability", 4}, {"water_reuse", 2},
                          {"landscape", 2}, {"ecological", 2}};
        s.unit_cost_weight = 0.8;
        break;
    case LidKind::storage_tank:
        s.unit_capacity_m3_per_m2 = 1.0;
        s.storage_thickness_mm = 1000.0;
        s.storage_void_ratio = 1.0;
        s.favorability = {{"construction_cost", 2}, {"maintenance_cost", 5}, {"design_feasibility", 6},
                          {"engineering_feasibility", 9}, {"operation_stability", 6}, {"water_reuse", 9},
                          {"landscape", 1}, {"ecological", 1}};
        s.unit_cost_weight = 1.5;
        break;
    }
    return s;
}

LidCatalog LidCatalog::defaults()
{
    LidCatalog c;
    for (auto k : all_kinds) {
        c.set(default_spec(k));
    }
    return c;
}

void LidCatalog::set(LidSpec spec)
{
    spec.validate();
    specs_[spec.kind] = std::move(spec);
}

const LidSpec& LidCatalog::at(LidKind kind) const
{
    const auto it = specs_.find(kind);
    if (it == specs_.end()) {
        throw ValidationError(fmt::format("LID catalog has no entry for '{}'", to_string(kind)));
    }
    return it->second;
}

std::map<LidKind, double> Scenario::area_by_kind() const
{
    std::map<LidKind, double> out;
    for (const auto& p : placements) {
        out[p.kind] += p.area_ha;
    }
    return out;
}

double Scenario::total_area_ha() const
{
    double total = 0.0;
    for (const auto& p : placements) {
        total += p.area_ha;
    }
    return total;
}

double control_capacity(const Scenario& scenario, const LidCatalog& catalog)
{
    double total = 0.0;
    for (const auto& p : scenario.placements) {
        if (!(p.area_ha >= 0.0)) {
            throw ValidationError(fmt::format("scenario '{}': negative placement area", scenario.name));
        }
        total += p.area_ha * 1.0e4 * catalog.at(p.kind).unit_capacity_m3_per_m2;
    }
    return total;
}

ExistingCapacity existing_capacity(std::span<const ExistingFacility> facilities, double runoff_coeff,
                                   double catchment_area_ha)
{
    ExistingCapacity out;
    for (const auto& f : facilities) {
        if (!(f.volume_m3 >= 0.0)) {
            throw ValidationError(fmt::format("existing facility '{}' has a negative volume", f.label));
        }
        out.volume_m3 += f.volume_m3;
    }
    const double per_mm = hydrology::runoff_volume(runoff_coeff, 1.0, catchment_area_ha);
    if (out.volume_m3 > 0.0) {
        if (!(per_mm > 0.0)) {
            throw ValidationError("runoff coefficient and catchment area must be > 0 to express a capture depth");
        }
        out.depth_mm = out.volume_m3 / per_mm;
    }
    return out;
}

double required_volume(double target_depth_mm, double runoff_coeff, double catchment_area_ha, double existing_m3)
{
    if (!(existing_m3 >= 0.0)) {
        throw ValidationError("existing volume must be >= 0");
    }
    return std::max(0.0, hydrology::runoff_volume(runoff_coeff, target_depth_mm, catchment_area_ha) - existing_m3);
}

std::map<LidKind, double> allocate_areas(double required_m3, const std::map<LidKind, double>& shares,
                                         const LidCatalog& catalog)
{
    if (!(required_m3 >= 0.0)) {
        throw ValidationError("required volume must be >= 0");
    }
    double sum = 0.0;
    for (const auto& [kind, share] : shares) {
        if (!(share >= 0.0)) {
            throw ValidationError(fmt::format("volume share for '{}' must be >= 0", to_string(kind)));
        }
        sum += share;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw ValidationError(fmt::format("volume shares must sum to 1 (got {})", sum));
    }
    std::map<LidKind, double> out;
    for (const auto& [kind, share] : shares) {
        const double cap = catalog.at(kind).unit_capacity_m3_per_m2;
        if (!(cap > 0.0)) {
            throw ValidationError(fmt::format("'{}' has zero unit capacity", to_string(kind)));
        }
        out[kind] = required_m3 * share / cap / 1.0e4;
    }
    return out;
}

std::map<LidKind, double> area_proportions(const Scenario& scenario)
{
    const double total = scenario.total_area_ha();
    if (!(total > 0.0)) {
        throw ValidationError(fmt::format("scenario '{}' has no LID area", scenario.name));
    }
    auto out = scenario.area_by_kind();
    for (auto& [kind, a] : out) {
        a /= total;
    }
    return out;
}

LidUnit::LidUnit(const LidSpec& spec)
    : spec_(spec)
    , soil_cap_(spec.soil_porosity * spec.soil_thickness_mm)
    , storage_cap_(spec.storage_void_ratio * spec.storage_thickness_mm)
{
    spec_.validate();
}

LidUnit::Flux LidUnit::substep(double inflow_mm, double hours)
{
    Flux f;
    f.inflow_mm = inflow_mm;
    surface_ += inflow_mm;

    const bool has_soil = soil_cap_ > 0.0;
    const bool has_storage = storage_cap_ > 0.0;

    // surface -> soil, or straight into storage when there is no soil layer
    if (has_soil) {
        const double p = std::min({surface_, spec_.soil_conductivity_mm_hr * hours, soil_cap_ - soil_});
        surface_ -= p;
        soil_ += p;
    } else if (has_storage) {
        const double p = std::min(surface_, storage_cap_ - storage_);
        surface_ -= p;
        storage_ += p;
    } else {
        const double e = std::min(surface_, spec_.seepage_mm_hr * hours);
        surface_ -= e;
        f.infiltration_mm += e;
    }

    // soil -> storage, or exfiltration when the soil is the bottom layer
    if (has_soil) {
        if (has_storage) {
            const double p = std::min({soil_, spec_.soil_conductivity_mm_hr * hours, storage_cap_ - storage_});
            soil_ -= p;
            storage_ += p;
        } else {
            const double e = std::min(soil_, spec_.seepage_mm_hr * hours);
            soil_ -= e;
            f.infiltration_mm += e;
        }
    }

    if (has_storage) {
        const double e = std::min(storage_, spec_.seepage_mm_hr * hours);
        storage_ -= e;
        f.infiltration_mm += e;
        const double d = std::min(storage_, spec_.underdrain_coeff_per_hr * storage_ * hours);
        storage_ -= d;
        f.underdrain_mm += d;
    }

    // Ponding above the berm first fills any free pore space below, then spills.
    if (surface_ > spec_.berm_mm) {
        double excess = surface_ - spec_.berm_mm;
        if (has_soil) {
            const double p = std::min(excess, soil_cap_ - soil_);
            soil_ += p;
            excess -= p;
        }
        if (has_storage) {
            const double p = std::min(excess, storage_cap_ - storage_);
            storage_ += p;
            excess -= p;
        }
        f.overflow_mm = excess;
        surface_ = spec_.berm_mm;
    }
    return f;
}

LidUnit::Flux LidUnit::step(double inflow_mm, double dt_s)
{
    if (!(dt_s > 0.0) || !(inflow_mm >= 0.0)) {
        throw ValidationError("LID step needs dt > 0 and inflow >= 0");
    }
    const double hours = dt_s / 3600.0;
    const double largest = std::max({inflow_mm, spec_.soil_conductivity_mm_hr * hours, spec_.seepage_mm_hr * hours,
                                     spec_.underdrain_coeff_per_hr * (storage_ + inflow_mm) * hours});
    const int n = std::clamp(static_cast<int>(std::ceil(largest / 1.0)), 1, 100000);
    Flux total;
    for (int i = 0; i < n; ++i) {
        const auto f = substep(inflow_mm / n, hours / n);
        total.inflow_mm += f.inflow_mm;
        total.overflow_mm += f.overflow_mm;
        total.underdrain_mm += f.underdrain_mm;
        total.infiltration_mm += f.infiltration_mm;
    }
    return total;
}

double LidUnitResult::balance_error() const noexcept
{
    const double out = overflow_m3 + underdrain_m3 + infiltration_m3 + storage_change_m3;
    if (inflow_m3 <= 0.0) {
        return std::abs(out);
    }
    return std::abs(inflow_m3 - out) / inflow_m3;
}

LidUnitResult simulate_lid_unit(const LidSpec& spec, double area_m2, std::span<const double> runon_lps,
                                std::span<const double> rain_mm_per_hr, double dt_s)
{
    if (!(area_m2 > 0.0) || !(dt_s > 0.0)) {
        throw ValidationError("LID unit needs area > 0 and dt > 0");
    }
    LidUnit unit(spec);
    LidUnitResult r;
    r.step_s = dt_s;
    const std::size_t n = std::max(runon_lps.size(), rain_mm_per_hr.size());
    r.outflow_lps.resize(n, 0.0);
    const double mm_to_m3 = area_m2 / 1000.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double runon = k < runon_lps.size() ? runon_lps[k] : 0.0;
        const double rain = k < rain_mm_per_hr.size() ? rain_mm_per_hr[k] : 0.0;
        if (!(runon >= 0.0) || !(rain >= 0.0)) {
            throw ValidationError(fmt::format("negative inflow at step {}", k));
        }
        // L/s over dt -> m3 -> mm over the footprint
        const double inflow_mm = runon * dt_s / 1000.0 / mm_to_m3 + rain * dt_s / 3600.0;
        const auto f = unit.step(inflow_mm, dt_s);
        r.inflow_m3 += f.inflow_mm * mm_to_m3;
        r.overflow_m3 += f.overflow_mm * mm_to_m3;
        r.underdrain_m3 += f.underdrain_mm * mm_to_m3;
        r.infiltration_m3 += f.infiltration_mm * mm_to_m3;
        r.outflow_lps[k] = (f.overflow_mm + f.underdrain_mm) * mm_to_m3 * 1000.0 / dt_s;
    }
    r.storage_change_m3 = unit.stored_mm() * mm_to_m3;
    return r;
}

} // namespace lideval::lid
