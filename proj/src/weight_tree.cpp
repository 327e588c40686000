#include "lideval/weight_tree.hpp"

#include "lideval/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <set>

namespace lideval {

std::string_view to_string(Polarity p) noexcept
{
    return p == Polarity::benefit ? "benefit" : "cost";
}

std::string_view to_string(IndicatorSource s) noexcept
{
    switch (s) {
    case IndicatorSource::simulated: return "simulated";
    case IndicatorSource::facility_derived: return "facility_derived";
    case IndicatorSource::direct: return "direct";
    }
    return "direct";
}

std::string_view to_string(FacilityMode m) noexcept
{
    return m == FacilityMode::favorability ? "favorability" : "reciprocal_cost";
}

Polarity polarity_from_string(std::string_view s)
{
    if (s == "benefit") return Polarity::benefit;
    if (s == "cost") return Polarity::cost;
    throw ValidationError(fmt::format("unknown polarity '{}' (expected benefit|cost)", s));
}

IndicatorSource source_from_string(std::string_view s)
{
    if (s == "simulated") return IndicatorSource::simulated;
    if (s == "facility_derived") return IndicatorSource::facility_derived;
    if (s == "direct") return IndicatorSource::direct;
    throw ValidationError(fmt::format("unknown indicator source '{}' (expected simulated|facility_derived|direct)", s));
}

FacilityMode facility_mode_from_string(std::string_view s)
{
    if (s == "favorability") return FacilityMode::favorability;
    if (s == "reciprocal_cost") return FacilityMode::reciprocal_cost;
    throw ValidationError(fmt::format("unknown facility mode '{}' (expected favorability|reciprocal_cost)", s));
}

WeightTree::WeightTree(WeightNode root)
    : root_(std::move(root))
{
}

void WeightTree::validate(double tolerance) const
{
    std::set<std::string> names;
    std::set<std::string> indicators;
    std::function<void(const WeightNode&)> visit = [&](const WeightNode& n) {
        if (n.name.empty()) {
            throw ValidationError("weight tree node without a name");
        }
        if (!names.insert(n.name).second) {
            throw ValidationError(fmt::format("weight tree node name '{}' is used twice", n.name));
        }
        if (!(n.weight >= 0.0) || !std::isfinite(n.weight)) {
            throw ValidationError(fmt::format("node '{}' has an invalid weight {}", n.name, n.weight));
        }
        if (n.is_leaf()) {
            if (!n.leaf) {
                throw ValidationError(fmt::format("leaf '{}' has no indicator binding", n.name));
            }
            if (!indicators.insert(n.leaf->indicator).second) {
                throw ValidationError(fmt::format("indicator '{}' is bound to more than one leaf", n.leaf->indicator));
            }
            return;
        }
        double sum = 0.0;
        for (const auto& c : n.children) {
            sum += c.weight;
            visit(c);
        }
        if (std::abs(sum - 1.0) > tolerance) {
            throw ValidationError(fmt::format("child weights of '{}' sum to {} (expected 1)", n.name, sum));
        }
    };
    visit(root_);
}

namespace {

template <class Node>
Node* find_in(Node& n, std::string_view name)
{
    if (n.name == name) {
        return &n;
    }
    for (auto& c : n.children) {
        if (auto* hit = find_in(c, name)) {
            return hit;
        }
    }
    return nullptr;
}

const WeightNode* parent_in(const WeightNode& n, std::string_view name)
{
    for (const auto& c : n.children) {
        if (c.name == name) {
            return &n;
        }
        if (const auto* hit = parent_in(c, name)) {
            return hit;
        }
    }
    return nullptr;
}

} // namespace

const WeightNode* WeightTree::find(std::string_view name) const
{
    return find_in(root_, name);
}

WeightNode* WeightTree::find(std::string_view name)
{
    return find_in(root_, name);
}

const WeightNode* WeightTree::parent_of(std::string_view name) const
{
    return parent_in(root_, name);
}

std::vector<const WeightNode*> WeightTree::leaves() const
{
    std::vector<const WeightNode*> out;
    std::function<void(const WeightNode&)> visit = [&](const WeightNode& n) {
        if (n.is_leaf()) {
            out.push_back(&n);
            return;
        }
        for (const auto& c : n.children) {
            visit(c);
        }
    };
    visit(root_);
    return out;
}

double WeightTree::global_weight(std::string_view name) const
{
    if (root_.name == name) {
        return 1.0;
    }
    const auto* node = find(name);
    if (!node) {
        throw ValidationError(fmt::format("no node named '{}'", name));
    }
    double w = node->weight;
    for (const auto* p = parent_of(name); p && p != &root_; p = parent_of(p->name)) {
        w *= p->weight;
    }
    return w;
}

namespace {

WeightNode leaf(std::string id, double w, Polarity pol = Polarity::benefit)
{
    WeightNode n;
    n.name = id;
    n.weight = w;
    n.leaf = LeafBinding{std::move(id), pol, IndicatorSource::direct, FacilityMode::favorability};
    return n;
}

WeightNode group(std::string name, double w, std::vector<WeightNode> children)
{
    WeightNode n;
    n.name = std::move(name);
    n.weight = w;
    n.children = std::move(children);
    return n;
}

} // namespace

WeightTree sponge_city_hierarchy()
{
    auto env = group("environmental", 0.608,
                     {group("water_quantity", 0.700,
                            {leaf("runoff_reduction", 0.607), leaf("peak_reduction", 0.303), leaf("peak_delay", 0.090)}),
                      group("water_quality", 0.300,
                            {leaf("tss_reduction", 0.466), leaf("cod_reduction", 0.277), leaf("tn_reduction", 0.161),
                             leaf("tp_reduction", 0.096)})});
    auto econ = group("economic", 0.272,
                      {leaf("construction_cost", 0.187, Polarity::cost), leaf("maintenance_cost", 0.158, Polarity::cost),
                       group("operation_performance", 0.655,
                             {leaf("design_feasibility", 0.200), leaf("engineering_feasibility", 0.400),
                              leaf("operation_stability", 0.400)})});
    auto social = group("social", 0.120,
                        {leaf("water_reuse", 0.648), leaf("landscape", 0.122), leaf("ecological", 0.230)});
    return WeightTree(group("comprehensive", 1.0, {std::move(env), std::move(econ), std::move(social)}));
}

} // namespace lideval
