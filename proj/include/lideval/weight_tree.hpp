#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lideval {

enum class Polarity { benefit, cost };
enum class IndicatorSource { simulated, facility_derived, direct };

/// How facility-derived leaves turn placement areas into a raw score.
enum class FacilityMode {
    /// sum of area * favourability; the score already points "higher is better"
    favorability,
    /// 1 / sum of area * unit cost weight
    reciprocal_cost,
};

std::string_view to_string(Polarity p) noexcept;
std::string_view to_string(IndicatorSource s) noexcept;
std::string_view to_string(FacilityMode m) noexcept;
Polarity polarity_from_string(std::string_view s);
IndicatorSource source_from_string(std::string_view s);
FacilityMode facility_mode_from_string(std::string_view s);

struct LeafBinding {
    std::string indicator;
    Polarity polarity = Polarity::benefit;
    IndicatorSource source = IndicatorSource::direct;
    FacilityMode mode = FacilityMode::favorability;
};

struct WeightNode {
    std::string name;
    /// Weight relative to siblings.
    double weight = 1.0;
    std::vector<WeightNode> children;
    std::optional<LeafBinding> leaf;

    bool is_leaf() const noexcept { return children.empty(); }
};

/// Indicator hierarchy. Node names are unique across the tree; leaf indicator ids are unique.
class WeightTree {
public:
    WeightTree() = default;
    explicit WeightTree(WeightNode root);

    const WeightNode& root() const noexcept { return root_; }
    WeightNode& root() noexcept { return root_; }

    /// Throws ValidationError when names repeat, a leaf lacks a binding, a weight is negative,
    /// or some internal node's child weights do not sum to 1 within `tolerance`.
    void validate(double tolerance = 1e-6) const;

    const WeightNode* find(std::string_view name) const;
    WeightNode* find(std::string_view name);
    /// Parent of the named node, null for the root or an unknown name.
    const WeightNode* parent_of(std::string_view name) const;

    /// Leaves in depth-first order.
    std::vector<const WeightNode*> leaves() const;

    /// Product of weights along the path from the root (excluding the root's own weight).
    double global_weight(std::string_view name) const;

private:
    WeightNode root_;
};

/// Indicator hierarchy for sponge-city LID evaluation with default sibling weights:
/// environmental (water quantity, water quality), economic (costs, operation performance) and
/// social benefits. Every leaf is bound as a direct indicator; the two cost leaves carry cost polarity.
WeightTree sponge_city_hierarchy();

} // namespace lideval
