#pragma once

#include "lideval/weight_tree.hpp"

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lideval::ahp {

/// Reciprocal positive comparison matrix: a_ii = 1, a_ij = 1 / a_ji.
class PairwiseMatrix {
public:
    PairwiseMatrix() = default;
    /// Full row-major entries; validated on construction.
    PairwiseMatrix(std::vector<std::string> labels, std::vector<double> entries);

    /// Builds from the strict upper triangle, row by row: (0,1), (0,2), ..., (n-2,n-1).
    static PairwiseMatrix from_upper(std::vector<std::string> labels, std::span<const double> upper);
    /// a_ij = w_i / w_j; perfectly consistent by construction.
    static PairwiseMatrix from_weights(std::vector<std::string> labels, std::span<const double> weights);

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * labels_.size() + j]; }
    const std::vector<double>& entries() const noexcept { return a_; }

    PairwiseMatrix transposed() const;

    /// Entries outside Saaty's [1/9, 9] scale; allowed, but worth reporting.
    std::vector<std::string> scale_warnings() const;

private:
    std::vector<std::string> labels_;
    std::vector<double> a_;
};

struct WeightVector {
    std::vector<std::string> labels;
    std::vector<double> weights;

    double of(const std::string& label) const;
};

struct ConsistencyReport {
    std::size_t n = 0;
    double lambda_max = 0.0;
    double ci = 0.0;
    double ri = 0.0;
    double cr = 0.0;
    bool pass = true;
    /// False for n <= 2, where CR is defined as 0.
    bool cr_defined = true;
};

/// Saaty random consistency index for n = 1..15.
double random_index(std::size_t n);

/// Principal eigenvector by power iteration (residual 1e-12, at most 10^4 iterations), sum 1.
WeightVector derive_weights(const PairwiseMatrix& m);

/// Row geometric means, normalised. Cross-check for the eigenvector method.
WeightVector derive_weights_geometric(const PairwiseMatrix& m);

ConsistencyReport consistency(const PairwiseMatrix& m);

/// Elementwise geometric mean of several experts' matrices over the same labels.
PairwiseMatrix aggregate(std::span<const PairwiseMatrix> matrices);

struct NodeConsistency {
    std::string node;
    ConsistencyReport report;
};

struct WeightedTree {
    WeightTree tree;
    std::vector<NodeConsistency> consistency;
};

/// Fills the child weights of every internal node that has a matrix (keyed by node name, labels
/// naming the children). Nodes with one child get weight 1; nodes without a matrix keep the
/// weights they already carry. Any CR >= 0.1 is rejected unless `force` is set.
WeightedTree weight_tree(const WeightTree& skeleton, const std::map<std::string, PairwiseMatrix>& matrices,
                         bool force = false);

/// Matrix text format: a header row `label,<child>,<child>,...` then one row per child. Cells
/// below the diagonal (and the diagonal) may be left empty and are filled by reciprocity;
/// fractions like "1/3" are accepted.
PairwiseMatrix read_matrix_csv(std::istream& in);

/// Several matrices in one stream, each introduced by a `[node]` line.
std::map<std::string, PairwiseMatrix> read_matrices_csv(std::istream& in);

void write_matrix_csv(std::ostream& out, const PairwiseMatrix& m);

} // namespace lideval::ahp
