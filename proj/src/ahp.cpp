#include "lideval/ahp.hpp"

#include "lideval/csv.hpp"
#include "lideval/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <set>

namespace lideval::ahp {

PairwiseMatrix::PairwiseMatrix(std::vector<std::string> labels, std::vector<double> entries)
    : labels_(std::move(labels))
    , a_(std::move(entries))
{
    const std::size_t n = labels_.size();
    if (n == 0) {
        throw ValidationError("pairwise matrix needs at least one label");
    }
    if (a_.size() != n * n) {
        throw ValidationError(fmt::format("pairwise matrix with {} labels needs {} entries (got {})", n, n * n, a_.size()));
    }
    if (std::set<std::string>(labels_.begin(), labels_.end()).size() != n) {
        throw ValidationError("pairwise matrix labels must be unique");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = a_[i * n + j];
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw ValidationError(fmt::format("entry ({}, {}) must be positive and finite", labels_[i], labels_[j]));
            }
        }
        if (std::abs(a_[i * n + i] - 1.0) > 1e-9) {
            throw ValidationError(fmt::format("diagonal entry for '{}' must be 1", labels_[i]));
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(a_[i * n + j] * a_[j * n + i] - 1.0) > 1e-9) {
                throw ValidationError(
                    fmt::format("entries ({0}, {1}) and ({1}, {0}) are not reciprocal", labels_[i], labels_[j]));
            }
        }
    }
}

PairwiseMatrix PairwiseMatrix::from_upper(std::vector<std::string> labels, std::span<const double> upper)
{
    const std::size_t n = labels.size();
    if (upper.size() != n * (n - 1) / 2) {
        throw ValidationError(fmt::format("upper triangle of a {0}x{0} matrix has {1} entries (got {2})", n,
                                          n * (n - 1) / 2, upper.size()));
    }
    std::vector<double> a(n * n, 1.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            a[i * n + j] = upper[k];
            a[j * n + i] = 1.0 / upper[k];
            ++k;
        }
    }
    return PairwiseMatrix(std::move(labels), std::move(a));
}

PairwiseMatrix PairwiseMatrix::from_weights(std::vector<std::string> labels, std::span<const double> weights)
{
    const std::size_t n = labels.size();
    if (weights.size() != n) {
        throw ValidationError("one weight per label is required");
    }
    std::vector<double> a(n * n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!(weights[j] > 0.0)) {
                throw ValidationError("weights must be positive to build a comparison matrix");
            }
            a[i * n + j] = i == j ? 1.0 : weights[i] / weights[j];
        }
    }
    return PairwiseMatrix(std::move(labels), std::move(a));
}

PairwiseMatrix PairwiseMatrix::transposed() const
{
    const std::size_t n = size();
    std::vector<double> t(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            t[j * n + i] = a_[i * n + j];
        }
    }
    return PairwiseMatrix(labels_, std::move(t));
}

std::vector<std::string> PairwiseMatrix::scale_warnings() const
{
    std::vector<std::string> out;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = a_[i * n + j];
            if (v > 9.0 + 1e-12 || v < 1.0 / 9.0 - 1e-12) {
                out.push_back(fmt::format("entry ({}, {}) = {} lies outside the 1/9..9 scale", labels_[i], labels_[j], v));
            }
        }
    }
    return out;
}

double WeightVector::of(const std::string& label) const
{
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) {
            return weights[i];
        }
    }
    throw ValidationError(fmt::format("no weight for '{}'", label));
}

double random_index(std::size_t n)
{
    static constexpr double table[] = {0.0,  0.0,  0.0,  0.58, 0.90, 1.12, 1.24, 1.32,
                                       1.41, 1.45, 1.49, 1.51, 1.48, 1.56, 1.57, 1.59};
    if (n == 0 || n >= std::size(table)) {
        throw ValidationError(fmt::format("no random index for a {0}x{0} matrix", n));
    }
    return table[n];
}

namespace {

struct EigenPair {
    std::vector<double> vector;
    double value = 0.0;
};

EigenPair principal_eigen(const PairwiseMatrix& m)
{
    const std::size_t n = m.size();
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    double residual = 0.0;
    constexpr int max_iter = 10000;
    for (int it = 0; it < max_iter; ++it) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                s += m(i, j) * w[j];
            }
            next[i] = s;
            total += s;
        }
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] /= total;
            residual += std::abs(next[i] - w[i]);
        }
        w.swap(next);
        if (residual <= 1e-12) {
            // w sums to 1, so the Rayleigh-type estimate is the column-sum of A w.
            double lambda = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    lambda += m(i, j) * w[j];
                }
            }
            return {w, lambda};
        }
    }
    throw ComputationError(fmt::format("power iteration did not converge (residual {:.3e})", residual));
}

} // namespace

WeightVector derive_weights(const PairwiseMatrix& m)
{
    auto e = principal_eigen(m);
    return {m.labels(), std::move(e.vector)};
}

WeightVector derive_weights_geometric(const PairwiseMatrix& m)
{
    const std::size_t n = m.size();
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double log_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            log_sum += std::log(m(i, j));
        }
        w[i] = std::exp(log_sum / static_cast<double>(n));
        total += w[i];
    }
    for (double& v : w) {
        v /= total;
    }
    return {m.labels(), std::move(w)};
}

ConsistencyReport consistency(const PairwiseMatrix& m)
{
    ConsistencyReport r;
    r.n = m.size();
    r.lambda_max = principal_eigen(m).value;
    r.ri = random_index(r.n);
    const auto nd = static_cast<double>(r.n);
    if (r.n >= 2) {
        // λmax >= n for reciprocal matrices; clamp rounding noise on consistent input.
        r.ci = std::max(0.0, (r.lambda_max - nd) / (nd - 1.0));
        if (r.ci < 1e-12) {
            r.ci = 0.0;
        }
    }
    if (r.n <= 2) {
        r.cr_defined = false;
        r.cr = 0.0;
        r.pass = true;
        return r;
    }
    r.cr = r.ci / r.ri;
    r.pass = r.cr < 0.1;
    return r;
}

PairwiseMatrix aggregate(std::span<const PairwiseMatrix> matrices)
{
    if (matrices.empty()) {
        throw ValidationError("nothing to aggregate");
    }
    const auto& labels = matrices.front().labels();
    const std::size_t n = labels.size();
    std::vector<double> logs(n * n, 0.0);
    for (const auto& m : matrices) {
        if (m.labels() != labels) {
            throw ValidationError("aggregated matrices must share the same labels in the same order");
        }
        for (std::size_t k = 0; k < n * n; ++k) {
            logs[k] += std::log(m.entries()[k]);
        }
    }
    std::vector<double> a(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            a[i * n + j] = i == j ? 1.0 : std::exp(logs[i * n + j] / static_cast<double>(matrices.size()));
        }
    }
    // Restore exact reciprocity after exp/log round-off.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            a[j * n + i] = 1.0 / a[i * n + j];
        }
    }
    return PairwiseMatrix(labels, std::move(a));
}

WeightedTree weight_tree(const WeightTree& skeleton, const std::map<std::string, PairwiseMatrix>& matrices,
                         bool force)
{
    WeightedTree out{skeleton, {}};
    for (const auto& [node, m] : matrices) {
        if (!skeleton.find(node)) {
            throw ValidationError(fmt::format("comparison matrix given for unknown node '{}'", node));
        }
    }
    std::function<void(WeightNode&)> visit = [&](WeightNode& n) {
        if (n.is_leaf()) {
            return;
        }
        if (n.children.size() == 1) {
            n.children.front().weight = 1.0;
        } else if (const auto it = matrices.find(n.name); it != matrices.end()) {
            const auto& m = it->second;
            std::set<std::string> want;
            for (const auto& c : n.children) {
                want.insert(c.name);
            }
            if (std::set<std::string>(m.labels().begin(), m.labels().end()) != want) {
                throw ValidationError(fmt::format("matrix for '{}' must compare exactly its children", n.name));
            }
            const auto report = consistency(m);
            if (!report.pass && !force) {
                throw ValidationError(
                    fmt::format("comparison matrix for '{}' is inconsistent (CR = {:.4f} >= 0.1)", n.name, report.cr));
            }
            out.consistency.push_back({n.name, report});
            const auto w = derive_weights(m);
            for (auto& c : n.children) {
                c.weight = w.of(c.name);
            }
        }
        for (auto& c : n.children) {
            visit(c);
        }
    };
    visit(out.tree.root());
    out.tree.root().weight = 1.0;
    out.tree.validate();
    return out;
}

namespace {

double parse_judgement(const std::string& cell, const std::string& ctx)
{
    if (const auto slash = cell.find('/'); slash != std::string::npos) {
        const double num = csv::to_double(cell.substr(0, slash), ctx);
        const double den = csv::to_double(cell.substr(slash + 1), ctx);
        if (den == 0.0) {
            throw ValidationError(ctx + ": division by zero");
        }
        return num / den;
    }
    return csv::to_double(cell, ctx);
}

PairwiseMatrix matrix_from_rows(const std::vector<std::vector<std::string>>& rows, const std::string& name)
{
    if (rows.empty()) {
        throw ValidationError(fmt::format("matrix {} is empty", name));
    }
    const auto& header = rows.front();
    std::vector<std::string> labels(header.begin() + 1, header.end());
    const std::size_t n = labels.size();
    if (rows.size() != n + 1) {
        throw ValidationError(fmt::format("matrix {} has {} labels but {} rows", name, n, rows.size() - 1));
    }
    std::vector<double> a(n * n, 0.0);
    std::vector<bool> given(n * n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = rows[i + 1];
        if (row.empty() || row.front() != labels[i]) {
            throw ValidationError(fmt::format("matrix {}: row {} must be labelled '{}'", name, i + 1, labels[i]));
        }
        if (row.size() > n + 1) {
            throw ValidationError(fmt::format("matrix {}: row '{}' has too many cells", name, labels[i]));
        }
        for (std::size_t j = 0; j + 1 < row.size(); ++j) {
            if (!row[j + 1].empty()) {
                a[i * n + j] = parse_judgement(row[j + 1], fmt::format("matrix {} cell ({}, {})", name, labels[i], labels[j]));
                given[i * n + j] = true;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        a[i * n + i] = given[i * n + i] ? a[i * n + i] : 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool up = given[i * n + j];
            const bool low = given[j * n + i];
            if (!up && !low) {
                throw ValidationError(fmt::format("matrix {}: no judgement for ({}, {})", name, labels[i], labels[j]));
            }
            if (!low) {
                a[j * n + i] = 1.0 / a[i * n + j];
            } else if (!up) {
                a[i * n + j] = 1.0 / a[j * n + i];
            }
        }
    }
    return PairwiseMatrix(std::move(labels), std::move(a));
}

} // namespace

PairwiseMatrix read_matrix_csv(std::istream& in)
{
    return matrix_from_rows(csv::read_rows(in), "input");
}

std::map<std::string, PairwiseMatrix> read_matrices_csv(std::istream& in)
{
    std::map<std::string, PairwiseMatrix> out;
    std::string current;
    std::vector<std::vector<std::string>> rows;
    const auto flush = [&] {
        if (current.empty()) {
            if (!rows.empty()) {
                throw ValidationError("matrix rows found before any [node] line");
            }
            return;
        }
        if (!out.emplace(current, matrix_from_rows(rows, "'" + current + "'")).second) {
            throw ValidationError(fmt::format("matrix for node '{}' appears twice", current));
        }
        rows.clear();
    };
    for (auto& row : csv::read_rows(in)) {
        if (row.size() == 1 && row.front().size() > 2 && row.front().front() == '[' && row.front().back() == ']') {
            flush();
            current = row.front().substr(1, row.front().size() - 2);
            continue;
        }
        rows.push_back(std::move(row));
    }
    flush();
    return out;
}

void write_matrix_csv(std::ostream& out, const PairwiseMatrix& m)
{
    out << "label";
    for (const auto& l : m.labels()) {
        out << ',' << l;
    }
    out << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << m.labels()[i];
        for (std::size_t j = 0; j < m.size(); ++j) {
            out << ',' << fmt::format("{:.17g}", m(i, j));
        }
        out << '\n';
    }
}

} // namespace lideval::ahp
