#include "lideval/ahp.hpp"
#include "lideval/error.hpp"

#include "reference_case.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace lideval;
using namespace lideval::ahp;

namespace {

std::vector<std::string> labels(std::size_t n)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back("c" + std::to_string(i));
    }
    return out;
}

struct EigenOracle {
    double lambda_max = 0.0;
    std::vector<double> weights;
};

// Dense general eigen-solve; the Perron root is the eigenvalue with the largest real part.
EigenOracle dense_eigen(const PairwiseMatrix& m)
{
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(a);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
        if (es.eigenvalues()(i).real() > es.eigenvalues()(best).real()) {
            best = i;
        }
    }
    EigenOracle o;
    o.lambda_max = es.eigenvalues()(best).real();
    const Eigen::VectorXd v = es.eigenvectors().col(best).real();
    const double s = v.sum();
    for (Eigen::Index i = 0; i < n; ++i) {
        o.weights.push_back(v(i) / s);
    }
    return o;
}

PairwiseMatrix example_3x3()
{
    const std::vector<double> upper{2.0, 6.0, 4.0};
    return PairwiseMatrix::from_upper({"a", "b", "c"}, upper);
}

} // namespace

TEST_CASE("all-ones matrix gives uniform weights")
{
    const PairwiseMatrix m(labels(3), std::vector<double>(9, 1.0));
    const auto w = derive_weights(m);
    for (double x : w.weights) {
        CHECK(x == doctest::Approx(1.0 / 3.0));
    }
    const auto c = consistency(m);
    CHECK(c.lambda_max == doctest::Approx(3.0));
    CHECK(c.cr == doctest::Approx(0.0));
}

TEST_CASE("2x2 closed form")
{
    const std::vector<double> upper{4.0};
    const auto m = PairwiseMatrix::from_upper({"x", "y"}, upper);
    const auto w = derive_weights(m);
    CHECK(w.of("x") == doctest::Approx(0.8));
    CHECK(w.of("y") == doctest::Approx(0.2));
    const auto c = consistency(m);
    CHECK_FALSE(c.cr_defined);
    CHECK(c.cr == 0.0);
    CHECK(c.pass);
}

TEST_CASE("3x3 example against the dense eigen oracle")
{
    const auto m = example_3x3();
    const auto oracle = dense_eigen(m);
    const auto c = consistency(m);
    CHECK(std::abs(c.lambda_max - oracle.lambda_max) <= 1e-4);
    CHECK(c.lambda_max == doctest::Approx(3.0092).epsilon(1e-4));
    CHECK(c.ci == doctest::Approx((oracle.lambda_max - 3.0) / 2.0).epsilon(1e-6));
    CHECK(c.cr == doctest::Approx((oracle.lambda_max - 3.0) / 2.0 / 0.58).epsilon(1e-6));
    CHECK(std::abs(c.cr - 0.0079) < 1e-4);
    CHECK(c.pass);
    const auto w = derive_weights(m);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(w.weights[i] == doctest::Approx(oracle.weights[i]).epsilon(1e-9));
    }
}

TEST_CASE("consistent matrices from every reference weight group")
{
    for (const auto& g : reference::weight_groups()) {
        const auto m = PairwiseMatrix::from_weights(g.children, g.weights);
        const auto w = derive_weights(m);
        CAPTURE(g.parent);
        for (std::size_t i = 0; i < g.weights.size(); ++i) {
            CHECK(std::abs(w.weights[i] - g.weights[i]) <= 1e-6);
        }
        const auto c = consistency(m);
        CHECK(std::abs(c.cr) <= 1e-9);
        CHECK(c.lambda_max == doctest::Approx(static_cast<double>(g.weights.size())));
    }
}

TEST_CASE("lambda max is at least n and matches the oracle on random reciprocal matrices")
{
    unsigned seed = 2024;
    const double scale[] = {1.0 / 9, 1.0 / 7, 1.0 / 5, 1.0 / 3, 1.0, 3.0, 5.0, 7.0, 9.0};
    for (std::size_t n = 3; n <= 9; ++n) {
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<double> upper;
            for (std::size_t k = 0; k < n * (n - 1) / 2; ++k) {
                seed = seed * 1664525u + 1013904223u;
                upper.push_back(scale[(seed >> 16) % 9]);
            }
            const auto m = PairwiseMatrix::from_upper(labels(n), upper);
            const auto c = consistency(m);
            CAPTURE(n);
            CHECK(c.lambda_max >= static_cast<double>(n) - 1e-9);
            CHECK(c.lambda_max == doctest::Approx(dense_eigen(m).lambda_max).epsilon(1e-8));
            double sum = 0.0;
            for (double x : derive_weights(m).weights) {
                CHECK(x > 0.0);
                sum += x;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("transpose gives reciprocal weights for consistent matrices")
{
    const std::vector<double> w{0.5, 0.3, 0.15, 0.05};
    const auto m = PairwiseMatrix::from_weights(labels(4), w);
    const auto t = derive_weights(m.transposed());
    double s = 0.0;
    for (double x : w) {
        s += 1.0 / x;
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(t.weights[i] == doctest::Approx(1.0 / w[i] / s).epsilon(1e-9));
    }
    // Scaling the generating weights leaves the result unchanged.
    std::vector<double> scaled;
    for (double x : w) {
        scaled.push_back(7.5 * x);
    }
    const auto a = derive_weights(PairwiseMatrix::from_weights(labels(4), scaled));
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(a.weights[i] == doctest::Approx(w[i]).epsilon(1e-9));
    }
}

TEST_CASE("geometric mean agrees on consistent matrices")
{
    const std::vector<double> w{0.466, 0.277, 0.161, 0.096};
    const auto m = PairwiseMatrix::from_weights(labels(4), w);
    const auto g = derive_weights_geometric(m);
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(g.weights[i] == doctest::Approx(w[i]).epsilon(1e-9));
    }
}

TEST_CASE("random index table")
{
    const double ri[] = {0, 0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45};
    for (std::size_t n = 1; n <= 9; ++n) {
        CHECK(random_index(n) == doctest::Approx(ri[n - 1]));
    }
    CHECK(random_index(15) > random_index(9));
    CHECK_THROWS_AS(random_index(16), ValidationError);
}

TEST_CASE("matrix validation and scale warnings")
{
    CHECK_THROWS_AS(PairwiseMatrix(labels(2), {1.0, 2.0, 2.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(PairwiseMatrix(labels(2), {1.0, -2.0, -0.5, 1.0}), ValidationError);
    CHECK_THROWS_AS(PairwiseMatrix(labels(2), {2.0, 2.0, 0.5, 0.5}), ValidationError);
    const std::vector<double> upper{12.0};
    CHECK(PairwiseMatrix::from_upper(labels(2), upper).scale_warnings().size() == 1);
}

TEST_CASE("expert aggregation is the elementwise geometric mean")
{
    const std::vector<double> u1{2.0, 4.0, 2.0};
    const std::vector<double> u2{8.0, 1.0, 0.5};
    const std::vector<PairwiseMatrix> ms{PairwiseMatrix::from_upper(labels(3), u1),
                                         PairwiseMatrix::from_upper(labels(3), u2)};
    const auto g = aggregate(ms);
    CHECK(g(0, 1) == doctest::Approx(4.0));
    CHECK(g(0, 2) == doctest::Approx(2.0));
    CHECK(g(1, 2) == doctest::Approx(1.0));
    CHECK(g(1, 0) == doctest::Approx(0.25));
}

TEST_CASE("weight tree from matrices")
{
    WeightNode root{"goal", 1.0, {}, std::nullopt};
    WeightNode a{"a", 0.5, {}, LeafBinding{"a"}};
    WeightNode b{"b", 0.5, {}, std::nullopt};
    b.children.push_back({"b1", 1.0, {}, LeafBinding{"b1"}});
    root.children = {a, b};
    const WeightTree skeleton(root);

    const std::vector<double> upper{3.0};
    auto wt = weight_tree(skeleton, {{"goal", PairwiseMatrix::from_upper({"a", "b"}, upper)}});
    CHECK(wt.tree.find("a")->weight == doctest::Approx(0.75));
    CHECK(wt.tree.find("b")->weight == doctest::Approx(0.25));
    CHECK(wt.tree.find("b1")->weight == doctest::Approx(1.0));

    // All reference groups as consistent matrices rebuild the reference weights.
    std::map<std::string, PairwiseMatrix> ms;
    for (const auto& g : reference::weight_groups()) {
        ms.emplace(g.parent, PairwiseMatrix::from_weights(g.children, g.weights));
    }
    const auto full = weight_tree(sponge_city_hierarchy(), ms);
    for (const auto& g : reference::weight_groups()) {
        for (std::size_t i = 0; i < g.children.size(); ++i) {
            CHECK(std::abs(full.tree.find(g.children[i])->weight - g.weights[i]) <= 1e-3);
        }
    }

    const std::vector<double> bad{9.0, 1.0 / 9.0, 9.0};
    std::map<std::string, PairwiseMatrix> inconsistent{
        {"water_quantity", PairwiseMatrix::from_upper({"runoff_reduction", "peak_reduction", "peak_delay"}, bad)}};
    CHECK_THROWS_WITH(weight_tree(sponge_city_hierarchy(), inconsistent), doctest::Contains("water_quantity"));
    CHECK_NOTHROW(weight_tree(sponge_city_hierarchy(), inconsistent, true));

    std::map<std::string, PairwiseMatrix> wrong_labels{{"goal", PairwiseMatrix::from_upper({"a", "z"}, upper)}};
    CHECK_THROWS_AS(weight_tree(skeleton, wrong_labels), ValidationError);
}

TEST_CASE("matrix csv round trip with fractions and reciprocity")
{
    std::istringstream in("label,a,b,c\na,1,2,6\nb,1/2,1,4\nc,,,1\n");
    const auto m = read_matrix_csv(in);
    CHECK(m(2, 0) == doctest::Approx(1.0 / 6.0));
    CHECK(m(2, 1) == doctest::Approx(0.25));
    std::ostringstream out;
    write_matrix_csv(out, m);
    std::istringstream back(out.str());
    const auto m2 = read_matrix_csv(back);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(m2.entries()[i] == doctest::Approx(m.entries()[i]));
    }

    std::istringstream many("[goal]\nlabel,a,b\na,1,3\nb,,1\n\n[b]\nlabel,x,y,z\nx,1,1,1\ny,,1,1\nz,,,1\n");
    const auto all = read_matrices_csv(many);
    REQUIRE(all.size() == 2);
    CHECK(all.at("b").size() == 3);

    std::istringstream broken("label,a,b\na,1,x\n");
    CHECK_THROWS_AS(read_matrix_csv(broken), ValidationError);
}
