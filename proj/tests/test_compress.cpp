#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "grf/compress.hpp"
#include "grf/rng.hpp"
#include "test_util.hpp"

using namespace grf;

TEST_CASE("anchor sampling") {
    SUBCASE("k = n selects every node") {
        const AnchorSet a = sample_anchors(6, 6, 3);
        CHECK(a.nodes == std::vector<NodeId>{0, 1, 2, 3, 4, 5});
    }
    SUBCASE("deterministic per seed") {
        CHECK(sample_anchors(5, 3, 11).nodes == sample_anchors(5, 3, 11).nodes);
        CHECK(sample_anchors(50, 10, 1).nodes != sample_anchors(50, 10, 2).nodes);
    }
    SUBCASE("out-of-range k is rejected") {
        CHECK_THROWS_AS(sample_anchors(5, 0, 1), std::invalid_argument);
        CHECK_THROWS_AS(sample_anchors(5, 6, 1), std::invalid_argument);
    }
    SUBCASE("single-anchor draws are uniform") {
        const int trials = 100000;
        const int n = 5;
        std::vector<int> counts(n, 0);
        for (int t = 0; t < trials; ++t) ++counts[sample_anchors(n, 1, 1000 + t).nodes[0]];
        const double p = 1.0 / n;
        const double sigma = std::sqrt(trials * p * (1.0 - p));
        for (int v = 0; v < n; ++v)
            CHECK(std::abs(counts[v] - trials * p) < 5.0 * sigma);
    }
}

TEST_CASE("jlt projection") {
    SUBCASE("zero vector maps to zero") {
        const JltProjection jlt(4, 10, 7);
        SignatureVector phi;
        CHECK(jlt.apply(phi).norm() == 0.0);
    }
    SUBCASE("deterministic per seed, and shared across rows") {
        const JltProjection jlt(3, 6, 5);
        SignatureVector phi;
        phi.entries = {{1, 2.0}, {4, -1.0}};
        const Eigen::VectorXd once = jlt.apply(phi);
        CHECK(JltProjection(3, 6, 5).apply(phi) == once);
    }
    SUBCASE("dimension mismatch is rejected") {
        const JltProjection jlt(4, 3, 7);
        SignatureVector phi;
        phi.entries = {{5, 1.0}};
        CHECK_THROWS_AS((void)jlt.apply(phi), std::invalid_argument);
    }

    SignatureVector phi, psi;
    phi.entries = {{0, 1.5}, {2, 2.0}};
    psi.entries = {{0, 1.0}, {2, 0.5}, {7, 3.0}};
    const double exact_dot = 1.5 * 1.0 + 2.0 * 0.5;  // 2.5

    SUBCASE("dot products preserved in expectation") {
        const int trials = 50000;
        double sum = 0.0, sum_sq = 0.0;
        for (int t = 0; t < trials; ++t) {
            const JltProjection jlt(8, 10, 5000 + t);
            const double x = jlt.apply(phi).dot(jlt.apply(psi));
            sum += x;
            sum_sq += x * x;
        }
        const double mean = sum / trials;
        const double se = std::sqrt((sum_sq / trials - mean * mean) / (trials - 1));
        CHECK(std::abs(mean - exact_dot) < 5.0 * se);
    }

    SUBCASE("unbiased at every K, with variance decaying like 1/K") {
        const int trials = 20000;
        std::vector<double> variances;
        for (int k : {4, 16, 64}) {
            double sum = 0.0, sum_sq = 0.0;
            for (int t = 0; t < trials; ++t) {
                const JltProjection jlt(k, 10, 9000 + t);
                const double x = jlt.apply(phi).dot(jlt.apply(psi));
                sum += x;
                sum_sq += x * x;
            }
            const double mean = sum / trials;
            const double variance = sum_sq / trials - mean * mean;
            CHECK(std::abs(mean - exact_dot) < 5.0 * std::sqrt(variance / (trials - 1)));
            variances.push_back(variance);
        }
        for (std::size_t step = 0; step + 1 < variances.size(); ++step) {
            const double ratio = variances[step] / variances[step + 1];
            CHECK(ratio > 4.0 / 1.5);
            CHECK(ratio < 4.0 * 1.5);
        }
    }
}

TEST_CASE("projecting a feature matrix row matches projecting its signature") {
    WalkConfig cfg;
    cfg.p_term = 0.4;
    cfg.walks_per_node = 3;
    cfg.master_seed = 8;
    const WalkMatrix u = build_u_matrix(test::path_graph(6), 0.2);
    const FeatureMatrix fm = compute_feature_matrix(u, cfg);
    const JltProjection jlt(4, 6, 21);
    const Eigen::MatrixXd projected = jlt.apply(fm);
    for (NodeId i = 0; i < 6; ++i) {
        const SignatureVector sig = compute_signature(u, i, cfg);
        CHECK((projected.row(i).transpose() - jlt.apply(sig)).norm() < 1e-12);
    }
}
