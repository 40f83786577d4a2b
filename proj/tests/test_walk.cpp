#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "grf/compress.hpp"
#include "grf/flops.hpp"
#include "grf/oracle.hpp"
#include "grf/rng.hpp"
#include "grf/walk.hpp"
#include "test_util.hpp"

using namespace grf;

namespace {

WalkMatrix two_node_u(double u) {
    return WalkMatrix(Graph::from_edges(2, {{0, 1, u}}), 1.0, false);
}

Eigen::MatrixXd cross_product_matrix(const FeatureMatrix& b, const FeatureMatrix& bp) {
    Eigen::MatrixXd m(b.size(), b.size());
    for (NodeId i = 0; i < b.size(); ++i)
        for (NodeId j = 0; j < b.size(); ++j) m(i, j) = b.row_dot(i, bp, j);
    return m;
}

}  // namespace

TEST_CASE("sampler probabilities") {
    WalkConfig cfg;
    Rng rng(7);

    SUBCASE("uniform over four neighbors") {
        const Graph star =
            Graph::from_edges(5, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {0, 4, 1.0}});
        const WalkMatrix u(star, 1.0, false);
        EdgeHistory h;
        for (int t = 0; t < 64; ++t) {
            const auto [w, p] = sample_neighbor(u, 0, h, cfg, rng);
            CHECK(p == 0.25);
            CHECK(w >= 1);
        }
    }

    SUBCASE("weight proportional") {
        cfg.sampler = SamplerKind::WeightProportional;
        const Graph g = Graph::from_edges(3, {{0, 1, 0.3}, {0, 2, 0.1}});
        const WalkMatrix u(g, 1.0, false);
        EdgeHistory h;
        std::map<NodeId, int> counts;
        for (int t = 0; t < 20000; ++t) {
            const auto [w, p] = sample_neighbor(u, 0, h, cfg, rng);
            CHECK(p == doctest::Approx(w == 1 ? 0.75 : 0.25));
            ++counts[w];
        }
        CHECK(counts[1] / 20000.0 == doctest::Approx(0.75).epsilon(0.03));
    }

    SUBCASE("reinforced de-prioritizes the visited edge") {
        cfg.sampler = SamplerKind::Reinforced;
        const Graph g = Graph::from_edges(3, {{0, 1, 1.0}, {0, 2, 1.0}});
        const WalkMatrix u(g, 1.0, false);
        EdgeHistory h;
        h.add(0, 2);  // f values: neighbor 1 -> 1, neighbor 2 -> 1/2
        std::map<NodeId, int> counts;
        for (int t = 0; t < 30000; ++t) {
            const auto [w, p] = sample_neighbor(u, 0, h, cfg, rng);
            CHECK(p == doctest::Approx(w == 1 ? 2.0 / 3.0 : 1.0 / 3.0));
            CHECK(p > 0.0);
            ++counts[w];
        }
        CHECK(counts[1] / 30000.0 == doctest::Approx(2.0 / 3.0).epsilon(0.03));
    }

    SUBCASE("isolated vertex is rejected") {
        const WalkMatrix u(Graph::from_edges(2, {}), 1.0, false);
        EdgeHistory h;
        CHECK_THROWS_AS(sample_neighbor(u, 0, h, cfg, rng), std::invalid_argument);
    }
}

TEST_CASE("signature vector degenerate cases") {
    WalkConfig cfg;
    cfg.walks_per_node = 7;

    SUBCASE("p_term = 1 gives the unit vector") {
        cfg.p_term = 1.0;
        const SignatureVector sig = compute_signature(two_node_u(0.4), 1, cfg);
        REQUIRE(sig.entries.size() == 1);
        CHECK(sig.entries[0].first == 1);
        CHECK(sig.entries[0].second == doctest::Approx(1.0));
        CHECK(sig.steps_taken == 0);
    }

    SUBCASE("isolated source gives the unit vector for any config") {
        cfg.p_term = 0.01;
        const WalkMatrix u(Graph::from_edges(4, {{1, 2, 1.0}}), 1.0, false);
        const SignatureVector sig = compute_signature(u, 0, cfg);
        REQUIRE(sig.entries.size() == 1);
        CHECK(sig.entries[0].second == doctest::Approx(1.0));
    }

    SUBCASE("entries are nonnegative and the own entry is at least one") {
        cfg.p_term = 0.2;
        const WalkMatrix u = build_u_matrix(test::load_karate(), 0.2);
        for (NodeId v : {0, 16, 33}) {
            const SignatureVector sig = compute_signature(u, v, cfg);
            for (const auto& [node, value] : sig.entries) CHECK(value >= 0.0);
            CHECK(sig.value(v) >= 1.0);
        }
    }

    SUBCASE("support stays inside the source's connected component") {
        cfg.p_term = 0.05;
        cfg.walks_per_node = 20;
        // two components: {0, 1, 2} and {3, 4}
        const Graph g =
            Graph::from_edges(5, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}, {3, 4, 1.0}});
        const WalkMatrix u = build_u_matrix(g, 0.2);
        const SignatureVector sig = compute_signature(u, 1, cfg);
        for (const auto& [node, value] : sig.entries) CHECK(node <= 2);
        const SignatureVector other = compute_signature(u, 4, cfg);
        for (const auto& [node, value] : other.entries) CHECK(node >= 3);
    }
}

TEST_CASE("walk length is geometric in the termination probability") {
    WalkConfig cfg;
    cfg.p_term = 0.3;
    cfg.walks_per_node = 6250;
    cfg.master_seed = 99;
    const WalkMatrix u = build_u_matrix(generate_complete(16), 0.2);
    std::int64_t walks = 0, steps = 0;
    for (NodeId v = 0; v < 16; ++v) {
        const SignatureVector sig = compute_signature(u, v, cfg);
        walks += sig.walks_used;
        steps += sig.steps_taken;
    }
    CHECK(walks == 100000);
    const double expected = (1.0 - cfg.p_term) / cfg.p_term;
    const double sigma_mean =
        std::sqrt((1.0 - cfg.p_term) / (cfg.p_term * cfg.p_term)) / std::sqrt(100000.0);
    CHECK(std::abs(static_cast<double>(steps) / walks - expected) < 3.0 * sigma_mean);
}

TEST_CASE("max_steps truncation is counted, never silent") {
    WalkConfig cfg;
    cfg.p_term = 1e-9;
    cfg.walks_per_node = 5;
    cfg.max_steps = 11;
    const SignatureVector sig = compute_signature(two_node_u(0.4), 0, cfg);
    CHECK(sig.truncated_walks == 5);
    CHECK(sig.steps_taken == 55);
}

TEST_CASE("two-node estimator is unbiased against the closed form") {
    const WalkMatrix u = two_node_u(0.4);
    const double exact = oracle::exact_inverse_squared(u)(0, 1);  // 0.8 / 0.7056
    CHECK(exact == doctest::Approx(1.13379).epsilon(1e-5));

    WalkConfig cfg;
    cfg.p_term = 0.5;
    cfg.walks_per_node = 1;
    const int trials = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < trials; ++t) {
        cfg.master_seed = derive_seed(5, 0x2a, t, 0);
        const SignatureVector phi = compute_signature(u, 0, cfg);
        cfg.master_seed = derive_seed(5, 0x2a, t, 1);
        const SignatureVector psi = compute_signature(u, 1, cfg);
        const double x = signature_dot(phi, psi);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / trials;
    const double se = std::sqrt((sum_sq / trials - mean * mean) / (trials - 1));
    CHECK(std::abs(mean - exact) < 5.0 * se);
}

TEST_CASE("feature matrix basics") {
    SUBCASE("zero walk matrix gives the identity") {
        WalkConfig cfg;
        cfg.walks_per_node = 3;
        const WalkMatrix u(Graph::from_edges(5, {}), 1.0, false);
        const FeatureMatrix fm = compute_feature_matrix(u, cfg);
        CHECK(fm.nnz() == 5);
        for (NodeId i = 0; i < 5; ++i) {
            CHECK(fm.row_cols(i)[0] == i);
            CHECK(fm.row_vals(i)[0] == doctest::Approx(1.0));
        }
    }

    SUBCASE("bit-identical across repeated runs and thread counts") {
        WalkConfig cfg;
        cfg.p_term = 0.2;
        cfg.walks_per_node = 9;
        cfg.master_seed = 1234;
        const WalkMatrix u = build_u_matrix(test::load_karate(), 0.2);
        cfg.threads = 1;
        const FeatureMatrix base = compute_feature_matrix(u, cfg);
        CHECK(compute_feature_matrix(u, cfg) == base);
        cfg.threads = 2;
        CHECK(compute_feature_matrix(u, cfg) == base);
        cfg.threads = 8;
        CHECK(compute_feature_matrix(u, cfg) == base);
        cfg.sampler = SamplerKind::Reinforced;
        cfg.threads = 1;
        const FeatureMatrix reinforced1 = compute_feature_matrix(u, cfg);
        cfg.threads = 8;
        CHECK(compute_feature_matrix(u, cfg) == reinforced1);
    }

    SUBCASE("mean of B B'^T matches the dense oracle on an 8-node graph") {
        const WalkMatrix u = build_u_matrix(generate_erdos_renyi(8, 0.5, 13), 0.2);
        const Eigen::MatrixXd exact = oracle::exact_inverse_squared(u);
        WalkConfig cfg;
        cfg.p_term = 0.5;
        cfg.walks_per_node = 1;
        test::RunningStats stats(8);
        for (int t = 0; t < 20000; ++t) {
            cfg.master_seed = derive_seed(77, 0xb0, t, 0);
            const FeatureMatrix b = compute_feature_matrix(u, cfg);
            cfg.master_seed = derive_seed(77, 0xb0, t, 1);
            const FeatureMatrix bp = compute_feature_matrix(u, cfg);
            stats.add(cross_product_matrix(b, bp));
        }
        CHECK(stats.fraction_within(exact, 5.0) >= 0.99);
    }

    SUBCASE("reinforced sampler stays unbiased with history shared across walks") {
        // m > 1 makes later walks of a node depend on earlier ones through the
        // edge counts; the importance weights must still cancel exactly
        const WalkMatrix u = build_u_matrix(generate_erdos_renyi(8, 0.5, 13), 0.2);
        const Eigen::MatrixXd exact = oracle::exact_inverse_squared(u);
        WalkConfig cfg;
        cfg.p_term = 0.5;
        cfg.walks_per_node = 3;
        cfg.sampler = SamplerKind::Reinforced;
        test::RunningStats stats(8);
        for (int t = 0; t < 20000; ++t) {
            cfg.master_seed = derive_seed(78, 0xb1, t, 0);
            const FeatureMatrix b = compute_feature_matrix(u, cfg);
            cfg.master_seed = derive_seed(78, 0xb1, t, 1);
            const FeatureMatrix bp = compute_feature_matrix(u, cfg);
            stats.add(cross_product_matrix(b, bp));
        }
        CHECK(stats.fraction_within(exact, 5.0) >= 0.99);
    }
}

TEST_CASE("feature matrix serialization round trip") {
    WalkConfig cfg;
    cfg.p_term = 0.3;
    cfg.walks_per_node = 4;
    cfg.master_seed = 17;
    cfg.sampler = SamplerKind::WeightProportional;
    const WalkMatrix u = build_u_matrix(test::path_graph(6), 0.2);
    const FeatureMatrix fm = compute_feature_matrix(u, cfg);
    std::stringstream buffer;
    fm.serialize(buffer);
    CHECK(FeatureMatrix::parse(buffer) == fm);
}

TEST_CASE("anchored signatures") {
    WalkConfig cfg;
    cfg.p_term = 0.4;
    cfg.walks_per_node = 5;
    cfg.master_seed = 3;
    const WalkMatrix u = build_u_matrix(generate_erdos_renyi(8, 0.6, 4), 0.2);

    SUBCASE("anchoring at every node reproduces the base signature") {
        std::vector<NodeId> all;
        for (NodeId v = 0; v < 8; ++v) all.push_back(v);
        for (NodeId v = 0; v < 8; ++v) {
            const SignatureVector base = compute_signature(u, v, cfg);
            const SignatureVector anchored = compute_signature_anchored(u, v, cfg, all);
            CHECK(anchored.entries == base.entries);
        }
    }

    SUBCASE("single anchor at the source with immediate termination") {
        cfg.p_term = 1.0;
        const std::vector<NodeId> only{2};
        const SignatureVector sig = compute_signature_anchored(u, 2, cfg, only);
        REQUIRE(sig.entries.size() == 1);
        CHECK(sig.entries[0].second == doctest::Approx(8.0));  // N / K
    }

    SUBCASE("empty anchor set is rejected") {
        CHECK_THROWS_AS(compute_signature_anchored(u, 0, cfg, {}), std::invalid_argument);
    }

    SUBCASE("anchored estimator stays unbiased over walks and anchor draws") {
        // two unbiased pairings: anchor sets drawn independently per copy, and
        // one shared set with the second copy folded back by K/N
        const Eigen::MatrixXd exact = oracle::exact_inverse_squared(u);
        WalkConfig mc;
        mc.p_term = 0.5;
        mc.walks_per_node = 1;
        test::RunningStats independent(8);
        test::RunningStats shared(8);
        for (int t = 0; t < 40000; ++t) {
            const AnchorSet a0 = sample_anchors(8, 4, derive_seed(9, 0xa0, t, 0));
            const AnchorSet a1 = sample_anchors(8, 4, derive_seed(9, 0xa1, t, 1));
            mc.master_seed = derive_seed(9, 0xa2, t, 0);
            const FeatureMatrix b = compute_feature_matrix_anchored(u, mc, a0.nodes);
            mc.master_seed = derive_seed(9, 0xa2, t, 1);
            const FeatureMatrix bp = compute_feature_matrix_anchored(u, mc, a1.nodes);
            const FeatureMatrix bp_shared = compute_feature_matrix_anchored(u, mc, a0.nodes);
            independent.add(cross_product_matrix(b, bp));
            shared.add(cross_product_matrix(b, bp_shared) * (4.0 / 8.0));
        }
        CHECK(independent.fraction_within(exact, 5.0) >= 0.99);
        CHECK(shared.fraction_within(exact, 5.0) >= 0.99);
    }
}

TEST_CASE("node shards computed independently combine to the full feature matrix") {
    // the distributed story: each shard owner computes its own rows with
    // nothing but the graph and the master seed, and concatenation is
    // bit-identical to the single-process result
    WalkConfig cfg;
    cfg.p_term = 0.15;
    cfg.walks_per_node = 6;
    cfg.master_seed = 404;
    const WalkMatrix u = build_u_matrix(test::load_karate(), 0.2);
    const FeatureMatrix full = compute_feature_matrix(u, cfg);

    std::vector<SignatureVector> sharded(34);
    for (int shard = 0; shard < 3; ++shard)
        for (NodeId v = shard; v < 34; v += 3)  // shard owns every third node
            sharded[v] = compute_signature(u, v, cfg);

    for (NodeId i = 0; i < 34; ++i) {
        const auto cols = full.row_cols(i);
        const auto vals = full.row_vals(i);
        REQUIRE(sharded[i].entries.size() == cols.size());
        for (std::size_t k = 0; k < cols.size(); ++k) {
            CHECK(sharded[i].entries[k].first == cols[k]);
            CHECK(sharded[i].entries[k].second == vals[k]);
        }
    }
}

TEST_CASE("walk flop accounting counts two multiplies per transition") {
    WalkConfig cfg;
    cfg.p_term = 0.3;
    cfg.walks_per_node = 1;
    cfg.master_seed = 21;
    const WalkMatrix u = build_u_matrix(test::load_karate(), 0.2);
    FlopCounter flops;
    const SignatureVector sig = compute_signature(u, 5, cfg, &flops);
    CHECK(flops.multiplies() == 2 * static_cast<std::uint64_t>(sig.steps_taken));
}
