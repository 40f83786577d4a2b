#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "grf/graph.hpp"
#include "grf/oracle.hpp"
#include "grf/rng.hpp"
#include "test_util.hpp"

using namespace grf;

TEST_CASE("edge list parsing builds the canonical graph") {
    std::istringstream in("0 1\n1 2\n");
    const Graph g = load_edge_list(in);
    CHECK(g.node_count() == 3);
    CHECK(g.edge_count() == 2);
    CHECK(g.weights(0)[0] == 1.0);  // missing weight defaults to 1
    CHECK(g.neighbors(1).size() == 2);
    CHECK(g.neighbors(1)[0] == 0);
    CHECK(g.neighbors(1)[1] == 2);
}

TEST_CASE("edge list errors carry line numbers") {
    SUBCASE("duplicate edge, reversed orientation") {
        std::istringstream in("0 1 0.5\n1 0 0.5\n");
        CHECK_THROWS_WITH_AS(load_edge_list(in), doctest::Contains("line 2"),
                             std::invalid_argument);
    }
    SUBCASE("self loop") {
        std::istringstream in("0 1\n2 2\n");
        CHECK_THROWS_WITH_AS(load_edge_list(in), doctest::Contains("line 2"),
                             std::invalid_argument);
    }
    SUBCASE("negative weight") {
        std::istringstream in("0 1 -2\n");
        CHECK_THROWS_AS(load_edge_list(in), std::invalid_argument);
    }
    SUBCASE("malformed line") {
        std::istringstream in("0\n");
        CHECK_THROWS_WITH_AS(load_edge_list(in), doctest::Contains("line 1"),
                             std::invalid_argument);
    }
}

TEST_CASE("comments and blank lines are ignored") {
    std::istringstream in("# header\n\n0 1 2.5  # trailing comment\n");
    const Graph g = load_edge_list(in);
    CHECK(g.edge_count() == 1);
    CHECK(g.weights(0)[0] == 2.5);
}

TEST_CASE("remap compacts sparse labels and reports the mapping") {
    std::istringstream in("10 40\n40 7\n");
    std::vector<std::int64_t> mapping;
    const Graph g = load_edge_list(in, true, &mapping);
    CHECK(g.node_count() == 3);
    CHECK(mapping == std::vector<std::int64_t>{7, 10, 40});
}

TEST_CASE("karate fixture has the expected shape") {
    const Graph g = test::load_karate();
    CHECK(g.node_count() == 34);
    CHECK(g.edge_count() == 78);
    CHECK(g.degree(33) == 17);
}

TEST_CASE("serialize then load is the identity on canonical graphs") {
    const Graph g = test::load_karate();
    std::ostringstream out;
    serialize_edge_list(g, out);
    std::istringstream in(out.str());
    CHECK(load_edge_list(in) == g);
}

TEST_CASE("erdos-renyi generator") {
    SUBCASE("p = 0 gives the empty graph") {
        CHECK(generate_erdos_renyi(5, 0.0, 3).edge_count() == 0);
    }
    SUBCASE("p = 1 gives the complete graph") {
        const Graph g = generate_erdos_renyi(5, 1.0, 3);
        CHECK(g.edge_count() == 10);
        CHECK(g == generate_complete(5));
    }
    SUBCASE("bit-deterministic for a fixed seed") {
        CHECK(generate_erdos_renyi(50, 0.3, 11) == generate_erdos_renyi(50, 0.3, 11));
    }
    SUBCASE("edge count within 5 sigma of the binomial mean") {
        const Graph g = generate_erdos_renyi(1000, 0.4, 17);
        const double pairs = 1000.0 * 999.0 / 2.0;
        const double mean = 0.4 * pairs;
        const double sigma = std::sqrt(pairs * 0.4 * 0.6);
        CHECK(std::abs(static_cast<double>(g.edge_count()) - mean) < 5.0 * sigma);
    }
}

TEST_CASE("weighted degree") {
    const Graph star = Graph::from_edges(4, {{0, 1, 0.5}, {0, 2, 0.25}, {0, 3, 0.25}});
    CHECK(star.weighted_degree(0) == doctest::Approx(1.0));
    CHECK(star.weighted_degree(1) == doctest::Approx(0.5));
    const Graph lonely = Graph::from_edges(2, {});
    CHECK(lonely.weighted_degree(0) == 0.0);
    CHECK(test::two_node_graph().weighted_degree(1) == doctest::Approx(1.0));
    CHECK_THROWS_AS((void)lonely.weighted_degree(5), std::invalid_argument);
}

TEST_CASE("normalized laplacian values") {
    SUBCASE("two nodes, any weight") {
        const SparseMatrix lap = normalized_laplacian(test::two_node_graph(3.7));
        Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(2, 2);
        for (NodeId i = 0; i < 2; ++i)
            for (std::int64_t k = lap.offsets[i]; k < lap.offsets[i + 1]; ++k)
                dense(i, lap.cols[k]) = lap.vals[k];
        CHECK(dense(0, 0) == 1.0);
        CHECK(dense(1, 1) == 1.0);
        CHECK(dense(0, 1) == doctest::Approx(-1.0));
        CHECK(dense(1, 0) == doctest::Approx(-1.0));
    }
    SUBCASE("empty graph gives the identity") {
        const SparseMatrix lap = normalized_laplacian(Graph::from_edges(4, {}));
        CHECK(lap.nnz() == 4);
        for (std::int64_t k = 0; k < 4; ++k) CHECK(lap.vals[k] == 1.0);
    }
    SUBCASE("path graph off-diagonal") {
        const SparseMatrix lap = normalized_laplacian(test::path_graph(3));
        // row 0: entries for columns 0 and 1
        CHECK(lap.vals[lap.offsets[0]] == 1.0);
        CHECK(lap.vals[lap.offsets[0] + 1] == doctest::Approx(-1.0 / std::sqrt(2.0)));
    }
}

TEST_CASE("walk matrix construction") {
    SUBCASE("two nodes, sigma2 = 0.2") {
        const WalkMatrix u = build_u_matrix(test::two_node_graph(), 0.2);
        CHECK(u.values(0)[0] == doctest::Approx(1.0 / 6.0));
        CHECK(u.scale() == doctest::Approx(1.2));
    }
    SUBCASE("empty graph gives zero U") {
        const WalkMatrix u = build_u_matrix(Graph::from_edges(3, {}), 0.5);
        CHECK(u.infinity_norm() == 0.0);
    }
    SUBCASE("path graph entry") {
        const WalkMatrix u = build_u_matrix(test::path_graph(3), 0.2);
        CHECK(u.values(0)[0] == doctest::Approx((1.0 / 6.0) / std::sqrt(2.0)));
    }
    SUBCASE("sigma2 must be positive") {
        CHECK_THROWS_AS(build_u_matrix(test::path_graph(3), 0.0), std::invalid_argument);
    }
}

TEST_CASE("scale identity: lambda (I - U) equals I + sigma2 L entrywise") {
    const double sigma2 = 0.2;
    for (const Graph& g : {test::path_graph(5), generate_erdos_renyi(64, 0.2, 5),
                           test::load_karate(), Graph::from_edges(6, {})}) {
        const WalkMatrix u = build_u_matrix(g, sigma2);
        const Eigen::MatrixXd lhs =
            u.scale() * (Eigen::MatrixXd::Identity(g.node_count(), g.node_count()) -
                         oracle::dense_walk_matrix(u));
        const Eigen::MatrixXd rhs = oracle::dense_regularized(g, sigma2);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("randomized weighted graphs: scale identity and round trip") {
    Rng rng(2718);
    for (int trial = 0; trial < 25; ++trial) {
        const NodeId n = 2 + static_cast<NodeId>(rng.bounded(9));
        std::vector<Graph::Edge> edges;
        for (NodeId u = 0; u < n; ++u)
            for (NodeId v = u + 1; v < n; ++v)
                if (rng.bernoulli(0.4))
                    edges.push_back({u, v, 0.1 + 3.0 * rng.uniform()});
        const Graph g = Graph::from_edges(n, edges);
        const double sigma2 = 0.05 + rng.uniform();

        const WalkMatrix u = build_u_matrix(g, sigma2);
        const Eigen::MatrixXd lhs =
            u.scale() * (Eigen::MatrixXd::Identity(n, n) - oracle::dense_walk_matrix(u));
        CHECK((lhs - oracle::dense_regularized(g, sigma2)).cwiseAbs().maxCoeff() < 1e-12);

        std::stringstream buffer;
        serialize_edge_list(g, buffer);
        CHECK(load_edge_list(buffer) == g);
    }
}

TEST_CASE("spectral radius report") {
    SUBCASE("zero matrix") {
        const WalkMatrix u(Graph::from_edges(3, {}), 1.0, false);
        const auto report = spectral_radius_report(u, 30, 1);
        CHECK(report.power_estimate == 0.0);
        CHECK(report.gershgorin_bound == 0.0);
    }
    SUBCASE("two-node walk matrix has rho = u") {
        const WalkMatrix u(test::two_node_graph(1.0 / 6.0), 1.0, false);
        const auto report = spectral_radius_report(u, 60, 1);
        CHECK(report.power_estimate == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
        CHECK(report.gershgorin_bound == doctest::Approx(1.0 / 6.0));
    }
    SUBCASE("laplacian-derived U stays below the certified bound") {
        for (const Graph& g : {test::path_graph(7), test::load_karate(),
                               generate_erdos_renyi(16, 0.5, 9)}) {
            const WalkMatrix u = build_u_matrix(g, 0.2);
            const auto report = spectral_radius_report(u, 80, 2);
            CHECK(report.certified_bound == doctest::Approx(0.2 / 1.2));
            CHECK(report.power_estimate <= report.certified_bound + 1e-9);
            CHECK(report.power_estimate <= report.gershgorin_bound + 1e-12);
        }
    }
}

TEST_CASE("regularized operator matches the dense form") {
    const Graph g = generate_erdos_renyi(12, 0.4, 21);
    const WalkMatrix u = build_u_matrix(g, 0.2);
    const SparseMatrix reg = regularized_operator(u);
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(12, 12);
    for (NodeId i = 0; i < 12; ++i)
        for (std::int64_t k = reg.offsets[i]; k < reg.offsets[i + 1]; ++k)
            dense(i, reg.cols[k]) = reg.vals[k];
    CHECK((dense - oracle::dense_regularized(g, 0.2)).cwiseAbs().maxCoeff() < 1e-12);
}
