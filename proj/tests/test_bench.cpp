#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "grf/bench.hpp"
#include "grf/oracle.hpp"
#include "test_util.hpp"

using namespace grf;

TEST_CASE("frobenius error") {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    CHECK(frobenius_error(eye, eye) == 0.0);
    CHECK(frobenius_error(eye, Eigen::MatrixXd::Zero(2, 2)) == doctest::Approx(1.0));
    Eigen::MatrixXd close = eye;
    close(1, 1) = 0.9;
    CHECK(frobenius_error(eye, close) == doctest::Approx(0.1 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(frobenius_error(Eigen::MatrixXd::Zero(2, 2), eye), std::invalid_argument);
    CHECK_THROWS_AS(frobenius_error(eye, Eigen::MatrixXd::Zero(3, 3)), std::invalid_argument);
}

namespace {

SparseMatrix regularized_of(const Graph& g, double sigma2) {
    return regularized_operator(build_u_matrix(g, sigma2));
}

SparseMatrix identity_operator(NodeId n) {
    SparseMatrix a;
    a.n = n;
    a.offsets.resize(n + 1);
    for (NodeId i = 0; i <= n; ++i) a.offsets[i] = i;
    a.cols.resize(n);
    a.vals.assign(n, 1.0);
    for (NodeId i = 0; i < n; ++i) a.cols[i] = i;
    return a;
}

}  // namespace

TEST_CASE("jacobi solver") {
    SUBCASE("identity system solves in one iteration") {
        Eigen::VectorXd b(3);
        b << 1.0, 2.0, 3.0;
        const SolveResult res = jacobi_solve(identity_operator(3), b, 1);
        CHECK((res.x - b).norm() == 0.0);
        CHECK(res.flops == 3);  // one division per row
    }
    SUBCASE("converges to the dense solve on a 2-node system") {
        const WalkMatrix u(Graph::from_edges(2, {{0, 1, 0.4}}), 1.0, false);
        const SparseMatrix a = regularized_operator(u);
        Eigen::VectorXd b(2);
        b << 1.0, 0.0;
        const Eigen::MatrixXd dense =
            Eigen::MatrixXd::Identity(2, 2) - oracle::dense_walk_matrix(u);
        const Eigen::VectorXd exact = dense.partialPivLu().solve(b);
        const SolveResult res = jacobi_solve(a, b, 50);
        CHECK((res.x - exact).norm() < 1e-8);
    }
    SUBCASE("flop audit: iterations times (offdiag nnz + n)") {
        const Graph g = test::path_graph(5);  // 4 edges, 8 stored off-diagonals
        const SolveResult res = jacobi_solve(regularized_of(g, 0.2),
                                             Eigen::VectorXd::Ones(5), 7);
        CHECK(res.flops == 7u * (8u + 5u));
    }
    SUBCASE("zero diagonal is rejected") {
        SparseMatrix a = identity_operator(2);
        a.vals[1] = 0.0;
        CHECK_THROWS_AS(jacobi_solve(a, Eigen::VectorXd::Ones(2), 1), std::invalid_argument);
    }
}

TEST_CASE("gauss-seidel and cg solve an 8-node SPD system") {
    const Graph g = generate_erdos_renyi(8, 0.6, 19);
    const SparseMatrix a = regularized_of(g, 0.2);
    const Eigen::MatrixXd dense = oracle::dense_regularized(g, 0.2);
    Eigen::VectorXd b(8);
    for (int i = 0; i < 8; ++i) b(i) = std::sin(i + 1.0);
    const Eigen::VectorXd exact = dense.llt().solve(b);

    const SolveResult gs = gauss_seidel_solve(a, b, 60);
    CHECK((gs.x - exact).norm() < 1e-8);
    CHECK(gs.flops == 60u * static_cast<std::uint64_t>(a.nnz()));

    const SolveResult cg = cg_solve(a, b, 8, 1e-10);
    CHECK((cg.x - exact).norm() < 1e-8);
    CHECK(cg.iterations <= 8);
}

TEST_CASE("cg solves the identity in one step") {
    Eigen::VectorXd b(4);
    b << 1.0, -1.0, 2.0, 0.5;
    const SolveResult res = cg_solve(identity_operator(4), b, 4, 1e-12);
    CHECK(res.iterations == 1);
    CHECK((res.x - b).norm() < 1e-14);
}

TEST_CASE("frobenius experiment") {
    const Graph g = generate_erdos_renyi(30, 0.4, 23);
    const std::vector<double> p_terms{0.5};
    const std::vector<int> ms{1, 8};

    SUBCASE("error shrinks with more walks and std is populated") {
        const auto records =
            run_frobenius_experiment(g, "er30", 2, 0.2, p_terms, ms, 4, 11, 2);
        REQUIRE(records.size() == 2);
        CHECK(records[0].m == 1);
        CHECK(records[1].m == 8);
        CHECK(records[1].mean_error < records[0].mean_error);
        CHECK(records[0].std_error > 0.0);
    }
    SUBCASE("single trial reports zero std by convention") {
        const auto records =
            run_frobenius_experiment(g, "er30", 1, 0.2, p_terms, {ms.data(), 1}, 1, 11);
        CHECK(records[0].trials == 1);
        CHECK(records[0].std_error == 0.0);
    }
    SUBCASE("results are independent of worker count") {
        const auto serial = run_frobenius_experiment(g, "er30", 1, 0.2, p_terms, ms, 4, 3, 1);
        const auto parallel = run_frobenius_experiment(g, "er30", 1, 0.2, p_terms, ms, 4, 3, 4);
        REQUIRE(serial.size() == parallel.size());
        for (std::size_t i = 0; i < serial.size(); ++i) {
            CHECK(serial[i].mean_error == parallel[i].mean_error);
            CHECK(serial[i].std_error == parallel[i].std_error);
        }
    }
    SUBCASE("csv schema") {
        const auto records = run_frobenius_experiment(g, "er30", 1, 0.2, p_terms,
                                                      {ms.data(), 1}, 2, 5);
        std::ostringstream out;
        write_frobenius_csv(records, out);
        CHECK(out.str().starts_with("graph,d,p_term,m,mean,std\n"));
        CHECK(out.str().find("er30,1,0.5,1,") != std::string::npos);
    }
}

TEST_CASE("speed comparison") {
    SUBCASE("documented flop formulas at a small size") {
        SpeedConfig cfg;
        cfg.sizes = {64};
        cfg.density = 1.0;
        cfg.seed = 4;
        const auto rows = run_speed_comparison(cfg);
        REQUIRE(rows.size() == 5);
        for (const SpeedRow& row : rows) {
            if (row.method == "brute_force")
                CHECK(row.flops == 64ull * 64 * 64 + 64ull * 64);
            if (row.method == "jacobi" || row.method == "gauss_seidel")
                CHECK(row.flops == 10ull * (64ull * 63 + 64));
        }
    }
    SUBCASE("single-node graph works for every method") {
        SpeedConfig cfg;
        cfg.sizes = {1};
        cfg.seed = 4;
        const auto rows = run_speed_comparison(cfg);
        for (const SpeedRow& row : rows) CHECK(row.flops < 100);
    }
    SUBCASE("csv schema") {
        SpeedConfig cfg;
        cfg.sizes = {16};
        const auto rows = run_speed_comparison(cfg);
        std::ostringstream out;
        write_speed_csv(rows, out);
        CHECK(out.str().starts_with("n,method,flops\n"));
        CHECK(out.str().find("16,grf,") != std::string::npos);
    }
}
