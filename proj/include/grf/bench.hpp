#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "grf/estimators.hpp"
#include "grf/flops.hpp"
#include "grf/graph.hpp"

namespace grf {

// ||exact - approx||_F / ||exact||_F
double frobenius_error(const Eigen::MatrixXd& exact, const Eigen::MatrixXd& approx);

struct ExperimentRecord {
    std::string graph_id;
    int d = 0;
    double p_term = 0.0;
    int m = 0;
    int trials = 0;
    double mean_error = 0.0;
    double std_error = 0.0;  // sample std; 0 by convention for a single trial
};

// Mean/std of the relative Frobenius error of the estimated kernel against
// the dense oracle, over `trials` independent realizations per
// (p_term, m) cell. Trials run in parallel with derived seeds; the output is
// independent of the number of workers. With symmetrized=true each
// realization is averaged with its transpose first, which cuts the error by
// about sqrt(2).
std::vector<ExperimentRecord> run_frobenius_experiment(
    const Graph& g, const std::string& graph_id, int d, double sigma2,
    std::span<const double> p_terms, std::span<const int> ms, int trials,
    std::uint64_t seed, int threads = 1, bool symmetrized = false);

void write_frobenius_csv(std::span<const ExperimentRecord> records, std::ostream& out);

struct SolveResult {
    Eigen::VectorXd x;
    std::uint64_t flops = 0;
    int iterations = 0;
};

// Classic stationary/Krylov baselines over a CSR operator. FLOPs count one
// per scalar multiply or divide, additions free.
SolveResult jacobi_solve(const SparseMatrix& a, const Eigen::VectorXd& b, int iters);
SolveResult gauss_seidel_solve(const SparseMatrix& a, const Eigen::VectorXd& b, int iters);
SolveResult cg_solve(const SparseMatrix& a, const Eigen::VectorXd& b, int max_iters,
                     double tol);

struct SpeedRow {
    NodeId n = 0;
    std::string method;
    std::uint64_t flops = 0;
};

struct SpeedConfig {
    std::vector<NodeId> sizes;
    double density = 1.0;  // ER edge probability; 1 gives the complete graph
    double sigma2 = 0.2;
    double p_term = 0.1;
    int m = 20;
    int solver_iters = 10;
    double cg_tol = 1e-10;
    std::uint64_t seed = 0;
    int threads = 1;
};

// One preprocessing pass plus one inference matvec per method. The GRF column
// runs the squared-kernel chain (walks, factor scaling, two sparse matvecs);
// brute force actually inverts the dense operator and is charged N^3 + N^2
// under the documented convention; the iterative solvers solve one system.
std::vector<SpeedRow> run_speed_comparison(const SpeedConfig& cfg);

void write_speed_csv(std::span<const SpeedRow> rows, std::ostream& out);

}  // namespace grf
