#pragma once

#include <Eigen/Dense>

#include "grf/graph.hpp"

namespace grf {

struct LaplacianKernelSpec {
    int d = 1;
    double sigma2 = 0.2;
};

// Exact reference computations. Everything here is deterministic and kept
// independent of the Monte Carlo estimation paths it is used to check.
namespace oracle {

// Hard ceiling on dense reference computations.
inline constexpr NodeId kDenseLimit = 4096;

Eigen::MatrixXd dense_walk_matrix(const WalkMatrix& u);

// I + sigma2 * normalized Laplacian, densified.
Eigen::MatrixXd dense_regularized(const Graph& g, double sigma2);

// (I + sigma2*L)^(-d) via d repeated SPD solves.
Eigen::MatrixXd exact_kernel_matrix(const Graph& g, const LaplacianKernelSpec& spec);

// (I - U)^(-1) and (I - U)^(-2), dense.
Eigen::MatrixXd exact_inverse(const WalkMatrix& u);
Eigen::MatrixXd exact_inverse_squared(const WalkMatrix& u);

// Partial sum of the series sum_k U^k (unweighted) or sum_k (k+1) U^k
// (weighted); `terms` is the number of series terms, so terms=1 gives I.
// When tail_bound is non-null it receives the infinity-norm bound on the
// dropped mass, finite only when the norm of U is below 1.
Eigen::MatrixXd neumann_partial_sum(const WalkMatrix& u, int terms, bool weighted,
                                    double* tail_bound = nullptr);

// sum over walks from i to j of at most max_len edges of (len+1) * w(walk),
// evaluated by propagating a single row through powers of U.
double walk_sum(const WalkMatrix& u, NodeId i, NodeId j, int max_len,
                double* tail_bound = nullptr);

// Variance of the inverse-squared estimator entry (i, j), i != j, under the
// uniform sampler with m walks per node, truncated at walks of max_len edges.
double variance_formula(const WalkMatrix& u, NodeId i, NodeId j, double p_term, int m,
                        int max_len, double* tail_estimate = nullptr);

// True iff the smallest eigenvalue of the (symmetric) input exceeds -tol.
bool positive_definiteness_check(const Eigen::MatrixXd& kernel, double tol);

}  // namespace oracle
}  // namespace grf
