#include "grf/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace grf::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dense_size(NodeId n) {
    if (n > kDenseLimit)
        throw std::invalid_argument("dense oracle limited to " + std::to_string(kDenseLimit) +
                                    " nodes, got " + std::to_string(n));
}

// Tail of sum_{k >= start} (k+1) q^k for 0 <= q < 1.
double weighted_geometric_tail(double q, int start) {
    if (q >= 1.0) return kInf;
    if (q <= 0.0) return 0.0;
    return std::pow(q, start) * ((start + 1) / (1.0 - q) + q / ((1.0 - q) * (1.0 - q)));
}

Eigen::MatrixXd multiply_by_walk_matrix(const Eigen::MatrixXd& p, const WalkMatrix& u) {
    const NodeId n = u.node_count();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (NodeId k = 0; k < n; ++k) {
        const auto nbrs = u.neighbors(k);
        const auto vals = u.values(k);
        for (std::size_t idx = 0; idx < nbrs.size(); ++idx)
            out.col(nbrs[idx]) += vals[idx] * p.col(k);
    }
    return out;
}

}  // namespace

Eigen::MatrixXd dense_walk_matrix(const WalkMatrix& u) {
    const NodeId n = u.node_count();
    require_dense_size(n);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (NodeId v = 0; v < n; ++v) {
        const auto nbrs = u.neighbors(v);
        const auto vals = u.values(v);
        for (std::size_t k = 0; k < nbrs.size(); ++k) m(v, nbrs[k]) = vals[k];
    }
    return m;
}

Eigen::MatrixXd dense_regularized(const Graph& g, double sigma2) {
    const NodeId n = g.node_count();
    require_dense_size(n);
    const SparseMatrix lap = normalized_laplacian(g);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    for (NodeId i = 0; i < n; ++i)
        for (std::int64_t k = lap.offsets[i]; k < lap.offsets[i + 1]; ++k)
            a(i, lap.cols[k]) += sigma2 * lap.vals[k];
    return a;
}

Eigen::MatrixXd exact_kernel_matrix(const Graph& g, const LaplacianKernelSpec& spec) {
    if (spec.d < 1) throw std::invalid_argument("kernel power d must be >= 1");
    if (!(spec.sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    const Eigen::MatrixXd a = dense_regularized(g, spec.sigma2);
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("regularized operator is not positive definite");
    Eigen::MatrixXd kernel = Eigen::MatrixXd::Identity(g.node_count(), g.node_count());
    for (int step = 0; step < spec.d; ++step) kernel = llt.solve(kernel);
    return kernel;
}

Eigen::MatrixXd exact_inverse(const WalkMatrix& u) {
    const NodeId n = u.node_count();
    require_dense_size(n);
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - dense_walk_matrix(u);
    return m.partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
}

Eigen::MatrixXd exact_inverse_squared(const WalkMatrix& u) {
    const Eigen::MatrixXd inv = exact_inverse(u);
    return inv * inv;
}

Eigen::MatrixXd neumann_partial_sum(const WalkMatrix& u, int terms, bool weighted,
                                    double* tail_bound) {
    if (terms < 1) throw std::invalid_argument("terms must be >= 1");
    const NodeId n = u.node_count();
    require_dense_size(n);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd sum = power;
    for (int k = 1; k < terms; ++k) {
        power = multiply_by_walk_matrix(power, u);
        sum += weighted ? (k + 1.0) * power : power;
    }
    if (tail_bound != nullptr) {
        const double q = u.infinity_norm();
        *tail_bound = weighted ? weighted_geometric_tail(q, terms)
                               : (q >= 1.0 ? kInf : std::pow(q, terms) / (1.0 - q));
    }
    return sum;
}

double walk_sum(const WalkMatrix& u, NodeId i, NodeId j, int max_len, double* tail_bound) {
    if (max_len < 0) throw std::invalid_argument("max_len must be >= 0");
    const NodeId n = u.node_count();
    if (i < 0 || i >= n || j < 0 || j >= n) throw std::invalid_argument("node out of range");

    std::vector<double> row(static_cast<std::size_t>(n), 0.0);
    std::vector<double> next(static_cast<std::size_t>(n), 0.0);
    row[i] = 1.0;
    double total = (i == j) ? 1.0 : 0.0;  // the empty walk, weight 1, length 0
    for (int len = 1; len <= max_len; ++len) {
        std::fill(next.begin(), next.end(), 0.0);
        for (NodeId v = 0; v < n; ++v) {
            if (row[v] == 0.0) continue;
            const auto nbrs = u.neighbors(v);
            const auto vals = u.values(v);
            for (std::size_t k = 0; k < nbrs.size(); ++k) next[nbrs[k]] += row[v] * vals[k];
        }
        row.swap(next);
        total += (len + 1.0) * row[j];
    }
    if (tail_bound != nullptr)
        *tail_bound = weighted_geometric_tail(u.infinity_norm(), max_len + 1);
    return total;
}

namespace {

// Pair-comparability sum for one source node: entry (y, z) accumulates, over
// prefix-comparable walk pairs from the source whose shorter member ends at y
// and longer member ends at z (swapped roles included) plus the equal-walk
// diagonal, the weight w(short)^2 A(short) w(extension). The estimator's
// second moment is the Frobenius inner product of two such matrices.
Eigen::MatrixXd comparable_pair_matrix(const WalkMatrix& u, NodeId source, double p_term,
                                       int max_len) {
    const NodeId n = u.node_count();
    // One-step transfer for w(walk)^2 A(walk): entry (v, w) = u_{v,w}^2 * deg(v)/(1-p_term).
    std::vector<double> step_scale(static_cast<std::size_t>(n));
    for (NodeId v = 0; v < n; ++v) step_scale[v] = u.degree(v) / (1.0 - p_term);

    // Powers of U and their prefix sums M_r = sum_{t=1..r} U^t.
    std::vector<Eigen::MatrixXd> prefix(static_cast<std::size_t>(max_len) + 1);
    prefix[0] = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd upower = Eigen::MatrixXd::Identity(n, n);
    for (int t = 1; t <= max_len; ++t) {
        upower = multiply_by_walk_matrix(upower, u);
        prefix[t] = prefix[t - 1] + upower;
    }

    Eigen::VectorXd short_walk = Eigen::VectorXd::Zero(n);  // row source of T^s
    short_walk(source) = 1.0;
    Eigen::VectorXd short_total = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd strict = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s <= max_len; ++s) {
        short_total += short_walk;
        if (s < max_len)
            strict += short_walk.asDiagonal() * prefix[max_len - s];
        // advance short_walk by one T step
        Eigen::VectorXd advanced = Eigen::VectorXd::Zero(n);
        for (NodeId v = 0; v < n; ++v) {
            if (short_walk(v) == 0.0) continue;
            const auto nbrs = u.neighbors(v);
            const auto vals = u.values(v);
            const double scaled = short_walk(v) * step_scale[v];
            for (std::size_t k = 0; k < nbrs.size(); ++k)
                advanced(nbrs[k]) += scaled * vals[k] * vals[k];
        }
        short_walk.swap(advanced);
    }
    Eigen::MatrixXd out = strict + strict.transpose();
    out += short_total.asDiagonal();
    return out;
}

double second_moment(const WalkMatrix& u, NodeId i, NodeId j, double p_term, int max_len) {
    const Eigen::MatrixXd from_i = comparable_pair_matrix(u, i, p_term, max_len);
    const Eigen::MatrixXd from_j = comparable_pair_matrix(u, j, p_term, max_len);
    return from_i.cwiseProduct(from_j).sum();
}

}  // namespace

double variance_formula(const WalkMatrix& u, NodeId i, NodeId j, double p_term, int m,
                        int max_len, double* tail_estimate) {
    const NodeId n = u.node_count();
    if (i < 0 || i >= n || j < 0 || j >= n) throw std::invalid_argument("node out of range");
    if (i == j) throw std::invalid_argument("variance formula requires i != j");
    if (!(p_term > 0.0 && p_term < 1.0))
        throw std::invalid_argument("p_term must lie in (0, 1) for the variance formula");
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    require_dense_size(n);

    const double lambda_full = second_moment(u, i, j, p_term, max_len);
    const double kij = exact_inverse_squared(u)(i, j);
    if (tail_estimate != nullptr) {
        const double lambda_prev = second_moment(u, i, j, p_term, max_len - 1);
        const double increment = lambda_full - lambda_prev;
        double ratio = u.infinity_norm();
        for (NodeId v = 0; v < n; ++v) {
            double t_row = 0.0;
            const auto vals = u.values(v);
            for (double val : vals) t_row += val * val;
            ratio = std::max(ratio, t_row * u.degree(v) / (1.0 - p_term));
        }
        *tail_estimate = ratio < 1.0 ? increment * ratio / (1.0 - ratio) / (m * m) : kInf;
    }
    return (lambda_full - kij * kij) / (static_cast<double>(m) * m);
}

bool positive_definiteness_check(const Eigen::MatrixXd& kernel, double tol) {
    if (kernel.rows() != kernel.cols())
        throw std::invalid_argument("positive definiteness check requires a square matrix");
    if (kernel.rows() == 0) return true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kernel,
                                                          Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff() > -tol;
}

}  // namespace grf::oracle
