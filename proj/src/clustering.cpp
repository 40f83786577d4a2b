#include "grf/clustering.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "grf/flops.hpp"
#include "grf/rng.hpp"

namespace grf {

namespace {

constexpr std::uint64_t kKmeansStream = 0x6b6d6e73ull;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

Eigen::VectorXd indicator(NodeId n, NodeId node) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(node) = 1.0;
    return e;
}

}  // namespace

DenseKernel::DenseKernel(Eigen::MatrixXd kernel) : kernel_(std::move(kernel)) {
    if (kernel_.rows() != kernel_.cols()) fail("kernel matrix must be square");
}

Eigen::VectorXd DenseKernel::matvec(const Eigen::VectorXd& x, FlopCounter* flops) const {
    count_flops(flops, static_cast<std::uint64_t>(kernel_.rows()) * kernel_.cols());
    return kernel_ * x;
}

Eigen::VectorXd DenseKernel::diagonal(FlopCounter*) const { return kernel_.diagonal(); }

ClusteringResult kernel_kmeans(const KernelOperator& kernel, int n_clusters,
                               std::uint64_t seed, int max_iter, FlopCounter* flops) {
    const NodeId n = kernel.size();
    if (n_clusters < 1) fail("n_clusters must be >= 1");
    if (n_clusters > n) fail("n_clusters exceeds the number of nodes");
    if (max_iter < 1) fail("max_iter must be >= 1");

    ClusteringResult result;
    result.n_clusters = n_clusters;
    const Eigen::VectorXd diag = kernel.diagonal(flops);
    Rng rng(derive_seed(seed, kKmeansStream));

    // Seeding: first center uniform, then D^2 weighting over current minimum
    // single-point distances dist2(i, c) = K(i,i) - 2 K(i,c) + K(c,c).
    std::vector<NodeId> centers;
    std::vector<Eigen::VectorXd> center_cols;
    std::vector<char> chosen(static_cast<std::size_t>(n), 0);
    centers.push_back(static_cast<NodeId>(rng.bounded(static_cast<std::uint64_t>(n))));
    chosen[centers[0]] = 1;
    center_cols.push_back(kernel.matvec(indicator(n, centers[0]), flops));

    Eigen::VectorXd min_dist(n);
    auto point_dist = [&](NodeId i, std::size_t c) {
        const double raw = diag(i) - 2.0 * center_cols[c](i) + diag(centers[c]);
        if (raw < 0.0) {
            ++result.negative_clamps;
            return 0.0;
        }
        return raw;
    };
    for (NodeId i = 0; i < n; ++i) min_dist(i) = point_dist(i, 0);

    while (static_cast<int>(centers.size()) < n_clusters) {
        double total = 0.0;
        for (NodeId i = 0; i < n; ++i)
            if (!chosen[i]) total += min_dist(i);
        NodeId pick = -1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (NodeId i = 0; i < n; ++i) {
                if (chosen[i]) continue;
                acc += min_dist(i);
                pick = i;
                if (target < acc) break;
            }
        } else {
            for (NodeId i = 0; i < n; ++i)
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
        }
        chosen[pick] = 1;
        centers.push_back(pick);
        center_cols.push_back(kernel.matvec(indicator(n, pick), flops));
        const std::size_t c = centers.size() - 1;
        for (NodeId i = 0; i < n; ++i) min_dist(i) = std::min(min_dist(i), point_dist(i, c));
    }

    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    for (NodeId i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const double d = point_dist(i, c);
            if (d < best) {
                best = d;
                labels[i] = static_cast<int>(c);
            }
        }
    }

    Eigen::MatrixXd dist2(n, n_clusters);
    std::vector<int> next_labels(static_cast<std::size_t>(n));
    for (int iter = 0; iter < max_iter; ++iter) {
        result.iterations_run = iter + 1;

        std::vector<std::int64_t> sizes(static_cast<std::size_t>(n_clusters), 0);
        for (NodeId i = 0; i < n; ++i) ++sizes[labels[i]];

        double objective = 0.0;
        for (int c = 0; c < n_clusters; ++c) {
            if (sizes[c] == 0) {
                // unreachable as an assignment target until repaired below
                dist2.col(c).setConstant(std::numeric_limits<double>::infinity());
                continue;
            }
            Eigen::VectorXd ind = Eigen::VectorXd::Zero(n);
            for (NodeId i = 0; i < n; ++i)
                if (labels[i] == c) ind(i) = 1.0;
            const Eigen::VectorXd col_sum = kernel.matvec(ind, flops);
            const double within = ind.dot(col_sum);
            const double inv_size = 1.0 / static_cast<double>(sizes[c]);
            for (NodeId i = 0; i < n; ++i) {
                double raw = diag(i) - 2.0 * inv_size * col_sum(i) +
                             inv_size * inv_size * within;
                if (raw < 0.0) {
                    ++result.negative_clamps;
                    raw = 0.0;
                }
                dist2(i, c) = raw;
            }
            count_flops(flops, 3 * static_cast<std::uint64_t>(n));
        }
        for (NodeId i = 0; i < n; ++i) objective += dist2(i, labels[i]);
        result.objective.push_back(objective);

        for (NodeId i = 0; i < n; ++i) {
            int best_c = 0;
            double best = dist2(i, 0);
            for (int c = 1; c < n_clusters; ++c)
                if (dist2(i, c) < best) {
                    best = dist2(i, c);
                    best_c = c;
                }
            next_labels[i] = best_c;
        }

        // Empty-cluster repair: hand the farthest point (from its newly
        // assigned centroid) to each empty cluster, lowest node id on ties.
        std::vector<std::int64_t> next_sizes(static_cast<std::size_t>(n_clusters), 0);
        for (NodeId i = 0; i < n; ++i) ++next_sizes[next_labels[i]];
        for (int c = 0; c < n_clusters; ++c) {
            if (next_sizes[c] > 0) continue;
            NodeId farthest = -1;
            double farthest_dist = -1.0;
            for (NodeId i = 0; i < n; ++i) {
                if (next_sizes[next_labels[i]] <= 1) continue;
                const double d = dist2(i, next_labels[i]);
                if (d > farthest_dist) {
                    farthest_dist = d;
                    farthest = i;
                }
            }
            if (farthest < 0) break;  // fewer distinct points than clusters
            --next_sizes[next_labels[farthest]];
            next_labels[farthest] = c;
            ++next_sizes[c];
        }

        if (next_labels == labels) {
            result.converged = true;
            break;
        }
        labels = next_labels;
    }

    result.labels = std::move(labels);
    return result;
}

ClusteringResult kernel_kmeans_restarted(const KernelOperator& kernel, int n_clusters,
                                         std::uint64_t seed, int restarts, int max_iter,
                                         FlopCounter* flops) {
    if (restarts < 1) fail("restarts must be >= 1");
    ClusteringResult best;
    double best_objective = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        ClusteringResult run = kernel_kmeans(
            kernel, n_clusters, derive_seed(seed, 0x72657374ull, static_cast<std::uint64_t>(r)),
            max_iter, flops);
        const double objective = run.objective.back();
        if (objective < best_objective) {
            best_objective = objective;
            best = std::move(run);
        }
    }
    return best;
}

double clustering_error(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) fail("labelings differ in length");
    const std::size_t n = a.size();
    if (n < 2) fail("clustering error needs at least two nodes");
    std::int64_t disagreements = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool same_a = a[i] == a[j];
            const bool same_b = b[i] == b[j];
            if (same_a != same_b) ++disagreements;
        }
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return static_cast<double>(disagreements) / pairs;
}

}  // namespace grf
