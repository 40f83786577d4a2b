#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "grf/estimators.hpp"
#include "grf/graph.hpp"

namespace grf {

class FlopCounter;

// Minimal kernel-matrix view used by the clustering code: matrix action and
// diagonal access, never entries of an explicit N x N matrix.
class KernelOperator {
public:
    virtual ~KernelOperator() = default;
    [[nodiscard]] virtual NodeId size() const = 0;
    [[nodiscard]] virtual Eigen::VectorXd matvec(const Eigen::VectorXd& x,
                                                 FlopCounter* flops) const = 0;
    [[nodiscard]] virtual Eigen::VectorXd diagonal(FlopCounter* flops) const = 0;
};

class DenseKernel final : public KernelOperator {
public:
    explicit DenseKernel(Eigen::MatrixXd kernel);
    [[nodiscard]] NodeId size() const override { return static_cast<NodeId>(kernel_.rows()); }
    [[nodiscard]] Eigen::VectorXd matvec(const Eigen::VectorXd& x,
                                         FlopCounter* flops) const override;
    [[nodiscard]] Eigen::VectorXd diagonal(FlopCounter* flops) const override;

private:
    Eigen::MatrixXd kernel_;
};

class ChainKernel final : public KernelOperator {
public:
    explicit ChainKernel(const DecompositionChain& chain) : chain_(&chain) {}
    [[nodiscard]] NodeId size() const override { return chain_->size(); }
    [[nodiscard]] Eigen::VectorXd matvec(const Eigen::VectorXd& x,
                                         FlopCounter* flops) const override {
        return chain_->matvec(x, flops);
    }
    [[nodiscard]] Eigen::VectorXd diagonal(FlopCounter* flops) const override {
        return chain_->diagonal(flops);
    }

private:
    const DecompositionChain* chain_;
};

struct ClusteringResult {
    std::vector<int> labels;
    int n_clusters = 0;
    int iterations_run = 0;
    bool converged = false;
    std::vector<double> objective;     // within-cluster distance sum per iteration
    std::int64_t negative_clamps = 0;  // randomized-kernel distances clamped at 0
};

// Lloyd iterations in kernel feature space with k-means++-style seeding.
// Distances use only kernel entries:
//   dist2(i, c) = K(i,i) - (2/|c|) sum_{j in c} K(i,j) + (1/|c|^2) sum_{j,l in c} K(j,l)
// with the cross terms obtained from matvecs on cluster indicators.
// Deterministic for a fixed seed; empty clusters are repaired by moving the
// point farthest from its centroid.
ClusteringResult kernel_kmeans(const KernelOperator& kernel, int n_clusters,
                               std::uint64_t seed, int max_iter = 100,
                               FlopCounter* flops = nullptr);

// Best of `restarts` independently seeded runs, by final objective. The
// kernel k-means landscape on weakly coupled kernels has many near-tied
// optima; restarts make the returned labeling stable.
ClusteringResult kernel_kmeans_restarted(const KernelOperator& kernel, int n_clusters,
                                         std::uint64_t seed, int restarts,
                                         int max_iter = 100, FlopCounter* flops = nullptr);

// Fraction of unordered node pairs co-clustered in exactly one of the two
// labelings; symmetric and invariant under relabeling of cluster ids.
double clustering_error(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace grf
