#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "grf/graph.hpp"
#include "grf/walk.hpp"

namespace grf {

// Uniform K-subset of the node set, sorted, without repetitions.
struct AnchorSet {
    std::vector<NodeId> nodes;
    std::uint64_t seed = 0;

    [[nodiscard]] NodeId k() const noexcept { return static_cast<NodeId>(nodes.size()); }
};

AnchorSet sample_anchors(NodeId n, NodeId k, std::uint64_t seed);

// Gaussian projection (1/sqrt(K)) * G with G in R^{K x N}, entries iid
// standard normal, deterministic per seed. One projection is shared by every
// node (and by both feature-matrix copies of an estimator); dot products are
// preserved in expectation.
class JltProjection {
public:
    JltProjection(int k, NodeId n, std::uint64_t seed);

    [[nodiscard]] int k() const noexcept { return static_cast<int>(g_.rows()); }
    [[nodiscard]] NodeId n() const noexcept { return static_cast<NodeId>(g_.cols()); }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    // (1/sqrt(K)) G phi, cost O(K * nnz(phi)).
    [[nodiscard]] Eigen::VectorXd apply(const SignatureVector& phi) const;

    // Projects every row; output is N x K.
    [[nodiscard]] Eigen::MatrixXd apply(const FeatureMatrix& features) const;

private:
    Eigen::MatrixXd g_;
    std::uint64_t seed_ = 0;
};

}  // namespace grf
