#include "grf/compress.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "grf/rng.hpp"

namespace grf {

namespace {
constexpr std::uint64_t kAnchorStream = 0x616e6368ull;
constexpr std::uint64_t kJltStream = 0x6a6c74ull;
}  // namespace

AnchorSet sample_anchors(NodeId n, NodeId k, std::uint64_t seed) {
    if (k < 1 || k > n) throw std::invalid_argument("anchor count must satisfy 1 <= k <= n");
    Rng rng(derive_seed(seed, kAnchorStream));
    // Partial Fisher-Yates over 0..n-1, keeping the first k slots.
    std::vector<NodeId> pool(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) pool[i] = i;
    for (NodeId i = 0; i < k; ++i) {
        const auto j = i + static_cast<NodeId>(rng.bounded(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[i], pool[j]);
    }
    AnchorSet anchors;
    anchors.seed = seed;
    anchors.nodes.assign(pool.begin(), pool.begin() + k);
    std::sort(anchors.nodes.begin(), anchors.nodes.end());
    return anchors;
}

JltProjection::JltProjection(int k, NodeId n, std::uint64_t seed) : seed_(seed) {
    if (k < 1) throw std::invalid_argument("JLT dimension must be >= 1");
    if (n < 0) throw std::invalid_argument("negative column count");
    Rng rng(derive_seed(seed, kJltStream));
    g_.resize(k, n);
    for (NodeId col = 0; col < n; ++col)
        for (int row = 0; row < k; ++row) g_(row, col) = rng.gaussian();
}

Eigen::VectorXd JltProjection::apply(const SignatureVector& phi) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(g_.rows());
    for (const auto& [node, value] : phi.entries) {
        if (node >= g_.cols()) throw std::invalid_argument("signature vector exceeds JLT columns");
        out += value * g_.col(node);
    }
    return out / std::sqrt(static_cast<double>(g_.rows()));
}

Eigen::MatrixXd JltProjection::apply(const FeatureMatrix& features) const {
    if (features.size() != g_.cols())
        throw std::invalid_argument("feature matrix and JLT dimensions do not match");
    const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(g_.rows()));
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(features.size(), g_.rows());
    for (NodeId i = 0; i < features.size(); ++i) {
        const auto cols = features.row_cols(i);
        const auto vals = features.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k)
            out.row(i) += vals[k] * g_.col(cols[k]).transpose();
        out.row(i) *= inv_sqrt_k;
    }
    return out;
}

}  // namespace grf
