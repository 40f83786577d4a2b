#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "grf/graph.hpp"

namespace grf {

class FlopCounter;
class Rng;

enum class SamplerKind {
    Uniform,            // p = 1/deg(v)
    WeightProportional, // p = u_{v,w} / sum_z u_{v,z}
    Reinforced,         // p = f(N(v,w)) / sum_z f(N(v,z)), f(n) = (1+n)^-alpha
};

std::string sampler_name(SamplerKind kind);
SamplerKind sampler_from_name(const std::string& name);

struct WalkConfig {
    double p_term = 0.1;               // termination probability, in (0, 1]
    int walks_per_node = 10;           // m
    SamplerKind sampler = SamplerKind::Uniform;
    double reinforced_alpha = 1.0;
    std::uint64_t master_seed = 0;
    std::int64_t max_steps = 1'000'000;  // per-walk safety cap, truncation reported
    int threads = 1;                     // 0 = hardware concurrency

    void validate() const;  // throws std::invalid_argument
};

// Visit counts over unordered edges, scoped to the walks of one source node.
class EdgeHistory {
public:
    void add(NodeId v, NodeId w) { ++counts_[key(v, w)]; }
    [[nodiscard]] std::int64_t count(NodeId v, NodeId w) const {
        const auto it = counts_.find(key(v, w));
        return it == counts_.end() ? 0 : it->second;
    }
    void clear() { counts_.clear(); }

private:
    static std::uint64_t key(NodeId v, NodeId w) {
        const auto a = static_cast<std::uint64_t>(v < w ? v : w);
        const auto b = static_cast<std::uint64_t>(v < w ? w : v);
        return (a << 32) | b;
    }
    std::unordered_map<std::uint64_t, std::int64_t> counts_;
};

// Draws a neighbor of v and returns it together with the exact probability it
// was drawn with. Probabilities over the neighborhood sum to 1 and are all
// positive. Throws if v has no neighbors.
std::pair<NodeId, double> sample_neighbor(const WalkMatrix& u, NodeId v,
                                          const EdgeHistory& history, const WalkConfig& cfg,
                                          Rng& rng);

// Sparse per-node load accumulator: entries sorted by node id, values are the
// mean deposited load over the walks (already rescaled).
struct SignatureVector {
    NodeId owner = 0;
    std::vector<std::pair<NodeId, double>> entries;
    int walks_used = 0;
    std::int64_t steps_taken = 0;      // transitions across all walks
    std::int64_t truncated_walks = 0;  // walks stopped by the max_steps cap

    [[nodiscard]] double value(NodeId node) const;
};

double signature_dot(const SignatureVector& a, const SignatureVector& b);

SignatureVector compute_signature(const WalkMatrix& u, NodeId source, const WalkConfig& cfg,
                                  FlopCounter* flops = nullptr);

// Same walk process, but deposits are recorded only at anchor nodes (sorted,
// distinct) and the final rescale is N/(K*m) instead of 1/m.
SignatureVector compute_signature_anchored(const WalkMatrix& u, NodeId source,
                                           const WalkConfig& cfg,
                                           std::span<const NodeId> anchors,
                                           FlopCounter* flops = nullptr);

// Row-sparse stack of signature vectors, one row per node. Rows are computed
// independently; for a fixed master seed the result is bit-identical
// regardless of thread count because every (node, walk) pair owns a derived
// RNG stream.
class FeatureMatrix {
public:
    FeatureMatrix() = default;

    [[nodiscard]] NodeId size() const noexcept { return n_; }
    [[nodiscard]] std::int64_t nnz() const noexcept {
        return static_cast<std::int64_t>(cols_.size());
    }
    [[nodiscard]] std::span<const NodeId> row_cols(NodeId i) const {
        return {cols_.data() + offsets_[i], cols_.data() + offsets_[i + 1]};
    }
    [[nodiscard]] std::span<const double> row_vals(NodeId i) const {
        return {vals_.data() + offsets_[i], vals_.data() + offsets_[i + 1]};
    }

    // <row i of this, row j of other>
    [[nodiscard]] double row_dot(NodeId i, const FeatureMatrix& other, NodeId j) const;

    struct Meta {
        int walks_per_node = 0;
        double p_term = 0.0;
        SamplerKind sampler = SamplerKind::Uniform;
        std::uint64_t seed = 0;
        NodeId anchors_k = 0;  // 0 when not anchored
        std::int64_t steps_taken = 0;
        std::int64_t truncated_walks = 0;

        bool operator==(const Meta&) const = default;
    };
    [[nodiscard]] const Meta& meta() const noexcept { return meta_; }

    bool operator==(const FeatureMatrix&) const = default;

    void serialize(std::ostream& out) const;
    static FeatureMatrix parse(std::istream& in);

    static FeatureMatrix assemble(NodeId n, std::vector<SignatureVector> rows, Meta meta);

private:
    NodeId n_ = 0;
    std::vector<std::int64_t> offsets_;
    std::vector<NodeId> cols_;
    std::vector<double> vals_;
    Meta meta_;
};

FeatureMatrix compute_feature_matrix(const WalkMatrix& u, const WalkConfig& cfg,
                                     FlopCounter* flops = nullptr);
FeatureMatrix compute_feature_matrix_anchored(const WalkMatrix& u, const WalkConfig& cfg,
                                              std::span<const NodeId> anchors,
                                              FlopCounter* flops = nullptr);

}  // namespace grf
