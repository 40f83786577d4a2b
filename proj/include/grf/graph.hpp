#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace grf {

using NodeId = std::int32_t;

// Undirected weighted graph in canonical CSR form: neighbor lists sorted by
// node id, every edge stored in both directions with the same weight, no
// self-loops, strictly positive weights. Canonical form makes equality and
// serialization bit-exact. Immutable after construction.
class Graph {
public:
    struct Edge {
        NodeId u;
        NodeId v;
        double w;
    };

    Graph() = default;

    // Validates and canonicalizes an edge list (given once per unordered
    // pair). Throws std::invalid_argument on self-loops, duplicates or
    // non-positive weights.
    static Graph from_edges(NodeId n, const std::vector<Edge>& edges);

    [[nodiscard]] NodeId node_count() const noexcept { return n_; }
    [[nodiscard]] std::int64_t edge_count() const noexcept {
        return static_cast<std::int64_t>(neighbors_.size()) / 2;
    }

    [[nodiscard]] std::span<const NodeId> neighbors(NodeId v) const {
        return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
    }
    [[nodiscard]] std::span<const double> weights(NodeId v) const {
        return {weights_.data() + offsets_[v], weights_.data() + offsets_[v + 1]};
    }
    [[nodiscard]] int degree(NodeId v) const {
        return static_cast<int>(offsets_[v + 1] - offsets_[v]);
    }

    // Sum of incident edge weights; 0 for an isolated vertex.
    [[nodiscard]] double weighted_degree(NodeId v) const;

    [[nodiscard]] const std::vector<std::int64_t>& offsets() const noexcept { return offsets_; }

    bool operator==(const Graph& other) const = default;

private:
    void check_node(NodeId v) const;

    NodeId n_ = 0;
    std::vector<std::int64_t> offsets_;  // n+1
    std::vector<NodeId> neighbors_;      // 2e, sorted within each row
    std::vector<double> weights_;        // parallel to neighbors_
};

// General square sparse matrix in CSR form (diagonal entries allowed).
// Used for the normalized Laplacian and the regularized operators built
// from it.
struct SparseMatrix {
    NodeId n = 0;
    std::vector<std::int64_t> offsets;
    std::vector<NodeId> cols;
    std::vector<double> vals;

    [[nodiscard]] std::int64_t nnz() const noexcept {
        return static_cast<std::int64_t>(vals.size());
    }

    // y = M x; one counted multiply per stored entry.
    void matvec(std::span<const double> x, std::span<double> y,
                class FlopCounter* flops = nullptr) const;
};

// Symmetric nonnegative walk matrix U sharing the Graph CSR layout, plus the
// scale lambda with lambda * (I - U) equal to the regularized operator it was
// built from. Spectral radius below 1 whenever built by build_u_matrix.
class WalkMatrix {
public:
    WalkMatrix() = default;
    WalkMatrix(Graph structure, double scale, bool laplacian_derived)
        : graph_(std::move(structure)), scale_(scale), laplacian_derived_(laplacian_derived) {
        init_row_sums();
    }

    [[nodiscard]] NodeId node_count() const noexcept { return graph_.node_count(); }
    [[nodiscard]] const Graph& structure() const noexcept { return graph_; }
    [[nodiscard]] double scale() const noexcept { return scale_; }
    [[nodiscard]] bool laplacian_derived() const noexcept { return laplacian_derived_; }

    [[nodiscard]] std::span<const NodeId> neighbors(NodeId v) const { return graph_.neighbors(v); }
    [[nodiscard]] std::span<const double> values(NodeId v) const { return graph_.weights(v); }
    [[nodiscard]] int degree(NodeId v) const { return graph_.degree(v); }
    [[nodiscard]] double row_sum(NodeId v) const { return row_sums_[v]; }

    [[nodiscard]] double infinity_norm() const;

private:
    void init_row_sums();

    Graph graph_;
    double scale_ = 1.0;
    bool laplacian_derived_ = false;
    std::vector<double> row_sums_;
};

struct SpectralRadiusReport {
    double power_estimate = 0.0;   // lower-biased estimate from power iteration
    double gershgorin_bound = 0.0; // max absolute row sum, always >= rho
    double certified_bound = 0.0;  // sigma^2/(sigma^2+1) when Laplacian-derived, else inf
};

// Parses "i j [w]" lines, '#' comments, 0-indexed ids. With remap=true,
// arbitrary nonnegative integer labels are compacted to 0..N-1 and the
// mapping (sorted original labels) is returned through label_map.
Graph load_edge_list(std::istream& in, bool remap = false,
                     std::vector<std::int64_t>* label_map = nullptr);

// Canonical serialization: a "# nodes N" header (so trailing isolated
// vertices survive), then "u v w" per edge (u < v), sorted lexicographically,
// weights with 17 significant digits. load_edge_list of the output rebuilds
// an identical graph.
void serialize_edge_list(const Graph& g, std::ostream& out);

// G(n, p) with unit weights; each unordered pair drawn independently.
// Bit-deterministic for a fixed (n, p, seed).
Graph generate_erdos_renyi(NodeId n, double p, std::uint64_t seed);

// Complete graph on n nodes, unit weights.
Graph generate_complete(NodeId n);

// Symmetrically normalized Laplacian: unit diagonal,
// -W(v,w)/sqrt(deg_W(v) deg_W(w)) on edges. Isolated vertices contribute a
// bare 1 on the diagonal.
SparseMatrix normalized_laplacian(const Graph& g);

// Walk matrix with u_{v,w} = (sigma2/(sigma2+1)) W(v,w)/sqrt(deg_W(v) deg_W(w))
// and scale sigma2+1. Throws on sigma2 <= 0.
WalkMatrix build_u_matrix(const Graph& g, double sigma2);

// Regularized operator lambda*(I - U) in CSR form (equals I + sigma2*L for
// Laplacian-derived U).
SparseMatrix regularized_operator(const WalkMatrix& u);

SpectralRadiusReport spectral_radius_report(const WalkMatrix& u, int iterations,
                                            std::uint64_t seed);

}  // namespace grf
