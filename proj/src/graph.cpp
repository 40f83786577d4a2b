#include "grf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "grf/flops.hpp"
#include "grf/rng.hpp"

namespace grf {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string format_weight(double w) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", w);
    return buf;
}

}  // namespace

void Graph::check_node(NodeId v) const {
    if (v < 0 || v >= n_) fail("node id out of range: " + std::to_string(v));
}

double Graph::weighted_degree(NodeId v) const {
    check_node(v);
    double sum = 0.0;
    for (double w : weights(v)) sum += w;
    return sum;
}

Graph Graph::from_edges(NodeId n, const std::vector<Edge>& edges) {
    if (n < 0) fail("negative node count");
    for (const Edge& e : edges) {
        if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
            fail("edge endpoint out of range: " + std::to_string(e.u) + " " + std::to_string(e.v));
        if (e.u == e.v) fail("self-loop at node " + std::to_string(e.u));
        if (!(e.w > 0.0)) fail("non-positive edge weight on edge " + std::to_string(e.u) + " " +
                               std::to_string(e.v));
    }

    std::vector<Edge> canonical(edges);
    for (Edge& e : canonical)
        if (e.u > e.v) std::swap(e.u, e.v);
    std::sort(canonical.begin(), canonical.end(), [](const Edge& a, const Edge& b) {
        return a.u < b.u || (a.u == b.u && a.v < b.v);
    });
    for (std::size_t i = 1; i < canonical.size(); ++i) {
        if (canonical[i].u == canonical[i - 1].u && canonical[i].v == canonical[i - 1].v)
            fail("duplicate edge " + std::to_string(canonical[i].u) + " " +
                 std::to_string(canonical[i].v));
    }

    Graph g;
    g.n_ = n;
    g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const Edge& e : canonical) {
        ++g.offsets_[static_cast<std::size_t>(e.u) + 1];
        ++g.offsets_[static_cast<std::size_t>(e.v) + 1];
    }
    for (NodeId v = 0; v < n; ++v) g.offsets_[v + 1] += g.offsets_[v];

    g.neighbors_.resize(canonical.size() * 2);
    g.weights_.resize(canonical.size() * 2);
    std::vector<std::int64_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const Edge& e : canonical) {
        g.neighbors_[cursor[e.u]] = e.v;
        g.weights_[cursor[e.u]++] = e.w;
        g.neighbors_[cursor[e.v]] = e.u;
        g.weights_[cursor[e.v]++] = e.w;
    }
    // Rows come out sorted because canonical edges are processed in
    // lexicographic order and each row receives strictly increasing ids.
    return g;
}

Graph load_edge_list(std::istream& in, bool remap, std::vector<std::int64_t>* label_map) {
    struct RawEdge {
        std::int64_t u, v;
        double w;
        int line;
    };
    std::vector<RawEdge> raw;
    std::string line;
    int line_no = 0;
    std::int64_t max_label = -1;
    std::int64_t declared_nodes = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // "# nodes N" declares trailing isolated vertices that edges alone
        // cannot express
        if (line.rfind("# nodes ", 0) == 0) {
            declared_nodes =
                std::max<std::int64_t>(declared_nodes, std::stoll(line.substr(8)));
            continue;
        }
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::int64_t u, v;
        if (!(ls >> u)) continue;  // blank or comment-only line
        double w = 1.0;
        if (!(ls >> v)) fail("line " + std::to_string(line_no) + ": expected two node ids");
        if (ls >> w) {
            std::string rest;
            if (ls >> rest) fail("line " + std::to_string(line_no) + ": trailing tokens");
        } else if (!ls.eof()) {
            fail("line " + std::to_string(line_no) + ": malformed weight");
        }
        if (u < 0 || v < 0) fail("line " + std::to_string(line_no) + ": negative node id");
        if (u == v) fail("line " + std::to_string(line_no) + ": self-loop");
        if (!(w > 0.0)) fail("line " + std::to_string(line_no) + ": non-positive weight");
        raw.push_back({u, v, w, line_no});
        max_label = std::max({max_label, u, v});
    }

    std::vector<Graph::Edge> edges;
    edges.reserve(raw.size());
    NodeId n = 0;
    if (remap) {
        std::vector<std::int64_t> labels;
        labels.reserve(raw.size() * 2);
        for (const RawEdge& e : raw) {
            labels.push_back(e.u);
            labels.push_back(e.v);
        }
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
        std::unordered_map<std::int64_t, NodeId> index;
        index.reserve(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i)
            index.emplace(labels[i], static_cast<NodeId>(i));
        for (const RawEdge& e : raw)
            edges.push_back({index.at(e.u), index.at(e.v), e.w});
        n = static_cast<NodeId>(labels.size());
        if (label_map != nullptr) *label_map = std::move(labels);
    } else {
        if (max_label >= std::numeric_limits<NodeId>::max() ||
            declared_nodes > std::numeric_limits<NodeId>::max())
            fail("node id too large; use remap for sparse label spaces");
        for (const RawEdge& e : raw)
            edges.push_back({static_cast<NodeId>(e.u), static_cast<NodeId>(e.v), e.w});
        n = static_cast<NodeId>(std::max(max_label + 1, declared_nodes));
        if (label_map != nullptr) {
            label_map->resize(static_cast<std::size_t>(n));
            for (NodeId v = 0; v < n; ++v) (*label_map)[v] = v;
        }
    }

    try {
        return Graph::from_edges(n, edges);
    } catch (const std::invalid_argument& err) {
        // Re-run detection to attribute duplicates to a source line.
        std::unordered_map<std::uint64_t, int> seen;
        for (const RawEdge& e : raw) {
            const std::uint64_t a = static_cast<std::uint64_t>(std::min(e.u, e.v));
            const std::uint64_t b = static_cast<std::uint64_t>(std::max(e.u, e.v));
            const std::uint64_t key = (a << 32) | b;
            auto [it, inserted] = seen.emplace(key, e.line);
            if (!inserted)
                fail("line " + std::to_string(e.line) + ": duplicate edge (first at line " +
                     std::to_string(it->second) + ")");
        }
        throw err;
    }
}

void serialize_edge_list(const Graph& g, std::ostream& out) {
    out << "# nodes " << g.node_count() << '\n';
    for (NodeId u = 0; u < g.node_count(); ++u) {
        const auto nbrs = g.neighbors(u);
        const auto ws = g.weights(u);
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
            if (nbrs[k] > u)
                out << u << ' ' << nbrs[k] << ' ' << format_weight(ws[k]) << '\n';
        }
    }
}

Graph generate_erdos_renyi(NodeId n, double p, std::uint64_t seed) {
    if (p < 0.0 || p > 1.0) fail("edge probability must lie in [0, 1]");
    if (n < 0) fail("negative node count");
    Rng rng(derive_seed(seed, 0x6572646f73ull));
    std::vector<Graph::Edge> edges;
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v)
            if (rng.bernoulli(p)) edges.push_back({u, v, 1.0});
    return Graph::from_edges(n, edges);
}

Graph generate_complete(NodeId n) {
    std::vector<Graph::Edge> edges;
    edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v) edges.push_back({u, v, 1.0});
    return Graph::from_edges(n, edges);
}

void SparseMatrix::matvec(std::span<const double> x, std::span<double> y,
                          FlopCounter* flops) const {
    if (x.size() != static_cast<std::size_t>(n) || y.size() != static_cast<std::size_t>(n))
        fail("matvec dimension mismatch");
    for (NodeId i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::int64_t k = offsets[i]; k < offsets[i + 1]; ++k)
            sum += vals[k] * x[cols[k]];
        y[i] = sum;
    }
    count_flops(flops, static_cast<std::uint64_t>(nnz()));
}

void WalkMatrix::init_row_sums() {
    row_sums_.resize(static_cast<std::size_t>(graph_.node_count()));
    for (NodeId v = 0; v < graph_.node_count(); ++v) {
        double sum = 0.0;
        for (double u : graph_.weights(v)) sum += u;
        row_sums_[v] = sum;
    }
}

double WalkMatrix::infinity_norm() const {
    double best = 0.0;
    for (double s : row_sums_) best = std::max(best, s);
    return best;
}

SparseMatrix normalized_laplacian(const Graph& g) {
    const NodeId n = g.node_count();
    std::vector<double> deg(static_cast<std::size_t>(n));
    for (NodeId v = 0; v < n; ++v) deg[v] = g.weighted_degree(v);

    SparseMatrix lap;
    lap.n = n;
    lap.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
    for (NodeId v = 0; v < n; ++v)
        lap.offsets[v + 1] = lap.offsets[v] + 1 + g.degree(v);
    lap.cols.resize(lap.offsets[n]);
    lap.vals.resize(lap.offsets[n]);
    for (NodeId v = 0; v < n; ++v) {
        std::int64_t k = lap.offsets[v];
        const auto nbrs = g.neighbors(v);
        const auto ws = g.weights(v);
        std::size_t j = 0;
        for (; j < nbrs.size() && nbrs[j] < v; ++j, ++k) {
            lap.cols[k] = nbrs[j];
            lap.vals[k] = -ws[j] / std::sqrt(deg[v] * deg[nbrs[j]]);
        }
        lap.cols[k] = v;
        lap.vals[k] = 1.0;
        ++k;
        for (; j < nbrs.size(); ++j, ++k) {
            lap.cols[k] = nbrs[j];
            lap.vals[k] = -ws[j] / std::sqrt(deg[v] * deg[nbrs[j]]);
        }
    }
    return lap;
}

WalkMatrix build_u_matrix(const Graph& g, double sigma2) {
    if (!(sigma2 > 0.0)) fail("sigma2 must be positive");
    const NodeId n = g.node_count();
    std::vector<double> deg(static_cast<std::size_t>(n));
    for (NodeId v = 0; v < n; ++v) deg[v] = g.weighted_degree(v);

    const double front = sigma2 / (sigma2 + 1.0);
    std::vector<Graph::Edge> edges;
    edges.reserve(static_cast<std::size_t>(g.edge_count()));
    for (NodeId v = 0; v < n; ++v) {
        const auto nbrs = g.neighbors(v);
        const auto ws = g.weights(v);
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
            if (nbrs[k] > v)
                edges.push_back({v, nbrs[k], front * ws[k] / std::sqrt(deg[v] * deg[nbrs[k]])});
        }
    }
    return WalkMatrix(Graph::from_edges(n, edges), sigma2 + 1.0, true);
}

SparseMatrix regularized_operator(const WalkMatrix& u) {
    const NodeId n = u.node_count();
    const double lambda = u.scale();
    SparseMatrix a;
    a.n = n;
    a.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
    for (NodeId v = 0; v < n; ++v) a.offsets[v + 1] = a.offsets[v] + 1 + u.degree(v);
    a.cols.resize(a.offsets[n]);
    a.vals.resize(a.offsets[n]);
    for (NodeId v = 0; v < n; ++v) {
        std::int64_t k = a.offsets[v];
        const auto nbrs = u.neighbors(v);
        const auto uv = u.values(v);
        std::size_t j = 0;
        for (; j < nbrs.size() && nbrs[j] < v; ++j, ++k) {
            a.cols[k] = nbrs[j];
            a.vals[k] = -lambda * uv[j];
        }
        a.cols[k] = v;
        a.vals[k] = lambda;
        ++k;
        for (; j < nbrs.size(); ++j, ++k) {
            a.cols[k] = nbrs[j];
            a.vals[k] = -lambda * uv[j];
        }
    }
    return a;
}

SpectralRadiusReport spectral_radius_report(const WalkMatrix& u, int iterations,
                                            std::uint64_t seed) {
    if (iterations < 1) fail("iterations must be >= 1");
    const NodeId n = u.node_count();
    SpectralRadiusReport report;
    report.gershgorin_bound = u.infinity_norm();
    report.certified_bound = u.laplacian_derived()
                                 ? (u.scale() - 1.0) / u.scale()
                                 : std::numeric_limits<double>::infinity();
    if (n == 0) return report;

    Rng rng(derive_seed(seed, 0x73706563ull));
    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<double> y(static_cast<std::size_t>(n));
    for (double& xi : x) xi = rng.uniform() - 0.5;

    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        for (NodeId i = 0; i < n; ++i) {
            double sum = 0.0;
            const auto nbrs = u.neighbors(i);
            const auto uv = u.values(i);
            for (std::size_t k = 0; k < nbrs.size(); ++k) sum += uv[k] * x[nbrs[k]];
            y[i] = sum;
        }
        double norm_y = 0.0, norm_x = 0.0;
        for (NodeId i = 0; i < n; ++i) {
            norm_y += y[i] * y[i];
            norm_x += x[i] * x[i];
        }
        if (norm_y == 0.0 || norm_x == 0.0) {
            estimate = 0.0;
            break;
        }
        estimate = std::sqrt(norm_y / norm_x);
        const double inv = 1.0 / std::sqrt(norm_y);
        for (NodeId i = 0; i < n; ++i) x[i] = y[i] * inv;
    }
    report.power_estimate = estimate;
    return report;
}

}  // namespace grf
