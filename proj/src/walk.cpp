#include "grf/walk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "grf/flops.hpp"
#include "grf/rng.hpp"

namespace grf {

namespace {

constexpr std::uint64_t kWalkStream = 0x77616c6bull;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

struct Draw {
    std::size_t index;  // position within the neighbor row of v
    double probability;
};

Draw draw_neighbor(const WalkMatrix& u, NodeId v, const EdgeHistory& history,
                   const WalkConfig& cfg, Rng& rng) {
    const auto nbrs = u.neighbors(v);
    const auto vals = u.values(v);
    switch (cfg.sampler) {
        case SamplerKind::Uniform: {
            const auto k = static_cast<std::size_t>(rng.bounded(nbrs.size()));
            return {k, 1.0 / static_cast<double>(nbrs.size())};
        }
        case SamplerKind::WeightProportional: {
            const double total = u.row_sum(v);
            const double target = rng.uniform() * total;
            double acc = 0.0;
            std::size_t k = 0;
            for (; k + 1 < vals.size(); ++k) {
                acc += vals[k];
                if (target < acc) break;
            }
            return {k, vals[k] / total};
        }
        case SamplerKind::Reinforced: {
            static thread_local std::vector<double> f;
            f.resize(nbrs.size());
            double total = 0.0;
            for (std::size_t k = 0; k < nbrs.size(); ++k) {
                const double n = static_cast<double>(history.count(v, nbrs[k]));
                f[k] = cfg.reinforced_alpha == 1.0
                           ? 1.0 / (1.0 + n)
                           : std::pow(1.0 + n, -cfg.reinforced_alpha);
                total += f[k];
            }
            const double target = rng.uniform() * total;
            double acc = 0.0;
            std::size_t k = 0;
            for (; k + 1 < f.size(); ++k) {
                acc += f[k];
                if (target < acc) break;
            }
            return {k, f[k] / total};
        }
    }
    fail("unknown sampler");
}

// Workspace shared by the walks of one worker; scratch/touched implement the
// sparse load accumulator over the full node range.
struct WalkScratch {
    std::vector<double> loads;
    std::vector<NodeId> touched;

    explicit WalkScratch(NodeId n) : loads(static_cast<std::size_t>(n), 0.0) {}

    void deposit(NodeId node, double amount) {
        if (loads[node] == 0.0) touched.push_back(node);
        loads[node] += amount;
    }
};

SignatureVector run_walks(const WalkMatrix& u, NodeId source, const WalkConfig& cfg,
                          const std::vector<char>* anchor_mask, double rescale,
                          WalkScratch& scratch, FlopCounter* flops) {
    SignatureVector sig;
    sig.owner = source;
    sig.walks_used = cfg.walks_per_node;

    scratch.touched.clear();
    const double one_minus_p = 1.0 - cfg.p_term;
    EdgeHistory history;
    const bool track_history = cfg.sampler == SamplerKind::Reinforced;

    for (int walk = 0; walk < cfg.walks_per_node; ++walk) {
        Rng rng(derive_seed(cfg.master_seed, kWalkStream, static_cast<std::uint64_t>(source),
                            static_cast<std::uint64_t>(walk)));
        double load = 1.0;
        NodeId v = source;
        if (anchor_mask == nullptr || (*anchor_mask)[source])
            scratch.deposit(source, 1.0);
        if (u.degree(source) == 0) continue;  // no transition possible

        std::int64_t steps = 0;
        while (!rng.bernoulli(cfg.p_term)) {
            if (steps >= cfg.max_steps) {
                ++sig.truncated_walks;
                break;
            }
            const Draw draw = draw_neighbor(u, v, history, cfg, rng);
            const NodeId w = u.neighbors(v)[draw.index];
            load *= u.values(v)[draw.index] / (draw.probability * one_minus_p);
            if (anchor_mask == nullptr || (*anchor_mask)[w]) scratch.deposit(w, load);
            if (track_history) history.add(v, w);
            v = w;
            ++steps;
        }
        sig.steps_taken += steps;
    }

    std::sort(scratch.touched.begin(), scratch.touched.end());
    sig.entries.reserve(scratch.touched.size());
    const bool scale = rescale != 1.0;
    for (NodeId node : scratch.touched) {
        sig.entries.emplace_back(node, scale ? scratch.loads[node] * rescale
                                             : scratch.loads[node]);
        scratch.loads[node] = 0.0;
    }
    count_flops(flops, 2 * static_cast<std::uint64_t>(sig.steps_taken) +
                           (scale ? sig.entries.size() : 0));
    return sig;
}

void validate_anchors(const WalkMatrix& u, std::span<const NodeId> anchors) {
    if (anchors.empty()) fail("anchor set must be nonempty");
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        if (anchors[k] < 0 || anchors[k] >= u.node_count()) fail("anchor out of range");
        if (k > 0 && anchors[k] <= anchors[k - 1]) fail("anchors must be sorted and distinct");
    }
}

std::vector<char> anchor_mask_of(const WalkMatrix& u, std::span<const NodeId> anchors) {
    std::vector<char> mask(static_cast<std::size_t>(u.node_count()), 0);
    for (NodeId a : anchors) mask[a] = 1;
    return mask;
}

FeatureMatrix compute_rows(const WalkMatrix& u, const WalkConfig& cfg,
                           const std::vector<char>* anchor_mask, double rescale,
                           NodeId anchors_k, FlopCounter* flops) {
    cfg.validate();
    const NodeId n = u.node_count();
    std::vector<SignatureVector> rows(static_cast<std::size_t>(n));

    int workers = cfg.threads == 0
                      ? static_cast<int>(std::thread::hardware_concurrency())
                      : cfg.threads;
    workers = std::max(1, std::min<int>(workers, n == 0 ? 1 : n));

    std::atomic<NodeId> next{0};
    std::atomic<std::uint64_t> flop_total{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto work = [&] {
        try {
            WalkScratch scratch(n);
            FlopCounter local;
            while (true) {
                const NodeId i = next.fetch_add(1);
                if (i >= n) break;
                rows[i] = run_walks(u, i, cfg, anchor_mask, rescale, scratch,
                                    flops != nullptr ? &local : nullptr);
            }
            flop_total.fetch_add(local.multiplies());
        } catch (...) {
            const std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    count_flops(flops, flop_total.load());

    FeatureMatrix::Meta meta;
    meta.walks_per_node = cfg.walks_per_node;
    meta.p_term = cfg.p_term;
    meta.sampler = cfg.sampler;
    meta.seed = cfg.master_seed;
    meta.anchors_k = anchors_k;
    return FeatureMatrix::assemble(n, std::move(rows), meta);
}

}  // namespace

std::string sampler_name(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::Uniform: return "uniform";
        case SamplerKind::WeightProportional: return "weight";
        case SamplerKind::Reinforced: return "reinforced";
    }
    return "unknown";
}

SamplerKind sampler_from_name(const std::string& name) {
    if (name == "uniform") return SamplerKind::Uniform;
    if (name == "weight") return SamplerKind::WeightProportional;
    if (name == "reinforced") return SamplerKind::Reinforced;
    fail("unknown sampler name: " + name);
}

void WalkConfig::validate() const {
    if (!(p_term > 0.0 && p_term <= 1.0)) fail("p_term must lie in (0, 1]");
    if (walks_per_node < 1) fail("walks_per_node must be >= 1");
    if (max_steps < 1) fail("max_steps must be >= 1");
    if (!(reinforced_alpha > 0.0)) fail("reinforced_alpha must be positive");
    if (threads < 0) fail("threads must be >= 0");
}

std::pair<NodeId, double> sample_neighbor(const WalkMatrix& u, NodeId v,
                                          const EdgeHistory& history, const WalkConfig& cfg,
                                          Rng& rng) {
    if (v < 0 || v >= u.node_count()) fail("node out of range");
    if (u.degree(v) == 0) fail("sample_neighbor called on isolated vertex");
    const Draw draw = draw_neighbor(u, v, history, cfg, rng);
    return {u.neighbors(v)[draw.index], draw.probability};
}

double SignatureVector::value(NodeId node) const {
    const auto it = std::lower_bound(entries.begin(), entries.end(), node,
                                     [](const auto& e, NodeId x) { return e.first < x; });
    return (it != entries.end() && it->first == node) ? it->second : 0.0;
}

double signature_dot(const SignatureVector& a, const SignatureVector& b) {
    double sum = 0.0;
    auto ia = a.entries.begin();
    auto ib = b.entries.begin();
    while (ia != a.entries.end() && ib != b.entries.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            sum += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return sum;
}

SignatureVector compute_signature(const WalkMatrix& u, NodeId source, const WalkConfig& cfg,
                                  FlopCounter* flops) {
    cfg.validate();
    if (source < 0 || source >= u.node_count()) fail("source node out of range");
    WalkScratch scratch(u.node_count());
    return run_walks(u, source, cfg, nullptr, 1.0 / cfg.walks_per_node, scratch, flops);
}

SignatureVector compute_signature_anchored(const WalkMatrix& u, NodeId source,
                                           const WalkConfig& cfg,
                                           std::span<const NodeId> anchors,
                                           FlopCounter* flops) {
    cfg.validate();
    if (source < 0 || source >= u.node_count()) fail("source node out of range");
    validate_anchors(u, anchors);
    const std::vector<char> mask = anchor_mask_of(u, anchors);
    const double rescale = static_cast<double>(u.node_count()) /
                           (static_cast<double>(anchors.size()) * cfg.walks_per_node);
    WalkScratch scratch(u.node_count());
    return run_walks(u, source, cfg, &mask, rescale, scratch, flops);
}

FeatureMatrix compute_feature_matrix(const WalkMatrix& u, const WalkConfig& cfg,
                                     FlopCounter* flops) {
    return compute_rows(u, cfg, nullptr, 1.0 / cfg.walks_per_node, 0, flops);
}

FeatureMatrix compute_feature_matrix_anchored(const WalkMatrix& u, const WalkConfig& cfg,
                                              std::span<const NodeId> anchors,
                                              FlopCounter* flops) {
    validate_anchors(u, anchors);
    const std::vector<char> mask = anchor_mask_of(u, anchors);
    const double rescale = static_cast<double>(u.node_count()) /
                           (static_cast<double>(anchors.size()) * cfg.walks_per_node);
    return compute_rows(u, cfg, &mask, rescale, static_cast<NodeId>(anchors.size()), flops);
}

double FeatureMatrix::row_dot(NodeId i, const FeatureMatrix& other, NodeId j) const {
    const auto ci = row_cols(i);
    const auto vi = row_vals(i);
    const auto cj = other.row_cols(j);
    const auto vj = other.row_vals(j);
    double sum = 0.0;
    std::size_t a = 0, b = 0;
    while (a < ci.size() && b < cj.size()) {
        if (ci[a] < cj[b]) {
            ++a;
        } else if (cj[b] < ci[a]) {
            ++b;
        } else {
            sum += vi[a] * vj[b];
            ++a;
            ++b;
        }
    }
    return sum;
}

FeatureMatrix FeatureMatrix::assemble(NodeId n, std::vector<SignatureVector> rows, Meta meta) {
    FeatureMatrix fm;
    fm.n_ = n;
    fm.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (NodeId i = 0; i < n; ++i)
        fm.offsets_[i + 1] = fm.offsets_[i] + static_cast<std::int64_t>(rows[i].entries.size());
    fm.cols_.resize(static_cast<std::size_t>(fm.offsets_[n]));
    fm.vals_.resize(static_cast<std::size_t>(fm.offsets_[n]));
    for (NodeId i = 0; i < n; ++i) {
        std::int64_t k = fm.offsets_[i];
        for (const auto& [node, value] : rows[i].entries) {
            fm.cols_[k] = node;
            fm.vals_[k] = value;
            ++k;
        }
        meta.steps_taken += rows[i].steps_taken;
        meta.truncated_walks += rows[i].truncated_walks;
    }
    fm.meta_ = meta;
    return fm;
}

void FeatureMatrix::serialize(std::ostream& out) const {
    char buf[48];
    out << "# grf-features v1\n";
    std::snprintf(buf, sizeof(buf), "%.17g", meta_.p_term);
    out << "# n=" << n_ << " m=" << meta_.walks_per_node << " p_term=" << buf
        << " sampler=" << sampler_name(meta_.sampler) << " seed=" << meta_.seed
        << " anchors_k=" << meta_.anchors_k << " steps=" << meta_.steps_taken
        << " truncated=" << meta_.truncated_walks << "\n";
    for (NodeId i = 0; i < n_; ++i) {
        const auto cols = row_cols(i);
        const auto vals = row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", vals[k]);
            out << i << ' ' << cols[k] << ' ' << buf << '\n';
        }
    }
}

FeatureMatrix FeatureMatrix::parse(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "# grf-features v1")
        fail("not a grf feature matrix file");
    if (!std::getline(in, line)) fail("missing feature matrix header");

    Meta meta;
    NodeId n = 0;
    {
        std::istringstream hs(line);
        std::string token;
        hs >> token;  // '#'
        std::string sampler;
        while (hs >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos) fail("malformed header token: " + token);
            const std::string key = token.substr(0, eq);
            const std::string value = token.substr(eq + 1);
            if (key == "n") n = static_cast<NodeId>(std::stoll(value));
            else if (key == "m") meta.walks_per_node = std::stoi(value);
            else if (key == "p_term") meta.p_term = std::stod(value);
            else if (key == "sampler") meta.sampler = sampler_from_name(value);
            else if (key == "seed") meta.seed = std::stoull(value);
            else if (key == "anchors_k") meta.anchors_k = static_cast<NodeId>(std::stoll(value));
            else if (key == "steps") meta.steps_taken = std::stoll(value);
            else if (key == "truncated") meta.truncated_walks = std::stoll(value);
            else fail("unknown header key: " + key);
        }
    }

    std::vector<SignatureVector> rows(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) rows[i].owner = i;
    int line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        NodeId i, j;
        double v;
        if (!(ls >> i >> j >> v)) fail("line " + std::to_string(line_no) + ": malformed triplet");
        if (i < 0 || i >= n || j < 0 || j >= n)
            fail("line " + std::to_string(line_no) + ": index out of range");
        if (!rows[i].entries.empty() && rows[i].entries.back().first >= j)
            fail("line " + std::to_string(line_no) + ": triplets must be sorted by (i, j)");
        rows[i].entries.emplace_back(j, v);
    }
    // assemble() re-aggregates step counters from rows; restore header values.
    const auto steps = meta.steps_taken;
    const auto truncated = meta.truncated_walks;
    meta.steps_taken = 0;
    meta.truncated_walks = 0;
    FeatureMatrix fm = assemble(n, std::move(rows), meta);
    fm.meta_.steps_taken = steps;
    fm.meta_.truncated_walks = truncated;
    return fm;
}

}  // namespace grf
