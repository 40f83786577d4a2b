#include "grf/estimators.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "grf/compress.hpp"
#include "grf/flops.hpp"
#include "grf/rng.hpp"

namespace grf {

namespace {

constexpr std::uint64_t kCopyStream = 0x636f7079ull;
constexpr std::uint64_t kAnchorSeedStream = 0x616e63ull;
constexpr std::uint64_t kJltSeedStream = 0x6a6c74ull;
constexpr std::uint64_t kStageStream = 0x73746167ull;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

using Factor = DecompositionChain::Factor;

// left-multiplication by a general CSR matrix into a sparse accumulator row
RowSparseMatrix sparse_times_row_sparse(const SparseMatrix& a, const RowSparseMatrix& b,
                                        FlopCounter* flops) {
    if (a.n != b.row_count) fail("sparse product dimension mismatch");
    RowSparseMatrix out;
    out.row_count = a.n;
    out.col_count = b.col_count;
    out.offsets.assign(static_cast<std::size_t>(a.n) + 1, 0);

    std::vector<double> acc(static_cast<std::size_t>(b.col_count), 0.0);
    std::vector<NodeId> touched;
    std::uint64_t multiplies = 0;

    std::vector<std::vector<std::pair<NodeId, double>>> rows(static_cast<std::size_t>(a.n));
    for (NodeId i = 0; i < a.n; ++i) {
        touched.clear();
        for (std::int64_t ka = a.offsets[i]; ka < a.offsets[i + 1]; ++ka) {
            const NodeId k = a.cols[ka];
            const double aik = a.vals[ka];
            for (std::int64_t kb = b.offsets[k]; kb < b.offsets[k + 1]; ++kb) {
                const NodeId j = b.cols[kb];
                if (acc[j] == 0.0) touched.push_back(j);
                acc[j] += aik * b.vals[kb];
                ++multiplies;
            }
        }
        std::sort(touched.begin(), touched.end());
        auto& row = rows[i];
        row.reserve(touched.size());
        for (NodeId j : touched) {
            row.emplace_back(j, acc[j]);
            acc[j] = 0.0;
        }
    }
    for (NodeId i = 0; i < a.n; ++i)
        out.offsets[i + 1] = out.offsets[i] + static_cast<std::int64_t>(rows[i].size());
    out.cols.resize(static_cast<std::size_t>(out.offsets[a.n]));
    out.vals.resize(static_cast<std::size_t>(out.offsets[a.n]));
    for (NodeId i = 0; i < a.n; ++i) {
        std::int64_t k = out.offsets[i];
        for (const auto& [j, v] : rows[i]) {
            out.cols[k] = j;
            out.vals[k] = v;
            ++k;
        }
    }
    count_flops(flops, multiplies);
    return out;
}

Eigen::MatrixXd sparse_times_dense(const SparseMatrix& a, const Eigen::MatrixXd& b,
                                   FlopCounter* flops) {
    if (a.n != b.rows()) fail("sparse product dimension mismatch");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.n, b.cols());
    for (NodeId i = 0; i < a.n; ++i)
        for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k)
            out.row(i) += a.vals[k] * b.row(a.cols[k]);
    count_flops(flops, static_cast<std::uint64_t>(a.nnz()) * b.cols());
    return out;
}

Eigen::MatrixXd row_sparse_to_dense(const RowSparseMatrix& m) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.row_count, m.col_count);
    for (NodeId i = 0; i < m.row_count; ++i)
        for (std::int64_t k = m.offsets[i]; k < m.offsets[i + 1]; ++k)
            out(i, m.cols[k]) = m.vals[k];
    return out;
}

// One estimator copy: a feature matrix, optionally anchored, scaled, and
// optionally JLT-projected into a dense factor.
struct EstimatorCopy {
    bool dense = false;
    RowSparseMatrix sparse;
    Eigen::MatrixXd dense_mat;

    [[nodiscard]] Factor as_factor(bool transposed) const {
        return dense ? Factor::dense_factor(dense_mat, transposed)
                     : Factor::sparse_factor(sparse, transposed);
    }
};

EstimatorCopy build_copy(const WalkMatrix& u, const GrfOptions& opts, int copy_index,
                         double value_scale, const AnchorSet* anchors,
                         const JltProjection* jlt, FlopCounter* flops) {
    WalkConfig cfg = opts.walk;
    cfg.master_seed = derive_seed(opts.walk.master_seed, kCopyStream,
                                  static_cast<std::uint64_t>(copy_index));

    const FeatureMatrix fm =
        anchors != nullptr ? compute_feature_matrix_anchored(u, cfg, anchors->nodes, flops)
                           : compute_feature_matrix(u, cfg, flops);

    EstimatorCopy out;
    if (jlt != nullptr) {
        out.dense = true;
        out.dense_mat = jlt->apply(fm);
        if (value_scale != 1.0) out.dense_mat *= value_scale;
    } else {
        out.sparse = RowSparseMatrix::from_features(fm, value_scale, flops);
    }
    return out;
}

struct CopyPair {
    EstimatorCopy first;
    EstimatorCopy second;
    std::unique_ptr<JltProjection> jlt;  // shared by both copies when enabled
};

CopyPair build_copy_pair(const Graph& g, double sigma2, const GrfOptions& opts,
                         FlopCounter* flops) {
    opts.walk.validate();
    if (opts.anchors_k < 0 || opts.anchors_k > g.node_count())
        fail("anchors_k out of range");
    if (opts.jlt_k < 0) fail("jlt_k must be >= 0");
    const WalkMatrix u = build_u_matrix(g, sigma2);

    CopyPair pair;
    if (opts.jlt_k > 0)
        pair.jlt = std::make_unique<JltProjection>(
            opts.jlt_k, g.node_count(), derive_seed(opts.walk.master_seed, kJltSeedStream));
    std::unique_ptr<AnchorSet> anchors;
    if (opts.anchors_k > 0)
        anchors = std::make_unique<AnchorSet>(
            sample_anchors(g.node_count(), opts.anchors_k,
                           derive_seed(opts.walk.master_seed, kAnchorSeedStream)));

    // Both copies record loads at one shared anchor set and each carries the
    // N/(K m) rescale; the second copy is folded by K/N so the pair's product
    // keeps a single N/K anchor correction and the joint estimate stays
    // unbiased over walks and anchor draws.
    const double scale = 1.0 / (sigma2 + 1.0);
    const double fold =
        anchors ? static_cast<double>(opts.anchors_k) / g.node_count() : 1.0;
    pair.first = build_copy(u, opts, 0, scale, anchors.get(), pair.jlt.get(), flops);
    pair.second = build_copy(u, opts, 1, scale * fold, anchors.get(), pair.jlt.get(), flops);
    return pair;
}

}  // namespace

RowSparseMatrix RowSparseMatrix::from_features(const FeatureMatrix& fm, double scale,
                                               FlopCounter* flops) {
    RowSparseMatrix out;
    out.row_count = fm.size();
    out.col_count = fm.size();
    out.offsets.assign(static_cast<std::size_t>(fm.size()) + 1, 0);
    out.cols.reserve(static_cast<std::size_t>(fm.nnz()));
    out.vals.reserve(static_cast<std::size_t>(fm.nnz()));
    for (NodeId i = 0; i < fm.size(); ++i) {
        const auto cols = fm.row_cols(i);
        const auto vals = fm.row_vals(i);
        out.offsets[i + 1] = out.offsets[i] + static_cast<std::int64_t>(cols.size());
        out.cols.insert(out.cols.end(), cols.begin(), cols.end());
        if (scale == 1.0) {
            out.vals.insert(out.vals.end(), vals.begin(), vals.end());
        } else {
            for (double v : vals) out.vals.push_back(v * scale);
        }
    }
    if (scale != 1.0) count_flops(flops, static_cast<std::uint64_t>(fm.nnz()));
    return out;
}

Eigen::Index DecompositionChain::Factor::rows() const {
    if (kind == Kind::Sparse)
        return transposed ? sparse.col_count : sparse.row_count;
    return transposed ? dense.cols() : dense.rows();
}

Eigen::Index DecompositionChain::Factor::cols() const {
    if (kind == Kind::Sparse)
        return transposed ? sparse.row_count : sparse.col_count;
    return transposed ? dense.rows() : dense.cols();
}

Factor DecompositionChain::Factor::sparse_factor(RowSparseMatrix m, bool transposed) {
    Factor f;
    f.kind = Kind::Sparse;
    f.transposed = transposed;
    f.sparse = std::move(m);
    return f;
}

Factor DecompositionChain::Factor::dense_factor(Eigen::MatrixXd m, bool transposed) {
    Factor f;
    f.kind = Kind::Dense;
    f.transposed = transposed;
    f.dense = std::move(m);
    return f;
}

DecompositionChain::DecompositionChain(std::vector<Factor> factors, bool symmetrized)
    : factors_(std::move(factors)), symmetrized_(symmetrized) {
    if (factors_.empty()) fail("chain needs at least one factor");
    for (std::size_t i = 0; i + 1 < factors_.size(); ++i)
        if (factors_[i].cols() != factors_[i + 1].rows())
            fail("chain factors are not conformable");
    if (factors_.front().rows() != factors_.back().cols())
        fail("chain product must be square");
    n_ = static_cast<NodeId>(factors_.front().rows());
}

namespace {

Eigen::VectorXd apply_factor(const Factor& f, const Eigen::VectorXd& x, bool flip,
                             FlopCounter* flops) {
    const bool transposed = f.transposed != flip;
    if (f.kind == Factor::Kind::Sparse) {
        const RowSparseMatrix& m = f.sparse;
        Eigen::VectorXd y;
        std::uint64_t multiplies = 0;
        if (!transposed) {
            y = Eigen::VectorXd::Zero(m.row_count);
            for (NodeId i = 0; i < m.row_count; ++i) {
                double sum = 0.0;
                for (std::int64_t k = m.offsets[i]; k < m.offsets[i + 1]; ++k)
                    sum += m.vals[k] * x(m.cols[k]);
                y(i) = sum;
            }
            multiplies = static_cast<std::uint64_t>(m.nnz());
        } else {
            y = Eigen::VectorXd::Zero(m.col_count);
            for (NodeId i = 0; i < m.row_count; ++i) {
                const double xi = x(i);
                if (xi == 0.0) continue;
                for (std::int64_t k = m.offsets[i]; k < m.offsets[i + 1]; ++k)
                    y(m.cols[k]) += m.vals[k] * xi;
                multiplies += static_cast<std::uint64_t>(m.offsets[i + 1] - m.offsets[i]);
            }
        }
        count_flops(flops, multiplies);
        return y;
    }
    count_flops(flops, static_cast<std::uint64_t>(f.dense.rows()) *
                           static_cast<std::uint64_t>(f.dense.cols()));
    return transposed ? Eigen::VectorXd(f.dense.transpose() * x)
                      : Eigen::VectorXd(f.dense * x);
}

}  // namespace

Eigen::VectorXd DecompositionChain::apply_product(const Eigen::VectorXd& x, bool transposed,
                                                  FlopCounter* flops) const {
    Eigen::VectorXd y = x;
    if (!transposed) {
        for (auto it = factors_.crbegin(); it != factors_.crend(); ++it)
            y = apply_factor(*it, y, false, flops);
    } else {
        for (const Factor& f : factors_) y = apply_factor(f, y, true, flops);
    }
    return y;
}

Eigen::VectorXd DecompositionChain::matvec(const Eigen::VectorXd& x, FlopCounter* flops) const {
    if (x.size() != n_) fail("matvec dimension mismatch");
    if (!symmetrized_) return apply_product(x, false, flops);
    Eigen::VectorXd y = apply_product(x, false, flops) + apply_product(x, true, flops);
    count_flops(flops, static_cast<std::uint64_t>(n_));
    return 0.5 * y;
}

Eigen::VectorXd DecompositionChain::diagonal(FlopCounter* flops) const {
    if (factors_.size() != 2) fail("diagonal requires a two-factor chain");
    const Factor& left = factors_[0];
    const Factor& right = factors_[1];
    // diag(L R)(i) = <row i of L, column i of R>; the symmetrized variant has
    // the same diagonal.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n_);
    std::uint64_t multiplies = 0;

    auto left_row = [&](NodeId i) -> Eigen::VectorXd {
        if (left.kind == Factor::Kind::Sparse && !left.transposed) {
            Eigen::VectorXd r = Eigen::VectorXd::Zero(left.cols());
            for (std::int64_t k = left.sparse.offsets[i]; k < left.sparse.offsets[i + 1]; ++k)
                r(left.sparse.cols[k]) = left.sparse.vals[k];
            return r;
        }
        if (left.kind == Factor::Kind::Dense)
            return left.transposed ? Eigen::VectorXd(left.dense.col(i))
                                   : Eigen::VectorXd(left.dense.row(i));
        fail("unsupported left factor layout for diagonal");
    };

    // fast path: both factors row-sparse with the right one transposed
    if (left.kind == Factor::Kind::Sparse && !left.transposed &&
        right.kind == Factor::Kind::Sparse && right.transposed) {
        const RowSparseMatrix& a = left.sparse;
        const RowSparseMatrix& b = right.sparse;
        for (NodeId i = 0; i < n_; ++i) {
            double sum = 0.0;
            std::int64_t ka = a.offsets[i], kb = b.offsets[i];
            while (ka < a.offsets[i + 1] && kb < b.offsets[i + 1]) {
                if (a.cols[ka] < b.cols[kb]) {
                    ++ka;
                } else if (b.cols[kb] < a.cols[ka]) {
                    ++kb;
                } else {
                    sum += a.vals[ka] * b.vals[kb];
                    ++multiplies;
                    ++ka;
                    ++kb;
                }
            }
            diag(i) = sum;
        }
        count_flops(flops, multiplies);
        return diag;
    }

    for (NodeId i = 0; i < n_; ++i) {
        const Eigen::VectorXd lrow = left_row(i);
        double sum = 0.0;
        if (right.kind == Factor::Kind::Sparse) {
            if (!right.transposed) fail("unsupported right factor layout for diagonal");
            for (std::int64_t k = right.sparse.offsets[i]; k < right.sparse.offsets[i + 1]; ++k) {
                sum += lrow(right.sparse.cols[k]) * right.sparse.vals[k];
                ++multiplies;
            }
        } else {
            const Eigen::VectorXd rcol = right.transposed ? Eigen::VectorXd(right.dense.row(i))
                                                          : Eigen::VectorXd(right.dense.col(i));
            sum = lrow.dot(rcol);
            multiplies += static_cast<std::uint64_t>(lrow.size());
        }
        diag(i) = sum;
    }
    count_flops(flops, multiplies);
    return diag;
}

Eigen::MatrixXd DecompositionChain::materialize() const {
    if (n_ > oracle::kDenseLimit) fail("chain too large to materialize");
    Eigen::MatrixXd prod;
    bool first = true;
    for (const Factor& f : factors_) {
        Eigen::MatrixXd m = f.kind == Factor::Kind::Sparse ? row_sparse_to_dense(f.sparse)
                                                           : f.dense;
        if (f.transposed) m.transposeInPlace();
        prod = first ? m : Eigen::MatrixXd(prod * m);
        first = false;
    }
    if (symmetrized_) return 0.5 * (prod + prod.transpose());
    return prod;
}

bool DecompositionChain::operator==(const DecompositionChain& other) const {
    if (n_ != other.n_ || symmetrized_ != other.symmetrized_ ||
        factors_.size() != other.factors_.size())
        return false;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        const Factor& a = factors_[i];
        const Factor& b = other.factors_[i];
        if (a.kind != b.kind || a.transposed != b.transposed) return false;
        if (a.kind == Factor::Kind::Sparse) {
            if (!(a.sparse == b.sparse)) return false;
        } else {
            if (a.dense.rows() != b.dense.rows() || a.dense.cols() != b.dense.cols() ||
                a.dense != b.dense)
                return false;
        }
    }
    return true;
}

Eigen::VectorXd kernel_matvec(const DecompositionChain& chain, const Eigen::VectorXd& x,
                              FlopCounter* flops) {
    return chain.matvec(x, flops);
}

DecompositionChain estimate_d2(const Graph& g, double sigma2, const GrfOptions& opts,
                               FlopCounter* flops) {
    CopyPair pair = build_copy_pair(g, sigma2, opts, flops);
    std::vector<Factor> factors;
    factors.push_back(pair.first.as_factor(false));
    factors.push_back(pair.second.as_factor(true));
    return DecompositionChain(std::move(factors), false);
}

DecompositionChain estimate_d1(const Graph& g, double sigma2, const GrfOptions& opts,
                               FlopCounter* flops) {
    CopyPair pair = build_copy_pair(g, sigma2, opts, flops);
    const SparseMatrix reg = regularized_operator(build_u_matrix(g, sigma2));

    std::vector<Factor> factors;
    factors.push_back(pair.first.as_factor(false));
    if (pair.second.dense) {
        factors.push_back(
            Factor::dense_factor(sparse_times_dense(reg, pair.second.dense_mat, flops), true));
    } else {
        factors.push_back(Factor::sparse_factor(
            sparse_times_row_sparse(reg, pair.second.sparse, flops), true));
    }
    return DecompositionChain(std::move(factors), false);
}

DecompositionChain symmetrize(DecompositionChain chain) {
    return DecompositionChain(chain.factors(), true);
}

DecompositionChain extend_d_plus_2(const DecompositionChain& chain, const Graph& g,
                                   double sigma2, const GrfOptions& opts, FlopCounter* flops) {
    if (chain.factors().size() != 2) fail("extension requires a two-factor chain");
    const Factor& xf = chain.factors()[0];
    const Factor& yf = chain.factors()[1];
    if (xf.transposed || !yf.transposed)
        fail("extension expects factors [X, Y^T]");
    const Eigen::Index k1 = xf.cols();
    if (k1 == 0) fail("extension requires factors with at least one column");

    CopyPair pair = build_copy_pair(g, sigma2, opts, flops);
    const Eigen::MatrixXd c = pair.first.dense ? pair.first.dense_mat
                                               : row_sparse_to_dense(pair.first.sparse);
    const Eigen::MatrixXd cp = pair.second.dense ? pair.second.dense_mat
                                                 : row_sparse_to_dense(pair.second.sparse);
    const Eigen::MatrixXd y =
        yf.kind == Factor::Kind::Sparse ? row_sparse_to_dense(yf.sparse) : yf.dense;

    const Eigen::MatrixXd coupling = y.transpose() * c;  // K1 x K2
    count_flops(flops, static_cast<std::uint64_t>(y.rows()) * y.cols() * c.cols());

    Eigen::BDCSVD<Eigen::MatrixXd> svd(coupling, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sqrt_sigma = svd.singularValues().cwiseSqrt();
    const Eigen::MatrixXd w_left = svd.matrixU() * sqrt_sigma.asDiagonal();
    const Eigen::MatrixXd w_right = svd.matrixV() * sqrt_sigma.asDiagonal();
    count_flops(flops, static_cast<std::uint64_t>(coupling.rows()) * coupling.cols() *
                           std::min(coupling.rows(), coupling.cols()));

    Eigen::MatrixXd f_left;
    if (xf.kind == Factor::Kind::Sparse) {
        const RowSparseMatrix& xs = xf.sparse;
        f_left = Eigen::MatrixXd::Zero(xs.row_count, w_left.cols());
        for (NodeId i = 0; i < xs.row_count; ++i)
            for (std::int64_t k = xs.offsets[i]; k < xs.offsets[i + 1]; ++k)
                f_left.row(i) += xs.vals[k] * w_left.row(xs.cols[k]);
        count_flops(flops, static_cast<std::uint64_t>(xs.nnz()) * w_left.cols());
    } else {
        f_left = xf.dense * w_left;
        count_flops(flops, static_cast<std::uint64_t>(xf.dense.rows()) * xf.dense.cols() *
                               w_left.cols());
    }
    const Eigen::MatrixXd f_right = cp * w_right;
    count_flops(flops,
                static_cast<std::uint64_t>(cp.rows()) * cp.cols() * w_right.cols());

    std::vector<Factor> factors;
    factors.push_back(Factor::dense_factor(std::move(f_left), false));
    factors.push_back(Factor::dense_factor(f_right, true));
    return DecompositionChain(std::move(factors), false);
}

DecompositionChain estimate_kernel(const Graph& g, const LaplacianKernelSpec& spec,
                                   const GrfOptions& opts, FlopCounter* flops) {
    if (spec.d < 1) fail("kernel power d must be >= 1");
    auto stage_opts = [&](int stage) {
        GrfOptions staged = opts;
        staged.walk.master_seed = derive_seed(opts.walk.master_seed, kStageStream,
                                              static_cast<std::uint64_t>(stage));
        return staged;
    };
    int stage = 0;
    DecompositionChain chain = (spec.d % 2 == 0)
                                   ? estimate_d2(g, spec.sigma2, stage_opts(stage), flops)
                                   : estimate_d1(g, spec.sigma2, stage_opts(stage), flops);
    for (int d = (spec.d % 2 == 0) ? 2 : 1; d < spec.d; d += 2) {
        ++stage;
        chain = extend_d_plus_2(chain, g, spec.sigma2, stage_opts(stage), flops);
    }
    return chain;
}

Eigen::VectorXd solve_linear(const WalkMatrix& u, const Eigen::VectorXd& b,
                             const WalkConfig& cfg, FlopCounter* flops) {
    if (b.size() != u.node_count()) fail("right-hand side dimension mismatch");
    cfg.validate();
    const double lambda = u.scale();

    WalkConfig cfg_first = cfg;
    cfg_first.master_seed = derive_seed(cfg.master_seed, kCopyStream, 0);
    WalkConfig cfg_second = cfg;
    cfg_second.master_seed = derive_seed(cfg.master_seed, kCopyStream, 1);

    const RowSparseMatrix c = RowSparseMatrix::from_features(
        compute_feature_matrix(u, cfg_first, flops), 1.0 / lambda, flops);
    const RowSparseMatrix cp = RowSparseMatrix::from_features(
        compute_feature_matrix(u, cfg_second, flops), 1.0 / lambda, flops);
    const RowSparseMatrix d = sparse_times_row_sparse(regularized_operator(u), cp, flops);

    std::vector<Factor> factors;
    factors.push_back(Factor::sparse_factor(c, false));
    factors.push_back(Factor::sparse_factor(d, true));
    const DecompositionChain chain(std::move(factors), false);

    Eigen::VectorXd x = chain.matvec(b, flops);
    if (lambda != 1.0) {
        x *= lambda;
        count_flops(flops, static_cast<std::uint64_t>(x.size()));
    }
    return x;
}

namespace {

void serialize_triplets(std::ostream& out, const RowSparseMatrix& m) {
    char buf[48];
    for (NodeId i = 0; i < m.row_count; ++i)
        for (std::int64_t k = m.offsets[i]; k < m.offsets[i + 1]; ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", m.vals[k]);
            out << i << ' ' << m.cols[k] << ' ' << buf << '\n';
        }
}

}  // namespace

void DecompositionChain::serialize(std::ostream& out) const {
    out << "# grf-chain v1\n";
    out << "# n=" << n_ << " factors=" << factors_.size()
        << " symmetrized=" << (symmetrized_ ? 1 : 0) << "\n";
    char buf[48];
    for (const Factor& f : factors_) {
        if (f.kind == Factor::Kind::Sparse) {
            out << "# factor kind=sparse transposed=" << (f.transposed ? 1 : 0)
                << " rows=" << f.sparse.row_count << " cols=" << f.sparse.col_count
                << " nnz=" << f.sparse.nnz() << "\n";
            serialize_triplets(out, f.sparse);
        } else {
            out << "# factor kind=dense transposed=" << (f.transposed ? 1 : 0)
                << " rows=" << f.dense.rows() << " cols=" << f.dense.cols() << "\n";
            for (Eigen::Index i = 0; i < f.dense.rows(); ++i)
                for (Eigen::Index j = 0; j < f.dense.cols(); ++j) {
                    std::snprintf(buf, sizeof(buf), "%.17g", f.dense(i, j));
                    out << i << ' ' << j << ' ' << buf << '\n';
                }
        }
    }
}

DecompositionChain DecompositionChain::parse(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "# grf-chain v1") fail("not a grf chain file");
    if (!std::getline(in, line)) fail("missing chain header");

    auto parse_fields = [](const std::string& text) {
        std::istringstream ls(text);
        std::string token;
        std::vector<std::pair<std::string, std::string>> fields;
        while (ls >> token) {
            const auto eq = token.find('=');
            if (eq != std::string::npos)
                fields.emplace_back(token.substr(0, eq), token.substr(eq + 1));
        }
        return fields;
    };

    std::size_t factor_count = 0;
    bool symmetrized = false;
    for (const auto& [key, value] : parse_fields(line)) {
        if (key == "factors") factor_count = std::stoull(value);
        else if (key == "symmetrized") symmetrized = value == "1";
    }

    std::vector<Factor> factors;
    for (std::size_t f = 0; f < factor_count; ++f) {
        if (!std::getline(in, line)) fail("missing factor header");
        std::string kind;
        bool transposed = false;
        NodeId rows = 0, cols = 0;
        std::int64_t nnz = -1;
        for (const auto& [key, value] : parse_fields(line)) {
            if (key == "kind") kind = value;
            else if (key == "transposed") transposed = value == "1";
            else if (key == "rows") rows = static_cast<NodeId>(std::stoll(value));
            else if (key == "cols") cols = static_cast<NodeId>(std::stoll(value));
            else if (key == "nnz") nnz = std::stoll(value);
        }
        if (kind == "sparse") {
            RowSparseMatrix m;
            m.row_count = rows;
            m.col_count = cols;
            std::vector<std::vector<std::pair<NodeId, double>>> row_data(
                static_cast<std::size_t>(rows));
            for (std::int64_t k = 0; k < nnz; ++k) {
                if (!std::getline(in, line)) fail("truncated sparse factor");
                std::istringstream ls(line);
                NodeId i, j;
                double v;
                if (!(ls >> i >> j >> v)) fail("malformed sparse triplet");
                row_data[i].emplace_back(j, v);
            }
            m.offsets.assign(static_cast<std::size_t>(rows) + 1, 0);
            for (NodeId i = 0; i < rows; ++i)
                m.offsets[i + 1] = m.offsets[i] + static_cast<std::int64_t>(row_data[i].size());
            for (NodeId i = 0; i < rows; ++i)
                for (const auto& [j, v] : row_data[i]) {
                    m.cols.push_back(j);
                    m.vals.push_back(v);
                }
            factors.push_back(Factor::sparse_factor(std::move(m), transposed));
        } else if (kind == "dense") {
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
            for (std::int64_t k = 0; k < static_cast<std::int64_t>(rows) * cols; ++k) {
                if (!std::getline(in, line)) fail("truncated dense factor");
                std::istringstream ls(line);
                Eigen::Index i, j;
                double v;
                if (!(ls >> i >> j >> v)) fail("malformed dense entry");
                m(i, j) = v;
            }
            factors.push_back(Factor::dense_factor(std::move(m), transposed));
        } else {
            fail("unknown factor kind: " + kind);
        }
    }
    return DecompositionChain(std::move(factors), symmetrized);
}

}  // namespace grf
