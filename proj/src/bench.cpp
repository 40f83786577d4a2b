#include "grf/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "grf/oracle.hpp"
#include "grf/rng.hpp"

namespace grf {

namespace {

constexpr std::uint64_t kTrialStream = 0x74726961ull;
constexpr std::uint64_t kSpeedStream = 0x73706565ull;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

double frobenius_error(const Eigen::MatrixXd& exact, const Eigen::MatrixXd& approx) {
    if (exact.rows() != approx.rows() || exact.cols() != approx.cols())
        fail("frobenius_error shape mismatch");
    const double denom = exact.norm();
    if (denom == 0.0) fail("frobenius_error: exact matrix has zero norm");
    return (exact - approx).norm() / denom;
}

std::vector<ExperimentRecord> run_frobenius_experiment(
    const Graph& g, const std::string& graph_id, int d, double sigma2,
    std::span<const double> p_terms, std::span<const int> ms, int trials,
    std::uint64_t seed, int threads, bool symmetrized) {
    if (trials < 1) fail("trials must be >= 1");
    const Eigen::MatrixXd exact = oracle::exact_kernel_matrix(g, {d, sigma2});

    std::vector<ExperimentRecord> records;
    int cell = 0;
    for (double p_term : p_terms) {
        for (int m : ms) {
            std::vector<double> errors(static_cast<std::size_t>(trials), 0.0);
            std::atomic<int> next{0};
            std::exception_ptr error;
            std::mutex error_mutex;
            auto work = [&] {
                try {
                    while (true) {
                        const int t = next.fetch_add(1);
                        if (t >= trials) break;
                        GrfOptions opts;
                        opts.walk.p_term = p_term;
                        opts.walk.walks_per_node = m;
                        opts.walk.master_seed =
                            derive_seed(seed, kTrialStream, static_cast<std::uint64_t>(cell),
                                        static_cast<std::uint64_t>(t));
                        DecompositionChain chain = estimate_kernel(g, {d, sigma2}, opts);
                        if (symmetrized) chain = symmetrize(std::move(chain));
                        errors[t] = frobenius_error(exact, chain.materialize());
                    }
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            };
            const int workers = std::max(1, std::min(threads, trials));
            if (workers == 1) {
                work();
            } else {
                std::vector<std::thread> pool;
                for (int w = 0; w < workers; ++w) pool.emplace_back(work);
                for (std::thread& th : pool) th.join();
            }
            if (error) std::rethrow_exception(error);

            double mean = 0.0;
            for (double e : errors) mean += e;
            mean /= trials;
            double var = 0.0;
            for (double e : errors) var += (e - mean) * (e - mean);
            const double std_err = trials > 1 ? std::sqrt(var / (trials - 1)) : 0.0;

            records.push_back({graph_id, d, p_term, m, trials, mean, std_err});
            ++cell;
        }
    }
    return records;
}

void write_frobenius_csv(std::span<const ExperimentRecord> records, std::ostream& out) {
    out << "graph,d,p_term,m,mean,std\n";
    char buf[64];
    for (const ExperimentRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.p_term);
        out << r.graph_id << ',' << r.d << ',' << buf << ',' << r.m << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", r.mean_error);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", r.std_error);
        out << buf << '\n';
    }
}

namespace {

double diagonal_entry(const SparseMatrix& a, NodeId i) {
    for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k)
        if (a.cols[k] == i) return a.vals[k];
    return 0.0;
}

void check_diagonal(const SparseMatrix& a) {
    for (NodeId i = 0; i < a.n; ++i)
        if (diagonal_entry(a, i) == 0.0)
            fail("solver requires a nonzero diagonal (row " + std::to_string(i) + ")");
}

}  // namespace

SolveResult jacobi_solve(const SparseMatrix& a, const Eigen::VectorXd& b, int iters) {
    if (iters < 1) fail("iters must be >= 1");
    if (b.size() != a.n) fail("dimension mismatch");
    check_diagonal(a);

    SolveResult result;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(a.n);
    Eigen::VectorXd next(a.n);
    std::uint64_t flops = 0;
    for (int it = 0; it < iters; ++it) {
        for (NodeId i = 0; i < a.n; ++i) {
            double off = 0.0;
            double diag = 0.0;
            for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k) {
                if (a.cols[k] == i) {
                    diag = a.vals[k];
                } else {
                    off += a.vals[k] * x(a.cols[k]);
                    ++flops;
                }
            }
            next(i) = (b(i) - off) / diag;
            ++flops;
        }
        x.swap(next);
    }
    result.x = std::move(x);
    result.flops = flops;
    result.iterations = iters;
    return result;
}

SolveResult gauss_seidel_solve(const SparseMatrix& a, const Eigen::VectorXd& b, int iters) {
    if (iters < 1) fail("iters must be >= 1");
    if (b.size() != a.n) fail("dimension mismatch");
    check_diagonal(a);

    SolveResult result;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(a.n);
    std::uint64_t flops = 0;
    for (int it = 0; it < iters; ++it) {
        for (NodeId i = 0; i < a.n; ++i) {
            double off = 0.0;
            double diag = 0.0;
            for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k) {
                if (a.cols[k] == i) {
                    diag = a.vals[k];
                } else {
                    off += a.vals[k] * x(a.cols[k]);
                    ++flops;
                }
            }
            x(i) = (b(i) - off) / diag;
            ++flops;
        }
    }
    result.x = std::move(x);
    result.flops = flops;
    result.iterations = iters;
    return result;
}

SolveResult cg_solve(const SparseMatrix& a, const Eigen::VectorXd& b, int max_iters,
                     double tol) {
    if (max_iters < 1) fail("max_iters must be >= 1");
    if (b.size() != a.n) fail("dimension mismatch");

    SolveResult result;
    FlopCounter counter;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(a.n);
    Eigen::VectorXd r = b;
    Eigen::VectorXd p = r;
    Eigen::VectorXd ap(a.n);
    double rs = r.dot(r);
    counter.add(static_cast<std::uint64_t>(a.n));
    const double threshold = tol * b.norm();

    int it = 0;
    while (it < max_iters && std::sqrt(rs) > threshold) {
        a.matvec({p.data(), static_cast<std::size_t>(a.n)},
                 {ap.data(), static_cast<std::size_t>(a.n)}, &counter);
        const double denom = p.dot(ap);
        counter.add(static_cast<std::uint64_t>(a.n) + 1);
        if (denom == 0.0) break;
        const double alpha = rs / denom;
        x += alpha * p;
        r -= alpha * ap;
        counter.add(2 * static_cast<std::uint64_t>(a.n));
        const double rs_next = r.dot(r);
        counter.add(static_cast<std::uint64_t>(a.n) + 1);
        const double beta = rs_next / rs;
        p = r + beta * p;
        counter.add(static_cast<std::uint64_t>(a.n));
        rs = rs_next;
        ++it;
    }
    result.x = std::move(x);
    result.flops = counter.multiplies();
    result.iterations = it;
    return result;
}

std::vector<SpeedRow> run_speed_comparison(const SpeedConfig& cfg) {
    std::vector<SpeedRow> rows;
    for (NodeId n : cfg.sizes) {
        const Graph g = cfg.density >= 1.0
                            ? generate_complete(n)
                            : generate_erdos_renyi(
                                  n, cfg.density,
                                  derive_seed(cfg.seed, kSpeedStream, static_cast<std::uint64_t>(n)));
        const WalkMatrix u = build_u_matrix(g, cfg.sigma2);
        const SparseMatrix reg = regularized_operator(u);
        const Eigen::VectorXd x = Eigen::VectorXd::Ones(n);

        // GRF: chain preprocessing plus one inference matvec.
        {
            FlopCounter counter;
            GrfOptions opts;
            opts.walk.p_term = cfg.p_term;
            opts.walk.walks_per_node = cfg.m;
            opts.walk.master_seed = derive_seed(cfg.seed, kSpeedStream, 0x67726600ull, n);
            opts.walk.threads = cfg.threads;
            const DecompositionChain chain = estimate_d2(g, cfg.sigma2, opts, &counter);
            (void)chain.matvec(x, &counter);
            rows.push_back({n, "grf", counter.multiplies()});
        }

        // Brute force: dense inversion (performed for real, charged N^3) plus
        // a dense matvec (N^2).
        {
            const Eigen::MatrixXd dense = oracle::dense_regularized(g, cfg.sigma2);
            const Eigen::MatrixXd inverse =
                dense.llt().solve(Eigen::MatrixXd::Identity(n, n));
            volatile double sink = (inverse * x).sum();
            (void)sink;
            const std::uint64_t n64 = static_cast<std::uint64_t>(n);
            rows.push_back({n, "brute_force", n64 * n64 * n64 + n64 * n64});
        }

        rows.push_back({n, "jacobi", jacobi_solve(reg, x, cfg.solver_iters).flops});
        rows.push_back({n, "gauss_seidel", gauss_seidel_solve(reg, x, cfg.solver_iters).flops});
        rows.push_back({n, "cg", cg_solve(reg, x, n, cfg.cg_tol).flops});
    }
    return rows;
}

void write_speed_csv(std::span<const SpeedRow> rows, std::ostream& out) {
    out << "n,method,flops\n";
    for (const SpeedRow& r : rows) out << r.n << ',' << r.method << ',' << r.flops << '\n';
}

}  // namespace grf
