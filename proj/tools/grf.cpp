#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "grf/bench.hpp"
#include "grf/clustering.hpp"
#include "grf/compress.hpp"
#include "grf/estimators.hpp"
#include "grf/graph.hpp"
#include "grf/oracle.hpp"
#include "grf/walk.hpp"

using json = nlohmann::ordered_json;

namespace {

struct WalkFlags {
    double p_term = 0.1;
    int m = 10;
    std::string sampler = "uniform";
    double alpha = 1.0;
    std::uint64_t seed = 0;
    int threads = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--p-term", p_term, "Termination probability in (0, 1]");
        cmd->add_option("--m", m, "Random walks per node");
        cmd->add_option("--sampler", sampler, "uniform | weight | reinforced")
            ->check(CLI::IsMember({"uniform", "weight", "reinforced"}));
        cmd->add_option("--alpha", alpha, "Reinforced sampler exponent");
        cmd->add_option("--seed", seed, "Master seed; all randomness derives from it");
        cmd->add_option("--threads", threads, "Worker threads (0 = hardware)");
    }

    [[nodiscard]] grf::WalkConfig config() const {
        grf::WalkConfig cfg;
        cfg.p_term = p_term;
        cfg.walks_per_node = m;
        cfg.sampler = grf::sampler_from_name(sampler);
        cfg.reinforced_alpha = alpha;
        cfg.master_seed = seed;
        cfg.threads = threads;
        cfg.validate();
        return cfg;
    }

    [[nodiscard]] json to_json() const {
        return {{"p_term", p_term}, {"m", m},       {"sampler", sampler},
                {"alpha", alpha},   {"seed", seed}, {"threads", threads}};
    }
};

grf::Graph load_graph_file(const std::string& path, bool remap = false) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph file: " + path);
    return grf::load_edge_list(in, remap);
}

void write_manifest(const std::string& output_path, json manifest) {
    manifest["format_version"] = 1;
    std::ofstream out(output_path + ".manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest next to " + output_path);
    out << manifest.dump(2) << "\n";
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write output file: " + path);
    return out;
}

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------

struct GenerateCmd {
    std::vector<double> er;  // n, p
    grf::NodeId complete_n = 0;
    std::uint64_t seed = 0;
    std::string output;

    int run() const {
        grf::Graph g;
        json source;
        if (!er.empty()) {
            const auto n = static_cast<grf::NodeId>(er[0]);
            g = grf::generate_erdos_renyi(n, er[1], seed);
            source = {{"model", "erdos_renyi"}, {"n", n}, {"p", er[1]}};
        } else if (complete_n > 0) {
            g = grf::generate_complete(complete_n);
            source = {{"model", "complete"}, {"n", complete_n}};
        } else {
            throw std::runtime_error("generate requires --er N P or --complete N");
        }
        auto out = open_output(output);
        grf::serialize_edge_list(g, out);
        write_manifest(output, {{"command", "generate"},
                                {"source", source},
                                {"seed", seed},
                                {"nodes", g.node_count()},
                                {"edges", g.edge_count()},
                                {"outputs", {output}}});
        std::cout << "wrote " << output << " (" << g.node_count() << " nodes, "
                  << g.edge_count() << " edges)\n";
        return 0;
    }
};

struct FeaturesCmd {
    std::string graph_path;
    bool remap = false;
    WalkFlags walk;
    double sigma2 = 0.2;
    grf::NodeId anchors_k = 0;
    std::string output;

    int run() const {
        const grf::Graph g = load_graph_file(graph_path, remap);
        const grf::WalkMatrix u = grf::build_u_matrix(g, sigma2);
        grf::FeatureMatrix fm;
        if (anchors_k > 0) {
            const grf::AnchorSet anchors =
                grf::sample_anchors(g.node_count(), anchors_k, walk.seed);
            fm = grf::compute_feature_matrix_anchored(u, walk.config(), anchors.nodes);
        } else {
            fm = grf::compute_feature_matrix(u, walk.config());
        }
        if (fm.meta().truncated_walks > 0)
            std::cerr << "warning: " << fm.meta().truncated_walks
                      << " walks hit the max_steps cap; results carry truncation bias\n";
        auto out = open_output(output);
        fm.serialize(out);
        write_manifest(output, {{"command", "features"},
                                {"graph", graph_path},
                                {"sigma2", sigma2},
                                {"walk", walk.to_json()},
                                {"anchors_k", anchors_k},
                                {"steps_taken", fm.meta().steps_taken},
                                {"outputs", {output}}});
        std::cout << "wrote " << output << " (" << fm.nnz() << " nonzeros)\n";
        return 0;
    }
};

struct EstimateCmd {
    std::string graph_path;
    bool remap = false;
    WalkFlags walk;
    int d = 1;
    double sigma2 = 0.2;
    grf::NodeId anchors_k = 0;
    int jlt_k = 0;
    bool make_symmetric = false;
    std::string output;

    int run() const {
        if (anchors_k > 0 && jlt_k > 0)
            std::cerr << "warning: anchors and JLT both enabled; composition order is "
                         "anchors at walk time, then JLT\n";
        const grf::Graph g = load_graph_file(graph_path, remap);
        grf::GrfOptions opts;
        opts.walk = walk.config();
        opts.anchors_k = anchors_k;
        opts.jlt_k = jlt_k;
        grf::FlopCounter flops;
        grf::DecompositionChain chain =
            grf::estimate_kernel(g, {d, sigma2}, opts, &flops);
        if (make_symmetric) chain = grf::symmetrize(std::move(chain));
        auto out = open_output(output);
        chain.serialize(out);
        write_manifest(output, {{"command", "estimate"},
                                {"graph", graph_path},
                                {"d", d},
                                {"sigma2", sigma2},
                                {"walk", walk.to_json()},
                                {"anchors_k", anchors_k},
                                {"jlt_k", jlt_k},
                                {"symmetrized", make_symmetric},
                                {"preprocessing_flops", flops.multiplies()},
                                {"outputs", {output}}});
        std::cout << "wrote " << output << " (" << chain.factors().size()
                  << " factors, preprocessing flops " << flops.multiplies() << ")\n";
        return 0;
    }
};

struct SolveCmd {
    std::string graph_path;
    WalkFlags walk;
    double sigma2 = 0.2;
    std::string b_path;
    int unit_index = -1;
    std::string output;

    int run() const {
        const grf::Graph g = load_graph_file(graph_path);
        const grf::WalkMatrix u = grf::build_u_matrix(g, sigma2);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(g.node_count());
        if (!b_path.empty()) {
            std::ifstream in(b_path);
            if (!in) throw std::runtime_error("cannot open rhs file: " + b_path);
            for (grf::NodeId i = 0; i < g.node_count(); ++i)
                if (!(in >> b(i)))
                    throw std::runtime_error("rhs file has fewer than N values");
        } else if (unit_index >= 0) {
            if (unit_index >= g.node_count())
                throw std::runtime_error("--unit index out of range");
            b(unit_index) = 1.0;
        } else {
            throw std::runtime_error("solve requires --b FILE or --unit INDEX");
        }
        grf::FlopCounter flops;
        const Eigen::VectorXd x = grf::solve_linear(u, b, walk.config(), &flops);
        auto out = open_output(output);
        for (grf::NodeId i = 0; i < g.node_count(); ++i)
            out << format_double(x(i)) << "\n";
        write_manifest(output, {{"command", "solve"},
                                {"graph", graph_path},
                                {"sigma2", sigma2},
                                {"rhs", b_path.empty() ? "e_" + std::to_string(unit_index)
                                                       : b_path},
                                {"walk", walk.to_json()},
                                {"flops", flops.multiplies()},
                                {"outputs", {output}}});
        std::cout << "wrote " << output << " (flops " << flops.multiplies() << ")\n";
        return 0;
    }
};

struct KmeansCmd {
    std::string graph_path;
    WalkFlags walk;
    int d = 2;
    double sigma2 = 0.2;
    int clusters = 3;
    bool exact = false;
    grf::NodeId anchors_k = 0;
    int jlt_k = 0;
    std::uint64_t kmeans_seed = 0;
    int restarts = 48;
    int max_iter = 200;
    std::string output;

    int run() const {
        const grf::Graph g = load_graph_file(graph_path);
        grf::ClusteringResult result;
        if (exact) {
            const grf::DenseKernel kernel(grf::oracle::exact_kernel_matrix(g, {d, sigma2}));
            result = grf::kernel_kmeans_restarted(kernel, clusters, kmeans_seed, restarts,
                                                  max_iter);
        } else {
            if (anchors_k > 0 && jlt_k > 0)
                std::cerr << "warning: anchors and JLT both enabled; composition order is "
                             "anchors at walk time, then JLT\n";
            grf::GrfOptions opts;
            opts.walk = walk.config();
            opts.anchors_k = anchors_k;
            opts.jlt_k = jlt_k;
            const grf::DecompositionChain chain =
                grf::symmetrize(grf::estimate_kernel(g, {d, sigma2}, opts));
            const grf::ChainKernel kernel(chain);
            result = grf::kernel_kmeans_restarted(kernel, clusters, kmeans_seed, restarts,
                                                  max_iter);
        }
        auto out = open_output(output);
        out << "node,cluster\n";
        for (std::size_t i = 0; i < result.labels.size(); ++i)
            out << i << "," << result.labels[i] << "\n";
        write_manifest(output, {{"command", "kmeans"},
                                {"graph", graph_path},
                                {"d", d},
                                {"sigma2", sigma2},
                                {"clusters", clusters},
                                {"exact", exact},
                                {"walk", walk.to_json()},
                                {"anchors_k", anchors_k},
                                {"jlt_k", jlt_k},
                                {"kmeans_seed", kmeans_seed},
                                {"restarts", restarts},
                                {"converged", result.converged},
                                {"iterations", result.iterations_run},
                                {"outputs", {output}}});
        std::cout << "wrote " << output << " (converged " << result.converged << " after "
                  << result.iterations_run << " iterations)\n";
        return 0;
    }
};

struct BenchFrobeniusCmd {
    std::string graph_path;
    std::vector<double> er;
    std::string graph_id;
    int d = 1;
    double sigma2 = 0.2;
    std::vector<double> p_terms{0.1, 0.06, 0.01};
    std::vector<int> ms{1, 2, 10, 20, 40, 80};
    int trials = 10;
    bool symmetrized = false;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string output;

    int run() const {
        grf::Graph g;
        std::string id = graph_id;
        if (!graph_path.empty()) {
            g = load_graph_file(graph_path);
            if (id.empty()) id = graph_path;
        } else if (!er.empty()) {
            const auto n = static_cast<grf::NodeId>(er[0]);
            g = grf::generate_erdos_renyi(n, er[1], seed);
            if (id.empty())
                id = "er-" + std::to_string(er[1]) + "-" + std::to_string(n);
        } else {
            throw std::runtime_error("bench-frobenius requires --graph FILE or --er N P");
        }
        const auto records = grf::run_frobenius_experiment(g, id, d, sigma2, p_terms, ms,
                                                           trials, seed, threads, symmetrized);
        auto out = open_output(output);
        grf::write_frobenius_csv(records, out);
        write_manifest(output, {{"command", "bench-frobenius"},
                                {"graph", id},
                                {"d", d},
                                {"sigma2", sigma2},
                                {"p_terms", p_terms},
                                {"ms", ms},
                                {"trials", trials},
                                {"symmetrized", symmetrized},
                                {"seed", seed},
                                {"outputs", {output}}});
        std::cout << "wrote " << output << " (" << records.size() << " cells)\n";
        return 0;
    }
};

struct BenchSpeedCmd {
    std::vector<grf::NodeId> sizes{800, 1000, 3000};
    double density = 1.0;
    double sigma2 = 0.2;
    double p_term = 0.1;
    int m = 20;
    int iters = 10;
    double cg_tol = 1e-10;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string output;

    int run() const {
        grf::SpeedConfig cfg;
        cfg.sizes = sizes;
        cfg.density = density;
        cfg.sigma2 = sigma2;
        cfg.p_term = p_term;
        cfg.m = m;
        cfg.solver_iters = iters;
        cfg.cg_tol = cg_tol;
        cfg.seed = seed;
        cfg.threads = threads;
        const auto rows = grf::run_speed_comparison(cfg);
        auto out = open_output(output);
        grf::write_speed_csv(rows, out);
        write_manifest(output, {{"command", "bench-speed"},
                                {"sizes", sizes},
                                {"density", density},
                                {"sigma2", sigma2},
                                {"p_term", p_term},
                                {"m", m},
                                {"solver_iters", iters},
                                {"seed", seed},
                                {"outputs", {output}}});
        std::cout << "wrote " << output << "\n";
        for (const auto& row : rows)
            std::cout << "  n=" << row.n << " " << row.method << " " << row.flops << "\n";
        return 0;
    }
};

struct ValidateCmd {
    std::string graph_path;
    double sigma2 = 0.2;
    int d_max = 4;
    double tol = 1e-10;
    int power_iters = 100;
    std::uint64_t seed = 0;

    int run() const {
        const grf::Graph g = load_graph_file(graph_path);
        const grf::WalkMatrix u = grf::build_u_matrix(g, sigma2);
        const auto report = grf::spectral_radius_report(u, power_iters, seed);
        std::cout << "spectral radius estimate  " << report.power_estimate << "\n";
        std::cout << "gershgorin bound          " << report.gershgorin_bound << "\n";
        std::cout << "certified bound           " << report.certified_bound << "\n";
        bool ok = report.power_estimate < 1.0;
        if (!(report.certified_bound < 1.0)) ok = false;

        if (g.node_count() <= grf::oracle::kDenseLimit) {
            const Eigen::MatrixXd k1 = grf::oracle::exact_kernel_matrix(g, {1, sigma2});
            if (k1.minCoeff() <= 0.0)
                std::cerr << "warning: the d=1 kernel has non-positive entries; kernel "
                             "validity for d>1 is not guaranteed on this graph\n";
            for (int d = 1; d <= d_max; ++d) {
                const bool pd = grf::oracle::positive_definiteness_check(
                    grf::oracle::exact_kernel_matrix(g, {d, sigma2}), tol);
                std::cout << "d=" << d << " positive definite    "
                          << (pd ? "pass" : "FAIL") << "\n";
                if (!pd) ok = false;
            }
        } else {
            std::cout << "graph exceeds the dense limit; PD checks skipped\n";
        }
        return ok ? 0 : 1;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-walk estimators of regularized Laplacian graph kernels"};
    app.require_subcommand(1);

    GenerateCmd generate;
    auto* gen = app.add_subcommand("generate", "Generate a graph and write its edge list");
    gen->add_option("--er", generate.er, "Erdos-Renyi parameters: N P")->expected(2);
    gen->add_option("--complete", generate.complete_n, "Complete graph on N nodes");
    gen->add_option("--seed", generate.seed, "Generator seed");
    gen->add_option("-o,--output", generate.output, "Output edge list")->required();

    FeaturesCmd features;
    auto* feat = app.add_subcommand("features", "Compute and store a feature matrix");
    feat->add_option("--graph", features.graph_path, "Input edge list")->required();
    feat->add_flag("--remap", features.remap, "Compact arbitrary integer labels");
    feat->add_option("--sigma2", features.sigma2, "Kernel regularization");
    feat->add_option("--anchors", features.anchors_k, "Anchor-point count K");
    features.walk.attach(feat);
    feat->add_option("-o,--output", features.output, "Output feature file")->required();

    EstimateCmd estimate;
    auto* est = app.add_subcommand("estimate", "Build a kernel decomposition chain");
    est->add_option("--graph", estimate.graph_path, "Input edge list")->required();
    est->add_flag("--remap", estimate.remap, "Compact arbitrary integer labels");
    est->add_option("--d", estimate.d, "Kernel power d >= 1");
    est->add_option("--sigma2", estimate.sigma2, "Kernel regularization");
    est->add_option("--anchors", estimate.anchors_k, "Anchor-point count K");
    est->add_option("--jlt", estimate.jlt_k, "JLT dimension K");
    est->add_flag("--symmetrize", estimate.make_symmetric, "Emit the symmetrized chain");
    estimate.walk.attach(est);
    est->add_option("-o,--output", estimate.output, "Output chain file")->required();

    SolveCmd solve;
    auto* sol = app.add_subcommand("solve", "Randomized solve of the regularized system");
    sol->add_option("--graph", solve.graph_path, "Input edge list")->required();
    sol->add_option("--sigma2", solve.sigma2, "Kernel regularization");
    sol->add_option("--b", solve.b_path, "Right-hand side file, one value per line");
    sol->add_option("--unit", solve.unit_index, "Use the unit vector e_i as rhs");
    solve.walk.attach(sol);
    sol->add_option("-o,--output", solve.output, "Output solution file")->required();

    KmeansCmd kmeans;
    auto* km = app.add_subcommand("kmeans", "Kernelized k-means over the chain interface");
    km->add_option("--graph", kmeans.graph_path, "Input edge list")->required();
    km->add_option("--clusters", kmeans.clusters, "Number of clusters");
    km->add_option("--d", kmeans.d, "Kernel power");
    km->add_option("--sigma2", kmeans.sigma2, "Kernel regularization");
    km->add_flag("--exact", kmeans.exact, "Cluster with the dense oracle kernel");
    km->add_option("--anchors", kmeans.anchors_k, "Anchor-point count K");
    km->add_option("--jlt", kmeans.jlt_k, "JLT dimension K");
    km->add_option("--kmeans-seed", kmeans.kmeans_seed, "Clustering seed");
    km->add_option("--restarts", kmeans.restarts, "Seeded restarts, best objective kept");
    km->add_option("--max-iter", kmeans.max_iter, "Lloyd iteration cap");
    kmeans.walk.attach(km);
    km->add_option("-o,--output", kmeans.output, "Output labels CSV")->required();

    BenchFrobeniusCmd frob;
    auto* bf = app.add_subcommand("bench-frobenius",
                                  "Relative Frobenius error of the estimator vs the oracle");
    bf->add_option("--graph", frob.graph_path, "Input edge list");
    bf->add_option("--er", frob.er, "Erdos-Renyi parameters: N P")->expected(2);
    bf->add_option("--graph-id", frob.graph_id, "Graph label for the CSV");
    bf->add_option("--d", frob.d, "Kernel power");
    bf->add_option("--sigma2", frob.sigma2, "Kernel regularization");
    bf->add_option("--p-terms", frob.p_terms, "Termination probabilities");
    bf->add_option("--ms", frob.ms, "Walk counts");
    bf->add_option("--trials", frob.trials, "Independent trials per cell");
    bf->add_flag("--symmetrize", frob.symmetrized, "Symmetrize each realization first");
    bf->add_option("--seed", frob.seed, "Master seed");
    bf->add_option("--threads", frob.threads, "Worker threads");
    bf->add_option("-o,--output", frob.output, "Output CSV")->required();

    BenchSpeedCmd speed;
    auto* bs = app.add_subcommand("bench-speed", "FLOP comparison against solver baselines");
    bs->add_option("--sizes", speed.sizes, "Graph sizes");
    bs->add_option("--density", speed.density, "Edge probability (1 = complete)");
    bs->add_option("--sigma2", speed.sigma2, "Kernel regularization");
    bs->add_option("--p-term", speed.p_term, "Termination probability");
    bs->add_option("--m", speed.m, "Walks per node");
    bs->add_option("--iters", speed.iters, "Jacobi/Gauss-Seidel iterations");
    bs->add_option("--cg-tol", speed.cg_tol, "CG stopping tolerance (0 runs N iterations)");
    bs->add_option("--seed", speed.seed, "Master seed");
    bs->add_option("--threads", speed.threads, "Worker threads");
    bs->add_option("-o,--output", speed.output, "Output CSV")->required();

    ValidateCmd validate;
    auto* val = app.add_subcommand("validate", "Spectral-radius and kernel validity checks");
    val->add_option("--graph", validate.graph_path, "Input edge list")->required();
    val->add_option("--sigma2", validate.sigma2, "Kernel regularization");
    val->add_option("--d-max", validate.d_max, "Largest kernel power to check");
    val->add_option("--tol", validate.tol, "Eigenvalue tolerance");
    val->add_option("--power-iters", validate.power_iters, "Power iteration count");
    val->add_option("--seed", validate.seed, "Power iteration seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return e.get_exit_code();
    }

    try {
        if (gen->parsed()) return generate.run();
        if (feat->parsed()) return features.run();
        if (est->parsed()) return estimate.run();
        if (sol->parsed()) return solve.run();
        if (km->parsed()) return kmeans.run();
        if (bf->parsed()) return frob.run();
        if (bs->parsed()) return speed.run();
        if (val->parsed()) return validate.run();
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
