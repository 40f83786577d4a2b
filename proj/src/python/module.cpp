#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "grf/bench.hpp"
#include "grf/clustering.hpp"
#include "grf/compress.hpp"
#include "grf/estimators.hpp"
#include "grf/graph.hpp"
#include "grf/oracle.hpp"
#include "grf/walk.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

grf::Graph graph_from_edges(grf::NodeId n,
                            const std::vector<std::tuple<grf::NodeId, grf::NodeId, double>>& edges) {
    std::vector<grf::Graph::Edge> converted;
    converted.reserve(edges.size());
    for (const auto& [u, v, w] : edges) converted.push_back({u, v, w});
    return grf::Graph::from_edges(n, converted);
}

grf::Graph graph_from_file(const std::string& path, bool remap) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return grf::load_edge_list(in, remap);
}

Eigen::MatrixXd features_to_dense(const grf::FeatureMatrix& fm) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(fm.size(), fm.size());
    for (grf::NodeId i = 0; i < fm.size(); ++i) {
        const auto cols = fm.row_cols(i);
        const auto vals = fm.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k) out(i, cols[k]) = vals[k];
    }
    return out;
}

grf::WalkConfig make_walk_config(double p_term, int m, const std::string& sampler,
                                 std::uint64_t seed, int threads) {
    grf::WalkConfig cfg;
    cfg.p_term = p_term;
    cfg.walks_per_node = m;
    cfg.sampler = grf::sampler_from_name(sampler);
    cfg.master_seed = seed;
    cfg.threads = threads;
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_grf, m) {
    m.doc() = "Random-walk estimators of regularized Laplacian graph kernels";

    py::class_<grf::Graph>(m, "Graph")
        .def(py::init(&graph_from_edges), "n"_a, "edges"_a)
        .def_static("load", &graph_from_file, "path"_a, "remap"_a = false)
        .def_static("erdos_renyi", &grf::generate_erdos_renyi, "n"_a, "p"_a, "seed"_a)
        .def_static("complete", &grf::generate_complete, "n"_a)
        .def_property_readonly("n", &grf::Graph::node_count)
        .def_property_readonly("edge_count", &grf::Graph::edge_count)
        .def("degree", &grf::Graph::degree, "v"_a)
        .def("weighted_degree", &grf::Graph::weighted_degree, "v"_a)
        .def("serialize",
             [](const grf::Graph& g) {
                 std::ostringstream out;
                 grf::serialize_edge_list(g, out);
                 return out.str();
             })
        .def("__eq__", [](const grf::Graph& a, const grf::Graph& b) { return a == b; });

    py::class_<grf::WalkMatrix>(m, "WalkMatrix")
        .def_property_readonly("n", &grf::WalkMatrix::node_count)
        .def_property_readonly("scale", &grf::WalkMatrix::scale)
        .def("dense", &grf::oracle::dense_walk_matrix);

    m.def("build_u_matrix", &grf::build_u_matrix, "graph"_a, "sigma2"_a);

    py::class_<grf::DecompositionChain>(m, "DecompositionChain")
        .def_property_readonly("n", &grf::DecompositionChain::size)
        .def_property_readonly("symmetrized", &grf::DecompositionChain::symmetrized)
        .def("matvec",
             [](const grf::DecompositionChain& chain, const Eigen::VectorXd& x) {
                 return chain.matvec(x);
             },
             "x"_a)
        .def("diagonal",
             [](const grf::DecompositionChain& chain) { return chain.diagonal(); })
        .def("materialize", &grf::DecompositionChain::materialize);

    m.def(
        "feature_matrix",
        [](const grf::WalkMatrix& u, double p_term, int m, const std::string& sampler,
           std::uint64_t seed, int threads) {
            return features_to_dense(
                grf::compute_feature_matrix(u, make_walk_config(p_term, m, sampler, seed, threads)));
        },
        "u"_a, "p_term"_a = 0.1, "m"_a = 10, "sampler"_a = "uniform", "seed"_a = 0,
        "threads"_a = 1,
        "Stack of signature vectors as a dense numpy array (row i is phi(i)).");

    m.def(
        "estimate_kernel",
        [](const grf::Graph& g, int d, double sigma2, double p_term, int m,
           const std::string& sampler, std::uint64_t seed, int anchors_k, int jlt_k,
           int threads, bool symmetrize_chain) {
            grf::GrfOptions opts;
            opts.walk = make_walk_config(p_term, m, sampler, seed, threads);
            opts.anchors_k = anchors_k;
            opts.jlt_k = jlt_k;
            grf::DecompositionChain chain = grf::estimate_kernel(g, {d, sigma2}, opts);
            if (symmetrize_chain) chain = grf::symmetrize(std::move(chain));
            return chain;
        },
        "graph"_a, "d"_a = 1, "sigma2"_a = 0.2, "p_term"_a = 0.1, "m"_a = 10,
        "sampler"_a = "uniform", "seed"_a = 0, "anchors_k"_a = 0, "jlt_k"_a = 0,
        "threads"_a = 1, "symmetrize"_a = false);

    m.def("exact_kernel_matrix",
          [](const grf::Graph& g, int d, double sigma2) {
              return grf::oracle::exact_kernel_matrix(g, {d, sigma2});
          },
          "graph"_a, "d"_a = 1, "sigma2"_a = 0.2);

    m.def(
        "solve_linear",
        [](const grf::WalkMatrix& u, const Eigen::VectorXd& b, double p_term, int m,
           std::uint64_t seed, int threads) {
            return grf::solve_linear(u, b, make_walk_config(p_term, m, "uniform", seed, threads));
        },
        "u"_a, "b"_a, "p_term"_a = 0.1, "m"_a = 10, "seed"_a = 0, "threads"_a = 1);

    m.def(
        "kernel_kmeans",
        [](const grf::DecompositionChain& chain, int n_clusters, std::uint64_t seed,
           int max_iter, int restarts) {
            const grf::ChainKernel kernel(chain);
            const grf::ClusteringResult result =
                grf::kernel_kmeans_restarted(kernel, n_clusters, seed, restarts, max_iter);
            return py::make_tuple(result.labels, result.converged, result.iterations_run);
        },
        "chain"_a, "n_clusters"_a, "seed"_a = 0, "max_iter"_a = 100, "restarts"_a = 1);

    m.def(
        "kernel_kmeans_dense",
        [](const Eigen::MatrixXd& kernel, int n_clusters, std::uint64_t seed, int max_iter,
           int restarts) {
            const grf::DenseKernel wrapped(kernel);
            const grf::ClusteringResult result =
                grf::kernel_kmeans_restarted(wrapped, n_clusters, seed, restarts, max_iter);
            return py::make_tuple(result.labels, result.converged, result.iterations_run);
        },
        "kernel"_a, "n_clusters"_a, "seed"_a = 0, "max_iter"_a = 100, "restarts"_a = 1);

    m.def("clustering_error", &grf::clustering_error, "a"_a, "b"_a);
    m.def("frobenius_error", &grf::frobenius_error, "exact"_a, "approx"_a);

    m.def("positive_definiteness_check", &grf::oracle::positive_definiteness_check,
          "kernel"_a, "tol"_a = 1e-10);

    m.def(
        "spectral_radius_report",
        [](const grf::WalkMatrix& u, int iterations, std::uint64_t seed) {
            const grf::SpectralRadiusReport report =
                grf::spectral_radius_report(u, iterations, seed);
            return py::make_tuple(report.power_estimate, report.gershgorin_bound,
                                  report.certified_bound);
        },
        "u"_a, "iterations"_a = 50, "seed"_a = 0);
}
