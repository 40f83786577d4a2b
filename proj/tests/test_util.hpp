#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grf/graph.hpp"

#ifndef GRF_TEST_DATA_DIR
#define GRF_TEST_DATA_DIR "."
#endif

namespace grf::test {

inline Graph load_karate() {
    std::ifstream in(std::string(GRF_TEST_DATA_DIR) + "/karate.edges");
    if (!in) throw std::runtime_error("karate fixture missing");
    return load_edge_list(in);
}

inline Graph path_graph(NodeId n) {
    std::vector<Graph::Edge> edges;
    for (NodeId v = 0; v + 1 < n; ++v) edges.push_back({v, static_cast<NodeId>(v + 1), 1.0});
    return Graph::from_edges(n, edges);
}

inline Graph two_node_graph(double w = 1.0) {
    return Graph::from_edges(2, {{0, 1, w}});
}

// Mean/variance accumulator for entrywise Monte Carlo checks.
struct RunningStats {
    Eigen::MatrixXd sum;
    Eigen::MatrixXd sum_sq;
    std::int64_t count = 0;

    explicit RunningStats(Eigen::Index n) {
        sum = Eigen::MatrixXd::Zero(n, n);
        sum_sq = Eigen::MatrixXd::Zero(n, n);
    }

    void add(const Eigen::MatrixXd& sample) {
        sum += sample;
        sum_sq += sample.cwiseProduct(sample);
        ++count;
    }

    [[nodiscard]] Eigen::MatrixXd mean() const { return sum / static_cast<double>(count); }

    [[nodiscard]] Eigen::MatrixXd standard_error() const {
        const Eigen::MatrixXd m = mean();
        Eigen::MatrixXd var =
            (sum_sq / static_cast<double>(count) - m.cwiseProduct(m)).cwiseMax(0.0);
        return (var / static_cast<double>(count - 1)).cwiseSqrt();
    }

    // Fraction of entries whose mean lies within `sigmas` standard errors of
    // the reference; zero-variance entries must match exactly.
    [[nodiscard]] double fraction_within(const Eigen::MatrixXd& reference, double sigmas) const {
        const Eigen::MatrixXd m = mean();
        const Eigen::MatrixXd se = standard_error();
        std::int64_t ok = 0;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                const double diff = std::abs(m(i, j) - reference(i, j));
                if (se(i, j) == 0.0 ? diff < 1e-12 : diff <= sigmas * se(i, j)) ++ok;
            }
        return static_cast<double>(ok) / static_cast<double>(m.size());
    }
};

}  // namespace grf::test
