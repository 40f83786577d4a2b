#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "grf/graph.hpp"
#include "grf/oracle.hpp"
#include "grf/walk.hpp"

namespace grf {

class FlopCounter;

// Plain row-sparse matrix used as a chain factor.
struct RowSparseMatrix {
    NodeId row_count = 0;
    NodeId col_count = 0;
    std::vector<std::int64_t> offsets;
    std::vector<NodeId> cols;
    std::vector<double> vals;

    static RowSparseMatrix from_features(const FeatureMatrix& fm, double scale,
                                         FlopCounter* flops = nullptr);

    [[nodiscard]] std::int64_t nnz() const noexcept {
        return static_cast<std::int64_t>(vals.size());
    }

    bool operator==(const RowSparseMatrix&) const = default;
};

// Ordered list of factor matrices whose product is the kernel-matrix
// estimate. The N x N product is only ever formed through materialize(),
// which is reserved for oracle and test paths; inference goes through
// matvec.
class DecompositionChain {
public:
    struct Factor {
        enum class Kind { Sparse, Dense };
        Kind kind = Kind::Sparse;
        bool transposed = false;
        RowSparseMatrix sparse;
        Eigen::MatrixXd dense;

        [[nodiscard]] Eigen::Index rows() const;  // after transposition
        [[nodiscard]] Eigen::Index cols() const;

        static Factor sparse_factor(RowSparseMatrix m, bool transposed);
        static Factor dense_factor(Eigen::MatrixXd m, bool transposed);
    };

    DecompositionChain() = default;
    DecompositionChain(std::vector<Factor> factors, bool symmetrized);

    [[nodiscard]] NodeId size() const noexcept { return n_; }
    [[nodiscard]] const std::vector<Factor>& factors() const noexcept { return factors_; }
    [[nodiscard]] bool symmetrized() const noexcept { return symmetrized_; }

    // Applies factors right to left. With the symmetrized flag set the result
    // is (P x + P^T x)/2 for the factor product P.
    [[nodiscard]] Eigen::VectorXd matvec(const Eigen::VectorXd& x,
                                         FlopCounter* flops = nullptr) const;

    // Diagonal of the estimate; defined for two-factor chains.
    [[nodiscard]] Eigen::VectorXd diagonal(FlopCounter* flops = nullptr) const;

    // Dense product, test/oracle paths only.
    [[nodiscard]] Eigen::MatrixXd materialize() const;

    void serialize(std::ostream& out) const;
    static DecompositionChain parse(std::istream& in);

    bool operator==(const DecompositionChain& other) const;

private:
    [[nodiscard]] Eigen::VectorXd apply_product(const Eigen::VectorXd& x, bool transposed,
                                                FlopCounter* flops) const;

    std::vector<Factor> factors_;
    bool symmetrized_ = false;
    NodeId n_ = 0;
};

Eigen::VectorXd kernel_matvec(const DecompositionChain& chain, const Eigen::VectorXd& x,
                              FlopCounter* flops = nullptr);

// Estimation options: walk parameters plus optional compression. Anchors act
// at walk time over one set shared by both feature-matrix copies (with the
// rescale folded so the pair stays unbiased); the JLT is applied afterwards
// and is likewise shared.
struct GrfOptions {
    WalkConfig walk;
    NodeId anchors_k = 0;  // 0 disables anchor points
    int jlt_k = 0;         // 0 disables the JLT
};

// Two-factor chain [C, C'^T] with E[C C'^T] = (I + sigma2 L)^-2.
DecompositionChain estimate_d2(const Graph& g, double sigma2, const GrfOptions& opts,
                               FlopCounter* flops = nullptr);

// Two-factor chain [C, D^T], D = (I + sigma2 L) C', with E[C D^T] =
// (I + sigma2 L)^-1. Asymmetric per realization; see symmetrize.
DecompositionChain estimate_d1(const Graph& g, double sigma2, const GrfOptions& opts,
                               FlopCounter* flops = nullptr);

// (C D^T + D C^T)/2: exactly symmetric per realization, still unbiased.
DecompositionChain symmetrize(DecompositionChain chain);

// Takes a two-factor chain estimating power d and two fresh feature-matrix
// copies to produce a two-factor chain estimating power d+2, via the SVD of
// the K x K coupling matrix.
DecompositionChain extend_d_plus_2(const DecompositionChain& chain, const Graph& g,
                                   double sigma2, const GrfOptions& opts,
                                   FlopCounter* flops = nullptr);

// Chain for (I + sigma2 L)^-d, any d >= 1, built from the d=1/d=2 bases and
// repeated extension. Each stage consumes an independent seed stream derived
// from opts.walk.master_seed.
DecompositionChain estimate_kernel(const Graph& g, const LaplacianKernelSpec& spec,
                                   const GrfOptions& opts, FlopCounter* flops = nullptr);

// Unbiased randomized solve of (I - U) x = b, evaluated as
// lambda * (C (D^T b)) with the matvec order fixed by the brackets.
Eigen::VectorXd solve_linear(const WalkMatrix& u, const Eigen::VectorXd& b,
                             const WalkConfig& cfg, FlopCounter* flops = nullptr);

}  // namespace grf
