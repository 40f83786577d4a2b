"""Random-walk estimators of regularized Laplacian graph kernels."""

from ._grf import (
    DecompositionChain,
    Graph,
    WalkMatrix,
    build_u_matrix,
    clustering_error,
    estimate_kernel,
    exact_kernel_matrix,
    feature_matrix,
    frobenius_error,
    kernel_kmeans,
    kernel_kmeans_dense,
    positive_definiteness_check,
    solve_linear,
    spectral_radius_report,
)

__all__ = [
    "DecompositionChain",
    "Graph",
    "WalkMatrix",
    "build_u_matrix",
    "clustering_error",
    "estimate_kernel",
    "exact_kernel_matrix",
    "feature_matrix",
    "frobenius_error",
    "kernel_kmeans",
    "kernel_kmeans_dense",
    "positive_definiteness_check",
    "solve_linear",
    "spectral_radius_report",
]
