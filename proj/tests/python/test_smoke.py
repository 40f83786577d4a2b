"""Smoke tests for the python extension module."""

import os

import numpy as np
import pytest

import _grf as grf

DATA_DIR = os.environ.get("GRF_TEST_DATA", os.path.join(os.path.dirname(__file__), "..", "data"))


def karate():
    return grf.Graph.load(os.path.join(DATA_DIR, "karate.edges"))


def test_graph_construction():
    g = grf.Graph(3, [(0, 1, 1.0), (1, 2, 0.5)])
    assert g.n == 3
    assert g.edge_count == 2
    assert g.degree(1) == 2
    assert g.weighted_degree(1) == pytest.approx(1.5)


def test_erdos_renyi_determinism():
    a = grf.Graph.erdos_renyi(40, 0.3, seed=5)
    b = grf.Graph.erdos_renyi(40, 0.3, seed=5)
    assert a == b
    assert a.serialize() == b.serialize()


def test_karate_fixture():
    g = karate()
    assert g.n == 34
    assert g.edge_count == 78


def test_exact_kernel_is_symmetric_pd():
    g = karate()
    k = grf.exact_kernel_matrix(g, d=2, sigma2=0.2)
    assert k.shape == (34, 34)
    assert np.abs(k - k.T).max() < 1e-10
    assert grf.positive_definiteness_check(k, tol=1e-10)


def test_feature_matrix_deterministic_across_threads():
    g = grf.Graph.erdos_renyi(30, 0.4, seed=9)
    u = grf.build_u_matrix(g, 0.2)
    one = grf.feature_matrix(u, p_term=0.2, m=6, seed=42, threads=1)
    two = grf.feature_matrix(u, p_term=0.2, m=6, seed=42, threads=2)
    assert np.array_equal(one, two)


def test_estimate_matches_oracle_loosely():
    g = grf.Graph.erdos_renyi(20, 0.4, seed=3)
    exact = grf.exact_kernel_matrix(g, d=2, sigma2=0.2)
    chain = grf.estimate_kernel(g, d=2, sigma2=0.2, p_term=0.2, m=400, seed=11)
    assert grf.frobenius_error(exact, chain.materialize()) < 0.15


def test_chain_matvec_consistent_with_materialization():
    g = grf.Graph.erdos_renyi(12, 0.5, seed=6)
    chain = grf.estimate_kernel(g, d=1, sigma2=0.2, p_term=0.3, m=4, seed=2, symmetrize=True)
    dense = chain.materialize()
    x = np.linspace(-1.0, 1.0, 12)
    assert np.allclose(chain.matvec(x), dense @ x, atol=1e-10)
    assert np.allclose(chain.diagonal(), np.diag(dense), atol=1e-10)


def test_solve_linear_zero_graph_is_exact():
    g = grf.Graph(4, [])
    u = grf.build_u_matrix(g, 0.2)
    b = np.array([1.0, -2.0, 0.5, 3.0])
    x = grf.solve_linear(u, b, p_term=0.5, m=3, seed=1)
    assert np.allclose(x, b / 1.2 * 1.2)  # lambda (I - U) = lambda I here


def test_kernel_kmeans_runs_and_is_deterministic():
    g = karate()
    chain = grf.estimate_kernel(g, d=2, sigma2=0.2, p_term=0.1, m=40, seed=77, symmetrize=True)
    labels1, _, _ = grf.kernel_kmeans(chain, n_clusters=3, seed=7, restarts=8)
    labels2, _, _ = grf.kernel_kmeans(chain, n_clusters=3, seed=7, restarts=8)
    assert labels1 == labels2
    assert len(labels1) == 34
    assert set(labels1) <= {0, 1, 2}


def test_clustering_error_metric():
    assert grf.clustering_error([0, 0, 1, 1], [1, 1, 0, 0]) == 0.0
    assert grf.clustering_error([0, 0], [0, 1]) == 1.0


def test_spectral_radius_report():
    g = karate()
    u = grf.build_u_matrix(g, 0.2)
    estimate, gershgorin, certified = grf.spectral_radius_report(u, iterations=80, seed=1)
    assert certified == pytest.approx(0.2 / 1.2)
    assert estimate <= certified + 1e-9
    assert gershgorin >= estimate
