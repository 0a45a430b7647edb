"""Synthetic signal generators and cluster drift."""

import numpy as np
import pytest
from scipy.stats import spearmanr

from gspart import (InvalidInputError, add_noise, boundary_nodes,
                    build_knn_graph, drift_clusters, gft_basis,
                    heat_diffusion, indicator_matrix, load_trace_csv,
                    make_tv_trace, piecewise_smooth, save_trace_csv,
                    spectral_clustering, time_varying_pws, two_hop_boundary,
                    tv_smoothing_rate)


@pytest.fixture(scope="module")
def sensor_graph():
    rng = np.random.default_rng(100)
    g = build_knn_graph(rng.uniform(0, 1, (60, 2)), 4)
    return g, gft_basis(g)


@pytest.fixture(scope="module")
def clusters(sensor_graph):
    g, _ = sensor_graph
    return spectral_clustering(g, 3, seed=0)


class TestHeatDiffusion:
    def test_alpha_zero_is_identity(self, sensor_graph):
        _, basis = sensor_graph
        A, x = heat_diffusion(basis, 0.0, seed=1)
        np.testing.assert_allclose(A.matrix, np.eye(60), atol=1e-10)

    def test_filter_symmetric(self, sensor_graph):
        _, basis = sensor_graph
        A, _ = heat_diffusion(basis, 3.0, seed=1)
        assert np.max(np.abs(A.matrix - A.matrix.T)) < 1e-10

    def test_spectrum_decays_on_average(self, sensor_graph):
        # |GFT coefficient| should trend down with frequency rank
        _, basis = sensor_graph
        corrs = []
        for seed in range(20):
            _, x = heat_diffusion(basis, 3.0, seed=seed)
            mags = np.abs(basis.eigenvectors.T @ x)
            corrs.append(spearmanr(np.arange(60), mags).statistic)
        assert np.mean(corrs) < 0

    def test_signal_in_range(self, sensor_graph):
        _, basis = sensor_graph
        A, x = heat_diffusion(basis, 2.0, seed=3)
        coef, *_ = np.linalg.lstsq(A.matrix, x, rcond=None)
        assert np.linalg.norm(A.matrix @ coef - x) <= 1e-10 * max(1, np.linalg.norm(x))


class TestPiecewiseSmooth:
    def test_dictionary_shape(self, sensor_graph, clusters):
        _, basis = sensor_graph
        A, _ = piecewise_smooth(basis, clusters, seed=2, n_smooth_cols=16)
        assert A.matrix.shape == (60, 19)

    def test_indicator_block_piecewise_constant(self, sensor_graph, clusters):
        _, basis = sensor_graph
        A, _ = piecewise_smooth(basis, clusters, seed=2, n_smooth_cols=16)
        ind = A.matrix[:, 16:]
        np.testing.assert_array_equal(np.unique(ind), [0.0, 1.0])
        np.testing.assert_allclose(ind.sum(axis=1), 1.0)

    def test_signal_in_range(self, sensor_graph, clusters):
        _, basis = sensor_graph
        A, x = piecewise_smooth(basis, clusters, seed=4, n_smooth_cols=16)
        coef, *_ = np.linalg.lstsq(A.matrix, x, rcond=None)
        assert np.linalg.norm(A.matrix @ coef - x) <= 1e-10 * max(1, np.linalg.norm(x))

    def test_cluster_offset_variance(self, sensor_graph, clusters):
        # recover the 3 offset coefficients per seed; sample variance ~ 5
        _, basis = sensor_graph
        draws = []
        for seed in range(300):
            A, x = piecewise_smooth(basis, clusters, seed=seed, n_smooth_cols=16)
            coef, *_ = np.linalg.lstsq(A.matrix, x, rcond=None)
            draws.extend(coef[16:])
        assert np.var(draws) == pytest.approx(5.0, rel=0.15)

    def test_bad_clusters_rejected(self, sensor_graph):
        _, basis = sensor_graph
        with pytest.raises(InvalidInputError):
            piecewise_smooth(basis, [np.arange(10), np.arange(5, 60)], seed=0,
                             n_smooth_cols=8)


class TestTimeVaryingPws:
    def test_rate_schedule(self):
        assert tv_smoothing_rate(0) == pytest.approx(2.0)
        assert tv_smoothing_rate(8) == pytest.approx(3.0)

    def test_top_frequency_attenuation_monotone(self, sensor_graph, clusters):
        _, basis = sensor_graph
        lam_max = basis.eigenvalues[-1]
        gains = [np.exp(-tv_smoothing_rate(t) * lam_max) for t in range(6)]
        assert all(a > b for a, b in zip(gains, gains[1:]))

    def test_same_seed_shares_coefficients(self, sensor_graph, clusters):
        _, basis = sensor_graph
        A0, x0 = time_varying_pws(basis, 0, clusters, seed=9)
        A0b, x0b = time_varying_pws(basis, 0, clusters, seed=9)
        np.testing.assert_array_equal(x0, x0b)

    def test_structural_blocks(self, sensor_graph, clusters):
        _, basis = sensor_graph
        A, _ = time_varying_pws(basis, 3, clusters, seed=9)
        n = basis.n_nodes
        assert A.matrix.shape == (n, n + 3)
        smooth, ind = A.matrix[:, :n], A.matrix[:, n:]
        assert np.max(np.abs(smooth - smooth.T)) < 1e-10
        np.testing.assert_array_equal(ind, indicator_matrix(clusters, n))

    def test_tv_signal_in_range(self, sensor_graph, clusters):
        _, basis = sensor_graph
        A, x = time_varying_pws(basis, 5, clusters, seed=7)
        coef, *_ = np.linalg.lstsq(A.matrix, x, rcond=None)
        assert np.linalg.norm(A.matrix @ coef - x) <= 1e-10 * max(1, np.linalg.norm(x))

    def test_drift_confined_to_boundary_region(self, sensor_graph, clusters):
        g, basis = sensor_graph
        eligible = set(two_hop_boundary(g, clusters))
        schedule = drift_clusters(g, clusters, 12, p=0.5, seed=3)
        labels = np.empty((12, 60), dtype=int)
        for t, cl in enumerate(schedule):
            for j, c in enumerate(cl):
                labels[t, c] = j
        changed = np.flatnonzero((labels != labels[0]).any(axis=0))
        assert set(changed) <= eligible

    def test_boundary_nodes_have_cross_edges(self, sensor_graph, clusters):
        g, _ = sensor_graph
        labels = np.empty(60, dtype=int)
        for j, c in enumerate(clusters):
            labels[c] = j
        for b in boundary_nodes(g, clusters):
            nbrs = np.flatnonzero(g.weights[b] > 0)
            assert np.any(labels[nbrs] != labels[b])


class TestAddNoise:
    def test_sigma_zero_identity(self):
        x = np.arange(5.0)
        np.testing.assert_array_equal(add_noise(x, 0.0, seed=1), x)

    def test_monte_carlo_variance(self):
        sigma2 = 1e-3
        x = np.zeros(1000)
        draws = np.concatenate([add_noise(x, np.sqrt(sigma2), seed=s)
                                for s in range(100)])
        assert draws.var() == pytest.approx(sigma2, rel=0.02)

    def test_negative_sigma_rejected(self):
        with pytest.raises(InvalidInputError):
            add_noise(np.zeros(3), -1.0)


class TestTraceIO:
    def test_roundtrip(self, sensor_graph, clusters, tmp_path):
        g, basis = sensor_graph
        trace = make_tv_trace(basis, g, clusters, 5, seed=0)
        path = tmp_path / "trace.csv"
        save_trace_csv(trace, path)
        back = load_trace_csv(path)
        np.testing.assert_array_equal(back.signals, trace.signals)

    def test_subspaces_per_step(self, sensor_graph, clusters):
        g, basis = sensor_graph
        trace = make_tv_trace(basis, g, clusters, 4, seed=1)
        assert len(trace.subspaces) == 4
        assert trace.signals.shape == (60, 4)
