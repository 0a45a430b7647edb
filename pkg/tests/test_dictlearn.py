"""Confidence-weighted dictionary learning."""

import numpy as np
import pytest
from scipy.optimize import brentq

from gspart import (DictLearnConfig, InvalidInputError, SubspaceDictionary,
                    coefficient_gradient, learn, load_dictionary,
                    prox_l1_budget, save_dictionary, update_coefficients,
                    update_dictionary, weighted_objective)


class TestCoefficientGradient:
    def test_zero_confidence_zero_gradient(self):
        rng = np.random.default_rng(0)
        A = SubspaceDictionary(rng.normal(size=(6, 3)))
        g = coefficient_gradient(rng.normal(size=6), A, rng.normal(size=3),
                                 np.zeros(6))
        np.testing.assert_array_equal(g, 0)

    def test_zero_residual_zero_gradient(self):
        rng = np.random.default_rng(1)
        A = SubspaceDictionary(rng.normal(size=(6, 3)))
        d = rng.normal(size=3)
        g = coefficient_gradient(A.matrix @ d, A, d, np.ones(6))
        np.testing.assert_allclose(g, 0, atol=1e-12)

    def test_finite_difference(self):
        rng = np.random.default_rng(2)
        n, m = 12, 4
        A = SubspaceDictionary(rng.normal(size=(n, m)))
        x = rng.normal(size=n)
        d = rng.normal(size=m)
        w = rng.uniform(0, 1, n)

        def psi(dd):
            return float(np.sum((w * (x - A.matrix @ dd)) ** 2))

        grad = coefficient_gradient(x, A, d, w)
        h = 1e-6
        for i in range(m):
            e = np.zeros(m)
            e[i] = h
            fd = (psi(d + e) - psi(d - e)) / (2 * h)
            assert grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-7)


class TestProxL1Budget:
    def test_within_budget_unchanged(self):
        Y = np.array([[0.5, -0.5], [0.1, 0.2]])
        np.testing.assert_array_equal(prox_l1_budget(Y, 4.0), Y)

    def test_hand_worked_row(self):
        out = prox_l1_budget(np.array([[3.0, 1.0]]), 2.0)
        np.testing.assert_allclose(out, [[2.0, 0.0]])

    def test_water_filling_level_matches_root_solve(self):
        # independent oracle: solve the per-row threshold equation by brentq
        rng = np.random.default_rng(3)
        Y = rng.normal(scale=2.0, size=(5, 7))
        budget = 4.0
        per_row = budget / 5
        out = prox_l1_budget(Y, budget)
        for i in range(5):
            if np.abs(Y[i]).sum() <= per_row:
                np.testing.assert_array_equal(out[i], Y[i])
                continue
            zeta = brentq(lambda z: np.maximum(np.abs(Y[i]) - z, 0).sum() - per_row,
                          0.0, np.abs(Y[i]).max())
            expected = np.sign(Y[i]) * np.maximum(np.abs(Y[i]) - zeta, 0.0)
            np.testing.assert_allclose(out[i], expected, atol=1e-12)
            assert np.abs(out[i]).sum() == pytest.approx(per_row)

    def test_moreau_identity(self):
        rng = np.random.default_rng(4)
        Y = rng.normal(scale=3.0, size=(4, 6))
        budget = 2.5
        proj = prox_l1_budget(Y, budget)
        linf_part = Y - proj
        # the complementary piece is an elementwise clamp at the row level
        zeta = np.max(np.abs(linf_part), axis=1)
        expected = np.sign(Y) * np.minimum(np.abs(Y), zeta[:, None])
        over = np.abs(Y).sum(axis=1) > budget / 4
        np.testing.assert_allclose(linf_part[over], expected[over], atol=1e-10)
        np.testing.assert_allclose(proj + linf_part, Y, atol=1e-12)

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        Y = rng.normal(scale=3.0, size=(6, 8))
        once = prox_l1_budget(Y, 3.0)
        twice = prox_l1_budget(once, 3.0)
        np.testing.assert_array_equal(once, twice)

    def test_nonexpansive(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            u = rng.normal(scale=2, size=(3, 5))
            v = rng.normal(scale=2, size=(3, 5))
            pu = prox_l1_budget(u, 2.0)
            pv = prox_l1_budget(v, 2.0)
            assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-10

    def test_one_dim_input(self):
        out = prox_l1_budget(np.array([3.0, 1.0]), 2.0)
        assert out.shape == (2,)
        np.testing.assert_allclose(out, [2.0, 0.0])


class TestUpdateCoefficients:
    def test_unconstrained_least_squares_limit(self):
        rng = np.random.default_rng(7)
        q, _ = np.linalg.qr(rng.normal(size=(10, 4)))
        A = SubspaceDictionary(q)
        X = rng.normal(size=(10, 5))
        W = np.ones((10, 5))
        cfg = DictLearnConfig(budget=1e9, max_inner=500, tol_inner=1e-12)
        D = update_coefficients(X, A, W, cfg)
        np.testing.assert_allclose(D, q.T @ X, atol=1e-6)

    def test_zero_data_zero_coefficients(self):
        rng = np.random.default_rng(8)
        A = SubspaceDictionary(rng.normal(size=(8, 3)))
        cfg = DictLearnConfig(budget=10.0, max_inner=500, tol_inner=1e-12)
        D = update_coefficients(np.zeros((8, 4)), A, np.ones((8, 4)), cfg)
        np.testing.assert_allclose(D, 0, atol=1e-8)

    def test_objective_monotone(self):
        rng = np.random.default_rng(9)
        A = SubspaceDictionary(rng.normal(size=(10, 4)))
        X = rng.normal(size=(10, 6))
        W = rng.uniform(0, 1, size=(10, 6))
        vals = []
        update_coefficients(X, A, W, DictLearnConfig(budget=3.0, max_inner=100),
                            callback=vals.append)
        assert np.all(np.diff(vals) <= 1e-8)


class TestUpdateDictionary:
    def test_zero_coefficients_keep_dictionary(self):
        rng = np.random.default_rng(10)
        A0 = SubspaceDictionary(rng.normal(size=(6, 3)))
        X = rng.normal(size=(6, 4))
        out = update_dictionary(X, np.zeros((3, 4)), np.ones((6, 4)),
                                DictLearnConfig(budget=1.0), A0)
        np.testing.assert_array_equal(out.matrix, A0.matrix)

    def test_rank_one_regression(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(7, 1))
        A0 = SubspaceDictionary(rng.normal(size=(7, 1)))
        cfg = DictLearnConfig(budget=1.0, max_inner=2000, tol_inner=1e-14)
        out = update_dictionary(x, np.ones((1, 1)), np.ones((7, 1)), cfg, A0)
        assert np.linalg.norm(out.matrix - x) <= 1e-6

    def test_finite_difference(self):
        rng = np.random.default_rng(12)
        n, m, cols = 6, 3, 4
        A = rng.normal(size=(n, m))
        D = rng.normal(size=(m, cols))
        X = rng.normal(size=(n, cols))
        W = rng.uniform(0, 1, size=(n, cols))

        grad = 2.0 * ((W ** 2 * (A @ D - X)) @ D.T)
        h = 1e-6
        for i in range(n):
            for j in range(m):
                E = np.zeros_like(A)
                E[i, j] = h
                fd = (weighted_objective(X, A + E, D, W)
                      - weighted_objective(X, A - E, D, W)) / (2 * h)
                assert grad[i, j] == pytest.approx(fd, rel=1e-5, abs=1e-6)


class TestLearn:
    def test_zero_confidence_returns_initial(self):
        rng = np.random.default_rng(13)
        A0 = SubspaceDictionary(rng.normal(size=(8, 8)))
        X = rng.normal(size=(8, 5))
        out = learn(X, np.zeros((8, 5)), A0, DictLearnConfig(budget=5.0))
        np.testing.assert_array_equal(out.matrix, A0.matrix)

    def test_outer_objective_monotone(self):
        rng = np.random.default_rng(14)
        A0 = SubspaceDictionary(np.eye(10))
        Astar = rng.normal(size=(10, 3))
        X = Astar @ rng.normal(size=(3, 8))
        W = rng.uniform(0.2, 1, size=(10, 8))
        vals = []
        learn(X, W, A0, DictLearnConfig(budget=50.0, max_outer=20, max_inner=50),
              callback=vals.append)
        assert np.all(np.diff(vals) <= 1e-8 * max(1, abs(vals[0])))

    def test_planted_subspace_recovery(self):
        rng = np.random.default_rng(15)
        n, r, cols = 16, 3, 40
        Astar = rng.normal(size=(n, r))
        X = Astar @ rng.normal(size=(r, cols)) + 0.01 * rng.normal(size=(n, cols))
        cfg = DictLearnConfig(budget=1e6, max_outer=60, max_inner=200,
                              tol_outer=1e-9, tol_inner=1e-9)
        A0 = SubspaceDictionary(rng.normal(size=(n, r)))
        out = learn(X, np.ones((n, cols)), A0, cfg)
        u_star, _, _ = np.linalg.svd(Astar, full_matrices=False)
        u_hat, _, _ = np.linalg.svd(out.matrix, full_matrices=False)
        angles = np.arccos(np.clip(np.linalg.svd(u_star.T @ u_hat)[1], 0, 1))
        assert angles.max() <= 0.2

    def test_zero_confidence_column_bit_identical(self):
        rng = np.random.default_rng(16)
        n, cols = 9, 6
        A0 = SubspaceDictionary(rng.normal(size=(n, 4)))
        X = rng.normal(size=(n, cols))
        W = rng.uniform(0.1, 1, size=(n, cols))
        W[:, 2] = 0.0
        cfg = DictLearnConfig(budget=4.0, max_outer=5, max_inner=30)
        full = learn(X, W, A0, cfg)
        keep = [0, 1, 3, 4, 5]
        reduced = learn(X[:, keep], W[:, keep], A0, cfg)
        np.testing.assert_array_equal(full.matrix, reduced.matrix)

    def test_paper_scale_parameters_accepted(self):
        cfg = DictLearnConfig(budget=3e2)
        assert cfg.budget == 300.0

    def test_config_validation(self):
        with pytest.raises(InvalidInputError):
            DictLearnConfig(budget=0.0)
        with pytest.raises(InvalidInputError):
            DictLearnConfig(budget=1.0, step_coeff=-1.0)


class TestDictionaryIO:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(17)
        A = SubspaceDictionary(rng.normal(size=(5, 3)))
        path = tmp_path / "dict.txt"
        save_dictionary(A, path)
        back = load_dictionary(path)
        np.testing.assert_array_equal(back.matrix, A.matrix)
        assert path.read_text().splitlines()[0] == "5 3"
