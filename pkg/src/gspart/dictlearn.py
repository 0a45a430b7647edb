"""Confidence-weighted dictionary learning for streaming subspace tracking.

Alternates a proximal-gradient coefficient update under a row-wise l1 budget
with plain gradient descent on the dictionary, both weighted per node by how
much each buffered signal is trusted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalFailureError
from .signals import SubspaceDictionary


@dataclass
class DictLearnConfig:
    """Budget and step-size knobs for the alternating learner."""

    budget: float = 3e2
    budget_scope: str = "rows"
    step_coeff: float | None = None
    step_dict: float | None = None
    max_outer: int = 50
    max_inner: int = 200
    tol_outer: float = 1e-5
    tol_inner: float = 1e-6

    def __post_init__(self):
        if self.budget <= 0:
            raise InvalidInputError("budget must be positive")
        if self.budget_scope not in ("global", "rows"):
            raise InvalidInputError(f"unknown budget scope {self.budget_scope!r}")
        for name in ("step_coeff", "step_dict"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise InvalidInputError(f"{name} must be positive when given")
        if self.max_outer < 1 or self.max_inner < 1:
            raise InvalidInputError("iteration limits must be positive")
        if self.tol_outer <= 0 or self.tol_inner <= 0:
            raise InvalidInputError("tolerances must be positive")


def _check_confidence(W: np.ndarray, shape) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.shape != shape:
        raise InvalidInputError(f"confidence matrix must have shape {shape}")
    if np.any(W < 0) or np.any(W > 1):
        raise InvalidInputError("confidence weights must lie in [0, 1]")
    return W


def weighted_objective(X: np.ndarray, A: np.ndarray, D: np.ndarray,
                       W: np.ndarray) -> float:
    """Confidence-weighted squared fit error of ``X ~ A D``."""
    return float(np.sum((W * (X - A @ D)) ** 2))


def coefficient_gradient(x_col: np.ndarray, A: SubspaceDictionary,
                         d_col: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Per-column gradient of the weighted fit with respect to coefficients."""
    mat = A.matrix
    resid = np.asarray(x_col, dtype=float) - mat @ np.asarray(d_col, dtype=float)
    return -2.0 * (mat.T @ (np.asarray(w, dtype=float) ** 2 * resid))


def prox_l1_global(Y: np.ndarray, budget: float) -> np.ndarray:
    """Projection onto the global l1 ball ``sum_ij |Y_ij| <= budget``.

    One shared water-filling level across all entries, so coefficient mass
    can concentrate on a few heavily reused atoms.
    """
    if budget <= 0:
        raise InvalidInputError("budget must be positive")
    Y_in = np.asarray(Y, dtype=float)
    flat = Y_in.reshape(1, -1)
    return prox_l1_budget(flat, budget).reshape(Y_in.shape)


def prox_l1_budget(Y: np.ndarray, budget: float) -> np.ndarray:
    """Row-wise projection onto the l1 budget ``sum_j |Y_ij| <= budget / n_rows``.

    Rows already inside the budget map to themselves; the rest are
    soft-thresholded by the per-row water-filling level that lands exactly on
    the budget.  Note the row-wise split caps how much any single atom can be
    reused across buffer columns; ``prox_l1_global`` spends the same budget
    without that cap.
    """
    if budget <= 0:
        raise InvalidInputError("budget must be positive")
    Y_in = np.asarray(Y, dtype=float)
    Y = np.atleast_2d(Y_in)
    per_row = budget / Y.shape[0]
    out = Y.copy()
    absY = np.abs(Y)
    # relative slack keeps the map exactly idempotent under roundoff
    over = absY.sum(axis=1) > per_row + 1e-10 * (1.0 + per_row)
    if not np.any(over):
        return out.reshape(Y_in.shape)
    rows = absY[over]
    srt = -np.sort(-rows, axis=1)
    css = np.cumsum(srt, axis=1)
    j = np.arange(1, rows.shape[1] + 1)
    feasible = srt - (css - per_row) / j > 0
    rho = feasible.shape[1] - 1 - np.argmax(feasible[:, ::-1], axis=1)
    zeta = (css[np.arange(rows.shape[0]), rho] - per_row) / (rho + 1)
    out[over] = np.sign(Y[over]) * np.maximum(absY[over] - zeta[:, None], 0.0)
    return out.reshape(Y_in.shape)


def _coeff_step(A: np.ndarray, W: np.ndarray, cfg: DictLearnConfig) -> float:
    if cfg.step_coeff is not None:
        return cfg.step_coeff
    curvature = 2.0 * float(np.linalg.eigvalsh(A.T @ A)[-1]) * float(np.max(W) ** 2)
    return 0.9 / curvature if curvature > 0 else 1.0


def _dict_step(D: np.ndarray, W: np.ndarray, cfg: DictLearnConfig) -> float:
    if cfg.step_dict is not None:
        return cfg.step_dict
    curvature = 2.0 * float(np.linalg.eigvalsh(D @ D.T)[-1]) * float(np.max(W) ** 2)
    return 0.9 / curvature if curvature > 0 else 0.0


def update_coefficients(X: np.ndarray, A: SubspaceDictionary, W: np.ndarray,
                        cfg: DictLearnConfig, d0: np.ndarray | None = None,
                        callback=None) -> np.ndarray:
    """Proximal-gradient coefficient fit under the row-wise l1 budget."""
    X = np.asarray(X, dtype=float)
    mat = A.matrix
    n, n_cols = X.shape
    if mat.shape[0] != n:
        raise InvalidInputError("dictionary and data row counts differ")
    W = _check_confidence(W, X.shape)
    D = np.ones((mat.shape[1], n_cols)) if d0 is None else np.asarray(d0, dtype=float).copy()
    if D.shape != (mat.shape[1], n_cols):
        raise InvalidInputError("coefficient warm start has the wrong shape")
    gamma = _coeff_step(mat, W, cfg)
    prox = prox_l1_budget if cfg.budget_scope == "rows" else prox_l1_global
    W2 = W ** 2
    for _ in range(cfg.max_inner):
        grad = -2.0 * (mat.T @ (W2 * (X - mat @ D)))
        D_new = prox(D - gamma * grad, cfg.budget)
        if not np.all(np.isfinite(D_new)):
            raise NumericalFailureError("coefficient update produced non-finite values")
        if callback is not None:
            callback(weighted_objective(X, mat, D_new, W))
        delta = np.linalg.norm(D_new - D) / max(1.0, np.linalg.norm(D))
        D = D_new
        if delta <= cfg.tol_inner:
            break
    return D


def update_dictionary(X: np.ndarray, D: np.ndarray, W: np.ndarray,
                      cfg: DictLearnConfig, A0: SubspaceDictionary,
                      callback=None) -> SubspaceDictionary:
    """Gradient-descent dictionary refinement with fixed coefficients."""
    X = np.asarray(X, dtype=float)
    D = np.asarray(D, dtype=float)
    W = _check_confidence(W, X.shape)
    A = A0.matrix.copy()
    gamma = _dict_step(D, W, cfg)
    if gamma == 0.0:
        return SubspaceDictionary(A)
    W2 = W ** 2
    for _ in range(cfg.max_inner):
        grad = 2.0 * ((W2 * (A @ D - X)) @ D.T)
        A_new = A - gamma * grad
        if not np.all(np.isfinite(A_new)):
            raise NumericalFailureError("dictionary update produced non-finite values")
        if callback is not None:
            callback(weighted_objective(X, A_new, D, W))
        delta = np.linalg.norm(A_new - A) / max(1.0, np.linalg.norm(A))
        A = A_new
        if delta <= cfg.tol_inner:
            break
    return SubspaceDictionary(A)


def learn(X: np.ndarray, W: np.ndarray, A_init: SubspaceDictionary,
          cfg: DictLearnConfig, callback=None) -> SubspaceDictionary:
    """Alternate coefficient and dictionary updates until the fit stalls.

    Coefficients start from the all-ones matrix, except that columns with no
    confidence anywhere are pinned to zero: they carry no data term, and
    keeping them out of the shared row budgets means dropping such a column
    leaves the result bit-for-bit unchanged.
    """
    X = np.asarray(X, dtype=float)
    W = _check_confidence(W, X.shape)
    A = SubspaceDictionary(A_init.matrix.copy())
    D = np.ones((A.n_atoms, X.shape[1]))
    D[:, ~W.any(axis=0)] = 0.0
    obj_prev = weighted_objective(X, A.matrix, D, W)
    for _ in range(cfg.max_outer):
        D = update_coefficients(X, A, W, cfg, d0=D)
        A = update_dictionary(X, D, W, cfg, A0=A)
        obj = weighted_objective(X, A.matrix, D, W)
        if callback is not None:
            callback(obj)
        if abs(obj_prev - obj) <= cfg.tol_outer * max(1.0, abs(obj_prev)):
            break
        obj_prev = obj
    return A


def save_dictionary(A: SubspaceDictionary, path) -> None:
    """Dense text checkpoint: a ``rows cols`` header line, then one row per line."""
    with open(path, "w") as fh:
        fh.write(f"{A.matrix.shape[0]} {A.matrix.shape[1]}\n")
        for row in A.matrix:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_dictionary(path) -> SubspaceDictionary:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise InvalidInputError("dictionary file must start with a shape header")
        rows, cols = int(header[0]), int(header[1])
        mat = np.loadtxt(fh, ndmin=2)
    if mat.shape != (rows, cols):
        raise InvalidInputError(f"dictionary payload {mat.shape} does not match header")
    return SubspaceDictionary(mat)
