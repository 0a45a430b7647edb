"""Node-domain sampling operators and subspace-based reconstruction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSubspaceError, InvalidInputError
from .signals import SubspaceDictionary

MSE_FLOOR_DB = -320.0


@dataclass
class SamplingSet:
    """Subset of nodes in indicator and sorted-index form."""

    indicator: np.ndarray
    indices: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        m = np.asarray(self.indicator)
        if m.ndim != 1 or not np.all((m == 0) | (m == 1)):
            raise InvalidInputError("indicator must be a 0/1 vector")
        self.indicator = m.astype(np.int64)
        idx = np.flatnonzero(self.indicator)
        if self.indices is None:
            self.indices = idx
        else:
            given = np.asarray(self.indices, dtype=np.int64)
            if not np.array_equal(np.sort(given), idx):
                raise InvalidInputError("indices inconsistent with indicator")
            self.indices = idx

    @classmethod
    def from_indices(cls, n: int, indices) -> "SamplingSet":
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise InvalidInputError("indices out of range")
        if len(np.unique(idx)) != idx.size:
            raise InvalidInputError("indices must be unique")
        m = np.zeros(n, dtype=np.int64)
        m[idx] = 1
        return cls(indicator=m)

    @property
    def n_nodes(self) -> int:
        return self.indicator.shape[0]

    def __len__(self) -> int:
        return int(self.indicator.sum())


@dataclass
class Measurement:
    """Values observed on a sampling set, with the noise level that made them."""

    values: np.ndarray
    sset: SamplingSet
    sigma: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.values, dtype=float)
        if y.shape != (len(self.sset),):
            raise InvalidInputError("measurement length must match the sampling set")
        if self.sigma < 0:
            raise InvalidInputError("sigma must be nonnegative")
        self.values = y


def sample(x: np.ndarray, sset: SamplingSet, sigma: float = 0.0,
           seed: int = 0) -> Measurement:
    """Observe ``x`` on the sampling set with white Gaussian noise."""
    if len(sset) == 0:
        raise InvalidInputError("sampling set must be nonempty")
    x = np.asarray(x, dtype=float)
    if x.shape != (sset.n_nodes,):
        raise InvalidInputError("signal length must match the sampling set")
    y = x[sset.indices].copy()
    if sigma > 0:
        rng = np.random.default_rng(seed)
        y += rng.normal(scale=sigma, size=y.shape)
    return Measurement(values=y, sset=sset, sigma=sigma)


def _pinv(mat: np.ndarray) -> np.ndarray:
    rcond = max(mat.shape) * np.finfo(float).eps
    return np.linalg.pinv(mat, rcond=rcond)


def minimax_reconstruct(A: SubspaceDictionary, meas: Measurement) -> np.ndarray:
    """Best worst-case recovery under the subspace prior: ``A (S^T A)^+ y``.

    Perfect on noiseless measurements whenever the sampled dictionary block is
    invertible; degenerates to the minimum-norm consistent estimate otherwise.
    """
    mat = A.matrix
    if mat.shape[0] != meas.sset.n_nodes:
        raise InvalidInputError("dictionary and sampling set sizes differ")
    sampled = mat[meas.sset.indices, :]
    if not np.any(sampled):
        raise DegenerateSubspaceError("dictionary vanishes on the sampled nodes")
    return mat @ (_pinv(sampled) @ meas.values)


def ls_reconstruct(meas: Measurement) -> np.ndarray:
    """Least-squares (zero-padding) recovery: observed values, zeros elsewhere."""
    out = np.zeros(meas.sset.n_nodes)
    out[meas.sset.indices] = meas.values
    return out


def aopt_objective(A: SubspaceDictionary, sset: SamplingSet) -> float:
    """Trace of the inverse sampled Gram block, ``tr((S^T A A^T S)^{-1})``.

    Returns ``inf`` when the block is singular; greedy selection baselines use
    the sentinel to skip unusable candidates.
    """
    mat = A.matrix
    if mat.shape[0] != sset.n_nodes:
        raise InvalidInputError("dictionary and sampling set sizes differ")
    rows = mat[sset.indices, :]
    B = rows @ rows.T
    k = B.shape[0]
    try:
        inv = np.linalg.inv(B)
    except np.linalg.LinAlgError:
        return np.inf
    # inv() can silently succeed on numerically singular blocks; sanity-check.
    if not np.all(np.isfinite(inv)) or np.linalg.norm(B @ inv - np.eye(k)) > 1e-6 * k:
        return np.inf
    return float(np.trace(inv))


def mse_db(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Per-node mean squared error in decibels, floored at -320 dB."""
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise InvalidInputError("signals must have the same length")
    mse = float(np.sum((x_hat - x) ** 2)) / x.size
    if mse <= 0:
        return MSE_FLOOR_DB
    return max(10.0 * np.log10(mse), MSE_FLOOR_DB)
