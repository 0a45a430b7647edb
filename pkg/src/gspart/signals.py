"""Synthetic graph-signal generators: heat diffusion, piecewise smooth, drift."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .graphs import GftBasis, Graph

PWS_SMOOTH_COLS = 32
CLUSTER_OFFSET_VAR = 5.0


@dataclass
class SubspaceDictionary:
    """Generation transform whose column span defines the signal subspace."""

    matrix: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if A.ndim != 2:
            raise InvalidInputError("dictionary must be a 2-D matrix")
        if not np.all(np.isfinite(A)):
            raise InvalidInputError("dictionary entries must be finite")
        if np.any(np.all(A == 0.0, axis=0)):
            raise InvalidInputError("dictionary must not contain all-zero columns")
        self.matrix = A

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.matrix.shape[1]


@dataclass
class SignalTrace:
    """Sequence of graph signals with optional ground-truth subspaces."""

    signals: np.ndarray
    subspaces: list[SubspaceDictionary] | None = None
    noise_sigma: float = 0.0

    def __post_init__(self):
        X = np.asarray(self.signals, dtype=float)
        if X.ndim != 2 or X.shape[1] < 1:
            raise InvalidInputError("signals must be an N x T matrix with T >= 1")
        if self.subspaces is not None and len(self.subspaces) != X.shape[1]:
            raise InvalidInputError("need one subspace per time step")
        if self.noise_sigma < 0:
            raise InvalidInputError("noise_sigma must be nonnegative")
        self.signals = X

    @property
    def n_nodes(self) -> int:
        return self.signals.shape[0]

    @property
    def n_steps(self) -> int:
        return self.signals.shape[1]


def _validate_clusters(clusters, n: int) -> list[np.ndarray]:
    sets = [np.asarray(c, dtype=int) for c in clusters]
    seen = np.concatenate(sets) if sets else np.array([], dtype=int)
    if len(seen) != n or len(np.unique(seen)) != n or (len(seen) and (seen.min() < 0 or seen.max() >= n)):
        raise InvalidInputError("clusters must partition the node set")
    if any(c.size == 0 for c in sets):
        raise InvalidInputError("clusters must be nonempty")
    return sets


def indicator_matrix(clusters, n: int) -> np.ndarray:
    """Stack cluster indicator vectors as columns of an N x len(clusters) matrix."""
    sets = _validate_clusters(clusters, n)
    out = np.zeros((n, len(sets)))
    for j, c in enumerate(sets):
        out[c, j] = 1.0
    return out


def _diffusion_filter(basis: GftBasis, alpha: float, normalized: bool) -> np.ndarray:
    lam = basis.eigenvalues
    if normalized:
        lam_max = lam[-1] if lam[-1] > 0 else 1.0
        lam = lam / lam_max
    U = basis.eigenvectors
    return (U * np.exp(-alpha * lam)) @ U.T


def heat_diffusion(basis: GftBasis, alpha: float, seed: int = 0,
                   normalized: bool = False
                   ) -> tuple[SubspaceDictionary, np.ndarray]:
    """Heat-diffusion signal with slowly decaying spectrum.

    The dictionary is the diffusion filter ``U exp(-alpha L) U^T`` applied in
    the Fourier domain, and the signal is the filter acting on coefficients
    drawn from ``N(1, I)``.  With ``normalized=True`` the rate acts on
    eigenvalues rescaled by the largest one (the usual toolbox convention),
    which keeps a graph-independent share of the spectrum alive.
    """
    if alpha < 0:
        raise InvalidInputError("alpha must be nonnegative")
    A = _diffusion_filter(basis, alpha, normalized)
    rng = np.random.default_rng(seed)
    d = rng.normal(loc=1.0, scale=1.0, size=basis.n_nodes)
    return SubspaceDictionary(A), A @ d


def piecewise_smooth(basis: GftBasis, clusters, seed: int = 0,
                     n_smooth_cols: int = PWS_SMOOTH_COLS
                     ) -> tuple[SubspaceDictionary, np.ndarray]:
    """Piecewise-smooth signal: low-frequency variation plus cluster offsets.

    The dictionary concatenates the low-frequency eigenvectors (starting at
    the second-smallest eigenvalue) with the three cluster indicator vectors.
    Smooth coefficients are ``N(1, I)`` and cluster offsets ``N(0, 5 I)``.
    """
    n = basis.n_nodes
    ncols = n_smooth_cols
    if ncols < 1 or ncols + 1 > n:
        raise InvalidInputError("smooth block does not fit the graph size")
    smooth_block = basis.eigenvectors[:, 1:ncols + 1]
    ind = indicator_matrix(clusters, n)
    A = np.hstack([smooth_block, ind])
    rng = np.random.default_rng(seed)
    d1 = rng.normal(loc=1.0, scale=1.0, size=ncols)
    d2 = rng.normal(loc=0.0, scale=np.sqrt(CLUSTER_OFFSET_VAR), size=ind.shape[1])
    return SubspaceDictionary(A), smooth_block @ d1 + ind @ d2


def tv_smoothing_rate(t: int) -> float:
    """Diffusion rate schedule for the time-varying generator: 2 + t/8."""
    return 2.0 + t / 8.0


def time_varying_pws(basis: GftBasis, t: int, clusters_t, seed: int = 0,
                     normalized: bool = False
                     ) -> tuple[SubspaceDictionary, np.ndarray]:
    """Time-varying piecewise-smooth signal that smooths as ``t`` grows.

    The smooth block is the full diffusion filter with rate ``2 + t/8`` and
    the offset block holds the (possibly drifted) cluster indicators at ``t``.
    The coefficient draws depend only on ``seed``, so one seed shares the same
    coefficients across every time step of a run.
    """
    if t < 0:
        raise InvalidInputError("t must be nonnegative")
    n = basis.n_nodes
    A1 = _diffusion_filter(basis, tv_smoothing_rate(t), normalized)
    A2 = indicator_matrix(clusters_t, n)
    rng = np.random.default_rng(seed)
    d1 = rng.normal(loc=1.0, scale=1.0, size=n)
    d2 = rng.normal(loc=0.0, scale=np.sqrt(CLUSTER_OFFSET_VAR), size=A2.shape[1])
    return SubspaceDictionary(np.hstack([A1, A2])), A1 @ d1 + A2 @ d2


def add_noise(x: np.ndarray, sigma: float, seed: int = 0) -> np.ndarray:
    """Add white Gaussian noise with standard deviation ``sigma``."""
    if sigma < 0:
        raise InvalidInputError("sigma must be nonnegative")
    x = np.asarray(x, dtype=float)
    if sigma == 0:
        return x.copy()
    rng = np.random.default_rng(seed)
    return x + rng.normal(scale=sigma, size=x.shape)


def boundary_nodes(g: Graph, clusters) -> np.ndarray:
    """Nodes with at least one neighbour in a different cluster."""
    sets = _validate_clusters(clusters, g.n_nodes)
    labels = np.empty(g.n_nodes, dtype=int)
    for j, c in enumerate(sets):
        labels[c] = j
    adj = g.weights > 0
    boundary = [i for i in range(g.n_nodes)
                if np.any(labels[adj[i]] != labels[i])]
    return np.array(boundary, dtype=int)


def two_hop_boundary(g: Graph, clusters) -> np.ndarray:
    """Nodes within two hops of the cluster boundaries (boundary included)."""
    adj = g.weights > 0
    reach = np.zeros(g.n_nodes, dtype=bool)
    reach[boundary_nodes(g, clusters)] = True
    for _ in range(2):
        reach = reach | (adj @ reach)
    return np.flatnonzero(reach)


def drift_clusters(g: Graph, clusters0, n_steps: int, p: float = 0.5,
                   seed: int = 0) -> list[list[np.ndarray]]:
    """Random membership drift restricted to the initial boundary region.

    Only nodes within two hops of the ``t = 0`` boundaries ever move; each of
    those is independently reassigned to one of the other two clusters with
    probability ``p`` at every step.  Returns one cluster triple per step,
    with step 0 equal to ``clusters0``.
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError("p must lie in [0, 1]")
    sets = _validate_clusters(clusters0, g.n_nodes)
    n_clusters = len(sets)
    labels = np.empty(g.n_nodes, dtype=int)
    for j, c in enumerate(sets):
        labels[c] = j
    eligible = two_hop_boundary(g, clusters0)
    rng = np.random.default_rng(seed)
    out = [[np.flatnonzero(labels == j) for j in range(n_clusters)]]
    for _ in range(1, n_steps):
        labels = labels.copy()
        move = eligible[rng.random(eligible.size) < p]
        for i in move:
            others = [c for c in range(n_clusters) if c != labels[i]]
            labels[i] = others[rng.integers(len(others))]
        clusters = [np.flatnonzero(labels == j) for j in range(n_clusters)]
        if any(c.size == 0 for c in clusters):
            raise InvalidInputError("cluster drift emptied a cluster")
        out.append(clusters)
    return out


def make_tv_trace(basis: GftBasis, g: Graph, clusters0, n_steps: int,
                  drift_p: float = 0.5, seed: int = 0,
                  normalized: bool = False) -> SignalTrace:
    """Clean time-varying piecewise-smooth trace with ground-truth subspaces."""
    schedule = drift_clusters(g, clusters0, n_steps, p=drift_p, seed=seed)
    signals = np.empty((basis.n_nodes, n_steps))
    subspaces = []
    for t, clusters in enumerate(schedule):
        A, x = time_varying_pws(basis, t, clusters, seed=seed, normalized=normalized)
        subspaces.append(A)
        signals[:, t] = x
    return SignalTrace(signals=signals, subspaces=subspaces, noise_sigma=0.0)


def save_trace_csv(trace: SignalTrace, path) -> None:
    """Write signals as ``t,node,value`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "node", "value"])
        for t in range(trace.n_steps):
            for i in range(trace.n_nodes):
                writer.writerow([t, i, repr(float(trace.signals[i, t]))])


def load_trace_csv(path) -> SignalTrace:
    cells: dict[tuple[int, int], float] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["t", "node", "value"]:
            raise InvalidInputError(f"unexpected trace header: {reader.fieldnames}")
        for row in reader:
            cells[(int(row["node"]), int(row["t"]))] = float(row["value"])
    if not cells:
        raise InvalidInputError("trace file is empty")
    n = max(i for i, _ in cells) + 1
    T = max(t for _, t in cells) + 1
    X = np.zeros((n, T))
    for (i, t), v in cells.items():
        X[i, t] = v
    return SignalTrace(signals=X)
