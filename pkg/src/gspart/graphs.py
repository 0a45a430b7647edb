"""Weighted undirected graphs, Laplacian spectra, clustering, and centrality."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.cluster.vq import ClusterError, kmeans2
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from .errors import InvalidInputError, NumericalFailureError

SYMMETRY_TOL = 1e-12
SIGN_TOL = 1e-8


@dataclass
class Graph:
    """Weighted undirected graph with optional 2-D node positions.

    Parameters
    ----------
    weights : np.ndarray
        Symmetric N x N nonnegative weight matrix with zero diagonal.
    coords : np.ndarray, optional
        N x 2 node positions, kept for k-NN construction and plotting.
    """

    weights: np.ndarray
    coords: np.ndarray | None = None
    _gft: "GftBasis | None" = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise InvalidInputError(f"weight matrix must be square, got {W.shape}")
        if not np.all(np.isfinite(W)):
            raise InvalidInputError("weights must be finite")
        if np.any(W < 0):
            raise InvalidInputError("weights must be nonnegative")
        if np.max(np.abs(W - W.T), initial=0.0) > SYMMETRY_TOL:
            raise InvalidInputError("weight matrix must be symmetric within 1e-12")
        if np.any(np.diag(W) != 0.0):
            raise InvalidInputError("weight matrix must have an exactly zero diagonal")
        W = 0.5 * (W + W.T)
        np.fill_diagonal(W, 0.0)
        self.weights = W
        if self.coords is not None:
            C = np.asarray(self.coords, dtype=float)
            if C.shape != (W.shape[0], 2):
                raise InvalidInputError(f"coords must be N x 2, got {C.shape}")
            self.coords = C

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    def degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.weights)))


@dataclass
class GftBasis:
    """Eigendecomposition of a graph Laplacian.

    ``eigenvalues`` are the graph frequencies in ascending order and the
    columns of ``eigenvectors`` form the orthonormal Fourier basis.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        U = np.asarray(self.eigenvectors, dtype=float)
        n = U.shape[0]
        if U.shape != (n, n) or lam.shape != (n,):
            raise InvalidInputError("basis shapes inconsistent")
        if np.any(np.diff(lam) < -1e-10):
            raise InvalidInputError("eigenvalues must be sorted ascending")
        if lam[0] < -1e-10:
            raise InvalidInputError("smallest eigenvalue must be >= -1e-10")
        if np.linalg.norm(U.T @ U - np.eye(n)) > 1e-8 * n:
            raise InvalidInputError("eigenvectors must be orthonormal")
        self.eigenvalues = lam
        self.eigenvectors = U

    @property
    def n_nodes(self) -> int:
        return self.eigenvectors.shape[0]


def build_knn_graph(coords: np.ndarray, k_per_node, seed: int = 0) -> Graph:
    """Build a k-nearest-neighbour graph with Gaussian edge weights.

    Each node is connected to its ``k_i`` nearest Euclidean neighbours and the
    directed edge sets are merged (an edge exists if either endpoint selects
    the other).  Edge weights are ``exp(-d^2)`` for distance ``d``.

    Parameters
    ----------
    coords : np.ndarray
        N x 2 node positions.
    k_per_node : int or sequence of int
        Neighbour count per node; a scalar applies to every node.
        Must satisfy ``1 <= k_i < N``.
    seed : int
        Accepted for API symmetry; the construction is deterministic
        (distance ties break by node index).
    """
    C = np.asarray(coords, dtype=float)
    if C.ndim != 2 or C.shape[1] != 2:
        raise InvalidInputError(f"coords must be N x 2, got {C.shape}")
    n = C.shape[0]
    if n < 2:
        raise InvalidInputError("need at least two nodes")
    ks = np.broadcast_to(np.asarray(k_per_node, dtype=int), (n,)).copy()
    if np.any(ks < 1) or np.any(ks >= n):
        raise InvalidInputError("each k must satisfy 1 <= k < N")

    dist = cdist(C, C)
    W = np.zeros((n, n))
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")
        nbrs = order[order != i][: ks[i]]
        W[i, nbrs] = np.exp(-dist[i, nbrs] ** 2)
    W = np.maximum(W, W.T)
    return Graph(weights=W, coords=C)


def knn_graph_from_distances(dist: np.ndarray, k_per_node, coords=None,
                             weight_scale: float = 1.0) -> Graph:
    """k-NN graph from a precomputed symmetric distance matrix.

    Weights are ``exp(-(d / weight_scale)^2)``; used for geodesic graphs where
    raw distances need rescaling before the Gaussian kernel.
    """
    D = np.asarray(dist, dtype=float)
    n = D.shape[0]
    if D.shape != (n, n) or n < 2:
        raise InvalidInputError("distance matrix must be square with N >= 2")
    if weight_scale <= 0:
        raise InvalidInputError("weight_scale must be positive")
    ks = np.broadcast_to(np.asarray(k_per_node, dtype=int), (n,)).copy()
    if np.any(ks < 1) or np.any(ks >= n):
        raise InvalidInputError("each k must satisfy 1 <= k < N")
    W = np.zeros((n, n))
    for i in range(n):
        order = np.argsort(D[i], kind="stable")
        nbrs = order[order != i][: ks[i]]
        W[i, nbrs] = np.exp(-((D[i, nbrs] / weight_scale) ** 2))
    W = np.maximum(W, W.T)
    return Graph(weights=W, coords=coords)


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian ``L = D - W``."""
    W = g.weights
    return np.diag(W.sum(axis=1)) - W


def gft_basis(g: Graph, use_cache: bool = True) -> GftBasis:
    """Graph Fourier basis from the Laplacian eigendecomposition.

    Eigenvalues come back ascending; each eigenvector is sign-fixed so that
    its first entry larger than 1e-8 in magnitude is positive, which makes
    repeated calls reproducible.
    """
    if use_cache and g._gft is not None:
        return g._gft
    L = laplacian(g)
    try:
        lam, U = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh on symmetric
        raise NumericalFailureError(f"eigendecomposition failed: {exc}") from exc
    for j in range(U.shape[1]):
        col = U[:, j]
        nz = np.flatnonzero(np.abs(col) > SIGN_TOL)
        if nz.size and col[nz[0]] < 0:
            U[:, j] = -col
    resid = np.linalg.norm(L @ U - U * lam) / max(1.0, np.linalg.norm(L))
    if resid > 1e-8:
        raise NumericalFailureError(f"eigendecomposition residual too large: {resid:g}")
    basis = GftBasis(eigenvalues=lam, eigenvectors=U)
    if use_cache:
        g._gft = basis
    return basis


def n_components(g: Graph) -> int:
    ncomp, _ = connected_components(csr_matrix(g.weights > 0), directed=False)
    return int(ncomp)


def component_labels(g: Graph) -> np.ndarray:
    _, labels = connected_components(csr_matrix(g.weights > 0), directed=False)
    return labels


def _kmeans_inertia(X: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    return float(np.sum((X - centroids[labels]) ** 2))


def spectral_clustering(g: Graph, n_clusters: int, seed: int = 0) -> list[np.ndarray]:
    """Partition nodes by k-means on the leading Laplacian eigenvectors.

    Runs 10 seeded k-means restarts on the rows of the first ``n_clusters``
    eigenvectors and keeps the lowest-inertia labelling.  Restarts that
    produce an empty cluster are discarded; if every restart fails a
    ``NumericalFailureError`` is raised.
    """
    if n_clusters < 1:
        raise InvalidInputError("n_clusters must be >= 1")
    n = g.n_nodes
    if n_clusters > n:
        raise InvalidInputError("n_clusters cannot exceed the node count")
    if n_clusters == 1:
        return [np.arange(n)]
    basis = gft_basis(g)
    X = np.ascontiguousarray(basis.eigenvectors[:, :n_clusters])
    ss = np.random.SeedSequence(entropy=seed)
    best = None
    best_inertia = np.inf
    for child in ss.spawn(10):
        rng = np.random.default_rng(child)
        try:
            centroids, labels = kmeans2(X, n_clusters, iter=100, minit="++",
                                        missing="raise", seed=rng)
        except ClusterError:
            continue
        if len(np.unique(labels)) != n_clusters:
            continue
        inertia = _kmeans_inertia(X, centroids, labels)
        if inertia < best_inertia:
            best_inertia = inertia
            best = labels
    if best is None:
        raise NumericalFailureError("k-means produced empty clusters in every restart")
    return [np.flatnonzero(best == c) for c in range(n_clusters)]


def modularity(g: Graph, clusters: list[np.ndarray]) -> float:
    """Weighted Newman modularity of a node partition."""
    W = g.weights
    two_m = W.sum()
    if two_m == 0:
        raise InvalidInputError("modularity undefined for an edgeless graph")
    deg = W.sum(axis=1)
    q = 0.0
    for nodes in clusters:
        idx = np.asarray(nodes)
        q += W[np.ix_(idx, idx)].sum() / two_m - (deg[idx].sum() / two_m) ** 2
    return float(q)


def modularity_clustering(g: Graph, seed: int = 0,
                          method: str = "greedy") -> list[np.ndarray]:
    """Modularity-maximising node clustering.

    ``method="greedy"`` is deterministic CNM-style agglomerative merging (the
    default; ``seed`` is unused there), ``method="louvain"`` is the seeded
    Louvain heuristic.  Requires at least one edge.
    """
    if g.n_edges() == 0:
        raise InvalidInputError("modularity clustering needs at least one edge")
    G = nx.from_numpy_array(g.weights)
    if method == "greedy":
        comms = nx.algorithms.community.greedy_modularity_communities(
            G, weight="weight")
    elif method == "louvain":
        comms = nx.algorithms.community.louvain_communities(
            G, weight="weight", seed=seed)
    else:
        raise InvalidInputError(f"unknown modularity method {method!r}")
    return [np.array(sorted(c), dtype=int) for c in comms]


def eigenvector_centrality(g: Graph, tol: float = 1e-10,
                           max_iters: int = 20000) -> np.ndarray:
    """Entrywise-nonnegative dominant eigenvector of the weight matrix.

    Power iteration with a positive diagonal shift (which leaves the Perron
    vector unchanged but prevents oscillation on bipartite structures).  For a
    disconnected graph each component is handled separately and the assembled
    vector is renormalised to unit length.
    """
    W = g.weights
    n = g.n_nodes
    labels = component_labels(g)
    out = np.zeros(n)
    for comp in np.unique(labels):
        idx = np.flatnonzero(labels == comp)
        Wc = W[np.ix_(idx, idx)]
        m = idx.size
        if m == 1:
            out[idx] = 1.0
            continue
        shift = 1.0 + np.max(Wc.sum(axis=1))
        x = np.full(m, 1.0 / np.sqrt(m))
        converged = False
        for _ in range(max_iters):
            y = Wc @ x + shift * x
            y /= np.linalg.norm(y)
            if np.linalg.norm(y - x) <= tol:
                x = y
                converged = True
                break
            x = y
        if not converged:
            raise NumericalFailureError("power iteration did not converge")
        out[idx] = np.abs(x)
    nrm = np.linalg.norm(out)
    return out / nrm if nrm > 0 else out


def save_graph(g: Graph, edge_path, coords_path=None) -> None:
    """Write the edge list as ``i j w`` lines (and coords as CSV if given)."""
    W = g.weights
    with open(edge_path, "w") as fh:
        fh.write(f"# nodes {g.n_nodes}\n")
        rows, cols = np.nonzero(np.triu(W))
        for i, j in zip(rows, cols):
            fh.write(f"{i} {j} {float(W[i, j])!r}\n")
    if coords_path is not None:
        if g.coords is None:
            raise InvalidInputError("graph has no coords to save")
        with open(coords_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node", "x", "y"])
            for i, (x, y) in enumerate(g.coords):
                writer.writerow([i, repr(float(x)), repr(float(y))])


def load_graph(edge_path, coords_path=None, n_nodes: int | None = None) -> Graph:
    """Load a graph from an ``i j w`` edge list, validating symmetry.

    Duplicate entries for the same undirected pair must agree; self-loops are
    rejected.  The node count is taken from the ``# nodes N`` header when
    present, else inferred from the largest index.
    """
    entries: dict[tuple[int, int], float] = {}
    max_idx = -1
    with open(edge_path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "nodes":
                    n_nodes = int(parts[1])
                continue
            parts = line.split()
            if len(parts) != 3:
                raise InvalidInputError(f"malformed edge line: {line!r}")
            i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
            if i == j:
                raise InvalidInputError(f"self-loop on node {i} not allowed")
            key = (min(i, j), max(i, j))
            if key in entries and abs(entries[key] - w) > SYMMETRY_TOL:
                raise InvalidInputError(f"asymmetric duplicate edge {key}")
            entries[key] = w
            max_idx = max(max_idx, i, j)
    n = n_nodes if n_nodes is not None else max_idx + 1
    if n < 2:
        raise InvalidInputError("edge list describes fewer than two nodes")
    W = np.zeros((n, n))
    for (i, j), w in entries.items():
        W[i, j] = W[j, i] = w
    coords = None
    if coords_path is not None:
        coords = np.zeros((n, 2))
        with open(coords_path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                coords[int(row["node"])] = (float(row["x"]), float(row["y"]))
    return Graph(weights=W, coords=coords)
