"""Comparison partitioners: rank nodes by an importance score, assign cyclically."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .graphs import Graph, eigenvector_centrality, modularity_clustering
from .partition import Partition
from .sampling import SamplingSet
from .signals import SubspaceDictionary


def _cyclic_assign(ranked: np.ndarray, n_subsets: int, n: int) -> Partition:
    subsets = []
    for j in range(n_subsets):
        subsets.append(SamplingSet.from_indices(n, ranked[j::n_subsets]))
    return Partition(subsets=subsets)


def srel_partition(g: Graph, n_subsets: int, seed: int = 0,
                   merge: str = "concat") -> Partition:
    """Topology-only partition: modularity clusters, centrality-ranked nodes.

    Nodes are sorted inside each modularity cluster by descending eigenvector
    centrality and dealt cyclically onto the subsets cluster by cluster
    (``concat``), which spreads every cluster across all subsets.  The
    ``round_robin`` merge interleaves clusters before dealing instead; it can
    alias with the subset count, so it is not the default.
    """
    if n_subsets < 2:
        raise InvalidInputError("need at least two subsets")
    if merge not in ("round_robin", "concat"):
        raise InvalidInputError(f"unknown merge rule {merge!r}")
    n = g.n_nodes
    if n_subsets > n:
        raise InvalidInputError("more subsets than nodes")
    clusters = modularity_clustering(g, seed=seed)
    centrality = eigenvector_centrality(g)
    ordered_lists = []
    for c in clusters:
        c = np.asarray(c)
        order = np.lexsort((c, -centrality[c]))
        ordered_lists.append(c[order])
    # larger clusters first; ties broken by their smallest node id
    ordered_lists.sort(key=lambda lst: (-lst.size, int(lst[0])))
    if merge == "concat":
        ranked = np.concatenate(ordered_lists)
    else:
        ranked_list = []
        for round_idx in range(max(lst.size for lst in ordered_lists)):
            for lst in ordered_lists:
                if round_idx < lst.size:
                    ranked_list.append(lst[round_idx])
        ranked = np.array(ranked_list, dtype=int)
    return _cyclic_assign(ranked, n_subsets, n)


def sfrob_greedy_ranking(A_bl: SubspaceDictionary, ridge: float = 1e-8,
                         refresh_every: int = 32) -> np.ndarray:
    """Greedy node ranking by marginal decrease of the ridged inverse trace.

    At each step the node whose addition minimizes
    ``tr((S^T A A^T S + ridge I)^{-1})`` joins the ranking.  The running
    inverse is extended by a Schur-complement block update and recomputed from
    scratch every ``refresh_every`` steps to stop drift on ill-conditioned
    dictionaries.
    """
    P = A_bl.matrix @ A_bl.matrix.T
    n = P.shape[0]
    Pr = P + ridge * np.eye(n)
    selected: list[int] = []
    remaining = list(range(n))
    Minv = np.zeros((0, 0))
    tr_m = 0.0
    for step in range(n):
        cand = np.array(remaining)
        if selected:
            B_cand = Pr[np.ix_(selected, cand)]
            U = Minv @ B_cand
            s = Pr[cand, cand] - np.sum(B_cand * U, axis=0)
            quad = np.sum(U * U, axis=0)
        else:
            s = Pr[cand, cand]
            quad = np.zeros(cand.size)
        scores = np.where(s > 1e-300, tr_m + (quad + 1.0) / s, np.inf)
        pick = int(cand[int(np.argmin(scores))])
        if selected:
            b = Pr[selected, pick]
            u = Minv @ b
            sp = Pr[pick, pick] - b @ u
            top = np.hstack([Minv + np.outer(u, u) / sp, (-u / sp)[:, None]])
            bottom = np.hstack([-u / sp, [1.0 / sp]])
            Minv = np.vstack([top, bottom])
        else:
            Minv = np.array([[1.0 / Pr[pick, pick]]])
        selected.append(pick)
        remaining.remove(pick)
        if (step + 1) % refresh_every == 0:
            Minv = np.linalg.inv(Pr[np.ix_(selected, selected)])
        tr_m = float(np.trace(Minv))
    return np.array(selected, dtype=int)


def sfrob_partition(A_bl: SubspaceDictionary, n_subsets: int,
                    ridge: float = 1e-8) -> Partition:
    """Signal-aware partition: greedy inverse-trace ranking, cyclic assignment."""
    if n_subsets < 2:
        raise InvalidInputError("need at least two subsets")
    n = A_bl.n_nodes
    if n_subsets > n:
        raise InvalidInputError("more subsets than nodes")
    ranked = sfrob_greedy_ranking(A_bl, ridge=ridge)
    return _cyclic_assign(ranked, n_subsets, n)
