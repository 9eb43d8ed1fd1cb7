"""Parametrized agglomerative linkage, pruning of the cluster tree, and clustering objectives.

Clusters are identified by their smallest member.  When several live pairs
are equally close, the pair that is lexicographically smallest in
(min member of first cluster, min member of second) is merged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import DomainError, ResourceError
from ..instances import ClusteringInstance
from . import _race


@dataclass(frozen=True)
class SclRule:
    """``(1 - rho) * d_min + rho * d_max``, ``rho`` in [0, 1]."""

    rho: float

    def __post_init__(self):
        if not 0 <= self.rho <= 1:
            raise DomainError(f"scl rho={self.rho} must lie in [0, 1]")


@dataclass(frozen=True)
class ExpRule:
    """Power mean of the cross-cluster distances with exponent ``rho``.

    ``rho = 0`` is the geometric mean (the limit of the power mean).
    """

    rho: float


Rule = Union[SclRule, ExpRule]


@dataclass(frozen=True)
class Merge:
    left: tuple
    right: tuple
    distance: float = field(compare=False)

    @property
    def merged(self) -> tuple:
        return tuple(sorted(self.left + self.right))


@dataclass(frozen=True)
class ClusterTree:
    """Merge sequence of one agglomerative run; equality ignores merge heights."""

    n: int
    merges: tuple

    def clusters_after(self, steps: int) -> list:
        live = {i: (i,) for i in range(self.n)}
        for m in self.merges[:steps]:
            del live[m.left[0]], live[m.right[0]]
            merged = m.merged
            live[merged[0]] = merged
        return [live[key] for key in sorted(live)]

    @property
    def sequence(self) -> tuple:
        return tuple((m.left, m.right) for m in self.merges)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "merges": [{"left": list(m.left), "right": list(m.right), "distance": m.distance} for m in self.merges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterTree":
        return cls(d["n"], tuple(Merge(tuple(m["left"]), tuple(m["right"]), m["distance"]) for m in d["merges"]))


@dataclass(frozen=True)
class StabilityInterval:
    lo: float
    hi: float
    certificate: tuple = field(default=(), compare=False, repr=False)

    def __contains__(self, rho) -> bool:
        return self.lo <= rho < self.hi


def _merge_slots(members: dict, a: int, b: int, distance: float) -> Merge:
    left, right = members.pop(a), members.pop(b)
    members[a] = tuple(sorted(left + right))
    return Merge(left, right, distance)


def _scl_run(dist: np.ndarray, rho: float, mode: str):
    """One scl-linkage run.  ``mode`` is ``plain``, ``certify`` or ``right``."""
    n = dist.shape[0]
    dmin = np.array(dist, dtype=float)
    dmax = dmin.copy()
    members = {i: (i,) for i in range(n)}
    merges = []
    bounds = _race.Bounds()
    certificate = []
    for step in range(n - 1):
        act = np.fromiter(sorted(members), dtype=int)
        ii, jj = np.triu_indices(len(act), 1)
        a, b = act[ii], act[jj]
        lo_d, hi_d = dmin[a, b], dmax[a, b]
        alpha, beta = lo_d, hi_d - lo_d
        if mode == "right":
            w = _race.right_limit_winner(alpha.tolist(), beta.tolist(), rho)
            lo, hi = _race.right_limit_bounds(alpha, beta, w, rho)
            bounds.add(lo, False, hi, False)
        else:
            w = int(np.argmin((1 - rho) * lo_d + rho * hi_d))
            if mode == "certify":
                constraint = _race.plain_bounds(alpha, beta, w)
                bounds.add(*constraint)
                certificate.append((step, (int(a[w]), int(b[w])), constraint))
        A, B = int(a[w]), int(b[w])
        merges.append(_merge_slots(members, A, B, float((1 - rho) * lo_d[w] + rho * hi_d[w])))
        dmin[A, :] = np.minimum(dmin[A, :], dmin[B, :])
        dmin[:, A] = dmin[A, :]
        dmax[A, :] = np.maximum(dmax[A, :], dmax[B, :])
        dmax[:, A] = dmax[A, :]
    return ClusterTree(n, tuple(merges)), bounds, tuple(certificate)


def _exp_run(dist: np.ndarray, rho: float) -> ClusterTree:
    n = dist.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        logd = np.log(np.asarray(dist, dtype=float))
        # acc holds log(sum d^rho) for rho != 0, and sum(log d) for rho == 0
        acc = logd.copy() if rho == 0 else rho * logd
    size = np.ones(n)
    members = {i: (i,) for i in range(n)}
    merges = []
    for _ in range(n - 1):
        act = np.fromiter(sorted(members), dtype=int)
        ii, jj = np.triu_indices(len(act), 1)
        a, b = act[ii], act[jj]
        pair = size[a] * size[b]
        with np.errstate(invalid="ignore"):
            if rho == 0:
                log_d = acc[a, b] / pair
            else:
                log_d = (acc[a, b] - np.log(pair)) / rho
        w = int(np.argmin(log_d))
        A, B = int(a[w]), int(b[w])
        merges.append(_merge_slots(members, A, B, float(np.exp(log_d[w]))))
        with np.errstate(invalid="ignore"):
            acc[A, :] = acc[A, :] + acc[B, :] if rho == 0 else np.logaddexp(acc[A, :], acc[B, :])
        acc[:, A] = acc[A, :]
        size[A] += size[B]
    return ClusterTree(n, tuple(merges))


def linkage_tree(x: ClusteringInstance, rule: Rule) -> ClusterTree:
    if x.n < 2:
        raise DomainError("linkage needs at least two points")
    if isinstance(rule, SclRule):
        return _scl_run(x.dist, rule.rho, "plain")[0]
    if isinstance(rule, ExpRule):
        return _exp_run(x.dist, float(rule.rho))
    raise DomainError(f"unknown linkage rule {rule!r}")


def scl_stability_interval(x: ClusteringInstance, rho: float) -> StabilityInterval:
    """Maximal ``[lo, hi)`` inside [0, 1] around ``rho`` on which scl linkage merges identically.

    Each certificate entry is ``(step, merged pair, (lo, lo_closed, hi, hi_closed))``:
    the set of parameters on which that step's winner still beats every rival.
    """
    if not 0 <= rho <= 1:
        raise DomainError(f"scl rho={rho} must lie in [0, 1]")
    tree, bounds, certificate = _scl_run(x.dist, rho, "certify")
    lo, hi = bounds.half_open()
    top = 1.0 if rho < 1 else float(np.nextafter(1.0, 2.0))
    lo, hi = max(lo, 0.0), min(hi, top)
    ref = tree.sequence
    lo, hi = _race.snap(lo, hi, rho, lambda r: 0 <= r <= 1 and _scl_run(x.dist, r, "plain")[0].sequence == ref)
    return StabilityInterval(max(lo, 0.0), min(hi, top), certificate)


def scl_sweep(x: ClusteringInstance, lo: float = 0.0, hi: float = 1.0, max_pieces: int = 10**7):
    """Tile ``[lo, hi)`` left to right with ``(a, b, tree)`` pieces of constant merge sequence."""
    pieces = []
    r = lo
    while r < hi:
        tree, bounds, _ = _scl_run(x.dist, r, "right")
        nxt = max(bounds.hi, float(np.nextafter(r, math.inf)))
        pieces.append((r, min(nxt, hi), tree))
        if len(pieces) > max_pieces:
            raise ResourceError(f"scl sweep exceeded {max_pieces} pieces")
        r = nxt
    return pieces


# ---------------------------------------------------------------------------
# clustering objectives and pruning

OBJECTIVES = ("kmeans", "kmedian")


def cluster_cost(members: Sequence[int], dist: np.ndarray, objective: str = "kmedian") -> float:
    """Cost of one cluster around its best medoid."""
    if objective not in OBJECTIVES:
        raise DomainError(f"unknown objective {objective!r}")
    m = list(members)
    sub = dist[np.ix_(m, m)]
    if objective == "kmeans":
        sub = sub * sub
    return float(sub.sum(axis=0).min())


def clustering_utility(p: Sequence[Sequence[int]], x: ClusteringInstance, mode: str) -> float:
    """k-means / k-median cost with medoid centers, or the ground-truth loss in [0, 1]."""
    if mode in OBJECTIVES:
        return float(sum(cluster_cost(c, x.dist, mode) for c in p))
    if mode != "ground_truth":
        raise DomainError(f"unknown clustering mode {mode!r}")
    if x.ground_truth is None:
        raise DomainError("ground_truth mode needs an instance with a ground truth")
    if len(p) != x.k:
        raise DomainError(f"partition has {len(p)} clusters, ground truth has k={x.k}")
    agree = np.array([[len(set(c) & set(g)) for g in x.ground_truth] for c in p])
    rows, cols = linear_sum_assignment(agree, maximize=True)
    return (x.n - int(agree[rows, cols].sum())) / x.n


def extract_k_clustering(tree: ClusterTree, x: ClusteringInstance, method: str = "unmerge", objective: str = "kmedian", k: int | None = None) -> list:
    """k-clustering from a cluster tree: undo the last k-1 merges, or the cheapest k-pruning."""
    k = x.k if k is None else int(k)
    if not 1 <= k <= tree.n:
        raise DomainError(f"k={k} must lie in [1, n={tree.n}]")
    if method == "unmerge":
        return tree.clusters_after(tree.n - k)
    if method != "dp":
        raise DomainError(f"unknown pruning method {method!r}")
    if objective not in OBJECTIVES:
        raise DomainError(f"unknown objective {objective!r}")
    # best[node][j] = (cost, clusters) for the cheapest j-pruning of node's subtree
    best = {(i,): {1: (0.0, [(i,)])} for i in range(tree.n)}
    for m in tree.merges:
        node = m.merged
        left, right = best.pop(m.left), best.pop(m.right)
        table = {1: (cluster_cost(node, x.dist, objective), [node])}
        for j in range(2, min(k, len(node)) + 1):
            cand = None
            for j1 in range(1, j):
                if j1 in left and (j - j1) in right:
                    c = left[j1][0] + right[j - j1][0]
                    if cand is None or c < cand[0]:
                        cand = (c, left[j1][1] + right[j - j1][1])
            if cand is not None:
                table[j] = cand
        best[node] = table
    (root,) = best.values()
    return sorted(root[k][1])

