"""alpha-Lloyds++: d_min^alpha seeding followed by medoid Lloyd iterations.

All randomness comes from the instance tape: one uniform per seeding step is
drawn up front, independently of alpha, and each center is chosen by inverting
the cumulative d_min^alpha weights at that uniform.  For a fixed tape the
outcome is therefore a deterministic, piecewise-constant function of alpha.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError
from ..instances import ClusteringInstance, RandomTape
from .linkage import cluster_cost


def lloyds_seed(x: ClusteringInstance, alpha: float, tape: RandomTape, first_center: int | None = None) -> tuple:
    """Seed indices in the order they were chosen."""
    if not alpha >= 0:
        raise DomainError(f"alpha={alpha} must be >= 0 (or inf)")
    n, k = x.n, x.k
    u = tape.rng("lloyds.seeding").random(k)
    first = int(u[0] * n) if first_center is None else int(first_center)
    centers = [first]
    is_center = np.zeros(n, dtype=bool)
    is_center[first] = True
    dmin = x.dist[first].copy()
    for t in range(1, k):
        cand = ~is_center
        if math.isinf(alpha):
            pick = int(np.flatnonzero(cand)[np.argmax(dmin[cand])])
        else:
            weights = np.zeros(n)
            if alpha == 0:
                weights[cand] = 1.0
            else:
                pos = cand & (dmin > 0)
                if pos.any():
                    logw = alpha * np.log(dmin[pos])
                    weights[pos] = np.exp(logw - logw.max())
                else:
                    weights[cand] = 1.0
            cum = np.cumsum(weights)
            pick = int(np.searchsorted(cum, u[t] * cum[-1], side="right"))
            pick = min(pick, n - 1)
            while is_center[pick] or weights[pick] == 0:
                pick -= 1
        centers.append(pick)
        is_center[pick] = True
        np.minimum(dmin, x.dist[pick], out=dmin)
    return tuple(centers)


def _assign(dist: np.ndarray, centers: list) -> np.ndarray:
    return np.asarray(centers)[np.argmin(dist[:, centers], axis=1)]


def lloyds_from_seeds(x: ClusteringInstance, seeds, max_iters: int = 20, objective: str = "kmeans"):
    """Medoid Lloyd iterations from ``seeds``; returns (partition, cost)."""
    centers = sorted(seeds)
    for _ in range(max_iters):
        owner = _assign(x.dist, centers)
        new = []
        for c in centers:
            members = np.flatnonzero(owner == c)
            sub = x.dist[np.ix_(members, members)]
            if objective == "kmeans":
                sub = sub * sub
            new.append(int(members[np.argmin(sub.sum(axis=0))]))
        new = sorted(new)
        if new == centers:
            break
        centers = new
    owner = _assign(x.dist, centers)
    partition = [tuple(np.flatnonzero(owner == c).tolist()) for c in centers]
    partition = sorted(p for p in partition if p)
    d = x.dist[np.arange(x.n), owner]
    cost = float(np.sum(d * d)) if objective == "kmeans" else float(np.sum(d))
    return partition, cost


def lloyds_alpha(x: ClusteringInstance, alpha: float, tape: RandomTape, max_iters: int = 20, objective: str = "kmeans", first_center: int | None = None):
    """Seed with d_min^alpha sampling, then run medoid Lloyd's; returns (partition, cost)."""
    seeds = lloyds_seed(x, alpha, tape, first_center)
    return lloyds_from_seeds(x, seeds, max_iters, objective)


__all__ = ["lloyds_seed", "lloyds_from_seeds", "lloyds_alpha", "cluster_cost"]
