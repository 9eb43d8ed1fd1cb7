"""Family objects: a parametrized algorithm plus its utility and dual construction.

Every family maps ``(instance, rho)`` to a real utility that larger is better
(clustering costs are negated) and builds the dual ``rho -> utility`` as a
:class:`PiecewiseConstant` on a finite domain.  Knapsack, MWIS, scl linkage
and s-linear rounding duals are exact; exp linkage and alpha-Lloyds++ duals
come from adaptive grid refinement and are flagged ``exact = False``.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..errors import DomainError, ResourceError
from ..instances import ClusteringInstance, GraphInstance, IqpInstance, KnapsackInstance, RandomTape, maxcut_to_iqp
from ..piecewise import MAX_PIECES, PiecewiseConstant
from .greedy import knapsack_critical_values, knapsack_greedy, knapsack_utilities, mwis_greedy, mwis_right_trace
from .linkage import OBJECTIVES, ExpRule, SclRule, clustering_utility, extract_k_clustering, linkage_tree, scl_sweep
from .lloyds import lloyds_from_seeds, lloyds_seed
from .rounding import round_signs, sdp_embed, slinear_flip_points


def _midpoints(lo: float, breakpoints: np.ndarray, hi: float) -> np.ndarray:
    edges = np.concatenate(([lo], breakpoints, [hi]))
    return edges[:-1] + np.diff(edges) / 2


def _from_pieces(lo: float, hi: float, starts, values) -> PiecewiseConstant:
    return PiecewiseConstant(lo, hi, starts[1:], values).canonical()


def adaptive_dual(probe: Callable[[float], tuple], lo: float, hi: float, grid: int = 64, tol: float = 1e-6) -> PiecewiseConstant:
    """Piecewise-constant approximation from a ``rho -> (trace, utility)`` probe.

    Starts from a uniform grid and bisects every gap whose end traces differ
    until the gap is at most ``tol``; the breakpoint is put at the right end of
    the final gap.  Trace changes that leave both grid neighbours equal are
    not detected.
    """
    cache: dict = {}

    def at(r):
        if r not in cache:
            cache[r] = probe(r)
        return cache[r]

    stack = [(float(a), float(b)) for a, b in zip(np.linspace(lo, hi, grid + 1)[:-1], np.linspace(lo, hi, grid + 1)[1:])]
    while stack:
        a, b = stack.pop()
        if at(a)[0] == at(b)[0] or b - a <= tol:
            continue
        m = a + (b - a) / 2
        if not a < m < b:
            continue
        if len(cache) > MAX_PIECES:
            raise ResourceError("adaptive refinement exceeded the piece cap")
        stack.extend([(a, m), (m, b)])
    points = sorted(cache)
    starts, values = [points[0]], [at(points[0])[1]]
    prev = at(points[0])[0]
    for r in points[1:]:
        trace, u = at(r)
        if trace != prev and r < hi:
            starts.append(r)
            values.append(u)
        prev = trace
    return _from_pieces(lo, hi, starts, values)


class Family:
    """Base class; subclasses set ``name``, ``kind`` and ``domain``."""

    name = "family"
    kind: type = object
    exact = True
    domain = (0.0, 1.0)

    def check(self, x):
        if not isinstance(x, self.kind):
            raise DomainError(f"family {self.name} expects {self.kind.__name__}, got {type(x).__name__}")
        return x

    def utility(self, x, rho: float) -> float:
        raise NotImplementedError

    def range_bound(self, x) -> float:
        raise NotImplementedError

    def dual(self, x, domain=None) -> PiecewiseConstant:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"name": self.name, "domain": list(self.domain), **self.params()}

    def _domain(self, domain):
        lo, hi = self.domain if domain is None else (float(domain[0]), float(domain[1]))
        if not lo < hi:
            raise DomainError(f"domain [{lo}, {hi}] is empty")
        return lo, hi


class KnapsackFamily(Family):
    name = "knapsack"
    kind = KnapsackInstance

    def __init__(self, domain=(0.0, 5.0)):
        self.domain = (float(domain[0]), float(domain[1]))
        if self.domain[0] < 0:
            raise DomainError("knapsack parameters must be >= 0")

    def utility(self, x, rho):
        return knapsack_greedy(self.check(x), rho)[1]

    def range_bound(self, x):
        # each value is at most max(v) and at most C items of size >= 1 fit
        return float(min(np.sum(x.values), x.values.max() * math.floor(x.capacity / x.sizes.min())))

    def dual(self, x, domain=None):
        lo, hi = self._domain(domain)
        crit = knapsack_critical_values(self.check(x))
        inside = crit[(crit > lo) & (crit < hi)]
        mids = _midpoints(lo, inside, hi)
        return PiecewiseConstant(lo, hi, inside, knapsack_utilities(x, mids)).canonical()


class MwisFamily(Family):
    name = "mwis"
    kind = GraphInstance

    def __init__(self, domain=(0.0, 10.0)):
        self.domain = (float(domain[0]), float(domain[1]))
        if self.domain[0] < 0:
            raise DomainError("mwis parameters must be >= 0")

    def utility(self, x, rho):
        return mwis_greedy(self.check(x), rho)[1]

    def range_bound(self, x):
        return float(np.sum(x.weights))

    def dual(self, x, domain=None):
        lo, hi = self._domain(domain)
        self.check(x)
        starts, values = [], []
        r = lo
        while r < hi:
            _, total, end = mwis_right_trace(x, r)
            starts.append(r)
            values.append(total)
            if len(starts) > MAX_PIECES:
                raise ResourceError("mwis sweep exceeded the piece cap")
            r = max(end, float(np.nextafter(r, math.inf)))
        return _from_pieces(lo, hi, starts, values)


class _ClusteringFamily(Family):
    kind = ClusteringInstance

    def __init__(self, domain, objective="kmedian", method="unmerge"):
        if objective not in OBJECTIVES + ("ground_truth",):
            raise DomainError(f"unknown objective {objective!r}")
        if method not in ("unmerge", "dp"):
            raise DomainError(f"unknown pruning method {method!r}")
        self.domain = (float(domain[0]), float(domain[1]))
        self.objective = objective
        self.method = method

    def params(self):
        return {"objective": self.objective, "method": self.method}

    def tree_utility(self, tree, x) -> float:
        prune = self.objective if self.objective in OBJECTIVES else "kmedian"
        p = extract_k_clustering(tree, x, self.method, prune)
        return _partition_utility(p, x, self.objective)

    def range_bound(self, x):
        return _clustering_range(x, self.objective)


def _partition_utility(p, x, objective) -> float:
    if objective == "ground_truth":
        return 1.0 - clustering_utility(p, x, "ground_truth")
    return -clustering_utility(p, x, objective)


def _clustering_range(x, objective) -> float:
    if objective == "ground_truth":
        return 1.0
    return float(x.n * (x.M if objective == "kmedian" else x.M**2))


class SclFamily(_ClusteringFamily):
    name = "scl"

    def __init__(self, domain=(0.0, 1.0), objective="kmedian", method="unmerge"):
        super().__init__(domain, objective, method)
        if not 0 <= self.domain[0] < self.domain[1] <= 1:
            raise DomainError("scl parameters must lie in [0, 1]")

    def utility(self, x, rho):
        return self.tree_utility(linkage_tree(self.check(x), SclRule(rho)), x)

    def dual(self, x, domain=None):
        lo, hi = self._domain(domain)
        pieces = scl_sweep(self.check(x), lo, hi, MAX_PIECES)
        return _from_pieces(lo, hi, [a for a, _, _ in pieces], [self.tree_utility(t, x) for _, _, t in pieces])


class ExpFamily(_ClusteringFamily):
    name = "exp"
    exact = False

    def __init__(self, domain=(-10.0, 10.0), objective="kmedian", method="unmerge", grid=64, tol=1e-6):
        super().__init__(domain, objective, method)
        self.grid, self.tol = int(grid), float(tol)

    def params(self):
        return {**super().params(), "grid": self.grid, "tol": self.tol}

    def utility(self, x, rho):
        return self.tree_utility(linkage_tree(self.check(x), ExpRule(rho)), x)

    def dual(self, x, domain=None):
        lo, hi = self._domain(domain)
        self.check(x)

        def probe(r):
            tree = linkage_tree(x, ExpRule(r))
            return tree.sequence, self.tree_utility(tree, x)

        return adaptive_dual(probe, lo, hi, self.grid, self.tol)


class LloydsFamily(Family):
    """alpha-Lloyds++ with the instance's own tape (or ``seed`` if it has none)."""

    name = "lloyds"
    kind = ClusteringInstance
    exact = False

    def __init__(self, domain=(0.0, 10.0), objective="kmeans", max_iters=20, seed=0, grid=64, tol=1e-6):
        if objective not in OBJECTIVES + ("ground_truth",):
            raise DomainError(f"unknown objective {objective!r}")
        self.domain = (float(domain[0]), float(domain[1]))
        if self.domain[0] < 0:
            raise DomainError("alpha must be >= 0")
        self.objective, self.max_iters, self.seed = objective, int(max_iters), int(seed)
        self.grid, self.tol = int(grid), float(tol)

    def params(self):
        return {"objective": self.objective, "max_iters": self.max_iters, "seed": self.seed, "grid": self.grid, "tol": self.tol}

    def _tape(self, x):
        return x.tape if x.tape is not None else RandomTape(self.seed)

    def _run(self, x, alpha):
        seeds = lloyds_seed(x, alpha, self._tape(x))
        cost_objective = self.objective if self.objective in OBJECTIVES else "kmeans"
        p, cost = lloyds_from_seeds(x, seeds, self.max_iters, cost_objective)
        if self.objective == "ground_truth":
            return seeds, _partition_utility(p, x, "ground_truth")
        return seeds, -cost

    def utility(self, x, rho):
        return self._run(self.check(x), rho)[1]

    def range_bound(self, x):
        return _clustering_range(x, self.objective)

    def dual(self, x, domain=None):
        lo, hi = self._domain(domain)
        self.check(x)
        return adaptive_dual(lambda r: self._run(x, r), lo, hi, self.grid, self.tol)


class SlinearFamily(Family):
    """s-linear rounding of a low-rank SDP embedding.

    The embedding, Gaussian direction and coins all come from the instance's
    tape, so the realized objective ``z^T A z`` is a deterministic function of
    ``rho``.  Graphs are converted with :func:`maxcut_to_iqp`.
    """

    name = "slinear"
    kind = (IqpInstance, GraphInstance)

    def __init__(self, domain=(0.0, 2.0), rank=None, sweeps=50, seed=0):
        self.domain = (float(domain[0]), float(domain[1]))
        if self.domain[0] < 0:
            raise DomainError("s-linear parameters must be >= 0")
        self.rank, self.sweeps, self.seed = rank, int(sweeps), int(seed)
        self._cache: dict = {}

    def params(self):
        return {"rank": self.rank, "sweeps": self.sweeps, "seed": self.seed}

    def check(self, x):
        if not isinstance(x, self.kind):
            raise DomainError(f"family slinear expects an IQP or graph instance, got {type(x).__name__}")
        return x

    def prepared(self, x):
        """``(q, v, coins)``: the IQP, the projections ``<u_i, Z>`` and the coins."""
        key = id(x)
        hit = self._cache.get(key)
        if hit is not None and hit[0] is x:
            return hit[1]
        q = maxcut_to_iqp(self.check(x)) if isinstance(x, GraphInstance) else x
        tape = q.tape if q.tape is not None else RandomTape(self.seed)
        e = sdp_embed(q, self.rank, self.sweeps, tape)
        v = e.vectors @ tape.rng("slinear.gaussian").standard_normal(e.rank)
        coins = tape.rng("slinear.coins").random(q.n)
        if len(self._cache) > 256:
            self._cache.clear()
        self._cache[key] = (x, (q, v, coins))
        return q, v, coins

    def utility(self, x, rho):
        q, v, coins = self.prepared(x)
        return q.objective(round_signs(v, coins, rho))

    def range_bound(self, x):
        q = self.prepared(x)[0]
        return float(np.abs(q.A).sum())

    def dual(self, x, domain=None):
        lo, hi = self._domain(domain)
        q, v, coins = self.prepared(x)
        flips = slinear_flip_points(v, coins)
        inside = flips[(flips > lo) & (flips < hi)]
        values = [q.objective(round_signs(v, coins, r)) for r in _midpoints(lo, inside, hi)]
        return PiecewiseConstant(lo, hi, inside, values).canonical()


FAMILIES = {
    "knapsack": KnapsackFamily,
    "mwis": MwisFamily,
    "scl": SclFamily,
    "exp": ExpFamily,
    "lloyds": LloydsFamily,
    "slinear": SlinearFamily,
}


def make_family(name: str, **params) -> Family:
    try:
        cls = FAMILIES[name]
    except KeyError:
        raise DomainError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from None
    return cls(**params)
