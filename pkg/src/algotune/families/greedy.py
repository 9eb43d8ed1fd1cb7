"""Single-parameter greedy heuristics: knapsack, adaptive MWIS, and the generic template.

Scores are compared in log space (``log v - rho * log s`` instead of
``v / s**rho``), which preserves the order and does not overflow for large
``rho``.  Ties always go to the smaller object index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from ..errors import DomainError, InternalError
from ..instances import GraphInstance, KnapsackInstance
from . import _race


# ---------------------------------------------------------------------------
# knapsack


def knapsack_greedy(x: KnapsackInstance, rho: float) -> tuple[tuple[int, ...], float]:
    """Add items in decreasing ``v_i / s_i**rho`` order while they fit.

    Returns the chosen indices in the order they were added and their total value.
    """
    if rho < 0:
        raise DomainError(f"rho={rho} must be >= 0")
    scores = x.log_values - rho * x.log_sizes
    order = np.argsort(-scores, kind="stable")
    remaining = x.capacity
    total = 0.0
    chosen = []
    for i in order.tolist():
        s = x.sizes[i]
        if s <= remaining:
            chosen.append(i)
            remaining -= s
            total += x.values[i]
    return tuple(chosen), float(total)


def knapsack_utilities(x: KnapsackInstance, rhos) -> np.ndarray:
    """Vectorized ``knapsack_greedy(x, rho)[1]`` over many parameters (bit-identical)."""
    rhos = np.asarray(rhos, dtype=float)
    scores = x.log_values[None, :] - rhos[:, None] * x.log_sizes[None, :]
    order = np.argsort(-scores, axis=1, kind="stable")
    remaining = np.full(len(rhos), x.capacity)
    total = np.zeros(len(rhos))
    for col in order.T:
        s = x.sizes[col]
        fits = s <= remaining
        remaining = remaining - np.where(fits, s, 0.0)
        total = total + np.where(fits, x.values[col], 0.0)
    return total


def knapsack_critical_values(x: KnapsackInstance) -> np.ndarray:
    """Sorted distinct ``rho >= 0`` at which two items swap places in the score order."""
    i, j = np.triu_indices(x.n, 1)
    dls = x.log_sizes[i] - x.log_sizes[j]
    dlv = x.log_values[i] - x.log_values[j]
    keep = (dls != 0) & (dlv != 0)
    c = dlv[keep] / dls[keep]
    return np.unique(c[c >= 0])


# ---------------------------------------------------------------------------
# maximum weight independent set


def _mwis_run(g: GraphInstance, rho: float, right: bool):
    log_w = np.log(g.weights) if g.n else np.zeros(0)
    adj = g.adjacency
    degree = np.array([len(a) for a in adj], dtype=float)
    live = np.ones(g.n, dtype=bool)
    chosen, total = [], 0.0
    bounds = _race.Bounds()
    while live.any():
        cand = np.flatnonzero(live)
        # minimize the negated log score: alpha + beta * rho
        alpha = -log_w[cand]
        beta = np.log(1.0 + degree[cand])
        if right:
            w = _race.right_limit_winner(alpha.tolist(), beta.tolist(), rho)
            lo, hi = _race.right_limit_bounds(alpha, beta, w, rho)
            bounds.add(lo, False, hi, False)
        else:
            with np.errstate(invalid="ignore", over="ignore"):
                w = int(np.argmax(log_w[cand] - rho * beta))
            bounds.add(*_race.plain_bounds(alpha, beta, w))
        v = int(cand[w])
        chosen.append(v)
        total += g.weights[v]
        removed = [v] + [u for u in adj[v] if live[u]]
        live[removed] = False
        for r in removed:
            for t in adj[r]:
                if live[t]:
                    degree[t] -= 1
    return tuple(chosen), float(total), bounds


def mwis_greedy(g: GraphInstance, rho: float) -> tuple[tuple[int, ...], float]:
    """Repeatedly take the vertex maximizing ``w(v) / (1 + deg(v))**rho`` on the residual graph."""
    if rho < 0:
        raise DomainError(f"rho={rho} must be >= 0")
    chosen, total, _ = _mwis_run(g, rho, right=False)
    return chosen, total


def mwis_stability_interval(g: GraphInstance, rho: float) -> tuple[float, float]:
    """Float interval ``[lo, hi)`` around ``rho`` with the same selection order."""
    if rho < 0:
        raise DomainError(f"rho={rho} must be >= 0")
    chosen, _, bounds = _mwis_run(g, rho, right=False)
    lo, hi = bounds.half_open()
    lo, hi = _race.snap(max(lo, 0.0), hi, rho, lambda r: r >= 0 and _mwis_run(g, r, right=False)[0] == chosen)
    return max(lo, 0.0), hi


def mwis_right_trace(g: GraphInstance, rho: float):
    """Selection made just right of ``rho`` and the end of the interval it persists on."""
    chosen, total, bounds = _mwis_run(g, rho, right=True)
    return chosen, total, bounds.hi


# ---------------------------------------------------------------------------
# generic template


@dataclass(frozen=True)
class GreedyFamilySpec:
    """A ``(kappa, beta)`` single-parameter greedy family.

    ``score(rho, attrs)`` must be continuous in ``rho``.  ``assign(i, attrs_i,
    unassigned, state)`` returns ``(y, state)`` and may rewrite the attributes
    of objects still in ``unassigned``.  ``utility(assignment, state)`` turns the
    finished run into a number.
    """

    score: Callable[[float, Any], float]
    assign: Callable[[int, Any, dict, Any], tuple[Any, Any]]
    utility: Callable[[list, Any], float]
    initial_state: Any = None
    kappa: int = 1
    beta: int = 1


def run_scored_greedy(spec: GreedyFamilySpec, objects: Sequence, rho: float) -> tuple[list, float]:
    unassigned = dict(enumerate(objects))
    assignment: list = [None] * len(objects)
    state = spec.initial_state
    cap = len(objects) * max(1, spec.beta)
    steps = 0
    while unassigned:
        steps += 1
        if steps > cap:
            raise InternalError(f"assignment rule did not terminate within n*beta={cap} steps")
        best, best_score = None, -math.inf
        for i in sorted(unassigned):
            s = spec.score(rho, unassigned[i])
            if best is None or s > best_score:
                best, best_score = i, s
        attrs = unassigned.pop(best)
        assignment[best], state = spec.assign(best, attrs, unassigned, state)
    return assignment, spec.utility(assignment, state)


def knapsack_spec(x: KnapsackInstance) -> tuple[GreedyFamilySpec, list]:
    """Knapsack as a (1, 1) family: attributes never change."""

    def assign(i, attrs, unassigned, state):
        remaining, total = state
        if attrs[3] <= remaining:
            return 1, (remaining - attrs[3], total + attrs[2])
        return 0, state

    spec = GreedyFamilySpec(
        score=lambda rho, a: a[0] - rho * a[1],
        assign=assign,
        utility=lambda assignment, state: float(state[1]),
        initial_state=(x.capacity, 0.0),
    )
    objects = list(zip(x.log_values, x.log_sizes, x.values, x.sizes))
    return spec, objects


def mwis_spec(g: GraphInstance) -> tuple[GreedyFamilySpec, list]:
    """Adaptive MWIS as a (1, n) family; attributes are (log weight, residual degree)."""
    adj = g.adjacency
    log_w = np.log(g.weights) if g.n else np.zeros(0)

    def assign(v, attrs, unassigned, state):
        dead, total = state
        if v in dead:
            return 0, state
        removed = [v] + [u for u in adj[v] if u in unassigned and u not in dead]
        dead = dead | set(removed)
        for r in removed:
            for t in adj[r]:
                if t in unassigned and t not in dead:
                    lw, deg = unassigned[t]
                    unassigned[t] = (lw, deg - 1)
        return 1, (dead, total + g.weights[v])

    spec = GreedyFamilySpec(
        score=lambda rho, a: a[0] - rho * np.log(1.0 + a[1]),
        assign=assign,
        utility=lambda assignment, state: float(state[1]),
        initial_state=(frozenset(), 0.0),
        kappa=1,
        beta=max(1, g.n),
    )
    objects = [(log_w[v], float(len(adj[v]))) for v in range(g.n)]
    return spec, objects
