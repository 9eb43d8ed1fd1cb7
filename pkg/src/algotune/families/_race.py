"""Comparisons between candidates whose costs are affine in the parameter.

Candidate ``i`` has cost ``alpha[i] + beta[i] * rho``; the smallest cost wins
and ties go to the lower index.  Two evaluation modes exist:

* plain: costs are compared at ``rho`` itself;
* right-limit: the winner is the one that wins on ``(rho, rho + eps)``.  Every
  decision is taken from the same crossing value that later bounds the trace,
  so a left-to-right sweep always makes progress.
"""

from __future__ import annotations

import math

import numpy as np


def _right_beats(ap, bp, aw, bw, rho) -> bool:
    # does candidate p (higher index) beat incumbent w just right of rho?
    da = ap - aw
    if da != da:  # both infinite with the same sign: a permanent tie
        return False
    db = bp - bw
    if db == 0 or math.isinf(da):
        return da < 0
    c = -da / db
    return rho < c if db > 0 else rho >= c


def right_limit_winner(alpha, beta, rho: float) -> int:
    best = 0
    for p in range(1, len(alpha)):
        if _right_beats(alpha[p], beta[p], alpha[best], beta[best], rho):
            best = p
    return best


def _crossings(alpha: np.ndarray, beta: np.ndarray, w: int):
    with np.errstate(invalid="ignore"):
        da = alpha[w] - alpha
        db = beta[w] - beta
    idx = np.flatnonzero((db != 0) & np.isfinite(da))
    idx = idx[idx != w]
    return idx, -da[idx] / db[idx], db[idx]


def right_limit_bounds(alpha: np.ndarray, beta: np.ndarray, w: int, rho: float):
    """Open interval ``(lo, hi)`` right of ``rho`` on which ``w`` keeps winning."""
    _, c, db = _crossings(alpha, beta, w)
    up = c[(db > 0) & (c > rho)]
    down = c[db < 0]
    hi = float(up.min()) if len(up) else math.inf
    lo = float(down.max()) if len(down) else -math.inf
    return lo, hi


def plain_bounds(alpha: np.ndarray, beta: np.ndarray, w: int):
    """Exact set of parameters where ``w`` wins, as ``(lo, lo_closed, hi, hi_closed)``."""
    idx, c, db = _crossings(alpha, beta, w)
    closed = w < idx  # w keeps the tie against later candidates
    lo, lo_closed, hi, hi_closed = -math.inf, False, math.inf, False
    for ci, di, cl in zip(c.tolist(), db.tolist(), closed.tolist()):
        if di > 0:
            if ci < hi:
                hi, hi_closed = ci, cl
            elif ci == hi:
                hi_closed = hi_closed and cl
        else:
            if ci > lo:
                lo, lo_closed = ci, cl
            elif ci == lo:
                lo_closed = lo_closed and cl
    return lo, lo_closed, hi, hi_closed


class Bounds:
    """Running intersection of half-line constraints."""

    __slots__ = ("lo", "lo_closed", "hi", "hi_closed")

    def __init__(self):
        self.lo, self.lo_closed, self.hi, self.hi_closed = -math.inf, True, math.inf, True

    def add(self, lo, lo_closed, hi, hi_closed):
        if lo > self.lo:
            self.lo, self.lo_closed = lo, lo_closed
        elif lo == self.lo:
            self.lo_closed = self.lo_closed and lo_closed
        if hi < self.hi:
            self.hi, self.hi_closed = hi, hi_closed
        elif hi == self.hi:
            self.hi_closed = self.hi_closed and hi_closed

    def half_open(self):
        """Float interval ``[a, b)`` holding exactly the admissible floats."""
        a = self.lo if self.lo_closed else float(np.nextafter(self.lo, math.inf))
        b = float(np.nextafter(self.hi, math.inf)) if self.hi_closed else self.hi
        return a, b


_SIGN = 1 << 63
_TOP = int(np.float64(np.finfo(np.float64).max).view(np.int64))


def _key(x: float) -> int:
    # integer order key: consecutive floats have consecutive keys
    i = int(np.float64(x).view(np.int64))
    return i if i >= 0 else -(i & (_SIGN - 1))


def _float(k: int) -> float:
    return float(np.int64(k).view(np.float64)) if k >= 0 else float(np.uint64((-k) | _SIGN).view(np.float64))


def _edge(k_true: int, direction: int, ok) -> int:
    """Last key reached from ``k_true`` (where ``ok`` holds) before ``ok`` first fails.

    Gallops in ulp steps of 1, 2, 4, ... and then bisects, so a boundary any
    number of ulps away costs a logarithmic number of evaluations.
    """
    step = 1
    good = k_true
    while True:
        k = k_true + direction * step
        if abs(k) > _TOP or not ok(_float(k)):
            bad = max(min(k, _TOP + 1), -_TOP - 1)
            break
        good = k
        step *= 2
    while abs(bad - good) > 1:
        mid = (good + bad) // 2
        if ok(_float(mid)):
            good = mid
        else:
            bad = mid
    return good


def snap(lo: float, hi: float, rho: float, same):
    """Move float interval ends so that ``same`` holds at ``lo``, just below ``hi`` and at ``rho``.

    The crossing value ``-da/db`` and a direct comparison of the two costs can
    round differently, so the switch seen by re-execution may sit some ulps
    away from the computed crossing.  Each end moves by a galloping search, so
    the cost is logarithmic in that distance.  ``same(rho)`` must hold.
    """
    k_rho = _key(rho)
    if math.isfinite(lo):
        k = min(_key(lo), k_rho)
        if same(_float(k)):
            k = _edge(k, -1, same)
        else:
            # near a crossing the outcome can flicker between neighbouring
            # floats, so the inward search must not pass rho
            k = _edge(k, 1, lambda r: r < rho and not same(r)) + 1
        lo = _float(k)
    if math.isfinite(hi):
        k = max(_key(hi) - 1, k_rho)
        if same(_float(k)):
            k = _edge(k, 1, same)
        else:
            k = _edge(k, -1, lambda r: r > rho and not same(r)) - 1
        hi = _float(k + 1)
    return lo, hi
