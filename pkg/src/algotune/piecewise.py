"""Piecewise-constant functions of one real parameter.

Pieces are half-open ``[b_i, b_{i+1})`` except the last one, which also owns
the right end of the domain.  Values are exact floats; nothing here rounds or
snaps breakpoints.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError, ResourceError

MAX_PIECES = 10**7


class PiecewiseConstant:
    __slots__ = ("lo", "hi", "breakpoints", "values")

    def __init__(self, lo: float, hi: float, breakpoints: Sequence[float] = (), values: Sequence[float] = (0.0,)):
        lo, hi = float(lo), float(hi)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise DomainError(f"domain [{lo}, {hi}] must be finite with lo < hi")
        bps = np.array(breakpoints, dtype=float).reshape(-1)
        vals = np.array(values, dtype=float).reshape(-1)
        if len(vals) != len(bps) + 1:
            raise DomainError(f"{len(bps)} breakpoints need {len(bps) + 1} values, got {len(vals)}")
        if len(bps) and (np.any(np.diff(bps) <= 0) or bps[0] <= lo or bps[-1] >= hi):
            raise DomainError("breakpoints must be strictly increasing and interior to the domain")
        if not np.all(np.isfinite(vals)):
            raise DomainError("piece values must be finite")
        if len(vals) > MAX_PIECES:
            raise ResourceError(f"{len(vals)} pieces exceeds the cap of {MAX_PIECES}")
        bps.setflags(write=False)
        vals.setflags(write=False)
        self.lo, self.hi, self.breakpoints, self.values = lo, hi, bps, vals

    @classmethod
    def constant(cls, lo: float, hi: float, value: float = 0.0) -> "PiecewiseConstant":
        return cls(lo, hi, (), (value,))

    @property
    def domain(self) -> tuple:
        return (self.lo, self.hi)

    @property
    def n_pieces(self) -> int:
        return len(self.values)

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate(([self.lo], self.breakpoints, [self.hi]))

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.edges)

    def piece_index(self, rho):
        return np.searchsorted(self.breakpoints, rho, side="right")

    def eval(self, rho):
        """Value at ``rho`` (scalar or array) under the half-open convention."""
        r = np.asarray(rho, dtype=float)
        if np.any((r < self.lo) | (r > self.hi)) or np.any(np.isnan(r)):
            raise DomainError(f"rho outside domain [{self.lo}, {self.hi}]")
        out = self.values[self.piece_index(r)]
        return float(out) if out.ndim == 0 else out

    __call__ = eval

    def canonical(self) -> "PiecewiseConstant":
        """Same function with equal adjacent pieces coalesced."""
        if len(self.breakpoints) == 0:
            return self
        keep = self.values[1:] != self.values[:-1]
        if keep.all():
            return self
        return PiecewiseConstant(self.lo, self.hi, self.breakpoints[keep], np.concatenate(([self.values[0]], self.values[1:][keep])))

    def scaled(self, factor: float) -> "PiecewiseConstant":
        return PiecewiseConstant(self.lo, self.hi, self.breakpoints, self.values * factor)

    def __eq__(self, other):
        if not isinstance(other, PiecewiseConstant):
            return NotImplemented
        return (
            self.domain == other.domain
            and np.array_equal(self.breakpoints, other.breakpoints)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"PiecewiseConstant([{self.lo}, {self.hi}], pieces={self.n_pieces})"

    def to_dict(self) -> dict:
        return {"domain": [self.lo, self.hi], "breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseConstant":
        lo, hi = d["domain"]
        return cls(lo, hi, d.get("breakpoints", ()), d["values"])


def evaluate(f: PiecewiseConstant, rho):
    return f.eval(rho)


def merge_sum(fs: Sequence[PiecewiseConstant]) -> PiecewiseConstant:
    """Pointwise sum over the sorted union of breakpoints, in canonical form.

    Piece values are accumulated function by function in list order, so each
    value is bit-identical to ``sum(f.eval(rho) for f in fs)`` on that piece.
    """
    fs = list(fs)
    if not fs:
        raise DomainError("merge_sum needs at least one function")
    lo, hi = fs[0].domain
    for f in fs[1:]:
        if f.domain != (lo, hi):
            raise DomainError(f"domain mismatch: {f.domain} vs {(lo, hi)}")
    union = np.unique(np.concatenate([f.breakpoints for f in fs]))
    n_regions = len(union) + 1
    if n_regions > MAX_PIECES:
        raise ResourceError(f"sum would have {n_regions} pieces, cap is {MAX_PIECES}")
    total = np.zeros(n_regions)
    for f in fs:
        starts = np.searchsorted(union, f.breakpoints) + 1
        counts = np.diff(np.concatenate(([0], starts, [n_regions])))
        total += np.repeat(f.values, counts)
    return PiecewiseConstant(lo, hi, union, total).canonical()


class ArgMax(NamedTuple):
    value: float
    lo: float
    hi: float
    rho: float


def argmax(f: PiecewiseConstant) -> ArgMax:
    """Leftmost maximal piece of the canonical form, represented by its midpoint."""
    g = f.canonical()
    i = int(np.argmax(g.values))
    edges = g.edges
    a, b = float(edges[i]), float(edges[i + 1])
    return ArgMax(float(g.values[i]), a, b, a + (b - a) / 2)


def _log_masses(f: PiecewiseConstant, lam: float) -> np.ndarray:
    return np.log(f.lengths) + lam * f.values


def exp_mass(f: PiecewiseConstant, lam: float) -> float:
    """``log`` of the integral of ``exp(lam * f)`` over the domain."""
    if lam < 0:
        raise DomainError(f"lambda={lam} must be >= 0")
    logs = _log_masses(f, lam)
    top = logs.max()
    return float(top + np.log(np.sum(np.exp(logs - top))))


def piece_probabilities(f: PiecewiseConstant, lam: float) -> np.ndarray:
    logs = _log_masses(f, lam)
    p = np.exp(logs - logs.max())
    return p / p.sum()


_CHUNK = 4_000_000


def exp_sample(f: PiecewiseConstant, lam: float, tape, size: int | None = None, stream=("exp_sample",)):
    """Draw from the density proportional to ``exp(lam * f)``.

    A piece is chosen by Gumbel-max over the log piece masses, then the point
    is uniform inside it.  Returns a float, or an array when ``size`` is given.
    ``stream`` names the tape stream, so repeated calls can use fresh draws.
    """
    if lam < 0:
        raise DomainError(f"lambda={lam} must be >= 0")
    rng = tape.rng(*stream)
    logs = _log_masses(f, lam)
    count = 1 if size is None else int(size)
    per_chunk = max(1, _CHUNK // len(logs))
    picks = []
    for start in range(0, count, per_chunk):
        rows = min(per_chunk, count - start)
        picks.append(np.argmax(logs + rng.gumbel(size=(rows, len(logs))), axis=1))
    idx = np.concatenate(picks)
    edges = f.edges
    left = edges[idx]
    draws = left + rng.random(count) * (edges[idx + 1] - left)
    # guard the rare rounding that lands exactly on the right edge of an interior piece
    draws = np.minimum(draws, np.nextafter(edges[idx + 1], -np.inf), where=idx + 1 < len(edges) - 1, out=draws)
    return float(draws[0]) if size is None else draws


def discontinuities(f: PiecewiseConstant) -> np.ndarray:
    """Breakpoints across which the value actually changes."""
    if len(f.breakpoints) == 0:
        return f.breakpoints
    return f.breakpoints[f.values[1:] != f.values[:-1]]
