"""Batch learning over a sample of instances: duals, ERM, sample complexity, shattering."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, ParseError, ResourceError
from .families.catalog import Family
from .piecewise import PiecewiseConstant, argmax, merge_sum


@dataclass(frozen=True, eq=False)
class DualFunction:
    f: PiecewiseConstant
    family_id: str
    instance_id: str = ""
    exact: bool = True

    def __call__(self, rho):
        return self.f.eval(rho)

    def to_dict(self) -> dict:
        return {"family": self.family_id, "instance": self.instance_id, "exact": self.exact, **self.f.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "DualFunction":
        return cls(PiecewiseConstant.from_dict(d), d["family"], d.get("instance", ""), d.get("exact", True))


def build_dual(family: Family, x, domain=None, instance_id: str = "") -> DualFunction:
    return DualFunction(family.dual(x, domain), family.name, str(instance_id), family.exact)


def dump_duals(duals: Sequence[DualFunction], path) -> None:
    Path(path).write_text(json.dumps([d.to_dict() for d in duals], indent=1) + "\n")


def load_duals(path) -> list:
    try:
        return [DualFunction.from_dict(d) for d in json.loads(Path(path).read_text())]
    except (json.JSONDecodeError, KeyError, TypeError, DomainError) as err:
        raise ParseError(f"{path}: {err}") from err


def _common(duals: Sequence[DualFunction]) -> str:
    if not duals:
        raise DomainError("need at least one dual")
    families = {d.family_id for d in duals}
    if len(families) > 1:
        raise DomainError(f"duals mix families {sorted(families)}")
    return families.pop()


def average_dual(duals: Sequence[DualFunction]) -> PiecewiseConstant:
    _common(duals)
    return merge_sum([d.f for d in duals]).scaled(1.0 / len(duals))


def erm_select(duals: Sequence[DualFunction]) -> tuple[float, float]:
    """Parameter maximizing the sample-average utility and that average."""
    best = argmax(average_dual(duals))
    return best.rho, best.value


def sample_complexity(H: float, eps: float, delta: float, pdim: float, c: float = 1.0) -> int:
    """``ceil(c * (H / eps)**2 * (pdim + ln(1 / delta)))``."""
    if not (0 < eps < 1 and 0 < delta < 1):
        raise DomainError(f"eps={eps} and delta={delta} must lie in (0, 1)")
    if not (H > 0 and pdim > 0 and c > 0):
        raise DomainError(f"H={H}, pdim={pdim} and c={c} must be positive")
    return math.ceil(c * (H / eps) ** 2 * (pdim + math.log(1 / delta)))


def pdim_fixed_point(n: int, H: float, eps: float, delta: float, c: float = 1.0, max_iter: int = 100) -> tuple[int, int]:
    """Smallest self-consistent ``(pdim, m)`` with ``pdim = ceil(log2(n^2 m))`` and ``m`` from :func:`sample_complexity`.

    Iterates from ``pdim = 1``; the map is monotone, so the iteration climbs
    to the least fixed point.
    """
    pdim = 1
    for _ in range(max_iter):
        m = sample_complexity(H, eps, delta, pdim, c)
        nxt = math.ceil(math.log2(n * n * m))
        if nxt == pdim:
            return pdim, m
        pdim = nxt
    raise ResourceError(f"no fixed point within {max_iter} iterations")


def generalization_gap(family: Family, rho: float, train: Sequence, test: Sequence) -> float:
    if not train or not test:
        raise DomainError("train and test must be non-empty")
    a = sum(family.utility(x, rho) for x in train) / len(train)
    b = sum(family.utility(x, rho) for x in test) / len(test)
    return abs(a - b)


def uniform_gap(train: Sequence[DualFunction], test: Sequence[DualFunction]) -> tuple[float, float]:
    """``sup_rho |avg_train(rho) - avg_test(rho)|`` and the leftmost parameter attaining it."""
    diff = merge_sum([average_dual(train), average_dual(test).scaled(-1.0)])
    i = int(np.argmax(np.abs(diff.values)))
    edges = diff.edges
    return float(abs(diff.values[i])), float(edges[i] + (edges[i + 1] - edges[i]) / 2)


def _region_values(duals: Sequence[DualFunction]) -> np.ndarray:
    """Matrix of dual values, one row per region of the merged breakpoints."""
    lo, hi = duals[0].f.domain
    union = np.unique(np.concatenate([d.f.breakpoints for d in duals]))
    edges = np.concatenate(([lo], union, [hi]))
    mids = edges[:-1] + np.diff(edges) / 2
    return np.column_stack([d.f.eval(mids) for d in duals])


def _patterns(values: np.ndarray, targets) -> set:
    bits = values > np.asarray(targets, dtype=float)[None, :]
    return {row.tobytes() for row in bits}


def shatter_verify(duals: Sequence[DualFunction], targets: Sequence[float]) -> bool:
    """Whether ``duals`` realize every above/below pattern against ``targets``.

    An instance is in the subset iff its utility is at most its target.
    """
    m = len(duals)
    if m > 20:
        raise ResourceError(f"shattering check enumerates 2^m patterns; m={m} exceeds 20")
    if len(targets) != m:
        raise DomainError(f"{len(targets)} targets for {m} duals")
    if m == 0:
        return True
    _common(duals)
    return len(_patterns(_region_values(duals), targets)) == 2**m


def _candidate_targets(column: np.ndarray) -> np.ndarray:
    vals = np.unique(column)
    return vals[:-1] + np.diff(vals) / 2


def _find_witness(values: np.ndarray):
    """Targets shattering all columns of ``values`` or None (backtracking over midpoints)."""
    values = np.unique(values, axis=0)
    m = values.shape[1]
    if values.shape[0] < 2**m:
        return None
    cands = [_candidate_targets(values[:, j]) for j in range(m)]
    chosen: list = []

    def extend(j):
        if j == m:
            return True
        for t in cands[j]:
            chosen.append(t)
            if len(_patterns(values[:, : j + 1], chosen)) == 2 ** (j + 1) and extend(j + 1):
                return True
            chosen.pop()
        return False

    return list(chosen) if extend(0) else None


def empirical_pdim(duals: Sequence[DualFunction], cap: int = 12) -> tuple[int, tuple, list]:
    """Largest shatterable subset (size, indices, targets) found by exhaustive search.

    Subsets are grown level by level and only sets whose every smaller subset
    is shatterable are tried.  The result lower-bounds the pseudo-dimension.
    """
    if cap > 12:
        raise ResourceError(f"cap={cap} exceeds the exhaustive-search limit of 12")
    if not duals:
        return 0, (), []
    _common(duals)
    values = _region_values(duals)
    best: tuple = (0, (), [])
    level = {(): []}
    for size in range(1, min(cap, len(duals)) + 1):
        nxt = {}
        for base in sorted(level):
            start = base[-1] + 1 if base else 0
            for j in range(start, len(duals)):
                cand = base + (j,)
                if any(sub not in level for sub in itertools.combinations(cand, size - 1)):
                    continue
                witness = _find_witness(values[:, list(cand)])
                if witness is not None:
                    nxt[cand] = witness
        if not nxt:
            break
        level = nxt
        first = min(level)
        best = (size, first, [float(t) for t in level[first]])
    return best
