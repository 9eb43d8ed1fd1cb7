"""Continuous weighted majority over a 1-D parameter interval, regret and dispersion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .erm import DualFunction, build_dual
from .errors import DomainError
from .instances import RandomTape
from .piecewise import PiecewiseConstant, argmax, discontinuities, exp_mass, exp_sample, merge_sum


@dataclass
class OnlineState:
    lam: float
    domain: tuple
    running_sum: PiecewiseConstant = None
    round: int = 0
    log: list = field(default_factory=list)

    def __post_init__(self):
        if not self.lam >= 0:
            raise DomainError(f"lambda={self.lam} must be >= 0")
        lo, hi = float(self.domain[0]), float(self.domain[1])
        self.domain = (lo, hi)
        if self.running_sum is None:
            self.running_sum = PiecewiseConstant.constant(lo, hi, 0.0)

    @property
    def realized_total(self) -> float:
        return float(sum(u for _, u in self.log))


def cwm_sample(state: OnlineState, tape: RandomTape) -> float:
    """Draw the next parameter with density proportional to ``exp(lam * U_t)``."""
    return exp_sample(state.running_sum, state.lam, tape, stream=("cwm", state.round))


def cwm_update(state: OnlineState, dual: DualFunction | PiecewiseConstant, rho_played: float) -> OnlineState:
    """Record the play, add the observed dual to the running sum (in place)."""
    f = dual.f if isinstance(dual, DualFunction) else dual
    if f.domain != state.domain:
        raise DomainError(f"dual domain {f.domain} differs from the learner's {state.domain}")
    state.log.append((float(rho_played), f.eval(rho_played)))
    state.running_sum = merge_sum([state.running_sum, f])
    state.round += 1
    return state


def lambda_default(H: float, d: int, R: float, w: float, T: int) -> float:
    """``(1/H) * sqrt(d * ln(R / w) / T)``."""
    if not 0 < w < R:
        raise DomainError(f"need 0 < w < R, got w={w}, R={R}")
    if T < 1 or H <= 0 or d < 1:
        raise DomainError(f"need T >= 1, H > 0, d >= 1 (got T={T}, H={H}, d={d})")
    return math.sqrt(d * math.log(R / w) / T) / H


def knapsack_radius(n: int, b: float, C: float, T: int) -> float:
    """Ball radius ``1 / (sqrt(T) n^2 b^2 ln C)`` used for smoothed knapsack streams."""
    if C <= 1:
        raise DomainError(f"capacity C={C} must exceed 1")
    return 1.0 / (math.sqrt(T) * n * n * b * b * math.log(C))


def knapsack_lambda(n: int, b: float, C: float, T: int, R: float) -> float:
    """Learning rate for smoothed knapsack: the general rate with ``H = C``, ``d = 1`` and :func:`knapsack_radius`."""
    return lambda_default(C, 1, R, knapsack_radius(n, b, C, T), T)


def regret(duals: Sequence, plays: Sequence) -> float:
    """Hindsight-best total utility minus the realized total.

    ``plays`` holds ``(rho, realized)`` pairs or bare parameters (the realized
    utility is then read off the dual).
    """
    if len(duals) != len(plays):
        raise DomainError(f"{len(duals)} duals but {len(plays)} plays")
    fs = [d.f if isinstance(d, DualFunction) else d for d in duals]
    if not fs:
        return 0.0
    realized = 0.0
    for f, p in zip(fs, plays):
        realized += p[1] if isinstance(p, (tuple, list)) else f.eval(p)
    return argmax(merge_sum(fs)).value - realized


def regret_bound(H: float, d: int, R: float, w: float, k: float, T: int, L: float = 0.0) -> float:
    """``H * (sqrt(T d ln(R/w)) + k) + T L w`` with unit constants."""
    return H * (math.sqrt(T * d * math.log(R / w)) + k) + T * L * w


def knapsack_regret_bound(n: int, b: float, C: float, T: int, R: float) -> float:
    """``C * sqrt(T ln(R T n b ln C))`` with unit constant."""
    return C * math.sqrt(T * math.log(R * T * n * b * math.log(C)))


# ---------------------------------------------------------------------------
# dispersion


@dataclass(frozen=True)
class DispersionReport:
    w: float
    k: int
    ball_center: float
    totals: tuple = ()

    @property
    def max_multiplicity(self) -> int:
        return max(self.totals, default=0)


_EPS4 = 4 * np.finfo(float).eps


def _gap_cmp(a: float, b: float, width: float) -> int:
    """Sign of ``(b - a) - width`` in exact arithmetic.

    Float subtraction decides unless the margin is within rounding error, in
    which case the operands are compared as exact rationals.
    """
    d = b - a
    if abs(d - width) > _EPS4 * max(abs(a), abs(b), width):
        return 1 if d > width else -1
    e = Fraction(b) - Fraction(a) - Fraction(width)
    return (e > 0) - (e < 0)


def _gap_le(a: float, b: float, width: float) -> bool:
    return _gap_cmp(a, b, width) <= 0


def _in_ball(points, center: float, w: float) -> bool:
    """Whether any point lies in the closed ball ``[center - w, center + w]`` (exact)."""
    points = np.asarray(points, dtype=float)
    # only points near the ball can be decided differently by rounding
    near = points[np.abs(points - center) <= w * (1 + _EPS4) + _EPS4 * abs(center)]
    return any(_gap_le(center, q, w) if q >= center else _gap_le(q, center, w) for q in near.tolist())


def _discontinuity_sets(duals) -> list:
    out = []
    for d in duals:
        f = d.f if isinstance(d, DualFunction) else d
        out.append(np.unique(discontinuities(f)))
    return out


def dispersion_profile(duals: Sequence, w: float, domain=None) -> DispersionReport:
    """Largest number of rounds with a discontinuity in one closed ball of radius ``w`` inside the domain.

    Candidate balls have their left edge on a discontinuity (or end at the
    domain's right edge when they would stick out); a ball can always slide
    right to such a position without losing any discontinuity.  Containment is
    decided in exact arithmetic.
    """
    if not w > 0:
        raise DomainError(f"w={w} must be positive")
    fs = [d.f if isinstance(d, DualFunction) else d for d in duals]
    if domain is None:
        domain = fs[0].domain if fs else (0.0, 1.0)
    lo, hi = float(domain[0]), float(domain[1])
    sets = _discontinuity_sets(fs)
    totals = tuple(len(s) for s in sets)
    if not any(totals):
        return DispersionReport(w, 0, lo + min(w, (hi - lo) / 2), totals)
    width = 2 * w
    if _gap_le(lo, hi, width):
        # no smaller ball fits: the whole domain is the only candidate
        return DispersionReport(w, sum(1 for t in totals if t), lo + (hi - lo) / 2, totals)
    pos = np.concatenate(sets)
    owner = np.concatenate([np.full(len(s), t) for t, s in enumerate(sets)])
    order = np.argsort(pos, kind="stable")
    pos, owner = pos[order].tolist(), owner[order].tolist()
    counts: dict = {}
    best_k, best_center = 0, None
    i_lo = 0  # first discontinuity inside the current ball
    j = 0  # first discontinuity right of the current ball
    for p in pos:
        if _gap_cmp(p, hi, width) >= 0:
            inside_right = lambda q, p=p: _gap_le(p, q, width)
            inside_left = lambda q, p=p: q >= p
            center = p + w
        else:
            # the ball [hi - 2w, hi]; every later anchor maps here too
            inside_right = lambda q: q <= hi
            inside_left = lambda q: _gap_le(q, hi, width)
            center = hi - w
        while j < len(pos) and inside_right(pos[j]):
            counts[owner[j]] = counts.get(owner[j], 0) + 1
            j += 1
        while i_lo < j and not inside_left(pos[i_lo]):
            c = counts[owner[i_lo]] - 1
            if c:
                counts[owner[i_lo]] = c
            else:
                del counts[owner[i_lo]]
            i_lo += 1
        if len(counts) > best_k:
            best_k, best_center = len(counts), center
    return DispersionReport(w, best_k, float(best_center), totals)


def split_count(duals: Sequence, center: float, w: float) -> int:
    """Rounds with a discontinuity in the closed ball ``[center - w, center + w]``."""
    return sum(1 for s in _discontinuity_sets(duals) if _in_ball(s, center, w))


@dataclass(frozen=True)
class WeightRatioCheck:
    lhs: float
    rhs: float
    opt: float
    k: int
    center: float
    skipped: bool

    @property
    def holds(self) -> bool:
        return self.skipped or self.lhs >= self.rhs


def weight_ratio_check(duals: Sequence, lam: float, H: float, w: float, L: float = 0.0, running_sum=None) -> WeightRatioCheck:
    """Compare ``log(W_{T+1}/W_1)`` with the ball lower bound around the hindsight maximizer.

    The lower bound is ``log(2w / |domain|) + lam * (OPT - H k - L T w)``.  It is
    only claimed when the ball lies inside the domain; otherwise ``skipped``.
    """
    fs = [d.f if isinstance(d, DualFunction) else d for d in duals]
    total = merge_sum(fs) if running_sum is None else running_sum
    lo, hi = total.domain
    best = argmax(total)
    k = split_count(fs, best.rho, w)
    lhs = exp_mass(total, lam) - math.log(hi - lo)
    rhs = math.log(2 * w / (hi - lo)) + lam * (best.value - H * k - L * len(fs) * w)
    skipped = _gap_cmp(lo, best.rho, w) < 0 or _gap_cmp(best.rho, hi, w) < 0
    return WeightRatioCheck(lhs, rhs, best.value, k, best.rho, skipped)


# ---------------------------------------------------------------------------
# orchestration


@dataclass(frozen=True)
class OnlineConfig:
    lam: float
    w: float
    H: float
    tape: RandomTape
    domain: tuple | None = None


@dataclass
class OnlineResult:
    plays: list
    cumulative_regret: np.ndarray
    piece_counts: np.ndarray
    dispersion: DispersionReport
    k_at_maximizer: int
    bound: float
    weight_check: WeightRatioCheck
    state: OnlineState
    duals: list

    @property
    def regret(self) -> float:
        return float(self.cumulative_regret[-1]) if len(self.cumulative_regret) else 0.0


def run_online(family, stream: Iterable, config: OnlineConfig) -> OnlineResult:
    """Play each round by sampling, then observe the instance's full dual and update."""
    domain = family.domain if config.domain is None else tuple(config.domain)
    state = OnlineState(config.lam, domain)
    duals, cum, pieces = [], [], []
    realized = 0.0
    for t, x in enumerate(stream):
        rho = cwm_sample(state, config.tape)
        dual = build_dual(family, x, state.domain, instance_id=str(t))
        cwm_update(state, dual, rho)
        duals.append(dual)
        realized += state.log[-1][1]
        cum.append(argmax(state.running_sum).value - realized)
        pieces.append(state.running_sum.n_pieces)
    T = len(duals)
    if T == 0:
        raise DomainError("empty instance stream")
    lo, hi = state.domain
    report = dispersion_profile(duals, config.w, state.domain)
    check = weight_ratio_check(duals, state.lam, config.H, config.w, running_sum=state.running_sum)
    R = hi - lo
    bound = regret_bound(config.H, 1, R, config.w, check.k, T) if config.w < R else math.inf
    return OnlineResult(list(state.log), np.array(cum), np.array(pieces), report, check.k, bound, check, state, duals)
