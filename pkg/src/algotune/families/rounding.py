"""Low-rank SDP relaxation of an IQP and s-linear randomized rounding.

The rounding of vertex ``i`` compares a coin ``c_i`` in [0, 1) against
``1/2 + phi_rho(v_i)/2``.  Rather than evaluating that probability in floating
point, the comparison is rewritten as a comparison of ``rho`` against a
per-vertex threshold, so that for fixed Gaussian direction and coins the
rounded vector is an exactly piecewise-constant function of ``rho`` with at
most one flip per vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..instances import IqpInstance, RandomTape


@dataclass(frozen=True, eq=False)
class Embedding:
    vectors: np.ndarray
    objective: float
    history: tuple = ()

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]


def default_rank(n: int) -> int:
    return math.ceil(math.sqrt(2 * n)) + 1


def _objective(A: np.ndarray, U: np.ndarray) -> float:
    return float(np.sum(A * (U @ U.T)))


def sdp_embed(q: IqpInstance, rank: int | None = None, sweeps: int = 50, tape: RandomTape | None = None, tol: float = 0.0) -> Embedding:
    """Coordinate ascent on ``sum a_ij <u_i, u_j>`` over unit vectors of dimension ``rank``.

    ``history`` holds the objective after initialization and after every sweep.
    Stops early once a sweep improves the objective by no more than ``tol``.
    """
    n = q.n
    rank = default_rank(n) if rank is None else int(rank)
    if rank < 2:
        raise DomainError(f"rank={rank} must be >= 2")
    if sweeps < 1:
        raise DomainError(f"sweeps={sweeps} must be >= 1")
    tape = RandomTape(0) if tape is None else tape
    U = tape.rng("sdp.init").standard_normal((n, rank))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    A = q.A
    off = A - np.diag(np.diag(A))
    history = [_objective(A, U)]
    for _ in range(sweeps):
        for i in range(n):
            g = off[i] @ U
            norm = np.linalg.norm(g)
            if norm > 1e-12:
                U[i] = g / norm
        history.append(_objective(A, U))
        if history[-1] - history[-2] <= tol:
            break
    U.setflags(write=False)
    return Embedding(U, history[-1], tuple(history))


def phi(y, rho: float):
    """s-linear map: ``y / rho`` clamped to [-1, 1]; ``rho = 0`` gives the sign."""
    y = np.asarray(y, dtype=float)
    if rho < 0:
        raise DomainError(f"rho={rho} must be >= 0")
    if rho == 0:
        return np.sign(y)
    return np.clip(y / rho, -1.0, 1.0)


def _thresholds(v: np.ndarray, coins: np.ndarray) -> np.ndarray:
    """Per-vertex flip point: ``z_i = +1`` for rho below it (v > 0) or above it (v < 0)."""
    t = np.full(len(v), math.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = (v > 0) & (coins >= 0.5)
        t[pos] = v[pos] / (2 * coins[pos] - 1)
        neg = (v < 0) & (coins < 0.5)
        t[neg] = -v[neg] / (1 - 2 * coins[neg])
    return t


def round_signs(v: np.ndarray, coins: np.ndarray, rho: float) -> np.ndarray:
    """``z_i = +1`` iff ``coins_i < 1/2 + phi_rho(v_i)/2`` (exact threshold form).

    ``coins`` may be a matrix of independent coin rows.
    """
    v = np.asarray(v, dtype=float)
    coins = np.asarray(coins, dtype=float)
    v_b = np.broadcast_to(v, coins.shape)
    t = _thresholds(v_b.reshape(-1), coins.reshape(-1)).reshape(coins.shape)
    plus = np.where(
        v_b > 0,
        (coins < 0.5) | (rho < t),
        np.where(v_b < 0, (coins < 0.5) & (rho > t), coins < 0.5),
    )
    return np.where(plus, 1.0, -1.0)


def expected_given_projection(q: IqpInstance, v: np.ndarray, rho: float) -> float:
    """``sum_i a_ii + sum_{i != j} a_ij phi(v_i) phi(v_j)``: the mean of ``z^T A z`` over the coins."""
    p = phi(v, rho)
    A = q.A
    diag = np.diag(A)
    return float(diag.sum() + p @ A @ p - np.sum(diag * p * p))


def slinear_round(e: Embedding, q: IqpInstance, rho: float, tape: RandomTape, gaussian=None, size: int | None = None):
    """Round the embedding with s-linear rounding; returns ``(z, realized, expected_given_Z)``.

    The Gaussian direction and the coins come from ``tape`` unless ``gaussian``
    is passed.  With ``size`` the coins are drawn ``size`` times and ``z`` and
    ``realized`` become arrays over the draws.
    """
    if rho < 0:
        raise DomainError(f"rho={rho} must be >= 0")
    if e.n != q.n:
        raise DomainError(f"embedding has {e.n} vectors, instance has n={q.n}")
    Z = tape.rng("slinear.gaussian").standard_normal(e.rank) if gaussian is None else np.asarray(gaussian, dtype=float)
    v = e.vectors @ Z
    coins_rng = tape.rng("slinear.coins")
    coins = coins_rng.random(q.n) if size is None else coins_rng.random((int(size), q.n))
    z = round_signs(v, coins, rho)
    if size is None:
        realized = q.objective(z)
    else:
        realized = np.einsum("si,ij,sj->s", z, q.A, z)
    return z, realized, expected_given_projection(q, v, rho)


def slinear_flip_points(v: np.ndarray, coins: np.ndarray) -> np.ndarray:
    """Parameters at which the rounded vector changes, in half-open piece convention.

    A vertex with ``v > 0`` turns to -1 at its threshold ``t`` (closed on the
    right piece); one with ``v < 0`` turns to +1 strictly after ``t``, which as
    a float piece starts at the next representable number.
    """
    v = np.asarray(v, dtype=float)
    t = _thresholds(v, np.asarray(coins, dtype=float))
    t = np.where(v < 0, np.nextafter(t, math.inf), t)
    return np.unique(t[np.isfinite(t)])


__all__ = [
    "Embedding",
    "default_rank",
    "sdp_embed",
    "phi",
    "round_signs",
    "expected_given_projection",
    "slinear_round",
    "slinear_flip_points",
]
