"""Problem instances, smoothed random generators and the instance file format.

Every instance is immutable.  Randomness is drawn from a :class:`RandomTape`,
so a generator called twice with the same tape returns identical instances.
An instance may also carry the tape that randomized algorithms (seeding,
rounding) use for it: the algorithm then becomes a deterministic function of
the augmented instance.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, ParseError, UnsupportedKindError

_U64 = 2**64


@dataclass(frozen=True)
class RandomTape:
    """A replayable source of named random streams."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < _U64) or not (0 <= int(self.stream_id) < _U64):
            raise DomainError(f"tape seed/stream_id must be unsigned 64-bit, got {self.seed}/{self.stream_id}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "stream_id", int(self.stream_id))

    def rng(self, *keys: Union[str, int]) -> np.random.Generator:
        """Generator for the stream named by ``keys`` (strings or ints)."""
        spawn = [self.stream_id]
        for key in keys:
            spawn.append(zlib.crc32(key.encode()) if isinstance(key, str) else int(key))
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=tuple(spawn))))

    def child(self, stream_id: int) -> "RandomTape":
        return RandomTape(self.seed, stream_id)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "stream_id": self.stream_id}


def _frozen_array(values, name: str, ndim: int = 1) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise DomainError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0].tolist()
        raise DomainError(f"{name}{bad} is not finite")
    arr.setflags(write=False)
    return arr


class _ArrayEq:
    """Value equality for frozen dataclasses holding numpy arrays."""

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        for name in self.__dataclass_fields__:
            a, b = getattr(self, name), getattr(other, name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if not (np.shape(a) == np.shape(b) and np.array_equal(a, b)):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None


@dataclass(frozen=True, eq=False)
class KnapsackInstance(_ArrayEq):
    values: np.ndarray
    sizes: np.ndarray
    capacity: float
    tape: RandomTape | None = None

    def __post_init__(self):
        values = _frozen_array(self.values, "values")
        sizes = _frozen_array(self.sizes, "sizes")
        if len(values) == 0 or len(values) != len(sizes):
            raise DomainError(f"values and sizes must be non-empty and equal length ({len(values)} vs {len(sizes)})")
        for name, arr in (("values", values), ("sizes", sizes)):
            if np.any(arr <= 0):
                i = int(np.argmax(arr <= 0))
                raise DomainError(f"{name}[{i}]={arr[i]!r} must be positive")
        capacity = float(self.capacity)
        if not (math.isfinite(capacity) and capacity > 0):
            raise DomainError(f"capacity={capacity!r} must be positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "capacity", capacity)

    @property
    def n(self) -> int:
        return len(self.values)

    @cached_property
    def log_values(self) -> np.ndarray:
        return np.log(self.values)

    @cached_property
    def log_sizes(self) -> np.ndarray:
        return np.log(self.sizes)


@dataclass(frozen=True, eq=False)
class GraphInstance(_ArrayEq):
    """Undirected simple graph with vertex weights and (for max-cut) edge weights."""

    n: int
    weights: np.ndarray
    edges: tuple = ()
    edge_weights: np.ndarray | None = None
    tape: RandomTape | None = None

    def __post_init__(self):
        n = int(self.n)
        if n < 0:
            raise DomainError(f"n={n} must be non-negative")
        weights = _frozen_array(self.weights, "weights")
        if len(weights) != n:
            raise DomainError(f"weights has length {len(weights)}, expected n={n}")
        if np.any(weights < 0):
            raise DomainError(f"weights[{int(np.argmax(weights < 0))}] must be >= 0")
        edges = []
        for idx, (i, j) in enumerate(self.edges):
            i, j = int(i), int(j)
            if i == j:
                raise DomainError(f"edges[{idx}]=({i},{j}) is a self-loop")
            if not (0 <= i < n and 0 <= j < n):
                raise DomainError(f"edges[{idx}]=({i},{j}) has an endpoint outside [0,{n})")
            edges.append((min(i, j), max(i, j)))
        ew = np.ones(len(edges)) if self.edge_weights is None else self.edge_weights
        ew = _frozen_array(ew, "edge_weights")
        if len(ew) != len(edges):
            raise DomainError(f"edge_weights has length {len(ew)}, expected {len(edges)}")
        if len(set(edges)) != len(edges):
            raise DomainError("edges contain a duplicate pair")
        order = sorted(range(len(edges)), key=edges.__getitem__)
        ew = ew[order] if len(order) else ew
        ew.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "edges", tuple(edges[i] for i in order))
        object.__setattr__(self, "edge_weights", ew)

    @cached_property
    def adjacency(self) -> tuple:
        adj = [set() for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return tuple(frozenset(a) for a in adj)


@dataclass(frozen=True, eq=False)
class ClusteringInstance(_ArrayEq):
    dist: np.ndarray
    k: int
    ground_truth: tuple | None = None
    M: float | None = None
    tape: RandomTape | None = None

    def __post_init__(self):
        dist = _frozen_array(self.dist, "dist", ndim=2)
        n = dist.shape[0]
        if dist.shape != (n, n) or n < 1:
            raise DomainError(f"dist must be a non-empty square matrix, got shape {dist.shape}")
        if not np.array_equal(dist, dist.T):
            raise DomainError("dist must be symmetric")
        if np.any(np.diag(dist) != 0):
            raise DomainError("dist must have a zero diagonal")
        if np.any(dist < 0):
            raise DomainError("dist entries must be >= 0")
        M = float(dist.max()) if self.M is None else float(self.M)
        if np.any(dist > M):
            raise DomainError(f"dist entries exceed the cap M={M}")
        k = int(self.k)
        if not 1 <= k <= n:
            raise DomainError(f"k={k} must lie in [1, n={n}]")
        gt = None
        if self.ground_truth is not None:
            gt = tuple(tuple(sorted(int(p) for p in block)) for block in self.ground_truth)
            members = sorted(p for block in gt for p in block)
            if members != list(range(n)) or any(len(b) == 0 for b in gt):
                raise DomainError("ground_truth must partition {0..n-1} into non-empty blocks")
            if len(gt) != k:
                raise DomainError(f"ground_truth has {len(gt)} blocks, expected k={k}")
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "ground_truth", gt)
        object.__setattr__(self, "M", M)

    @property
    def n(self) -> int:
        return self.dist.shape[0]


@dataclass(frozen=True, eq=False)
class IqpInstance(_ArrayEq):
    """Integer quadratic program ``max z^T A z`` over ``z in {-1, +1}^n``."""

    A: np.ndarray
    tape: RandomTape | None = None

    def __post_init__(self):
        A = np.array(_frozen_array(self.A, "A", ndim=2))
        if A.shape[0] != A.shape[1]:
            raise DomainError(f"A must be square, got shape {A.shape}")
        A = (A + A.T) / 2
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def objective(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(z @ self.A @ z)


Instance = Union[KnapsackInstance, GraphInstance, ClusteringInstance, IqpInstance]


# ---------------------------------------------------------------------------
# generators


def _smooth_draw(rng: np.random.Generator, lo: float, hi: float, b: float, size: int) -> np.ndarray:
    # uniform on a width-1/b window whose position is uniform in [lo, hi - 1/b];
    # draws land in (start, start + 1/b]
    width = 1.0 / b
    starts = rng.uniform(lo, hi - width, size) if hi - width > lo else np.full(size, lo)
    return starts + width * (1.0 - rng.random(size))


def gen_knapsack_smooth(n: int, capacity: float, b: float, tape: RandomTape) -> KnapsackInstance:
    """Knapsack instance with b-smooth values in (0, 1] and sizes uniform on [1, capacity]."""
    if n < 1:
        raise DomainError(f"n={n} must be >= 1")
    if capacity < 1:
        raise DomainError(f"capacity={capacity} must be >= 1")
    if b < 1:
        raise DomainError(f"b={b} must be >= 1: a width-1/b window would not fit in (0, 1]")
    values = _smooth_draw(tape.rng("knapsack.values"), 0.0, 1.0, b, n)
    sizes = tape.rng("knapsack.sizes").uniform(1.0, capacity, n)
    return KnapsackInstance(values, sizes, capacity, tape)


def gen_clustering_smooth(n: int, M: float, b: float, k: int, tape: RandomTape) -> ClusteringInstance:
    """Distance matrix whose upper-triangle entries are independent and b-smooth in [0, M]."""
    if n < 2:
        raise DomainError(f"n={n} must be >= 2")
    if b <= 0 or M < 1.0 / b:
        raise DomainError(f"need M >= 1/b, got M={M}, b={b}")
    if not 1 <= k <= n:
        raise DomainError(f"k={k} must lie in [1, {n}]")
    iu = np.triu_indices(n, 1)
    entries = _smooth_draw(tape.rng("clustering.dist"), 0.0, M, b, len(iu[0]))
    np.minimum(entries, M, out=entries)
    dist = np.zeros((n, n))
    dist[iu] = entries
    dist = dist + dist.T
    return ClusteringInstance(dist, k, None, M, tape)


def gen_maxcut(n: int, edge_prob: float, w_max: float, tape: RandomTape) -> GraphInstance:
    """Erdos-Renyi graph with i.i.d. uniform (0, w_max] edge and vertex weights."""
    if n < 0:
        raise DomainError(f"n={n} must be >= 0")
    if not 0 <= edge_prob <= 1:
        raise DomainError(f"edge_prob={edge_prob} must lie in [0, 1]")
    if not w_max > 0:
        raise DomainError(f"w_max={w_max} must be positive")
    rng = tape.rng("graph.edges")
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < edge_prob
    edges = list(zip(iu[0][keep].tolist(), iu[1][keep].tolist()))
    edge_weights = w_max * (1.0 - tape.rng("graph.edge_weights").random(len(edges)))
    weights = w_max * (1.0 - tape.rng("graph.vertex_weights").random(n))
    return GraphInstance(n, weights, tuple(edges), edge_weights, tape)


def maxcut_to_iqp(g: GraphInstance) -> IqpInstance:
    """IQP whose quadratic form plus half the total edge weight is the cut value.

    Each edge (i, j), i < j, contributes ``-w_ij / 2`` to entry ``A[i, j]``;
    symmetrization then spreads it as ``-w_ij / 4`` over both triangles.
    """
    A = np.zeros((g.n, g.n))
    for (i, j), w in zip(g.edges, g.edge_weights):
        A[i, j] = -w / 2
    return IqpInstance(A, g.tape)


# ---------------------------------------------------------------------------
# file format

_KINDS = {
    KnapsackInstance: "knapsack",
    GraphInstance: "graph",
    ClusteringInstance: "clustering",
    IqpInstance: "iqp",
}


def to_record(x: Instance) -> dict:
    kind = _KINDS.get(type(x))
    if kind is None:
        raise UnsupportedKindError(f"cannot serialize {type(x).__name__}")
    if kind == "knapsack":
        payload = {"values": x.values.tolist(), "sizes": x.sizes.tolist(), "capacity": x.capacity}
    elif kind == "graph":
        payload = {
            "n": x.n,
            "weights": x.weights.tolist(),
            "edges": [list(e) for e in x.edges],
            "edge_weights": x.edge_weights.tolist(),
        }
    elif kind == "clustering":
        payload = {
            "dist": x.dist.tolist(),
            "k": x.k,
            "ground_truth": None if x.ground_truth is None else [list(b) for b in x.ground_truth],
            "M": x.M,
        }
    else:
        payload = {"A": x.A.tolist()}
    return {"kind": kind, "payload": payload, "tape": None if x.tape is None else x.tape.to_dict()}


def _require(payload: dict, key: str, where: str):
    if key not in payload:
        raise ParseError(f"{where}: missing field 'payload.{key}'")
    return payload[key]


def from_record(record, where: str = "record") -> Instance:
    if not isinstance(record, dict):
        raise ParseError(f"{where}: expected an object, got {type(record).__name__}")
    kind = record.get("kind")
    payload = record.get("payload")
    if not isinstance(payload, dict):
        raise ParseError(f"{where}: field 'payload' must be an object")
    tape = record.get("tape")
    try:
        if tape is not None:
            tape = RandomTape(tape["seed"], tape.get("stream_id", 0))
        if kind == "knapsack":
            return KnapsackInstance(
                _require(payload, "values", where),
                _require(payload, "sizes", where),
                _require(payload, "capacity", where),
                tape,
            )
        if kind == "graph":
            return GraphInstance(
                _require(payload, "n", where),
                _require(payload, "weights", where),
                tuple(tuple(e) for e in payload.get("edges", [])),
                payload.get("edge_weights"),
                tape,
            )
        if kind == "clustering":
            return ClusteringInstance(
                _require(payload, "dist", where),
                _require(payload, "k", where),
                payload.get("ground_truth"),
                payload.get("M"),
                tape,
            )
        if kind == "iqp":
            return IqpInstance(_require(payload, "A", where), tape)
    except (DomainError, TypeError, KeyError, ValueError) as err:
        if isinstance(err, ParseError):
            raise
        raise ParseError(f"{where} ({kind}): {err}") from err
    raise UnsupportedKindError(f"{where}: unsupported instance kind {kind!r}")


def dumps_instances(instances: Iterable[Instance]) -> str:
    return json.dumps([to_record(x) for x in instances], indent=1) + "\n"


def write_instances(instances: Sequence[Instance], path) -> None:
    Path(path).write_text(dumps_instances(instances))


def read_instances(path) -> list:
    text = Path(path).read_text()
    try:
        records = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from err
    if not isinstance(records, list):
        raise ParseError(f"{path}: top level must be an array of instance records")
    return [from_record(r, f"{path}: instance[{i}]") for i, r in enumerate(records)]
