"""Command-line driver: generate, sweep, train, online, dispersion, pdim, report.

Every command reads a JSON config, validates it, writes the fully resolved
config to ``<out>/config.json`` and writes its results next to it.  Outputs
depend only on (config, seed).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import erm, online
from .errors import DomainError, ParseError, ResourceError
from .families.catalog import FAMILIES, make_family
from .families.linkage import ExpRule, SclRule, linkage_tree
from .instances import (
    RandomTape,
    dumps_instances,
    gen_clustering_smooth,
    gen_knapsack_smooth,
    gen_maxcut,
    maxcut_to_iqp,
    read_instances,
)

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_IO = 0, 2, 3, 4

# test instances live in a separate block of tape streams
TEST_STREAM_OFFSET = 2**32

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_COUNT = {"type": "integer", "minimum": 1}
_PROB = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["family", "instances"],
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "family": {
            "type": "object",
            "required": ["name"],
            "properties": {
                "name": {"enum": sorted(FAMILIES)},
                "domain": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
            },
        },
        "instances": {
            "type": "object",
            "oneOf": [{"required": ["generator"]}, {"required": ["file"]}],
            "properties": {
                "file": {"type": "string"},
                "count": _COUNT,
                "generator": {
                    "type": "object",
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["knapsack", "clustering", "maxcut", "iqp"]},
                        "n": {"type": "integer", "minimum": 0},
                        "capacity": _NUM,
                        "b": _NUM,
                        "M": _NUM,
                        "k": {"type": "integer"},
                        "edge_prob": _NUM,
                        "w_max": _NUM,
                    },
                },
            },
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "m": {"oneOf": [_COUNT, {"const": "auto"}]},
                "test_count": _COUNT,
                "eps": _PROB,
                "delta": _PROB,
                "c": _POS,
                "H": _POS,
                "pdim": {"oneOf": [_POS, {"const": "auto"}]},
                "same_test": {"type": "boolean"},
            },
        },
        "online": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "T": _COUNT,
                "lam": {"type": "number", "minimum": 0},
                "w": _POS,
                "H": _POS,
                "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            },
        },
        "dispersion": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"T": _COUNT, "points": _COUNT, "safety": _POS},
        },
        "pdim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"m": {"type": "integer", "minimum": 1, "maximum": 20}, "cap": {"type": "integer", "minimum": 1, "maximum": 12}},
        },
        "report": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"rho": _NUM},
        },
    },
}

_DEFAULTS = {
    "train": {"m": "auto", "test_count": 2000, "eps": 0.1, "delta": 0.05, "c": 1.0, "pdim": "auto", "same_test": False},
    "online": {"T": 1000},
    "dispersion": {"T": 200, "points": 8, "safety": 3.0},
    "pdim": {"m": 10, "cap": 12},
    "report": {},
}


class ConfigError(Exception):
    pass


def resolve_config(raw: dict, seed: int | None = None) -> dict:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {err.message}") from None
    cfg = json.loads(json.dumps(raw))
    if seed is not None:
        cfg["seed"] = seed
    cfg.setdefault("seed", 0)
    for section, defaults in _DEFAULTS.items():
        cfg[section] = {**defaults, **cfg.get(section, {})}
    try:
        family = make_family(**cfg["family"])
    except TypeError as err:
        raise ConfigError(f"config family: {err}") from None
    cfg["family"] = family.to_dict()
    cfg["instances"].setdefault("count", 1)
    return cfg


# ---------------------------------------------------------------------------
# helpers


def _generate_one(gen: dict, tape: RandomTape):
    kind = gen["kind"]
    n = gen.get("n", 10)
    if kind == "knapsack":
        return gen_knapsack_smooth(n, gen.get("capacity", 4.0), gen.get("b", 5.0), tape)
    if kind == "clustering":
        return gen_clustering_smooth(n, gen.get("M", 1.0), gen.get("b", 5.0), gen.get("k", 2), tape)
    g = gen_maxcut(n, gen.get("edge_prob", 0.5), gen.get("w_max", 1.0), tape)
    return maxcut_to_iqp(g) if kind == "iqp" else g


def _instances(cfg: dict, count: int | None = None, offset: int = 0) -> list:
    src = cfg["instances"]
    count = src["count"] if count is None else count
    if "file" in src:
        # files have no streams: ``offset`` is a position in the file instead
        return read_instances(src["file"])[offset : offset + count]
    return [_generate_one(src["generator"], RandomTape(cfg["seed"], offset + i)) for i in range(count)]


def _family(cfg: dict):
    return make_family(**cfg["family"])


def _dual_job(args):
    fam_cfg, x, i = args
    return erm.build_dual(make_family(**fam_cfg), x, instance_id=str(i))


def _duals(cfg: dict, xs: list, workers: int, offset: int = 0) -> list:
    jobs = [(cfg["family"], x, offset + i) for i, x in enumerate(xs)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_dual_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_dual_job(j) for j in jobs]


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    path.write_text(buf.getvalue())


def _range_bound(cfg, family, xs, section="train") -> float:
    H = cfg[section].get("H")
    return float(H) if H else max(family.range_bound(x) for x in xs)


# ---------------------------------------------------------------------------
# commands


def cmd_generate(cfg, out: Path, workers: int) -> str:
    xs = _instances(cfg)
    (out / "instances.json").write_text(dumps_instances(xs))
    return f"generated {len(xs)} instances"


def cmd_sweep(cfg, out: Path, workers: int) -> str:
    xs = _instances(cfg)
    duals = _duals(cfg, xs, workers)
    erm.dump_duals(duals, out / "duals.json")
    rows = []
    for d in duals:
        edges = d.f.edges
        for a, b, v in zip(edges[:-1], edges[1:], d.f.values):
            rows.append((d.instance_id, float(a), float(b), float(v)))
    _write_csv(out / "pieces.csv", ["instance", "lo", "hi", "utility"], rows)
    counts = [d.f.n_pieces for d in duals]
    return f"swept {len(duals)} instances; pieces per instance: " + " ".join(map(str, counts))


def cmd_train(cfg, out: Path, workers: int) -> str:
    family = _family(cfg)
    tc = cfg["train"]
    gen = cfg["instances"].get("generator", {})
    n = gen.get("n", 10)
    probe = _instances(cfg, 1)
    H = _range_bound(cfg, family, probe)
    if tc["pdim"] == "auto":
        pdim, m_required = erm.pdim_fixed_point(n, H, tc["eps"], tc["delta"], tc["c"])
    else:
        pdim = tc["pdim"]
        m_required = erm.sample_complexity(H, tc["eps"], tc["delta"], pdim, tc["c"])
    m = m_required if tc["m"] == "auto" else tc["m"]
    train = _instances(cfg, m)
    train_duals = _duals(cfg, train, workers)
    test = [] if tc["same_test"] else _instances(cfg, tc["test_count"], m if "file" in cfg["instances"] else TEST_STREAM_OFFSET)
    test_duals = _duals(cfg, test, workers, TEST_STREAM_OFFSET) if test else train_duals
    rho_hat, train_avg = erm.erm_select(train_duals)
    test_avg = float(np.mean([d.f.eval(rho_hat) for d in test_duals]))
    report = {
        "rho_hat": rho_hat,
        "train_avg": train_avg,
        "test_avg": test_avg,
        "gap": abs(train_avg - test_avg),
        "uniform_gap": erm.uniform_gap(train_duals, test_duals)[0],
        "m": m,
        "m_required": m_required,
        "pdim": pdim,
        "H": H,
        "config": cfg,
    }
    _write_json(out / "report.json", report)
    return f"rho_hat={rho_hat!r} train_avg={train_avg!r} test_avg={test_avg!r} m={m}"


def _online_params(cfg, family, T):
    oc = cfg["online"]
    gen = cfg["instances"].get("generator", {})
    lo, hi = family.domain
    R = hi - lo
    H = oc.get("H") or (gen.get("capacity", 4.0) if family.name == "knapsack" else 1.0)
    if family.name == "knapsack" and gen.get("kind") == "knapsack":
        n, b, C = gen.get("n", 10), gen.get("b", 5.0), gen.get("capacity", 4.0)
        w = oc.get("w") or online.knapsack_radius(n, b, C, T)
        lam = oc.get("lam") if oc.get("lam") is not None else online.knapsack_lambda(n, b, C, T, R)
    else:
        w = oc.get("w") or 1 / math.sqrt(T)
        lam = oc.get("lam") if oc.get("lam") is not None else online.lambda_default(H, 1, R, w, T)
    return float(H), float(w), float(lam)


def _online_run(cfg, seed, family):
    T = cfg["online"]["T"]
    run_cfg = {**cfg, "seed": seed}
    xs = _instances(run_cfg, T)
    H, w, lam = _online_params(cfg, family, T)
    res = online.run_online(family, xs, online.OnlineConfig(lam, w, H, RandomTape(seed, 2**63)))
    return res, H, w, lam


def cmd_online(cfg, out: Path, workers: int) -> str:
    family = _family(cfg)
    seeds = cfg["online"].get("seeds")
    if seeds:
        rows = []
        for s in seeds:
            res, H, w, lam = _online_run(cfg, s, family)
            rows.append((s, res.regret, res.bound, res.k_at_maximizer, lam, int(res.weight_check.holds)))
        _write_csv(out / "batch.csv", ["seed", "regret", "bound", "k", "lambda", "weight_check"], rows)
        return f"ran {len(rows)} seeds"
    res, H, w, lam = _online_run(cfg, cfg["seed"], family)
    rows = [
        (t + 1, rho, u, r, p)
        for t, ((rho, u), r, p) in enumerate(zip(res.plays, res.cumulative_regret, res.piece_counts))
    ]
    _write_csv(out / "rounds.csv", ["round", "rho_played", "realized_utility", "cumulative_regret", "running_piece_count"], rows)
    wc = res.weight_check
    summary = {
        "regret": res.regret,
        "bound": res.bound,
        "k": res.k_at_maximizer,
        "lambda": lam,
        "w": w,
        "H": H,
        "T": len(res.plays),
        "weight_check": {"lhs": wc.lhs, "rhs": wc.rhs, "holds": wc.holds, "skipped": wc.skipped},
        "config": cfg,
    }
    _write_json(out / "summary.json", summary)
    return f"regret={res.regret!r} bound={res.bound!r} k={res.k_at_maximizer}"


def cmd_dispersion(cfg, out: Path, workers: int) -> str:
    dc = cfg["dispersion"]
    T = dc["T"]
    xs = _instances(cfg, T)
    duals = _duals(cfg, xs, workers)
    gen = cfg["instances"].get("generator", {})
    ws = np.geomspace(1.0 / T, 1.0 / math.sqrt(T), dc["points"])
    rows = []
    for w in ws:
        rep = online.dispersion_profile(duals, float(w))
        theory = ""
        if gen.get("kind") == "knapsack":
            n, b, C = gen.get("n", 10), gen.get("b", 5.0), gen.get("capacity", 4.0)
            theory = dc["safety"] * (w * T * n * n * b * b * math.log(C) + math.sqrt(T * math.log(n * math.sqrt(T))))
        rows.append((float(w), rep.k, rep.ball_center, theory))
    _write_csv(out / "dispersion.csv", ["w", "k", "ball_center", "theory"], rows)
    return "k over w: " + " ".join(str(r[1]) for r in rows)


def cmd_pdim(cfg, out: Path, workers: int) -> str:
    pc = cfg["pdim"]
    xs = _instances(cfg, pc["m"])
    duals = _duals(cfg, xs, workers)
    size, subset, targets = erm.empirical_pdim(duals, min(pc["cap"], len(duals)))
    counts = [d.f.n_pieces for d in duals]
    hist = {str(c): counts.count(c) for c in sorted(set(counts))}
    bound = math.ceil(math.log2(max(counts) * len(duals))) if max(counts) * len(duals) > 1 else 0
    report = {
        "largest_shattered": size,
        "subset": list(subset),
        "targets": targets,
        "piece_histogram": hist,
        "log2_bound": bound,
        "config": cfg,
    }
    _write_json(out / "pdim.json", report)
    return f"largest shattered set {size} (log2 bound {bound})"


def cmd_report(cfg, out: Path, workers: int) -> str:
    family = _family(cfg)
    xs = _instances(cfg)
    lo, hi = family.domain
    rho = cfg["report"].get("rho", lo + (hi - lo) / 2)
    entries = []
    for i, x in enumerate(xs):
        entry = {"instance": i, "rho": rho, "utility": family.utility(x, rho)}
        if family.name in ("scl", "exp"):
            rule = SclRule(rho) if family.name == "scl" else ExpRule(rho)
            entry["tree"] = linkage_tree(x, rule).to_dict()
        entries.append(entry)
    _write_json(out / "report.json", {"entries": entries, "config": cfg})
    return f"reported {len(entries)} instances at rho={rho!r}"


COMMANDS = {
    "generate": cmd_generate,
    "sweep": cmd_sweep,
    "train": cmd_train,
    "online": cmd_online,
    "dispersion": cmd_dispersion,
    "pdim": cmd_pdim,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="algotune", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    parser.add_argument("--workers", type=int, default=1, help="processes for dual construction")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--check", action="store_true", help="validate the config, print it resolved, and exit")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = json.loads(Path(args.config).read_text())
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as err:
        print(f"error: {args.config}:{err.lineno}:{err.colno}: {err.msg}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError(f"--seed {args.seed} is not an unsigned 64-bit integer")
        cfg = resolve_config(raw, args.seed)
        if args.check:
            print(json.dumps(cfg, indent=1, sort_keys=True))
            return EXIT_OK
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "config.json", cfg)
        print(COMMANDS[args.command](cfg, out, max(1, args.workers)))
    except (ConfigError, DomainError, ParseError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
