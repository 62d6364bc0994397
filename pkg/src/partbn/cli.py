"""Command-line entry point: ``partbn {sample,learn,eval,bench}``.

Exit status is 0 on success, 1 on an internal error and 2 on a usage or
input error. Every command writes a ``*.manifest.json`` next to its
outputs recording the configuration, input digests and tool version.
"""

from __future__ import annotations

import argparse
import configparser
import difflib
import hashlib
import json
import sys
import time
import traceback
from pathlib import Path
from typing import Sequence

from . import __version__
from .apsl import ApslConfig, learn_part
from .bnio import BUNDLED, BifParseError, forward_sample, load_network
from .citest import TestConfig
from .dataset import DataFormatError, load_csv, write_csv
from .evaluation import ALGORITHMS, bench, score_part
from .graph import read_adjacency_csv, read_edge_list, write_adjacency_csv, write_edge_list


class UsageError(Exception):
    """Bad flags or inputs; reported with exit status 2."""


def _depth(text: str) -> int | None:
    if text.lower() == "max":
        return None
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"depth must be a positive integer or 'max', got {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError(f"depth must be >= 1, got {k}")
    return k


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def _cond_size(text: str) -> int | None:
    if text.lower() in ("none", "inf", "unlimited"):
        return None
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"max-cond-size must be an integer or 'none', got {text!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError("max-cond-size must be >= 0")
    return n


def _digest(path: str | Path) -> str:
    p = Path(path)
    if not p.is_file():
        return f"bundled:{path}"
    return "sha256:" + hashlib.sha256(p.read_bytes()).hexdigest()


def _write_manifest(path: Path, command: str, config: dict, inputs: dict, started: float, outputs: list) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {k: {"path": str(v), "digest": _digest(v)} for k, v in inputs.items()},
        "outputs": [str(o) for o in outputs],
        "tool": "partbn",
        "version": __version__,
        "wall_time": round(time.perf_counter() - started, 6),
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _network(spec: str):
    if spec.lower() not in BUNDLED and not Path(spec).is_file():
        raise FileNotFoundError(f"no such network file: {spec}")
    return load_network(spec)


def _resolve_target(names: Sequence[str], target: str) -> int:
    if target in names:
        return list(names).index(target)
    near = difflib.get_close_matches(target, names, n=5, cutoff=0.4)
    hint = f"; nearest: {', '.join(near)}" if near else f"; known: {', '.join(names)}"
    raise UsageError(f"unknown target {target!r}{hint}")


# commands ------------------------------------------------------------------

def cmd_sample(args) -> int:
    started = time.perf_counter()
    bn = _network(args.network)
    data = forward_sample(bn, args.n, args.seed)
    out = Path(args.out) if args.out else Path(f"{Path(args.network).stem}_n{args.n}_s{args.seed}.csv")
    with out.open("w", encoding="utf-8", newline="") as fh:
        write_csv(data, fh)
    _write_manifest(
        out.with_suffix(".manifest.json"), "sample", {"n": args.n, "seed": args.seed},
        {"network": args.network}, started, [out],
    )
    print(f"wrote {data.n_rows} rows x {data.n_vars} columns to {out}")
    return 0


def cmd_learn(args) -> int:
    started = time.perf_counter()
    path = Path(args.data)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        data = load_csv(fh)
    t = _resolve_target(data.names, args.target)
    test = TestConfig(alpha=args.alpha, max_cond_size=args.max_cond_size)
    cfg = ApslConfig(args.depth, ALGORITHMS[args.algorithm], test, args.delta)
    res = learn_part(data, t, cfg)
    g = res.graph

    prefix = Path(args.out) if args.out else path.with_name(f"{path.stem}.{args.target}")
    edges_path = prefix.with_name(prefix.name + ".edges.txt")
    adj_path = prefix.with_name(prefix.name + ".adj.csv")
    with edges_path.open("w", encoding="utf-8") as fh:
        write_edge_list(g, fh)
    with adj_path.open("w", encoding="utf-8", newline="") as fh:
        write_adjacency_csv(g, fh)
    config = {
        "algorithm": args.algorithm, "alpha": args.alpha, "delta": args.delta,
        "depth": "max" if args.depth is None else args.depth,
        "max_cond_size": args.max_cond_size, "seed": args.seed, "target": args.target,
    }
    _write_manifest(
        prefix.with_name(prefix.name + ".manifest.json"), "learn", config,
        {"data": path}, started, [edges_path, adj_path],
    )
    tester = res.tester
    print(f"target {args.target}  depth {config['depth']}  algorithm {args.algorithm}")
    print(f"edges {len(g.edges())}  directed {g.n_directed()}  undirected {g.n_undirected()}")
    print(
        f"ci tests {tester.n_tests()}  (pc conditional {tester.n_tests('pc', 'conditional')})"
        f"  nodes expanded {len(res.state.visited)}  wall {res.runtime:.3f}s"
    )
    for e in g.edges():
        print("  " + g.edge_str(e))
    return 0


def _read_graph(path: Path, names):
    if not path.is_file():
        raise FileNotFoundError(f"no such graph file: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".csv":
        g = read_adjacency_csv(text)
        unknown = [v for v in g.names if v not in names]
        if unknown:
            raise KeyError(f"unknown variable {unknown[0]!r}")
        if list(g.names) == list(names):
            return g
        lines = [g.edge_str(e) for e in g.edges()]
        return read_edge_list("\n".join(lines), names)
    return read_edge_list(text, names)


def cmd_eval(args) -> int:
    started = time.perf_counter()
    bn = _network(args.network)
    t = _resolve_target(bn.names, args.target)
    try:
        g = _read_graph(Path(args.graph), bn.names)
    except KeyError as exc:
        raise UsageError(f"graph references {exc.args[0]}") from None
    m = score_part(g, bn, t, args.depth, args.scope)
    out = {
        "ar_distance": m.ar_distance,
        "ar_precision": m.ar_precision,
        "ar_recall": m.ar_recall,
        "depth": "max" if args.depth is None else args.depth,
        "n_correct_edges": m.n_correct_edges,
        "n_predicted_edges": m.n_predicted_edges,
        "n_true_edges": m.n_true_edges,
        "target": args.target,
    }
    text = json.dumps(out, indent=2, sort_keys=True)
    print(text)
    if args.out:
        p = Path(args.out)
        p.write_text(text + "\n")
        _write_manifest(
            p.with_suffix(".manifest.json"), "eval", {"depth": out["depth"], "target": args.target, "scope": args.scope},
            {"graph": args.graph, "network": args.network}, started, [p],
        )
    return 0


BENCH_KEYS = {
    "networks", "sizes", "runs", "depths", "algorithms", "seed", "jobs",
    "alpha", "delta", "max_cond_size", "scope",
}


def parse_bench_spec(text: str) -> dict:
    """Parse a ``key = value`` bench spec; lists are comma separated.

    Keys: networks, sizes, runs, depths, algorithms, seed, jobs, alpha,
    delta, max_cond_size, scope, and ``targets.<network>`` for explicit
    target lists. Lines starting with ``#`` are comments.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string("[bench]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"bench spec: {exc}") from None
    sec = cp["bench"]
    lst = lambda key, default: [s.strip() for s in sec.get(key, default).split(",") if s.strip()]  # noqa: E731
    for key in sec:
        if key not in BENCH_KEYS and not key.startswith("targets."):
            raise UsageError(f"bench spec: unknown key {key!r}")
    try:
        spec = {
            "networks": lst("networks", ""),
            "sizes": [int(s) for s in lst("sizes", "500")],
            "runs": int(sec.get("runs", "10")),
            "depths": [_depth(s) for s in lst("depths", "1")],
            "algorithms": lst("algorithms", "apsl, apsl-fs"),
            "seed": int(sec.get("seed", "0")),
            "jobs": int(sec.get("jobs", "1")),
            "alpha": float(sec.get("alpha", "0.01")),
            "delta": float(sec.get("delta", "0.05")),
            "max_cond_size": _cond_size(sec.get("max_cond_size", "3")),
            "scope": sec.get("scope", "core"),
            "targets": {k.split(".", 1)[1]: lst(k, "") for k in sec if k.startswith("targets.")},
        }
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"bench spec: {exc}") from None
    if not spec["networks"]:
        raise UsageError("bench spec: 'networks' is required")
    if spec["runs"] < 1 or any(s < 1 for s in spec["sizes"]):
        raise UsageError("bench spec: runs and sizes must be positive")
    for a in spec["algorithms"]:
        if a not in ALGORITHMS:
            raise UsageError(f"bench spec: unknown algorithm {a!r}")
    if spec["scope"] not in ("core", "region"):
        raise UsageError("bench spec: scope must be 'core' or 'region'")
    return spec


def cmd_bench(args) -> int:
    started = time.perf_counter()
    path = Path(args.spec)
    if not path.is_file():
        raise FileNotFoundError(f"no such bench spec: {path}")
    spec = parse_bench_spec(path.read_text(encoding="utf-8"))
    if args.seed is not None:
        spec["seed"] = args.seed
    if args.jobs is not None:
        spec["jobs"] = args.jobs
    for net in spec["networks"]:
        _network(net)
    test = TestConfig(alpha=spec["alpha"], max_cond_size=spec["max_cond_size"])
    report = bench(
        spec["networks"], spec["sizes"], spec["algorithms"], spec["runs"], spec["seed"],
        spec["depths"], spec["targets"] or None, test, spec["delta"], spec["jobs"], spec["scope"],
    )
    prefix = Path(args.out) if args.out else path.with_suffix("")
    outs = {
        ".json": report.to_json(),
        ".timing.json": report.to_json(timing=True),
        ".txt": report.table(),
    }
    written = []
    for suffix, text in outs.items():
        p = prefix.with_name(prefix.name + suffix)
        p.write_text(text, encoding="utf-8")
        written.append(p)
    config = {k: v for k, v in spec.items() if k != "targets"}
    config["depths"] = ["max" if d is None else d for d in config["depths"]]
    config["targets"] = spec["targets"]
    _write_manifest(prefix.with_name(prefix.name + ".manifest.json"), "bench", config, {"spec": path}, started, written)
    sys.stdout.write(report.table())
    n_err = sum(r.error is not None for r in report.rows)
    if n_err:
        print(f"{n_err} cell(s) failed; see the error field in {written[0]}")
    return 0


# parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="partbn", description="Learn part of a Bayesian network structure around a target.")
    p.add_argument("--version", action="version", version=f"partbn {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="forward-sample a dataset from a BIF network")
    s.add_argument("network", help="BIF file or bundled name (" + ", ".join(BUNDLED) + ")")
    s.add_argument("--n", type=_positive, required=True, help="number of rows")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="output CSV (default: <network>_n<N>_s<seed>.csv)")
    s.set_defaults(func=cmd_sample)

    l = sub.add_parser("learn", help="learn the structure around a target from a CSV dataset")  # noqa: E741
    l.add_argument("data", help="CSV with a header row")
    l.add_argument("--target", required=True)
    l.add_argument("--depth", type=_depth, default=1, help="positive integer or 'max' (default 1)")
    l.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="apsl")
    l.add_argument("--alpha", type=float, default=0.01, help="G-squared significance level (default 0.01)")
    l.add_argument("--delta", type=float, default=0.05, help="FCBF threshold for apsl-fs (default 0.05)")
    l.add_argument(
        "--max-cond-size", type=_cond_size, default=3,
        help="largest conditioning set searched; 'none' lifts the cap (default 3, a tunable not fixed by the method)",
    )
    l.add_argument("--seed", type=int, default=0, help="recorded in the manifest; learning itself is deterministic")
    l.add_argument("--out", help="output prefix (default: <data>.<target>)")
    l.set_defaults(func=cmd_learn)

    e = sub.add_parser("eval", help="score a learned graph against a ground-truth network")
    e.add_argument("graph", help="edge list (a -> b / a -- b) or adjacency CSV")
    e.add_argument("--network", required=True, help="BIF file or bundled name")
    e.add_argument("--target", required=True)
    e.add_argument("--depth", type=_depth, default=1)
    e.add_argument("--scope", choices=("core", "region"), default="core")
    e.add_argument("--out", help="also write the metrics JSON here")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="run a benchmark sweep described by a key = value spec file")
    b.add_argument("spec")
    b.add_argument("--out", help="output prefix (default: spec path without suffix)")
    b.add_argument("--seed", type=int, help="override the spec's seed")
    b.add_argument("--jobs", type=_positive, help="worker processes (overrides the spec)")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError, BifParseError, DataFormatError, ValueError) as exc:
        print(f"partbn {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"partbn {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
