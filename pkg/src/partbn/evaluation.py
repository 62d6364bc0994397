"""Scoring learned part-structures and running benchmark sweeps.

Metric definitions (``correct`` edges over ``true`` and ``predicted``)::

    ar_precision = correct / |true|
    ar_recall    = correct / |predicted|
    ar_distance  = sqrt((1 - ar_precision)**2 + (1 - ar_recall)**2)

A learned directed edge is correct when the true DAG has the same
direction; a learned undirected edge is correct when the edge is also
undirected in the true CPDAG.
"""

from __future__ import annotations

import json
import math
import statistics
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .apsl import ApslConfig, learn_part
from .bnio import (
    GroundTruthBn,
    NeighborhoodSpec,
    forward_sample,
    largest_pc_nodes,
    load_network,
    neighborhood_core,
    true_neighborhood,
)
from .citest import TestConfig
from .graph import Edge, Pdag, dag_to_cpdag

SQRT2 = math.sqrt(2.0)
ALGORITHMS = {"apsl": "hiton", "apsl-fs": "fcbf"}
POOLING_NOTE = "mean ± std (sample, ddof=1) pooled over all (target, dataset) cells"

Scope = Literal["core", "region"]


@dataclass(frozen=True)
class ArMetrics:
    ar_precision: float
    ar_recall: float
    ar_distance: float
    n_true_edges: int
    n_predicted_edges: int
    n_correct_edges: int

    @classmethod
    def from_counts(cls, n_true: int, n_pred: int, n_correct: int) -> "ArMetrics":
        if n_true == 0 and n_pred == 0:
            p = r = 1.0
        else:
            p = n_correct / n_true if n_true else 0.0
            r = n_correct / n_pred if n_pred else 0.0
        return cls(p, r, ar_distance(p, r), n_true, n_pred, n_correct)


def ar_distance(precision: float, recall: float) -> float:
    return math.sqrt((1.0 - precision) ** 2 + (1.0 - recall) ** 2)


def ar_metrics(
    learned: Pdag,
    truth: GroundTruthBn,
    region: Iterable[Edge],
    core: Iterable[int] | None = None,
    truth_cpdag: Pdag | None = None,
) -> ArMetrics:
    """Score ``learned`` on ``region`` (a set of true edges).

    Learned edges are in scope when an endpoint lies in ``core``. Without
    ``core`` the endpoints of ``region`` are used. Only a learned edge whose
    pair is a region edge can count as correct.
    """
    region = set(region)
    if core is None:
        core = {v for e in region for v in (e.a, e.b)}
    core = set(core)
    cp = dag_to_cpdag(truth.dag) if truth_cpdag is None else truth_cpdag
    dag = truth.dag
    pairs = {frozenset((e.a, e.b)) for e in region}
    predicted = [e for e in learned.edges() if e.a in core or e.b in core]
    correct = 0
    for e in predicted:
        if frozenset((e.a, e.b)) not in pairs:
            continue
        if e.directed:
            correct += bool(dag.has_directed(e.a, e.b))
        else:
            correct += bool(cp.is_undirected(e.a, e.b))
    return ArMetrics.from_counts(len(region), len(predicted), correct)


def score_part(
    learned: Pdag,
    truth: GroundTruthBn,
    target: int,
    depth: int | None,
    scope: Scope = "core",
    truth_cpdag: Pdag | None = None,
) -> ArMetrics:
    """Score against the depth-``depth`` neighbourhood of ``target``.

    ``scope="core"`` keeps learned edges touching a node within ``depth - 1``
    hops of the target (the same rule that defines the region);
    ``scope="region"`` keeps those touching any endpoint of a region edge.
    """
    spec = NeighborhoodSpec(target, depth)
    region = true_neighborhood(truth, spec)
    core = neighborhood_core(truth, spec) if scope == "core" else None
    return ar_metrics(learned, truth, region, core, truth_cpdag)


# benchmark -----------------------------------------------------------------

def derive_seed(seed: int, network: str, size: int, run: int) -> int:
    """Dataset seed for one (network, size, run) cell; independent of algorithm and order."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(network.encode()), int(size), int(run)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class BenchRow:
    network: str
    size: int
    run: int
    depth: int | None
    algorithm: str
    target: int
    target_name: str
    ar_precision: float
    ar_recall: float
    ar_distance: float
    n_true_edges: int
    n_predicted_edges: int
    n_correct_edges: int
    n_ci_tests: int
    n_pc_conditional_tests: int
    runtime: float
    error: str | None = None

    def key(self):
        return (self.network, self.size, self.depth or 0, self.algorithm, self.run, self.target)

    def to_dict(self, timing: bool = False) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("runtime")
        return d


@dataclass(frozen=True)
class Aggregate:
    network: str
    size: int
    depth: int | None
    algorithm: str
    n: int
    ar_distance_mean: float
    ar_distance_std: float
    ar_precision_mean: float
    ar_recall_mean: float
    n_errors: int
    runtime_mean: float = 0.0
    runtime_std: float = 0.0

    def to_dict(self, timing: bool = False) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("runtime_mean")
            d.pop("runtime_std")
        return d


def _mean_std(xs: Sequence[float]) -> tuple[float, float]:
    xs = list(xs)
    if not xs:
        return float("nan"), float("nan")
    return statistics.fmean(xs), (statistics.stdev(xs) if len(xs) > 1 else 0.0)


def aggregate(rows: Sequence[BenchRow]) -> list[Aggregate]:
    groups: dict[tuple, list[BenchRow]] = {}
    for r in sorted(rows, key=BenchRow.key):
        groups.setdefault((r.network, r.size, r.depth or 0, r.algorithm), []).append(r)
    out = []
    for (net, size, depth, alg), rs in groups.items():
        dm, ds = _mean_std([r.ar_distance for r in rs])
        tm, ts = _mean_std([r.runtime for r in rs])
        out.append(Aggregate(
            net, size, depth or None, alg, len(rs), dm, ds,
            statistics.fmean(r.ar_precision for r in rs),
            statistics.fmean(r.ar_recall for r in rs),
            sum(r.error is not None for r in rs), tm, ts,
        ))
    return out


@dataclass
class BenchReport:
    rows: list[BenchRow]
    seed: int
    scope: str = "core"
    aggregates: list[Aggregate] = field(default_factory=list)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=BenchRow.key)
        if not self.aggregates:
            self.aggregates = aggregate(self.rows)

    def to_json(self, timing: bool = False) -> str:
        """One JSON object per row, then one aggregate object. Deterministic unless ``timing``."""
        lines = [json.dumps({"row": r.to_dict(timing)}, sort_keys=True) for r in self.rows]
        lines.append(json.dumps({
            "aggregate": [a.to_dict(timing) for a in self.aggregates],
            "pooling": POOLING_NOTE,
            "scope": self.scope,
            "seed": self.seed,
        }, sort_keys=True))
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        """Aligned text table: one line per network/size/depth, ``A±B`` cells per algorithm."""
        algs = sorted({a.algorithm for a in self.aggregates})
        by = {}
        for a in self.aggregates:
            by.setdefault((a.network, a.size, a.depth or 0), {})[a.algorithm] = a
        head = ["Network", "Size", "Depth"] + [f"{g} Ar_Distance" for g in algs] + [f"{g} Time(s)" for g in algs]
        body = []
        for (net, size, depth), cells in sorted(by.items()):
            line = [net, str(size), str(depth or "max")]
            line += [f"{cells[g].ar_distance_mean:.2f}±{cells[g].ar_distance_std:.2f}" if g in cells else "-" for g in algs]
            line += [f"{cells[g].runtime_mean:.3f}±{cells[g].runtime_std:.3f}" if g in cells else "-" for g in algs]
            body.append(line)
        widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
        fmt = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
        out = [f"# {POOLING_NOTE}", fmt(head), fmt(["-" * w for w in widths])]
        out += [fmt(r) for r in body]
        return "\n".join(out) + "\n"


def default_targets(bn: GroundTruthBn, depth: int | None) -> list[int]:
    """All nodes for depth 1, else the five nodes with the largest PC sets."""
    if depth == 1:
        return list(range(bn.n_vars))
    return largest_pc_nodes(bn, 5)


def _run_cell(args) -> list[BenchRow]:
    (net_name, bn, size, run, seed, depths, algorithms, targets, test, delta, scope) = args
    data = forward_sample(bn, size, derive_seed(seed, net_name, size, run))
    cp = dag_to_cpdag(bn.dag)
    rows = []
    for depth in depths:
        tlist = default_targets(bn, depth) if targets is None else targets
        for alg in algorithms:
            for t in tlist:
                cfg = ApslConfig(depth, ALGORITHMS[alg], test, delta)
                started = time.perf_counter()
                try:
                    res = learn_part(data, t, cfg)
                    m = score_part(res.graph, bn, t, depth, scope, cp)
                    n_ci = res.tester.n_tests()
                    n_pc = res.tester.n_tests("pc", "conditional")
                    err = None
                except Exception as exc:  # recorded, never aborts the sweep
                    m = ArMetrics(0.0, 0.0, SQRT2, 0, 0, 0)
                    n_ci = n_pc = 0
                    err = f"{type(exc).__name__}: {exc}"
                rows.append(BenchRow(
                    net_name, size, run, depth, alg, t,
                    bn.names[t] if 0 <= t < bn.n_vars else f"#{t}",
                    m.ar_precision, m.ar_recall, m.ar_distance,
                    m.n_true_edges, m.n_predicted_edges, m.n_correct_edges,
                    n_ci, n_pc, time.perf_counter() - started, err,
                ))
    return rows


def bench(
    networks: Sequence[str | GroundTruthBn],
    sizes: Sequence[int],
    algorithms: Sequence[str] = ("apsl", "apsl-fs"),
    runs: int = 10,
    seed: int = 0,
    depths: Sequence[int | None] = (1,),
    targets: dict | None = None,
    test: TestConfig = TestConfig(),
    delta: float = 0.05,
    jobs: int = 1,
    scope: Scope = "core",
) -> BenchReport:
    """Sample ``runs`` datasets per (network, size) and score every algorithm on every target.

    ``targets`` maps a network name to target ids or names; missing networks
    use :func:`default_targets`. Each (network, size, run) cell is
    independent, so ``jobs > 1`` farms cells out to worker processes
    without changing the result.
    """
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}; choose from {sorted(ALGORITHMS)}")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    cells = []
    for net in networks:
        bn = load_network(net) if isinstance(net, str) else net
        name = net if isinstance(net, str) else bn.name
        tl = None
        if targets and name in targets:
            tl = [bn.index(t) if isinstance(t, str) else int(t) for t in targets[name]]
        for size in sizes:
            for run in range(runs):
                cells.append((name, bn, int(size), run, seed, tuple(depths), tuple(algorithms), tl, test, delta, scope))
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_cell, cells))
    else:
        parts = [_run_cell(c) for c in cells]
    return BenchReport([r for p in parts for r in p], seed, scope)
