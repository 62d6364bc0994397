"""Ground-truth networks: BIF parsing and writing, forward sampling, scoring regions.

Only the discrete BIF subset used by the standard benchmark repositories is
understood: ``network``, ``variable`` blocks with ``type discrete [k] {...}``
and ``probability`` blocks with either ``table`` or per-configuration rows.
"""

from __future__ import annotations

import io
import re
from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .dataset import Dataset
from .graph import DIRECTED, Edge, Pdag

ROW_SUM_TOL = 1e-6
BUNDLED = ("child", "insurance", "alarm", "chain6", "mb6")


class BifParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True)
class GroundTruthBn:
    """A discrete Bayesian network.

    ``cpts[v]`` has shape ``(prod(parent cardinalities), cardinality[v])``;
    parent configurations are in mixed-radix order over ``parents[v]`` with
    the first parent most significant.
    """

    name: str
    names: tuple[str, ...]
    states: tuple[tuple[str, ...], ...]
    parents: tuple[tuple[int, ...], ...]
    cpts: tuple[np.ndarray, ...]

    def __post_init__(self):
        n = len(self.names)
        if not (len(self.states) == len(self.parents) == len(self.cpts) == n):
            raise ValueError("names, states, parents and cpts must align")
        for v in range(n):
            rows = int(np.prod([len(self.states[p]) for p in self.parents[v]], dtype=np.int64))
            cpt = self.cpts[v]
            if cpt.shape != (rows, len(self.states[v])):
                raise ValueError(
                    f"CPT of {self.names[v]!r} has shape {cpt.shape}, expected {(rows, len(self.states[v]))}"
                )
            if not np.allclose(cpt.sum(axis=1), 1.0, atol=1e-9, rtol=0):
                raise ValueError(f"CPT rows of {self.names[v]!r} do not sum to 1")
        if self.dag.has_directed_cycle():
            raise ValueError("network graph is cyclic")

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.states)

    @property
    def dag(self) -> Pdag:
        return Pdag.from_parents(self.parents, self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None

    def children(self, v: int) -> set[int]:
        return {c for c, ps in enumerate(self.parents) if v in ps}

    def pc(self, v: int) -> frozenset:
        return frozenset(self.parents[v]) | frozenset(self.children(v))

    def edges(self) -> set[Edge]:
        return {Edge(p, v, DIRECTED) for v, ps in enumerate(self.parents) for p in ps}

    def topological_order(self) -> list[int]:
        indeg = [len(p) for p in self.parents]
        kids = [sorted(self.children(v)) for v in range(self.n_vars)]
        ready = deque(v for v in range(self.n_vars) if indeg[v] == 0)
        order = []
        while ready:
            v = ready.popleft()
            order.append(v)
            for c in kids[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        return order

    def stats(self) -> dict:
        """Summary in the shape of the usual benchmark table."""
        pcs = [len(self.pc(v)) for v in range(self.n_vars)]
        return {
            "vars": self.n_vars,
            "edges": sum(len(p) for p in self.parents),
            "max_in": max(len(p) for p in self.parents),
            "max_out": max(len(self.children(v)) for v in range(self.n_vars)),
            "min_pc": min(pcs),
            "max_pc": max(pcs),
        }

    def reorder(self, order: Sequence[str | int]) -> "GroundTruthBn":
        """Same network with variables renumbered so that new id ``i`` is ``order[i]``."""
        old = [self.index(o) if isinstance(o, str) else int(o) for o in order]
        if sorted(old) != list(range(self.n_vars)):
            raise ValueError("order must be a permutation of all variables")
        new_of = {o: i for i, o in enumerate(old)}
        return GroundTruthBn(
            self.name,
            tuple(self.names[o] for o in old),
            tuple(self.states[o] for o in old),
            tuple(tuple(new_of[p] for p in self.parents[o]) for o in old),
            tuple(self.cpts[o] for o in old),
        )


# parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"[{}()\[\],;|]|[^\s{}()\[\],;|]+")


def _tokenize(text: str) -> list[tuple[str, int]]:
    text = re.sub(r"/\*.*?\*/", lambda m: "\n" * m.group(0).count("\n"), text, flags=re.S)
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("//", 1)[0]
        out.extend((m.group(0), lineno) for m in _TOKEN.finditer(line))
    return out


class _Tokens:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    @property
    def line(self):
        if self.i < len(self.toks):
            return self.toks[self.i][1]
        return self.toks[-1][1] if self.toks else None

    def next(self):
        if self.i >= len(self.toks):
            raise BifParseError("unexpected end of input", self.line)
        tok = self.toks[self.i]
        self.i += 1
        return tok[0]

    def expect(self, want):
        line = self.line
        got = self.next()
        if got != want:
            raise BifParseError(f"expected {want!r}, found {got!r}", line)
        return got

    def skip_until(self, stop):
        while self.next() != stop:
            pass

    def skip_block(self):
        depth = 1
        while depth:
            t = self.next()
            depth += (t == "{") - (t == "}")


def _number(tok: str, line: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise BifParseError(f"expected a probability, found {tok!r}", line) from None


def parse_bif(stream: TextIO | str) -> GroundTruthBn:
    """Parse a discrete BIF network.

    ``table`` entries for a node with parents are read with the node's own
    state varying slowest and the last parent fastest. Rows whose sum is
    within 1e-6 of one are renormalised (rows already within 1e-12 are kept
    as written, so parse/write is a fixpoint).
    """
    text = stream if isinstance(stream, str) else stream.read()
    tk = _Tokens(_tokenize(text))
    name = "unknown"
    names: list[str] = []
    states: list[tuple[str, ...]] = []
    index: dict[str, int] = {}
    prob_blocks = []

    while tk.peek() is not None:
        line = tk.line
        kw = tk.next()
        if kw == "network":
            parts = []
            while tk.peek() != "{":
                parts.append(tk.next())
            name = " ".join(parts) or name
            tk.expect("{")
            tk.skip_block()
        elif kw == "variable":
            vname = tk.next()
            if vname in index:
                raise BifParseError(f"variable {vname!r} declared twice", line)
            tk.expect("{")
            vstates = None
            while tk.peek() != "}":
                item_line = tk.line
                item = tk.next()
                if item == "type":
                    kind = tk.next()
                    if kind != "discrete":
                        raise BifParseError(f"unsupported variable type {kind!r}", item_line)
                    tk.expect("[")
                    k = int(tk.next())
                    tk.expect("]")
                    tk.expect("{")
                    vals = []
                    while tk.peek() != "}":
                        t = tk.next()
                        if t != ",":
                            vals.append(t)
                    tk.expect("}")
                    tk.expect(";")
                    if len(vals) != k:
                        raise BifParseError(f"{vname!r} declares {k} states but lists {len(vals)}", item_line)
                    vstates = tuple(vals)
                else:
                    tk.skip_until(";")
            tk.expect("}")
            if vstates is None:
                raise BifParseError(f"variable {vname!r} has no type", line)
            index[vname] = len(names)
            names.append(vname)
            states.append(vstates)
        elif kw == "probability":
            tk.expect("(")
            head = []
            while tk.peek() != ")":
                head.append((tk.next(), tk.line))
            tk.expect(")")
            tk.expect("{")
            body = []
            while tk.peek() != "}":
                entry_line = tk.line
                t = tk.next()
                if t == "table" or t == "default":
                    nums = []
                    while tk.peek() != ";":
                        x = tk.next()
                        if x != ",":
                            nums.append(_number(x, entry_line))
                    tk.expect(";")
                    body.append((t, None, nums, entry_line))
                elif t == "(":
                    key = []
                    while tk.peek() != ")":
                        x = tk.next()
                        if x != ",":
                            key.append(x)
                    tk.expect(")")
                    nums = []
                    while tk.peek() != ";":
                        x = tk.next()
                        if x != ",":
                            nums.append(_number(x, entry_line))
                    tk.expect(";")
                    body.append(("row", key, nums, entry_line))
                elif t == "property":
                    tk.skip_until(";")
                else:
                    raise BifParseError(f"unexpected token {t!r} in probability block", entry_line)
            tk.expect("}")
            prob_blocks.append((head, body, line))
        else:
            raise BifParseError(f"unexpected token {kw!r}", line)

    n = len(names)
    parents: list[tuple[int, ...] | None] = [None] * n
    cpts: list[np.ndarray | None] = [None] * n
    for head, body, line in prob_blocks:
        toks = [t for t, _ in head if t not in (",",)]
        if "|" in toks:
            bar = toks.index("|")
            child_names, parent_names = toks[:bar], toks[bar + 1:]
        else:
            child_names, parent_names = toks, []
        if len(child_names) != 1:
            raise BifParseError("probability block must name exactly one variable", line)
        for v in child_names + parent_names:
            if v not in index:
                raise BifParseError(f"unknown variable {v!r}", line)
        v = index[child_names[0]]
        if parents[v] is not None:
            raise BifParseError(f"second probability block for {names[v]!r}", line)
        pa = tuple(index[p] for p in parent_names)
        parents[v] = pa
        cpts[v] = _build_cpt(v, pa, body, names, states, line)

    for v in range(n):
        if parents[v] is None:
            raise BifParseError(f"variable {names[v]!r} has no probability block")
    try:
        return GroundTruthBn(name, tuple(names), tuple(states), tuple(parents), tuple(cpts))
    except ValueError as exc:
        raise BifParseError(str(exc)) from None


def _build_cpt(v, pa, body, names, states, line) -> np.ndarray:
    k = len(states[v])
    pcards = [len(states[p]) for p in pa]
    n_rows = int(np.prod(pcards, dtype=np.int64))
    cpt = np.full((n_rows, k), np.nan)
    default = None
    for kind, key, nums, eline in body:
        if kind == "default":
            if len(nums) != k:
                raise BifParseError(f"default row of {names[v]!r} has {len(nums)} entries, expected {k}", eline)
            default = nums
        elif kind == "table":
            if len(nums) != n_rows * k:
                raise BifParseError(
                    f"table of {names[v]!r} has {len(nums)} entries, expected {n_rows * k}", eline
                )
            cpt[:] = np.asarray(nums).reshape(k, n_rows).T
        else:
            if len(key) != len(pa):
                raise BifParseError(
                    f"row key of {names[v]!r} has {len(key)} parent values, expected {len(pa)}", eline
                )
            if len(nums) != k:
                raise BifParseError(f"row of {names[v]!r} has {len(nums)} entries, expected {k}", eline)
            r = 0
            for p, val, card in zip(pa, key, pcards):
                try:
                    r = r * card + states[p].index(val)
                except ValueError:
                    raise BifParseError(f"unknown state {val!r} of {names[p]!r}", eline) from None
            cpt[r] = nums
    if default is not None:
        missing = np.isnan(cpt).any(axis=1)
        cpt[missing] = default
    if np.isnan(cpt).any():
        raise BifParseError(f"probability table of {names[v]!r} is incomplete", line)
    sums = cpt.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        raise BifParseError(
            f"row {int(bad[0])} of {names[v]!r} sums to {sums[bad[0]]:.9g}, not 1", line
        )
    if (cpt < 0).any():
        raise BifParseError(f"negative probability in table of {names[v]!r}", line)
    off = np.abs(sums - 1.0) > 1e-12
    cpt[off] /= sums[off, None]
    return cpt


def write_bif(bn: GroundTruthBn, stream: TextIO) -> None:
    stream.write(f"network {bn.name} {{\n}}\n")
    for name, st in zip(bn.names, bn.states):
        stream.write(f"variable {name} {{\n  type discrete [ {len(st)} ] {{ {', '.join(st)} }};\n}}\n")
    for v in range(bn.n_vars):
        pa = bn.parents[v]
        fmt = lambda row: ", ".join(repr(float(x)) for x in row)  # noqa: E731
        if not pa:
            stream.write(f"probability ( {bn.names[v]} ) {{\n  table {fmt(bn.cpts[v][0])};\n}}\n")
            continue
        head = ", ".join(bn.names[p] for p in pa)
        stream.write(f"probability ( {bn.names[v]} | {head} ) {{\n")
        for r, cfg in enumerate(np.ndindex(*[len(bn.states[p]) for p in pa])):
            key = ", ".join(bn.states[p][c] for p, c in zip(pa, cfg))
            stream.write(f"  ({key}) {fmt(bn.cpts[v][r])};\n")
        stream.write("}\n")


def bif_text(bn: GroundTruthBn) -> str:
    buf = io.StringIO()
    write_bif(bn, buf)
    return buf.getvalue()


def load_network(name_or_path: str | Path) -> GroundTruthBn:
    """Parse a bundled network (``child``, ``insurance``, ``alarm``, ``chain6``, ``mb6``) or a BIF file."""
    key = str(name_or_path)
    if key.lower() in BUNDLED:
        text = resources.files("partbn").joinpath("networks").joinpath(f"{key.lower()}.bif").read_text()
        bn = parse_bif(text)
        return GroundTruthBn(key.lower(), bn.names, bn.states, bn.parents, bn.cpts)
    path = Path(name_or_path)
    with path.open(encoding="utf-8") as fh:
        bn = parse_bif(fh)
    if bn.name == "unknown":
        bn = GroundTruthBn(path.stem, bn.names, bn.states, bn.parents, bn.cpts)
    return bn


# sampling ------------------------------------------------------------------

def forward_sample(bn: GroundTruthBn, n: int, seed: int) -> Dataset:
    """Ancestral sampling of ``n`` rows with a PCG64 generator seeded by ``seed``.

    Each variable draws one uniform per row (in topological order) and
    inverts the CDF of the CPT row selected by its sampled parents.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    cols = np.zeros((bn.n_vars, n), dtype=np.int64)
    cards = bn.cardinalities
    for v in bn.topological_order():
        row = np.zeros(n, dtype=np.int64)
        for p in bn.parents[v]:
            row = row * cards[p] + cols[p]
        cdf = np.cumsum(bn.cpts[v], axis=1)
        u = rng.random(n)
        code = (u[:, None] >= cdf[row]).sum(axis=1)
        cols[v] = np.minimum(code, cards[v] - 1)
    return Dataset(bn.names, cards, cols, bn.states)


# scoring regions -----------------------------------------------------------

@dataclass(frozen=True)
class NeighborhoodSpec:
    target: int
    depth: int | None  # None = whole network

    def __post_init__(self):
        if self.depth is not None and int(self.depth) < 1:
            raise ValueError("depth must be >= 1 or None")


def skeleton_distances(bn: GroundTruthBn, target: int) -> dict[int, int]:
    """Breadth-first hop counts from ``target`` over the undirected skeleton."""
    nbrs = [bn.pc(v) for v in range(bn.n_vars)]
    dist = {target: 0}
    queue = deque([target])
    while queue:
        v = queue.popleft()
        for w in sorted(nbrs[v]):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def neighborhood_core(bn: GroundTruthBn, spec: NeighborhoodSpec) -> set[int]:
    """Nodes within ``depth - 1`` hops of the target (all reachable nodes for ``None``)."""
    dist = skeleton_distances(bn, spec.target)
    if spec.depth is None:
        return set(range(bn.n_vars))
    return {v for v, d in dist.items() if d <= spec.depth - 1}


def true_neighborhood(bn: GroundTruthBn, spec: NeighborhoodSpec) -> set[Edge]:
    """True edges with at least one endpoint within ``depth - 1`` hops of the target."""
    if spec.depth is None:
        return bn.edges()
    core = neighborhood_core(bn, spec)
    return {e for e in bn.edges() if e.a in core or e.b in core}


def largest_pc_nodes(bn: GroundTruthBn, k: int = 5) -> list[int]:
    """The ``k`` nodes with the most parents and children (ties: lower id first)."""
    ranked = sorted(range(bn.n_vars), key=lambda v: (-len(bn.pc(v)), v))
    return sorted(ranked[:k])


def edges_by_name(bn: GroundTruthBn, edges: Iterable[Edge]) -> set[str]:
    return {f"{bn.names[e.a]} {'->' if e.directed else '--'} {bn.names[e.b]}" for e in edges}
