"""Partially directed graphs in the four-state adjacency encoding.

For a pair ``(a, b)`` the entries ``(m[a, b], m[b, a])`` are

* ``(0, 0)``   not adjacent
* ``(1, 1)``   adjacent, direction undetermined (``a -- b``)
* ``(-1, 0)``  ``a -> b``
* ``(0, -1)``  ``b -> a``

No other combination is ever stored.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

UNDIRECTED = "undirected"
DIRECTED = "a_to_b"


class StructureError(ValueError):
    """Graph violates a structural precondition (cycle, bad encoding)."""


@dataclass(frozen=True, order=True)
class Edge:
    """An edge ``a -- b`` (``kind="undirected"``, stored with ``a < b``) or ``a -> b``."""

    a: int
    b: int
    kind: str = DIRECTED

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("self-loops are not edges")
        if self.kind not in (UNDIRECTED, DIRECTED):
            raise ValueError(f"unknown edge kind {self.kind!r}")
        if self.kind == UNDIRECTED and self.a > self.b:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    @property
    def directed(self) -> bool:
        return self.kind == DIRECTED

    @property
    def pair(self) -> frozenset:
        return frozenset((self.a, self.b))


class Pdag:
    """Mutable PDAG over ``n`` nodes.

    Mutators work in place; use :meth:`copy` for value semantics. Calls to
    :meth:`orient` that reverse an existing orientation are appended to
    ``conflicts`` as ``(a, b)`` pairs (the new direction wins).
    """

    def __init__(self, n: int, names: Sequence[str] | None = None):
        self.n = int(n)
        self.m = np.zeros((self.n, self.n), dtype=np.int8)
        self.names = tuple(names) if names is not None else tuple(str(i) for i in range(self.n))
        if len(self.names) != self.n:
            raise ValueError("one name per node required")
        self.conflicts: list[tuple[int, int]] = []

    # construction ---------------------------------------------------------

    @classmethod
    def from_matrix(cls, m, names=None) -> "Pdag":
        m = np.asarray(m, dtype=np.int8)
        g = cls(m.shape[0], names)
        g.m = m.copy()
        g.validate()
        return g

    @classmethod
    def from_edges(cls, n: int, edges: Iterable, names=None) -> "Pdag":
        """Build from ``Edge`` objects or ``(a, b)`` tuples meaning ``a -> b``."""
        g = cls(n, names)
        for e in edges:
            if isinstance(e, Edge):
                if e.directed:
                    g.orient(e.a, e.b)
                else:
                    g.add_undirected_if_new(e.a, e.b)
            else:
                a, b = e
                g.orient(a, b)
        return g

    @classmethod
    def from_parents(cls, parents: Sequence[Iterable[int]], names=None) -> "Pdag":
        return cls.from_edges(len(parents), ((p, v) for v, ps in enumerate(parents) for p in ps), names)

    def copy(self) -> "Pdag":
        g = Pdag(self.n, self.names)
        g.m = self.m.copy()
        g.conflicts = list(self.conflicts)
        return g

    def __eq__(self, other):
        return isinstance(other, Pdag) and self.n == other.n and np.array_equal(self.m, other.m)

    def __repr__(self):
        return f"Pdag(n={self.n}, edges={[str(self.edge_str(e)) for e in self.edges()]})"

    # queries --------------------------------------------------------------

    def adjacent(self, a: int, b: int) -> bool:
        return bool(self.m[a, b] or self.m[b, a])

    def is_undirected(self, a: int, b: int) -> bool:
        return self.m[a, b] == 1 and self.m[b, a] == 1

    def has_directed(self, a: int, b: int) -> bool:
        return self.m[a, b] == -1

    def neighbors(self, v: int) -> set[int]:
        return set(np.flatnonzero((self.m[v] != 0) | (self.m[:, v] != 0)).tolist())

    def undirected_neighbors(self, v: int) -> set[int]:
        return set(np.flatnonzero(self.m[v] == 1).tolist())

    def parents(self, v: int) -> set[int]:
        return set(np.flatnonzero(self.m[:, v] == -1).tolist())

    def children(self, v: int) -> set[int]:
        return set(np.flatnonzero(self.m[v] == -1).tolist())

    def edges(self) -> list[Edge]:
        out = []
        for a, b in zip(*np.nonzero(self.m)):
            a, b = int(a), int(b)
            if self.m[a, b] == -1:
                out.append(Edge(a, b, DIRECTED))
            elif a < b:
                out.append(Edge(a, b, UNDIRECTED))
        return sorted(out)

    def n_directed(self) -> int:
        return int((self.m == -1).sum())

    def n_undirected(self) -> int:
        return int((self.m == 1).sum()) // 2

    def skeleton(self) -> set[frozenset]:
        return {e.pair for e in self.edges()}

    def validate(self) -> None:
        m = self.m
        if m.shape != (self.n, self.n):
            raise StructureError("adjacency matrix must be n x n")
        if np.any(np.diag(m)):
            raise StructureError("diagonal must be zero")
        if not np.isin(m, (-1, 0, 1)).all():
            raise StructureError("entries must be in {-1, 0, 1}")
        pair = m.astype(int) * 3 + m.T.astype(int)
        # allowed (m_ab, m_ba): (0,0)->0, (1,1)->4, (-1,0)->-3, (0,-1)->-1
        if not np.isin(pair, (0, 4, -3, -1)).all():
            raise StructureError("invalid pair encoding in adjacency matrix")

    def has_directed_cycle(self) -> bool:
        directed = self.m == -1
        indeg = directed.sum(axis=0)
        ready = [v for v in range(self.n) if indeg[v] == 0]
        seen = 0
        while ready:
            v = ready.pop()
            seen += 1
            for w in np.flatnonzero(directed[v]):
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(int(w))
        return seen < self.n

    # mutation -------------------------------------------------------------

    def add_undirected_if_new(self, a: int, b: int) -> "Pdag":
        """Mark ``a -- b`` unless the pair is already adjacent (orientations are kept)."""
        if a == b:
            raise ValueError("self-loops are not edges")
        if self.m[a, b] == 0 and self.m[b, a] == 0:
            self.m[a, b] = self.m[b, a] = 1
        return self

    def orient(self, a: int, b: int) -> "Pdag":
        """Force ``a -> b`` whatever the previous state (last writer wins)."""
        if a == b:
            raise ValueError("self-loops are not edges")
        if self.m[b, a] == -1:
            self.conflicts.append((a, b))
        self.m[a, b] = -1
        self.m[b, a] = 0
        return self

    def remove(self, a: int, b: int) -> "Pdag":
        self.m[a, b] = self.m[b, a] = 0
        return self

    # io helpers -----------------------------------------------------------

    def edge_str(self, e: Edge) -> str:
        op = "->" if e.directed else "--"
        return f"{self.names[e.a]} {op} {self.names[e.b]}"


# Meek rules ---------------------------------------------------------------

def _nonadjacent(m: np.ndarray, a: int, b: int, known) -> bool:
    if m[a, b] or m[b, a]:
        return False
    return known is None or bool(known[a] or known[b])


def _r1(m: np.ndarray, y: int, z: int, known) -> bool:
    # x -> y, y -- z, x and z not adjacent  =>  y -> z
    xs = np.flatnonzero(m[:, y] == -1)
    return any(x != z and _nonadjacent(m, x, z, known) for x in xs)


def _r2(m: np.ndarray, x: int, z: int, known) -> bool:
    # x -> y -> z, x -- z  =>  x -> z
    return bool(np.any((m[x] == -1) & (m[:, z] == -1)))


def _r3(m: np.ndarray, x: int, y: int, known) -> bool:
    # x -- z -> y, x -- w -> y, z and w not adjacent  =>  x -> y
    zs = np.flatnonzero((m[x] == 1) & (m[:, x] == 1) & (m[:, y] == -1))
    for i, z in enumerate(zs):
        for w in zs[i + 1:]:
            if _nonadjacent(m, z, w, known):
                return True
    return False


def _apply_meek(m: np.ndarray, order=None, known=None) -> None:
    # every rule needs at least one directed and one undirected edge
    changed = bool((m == -1).any() and (m == 1).any())
    while changed:
        changed = False
        if order is None:
            iu, ju = np.nonzero(np.triu(m == 1))
            pairs = list(zip(iu.tolist(), ju.tolist()))
        else:
            pairs = [(a, b) for a, b in order if m[a, b] == 1 and m[b, a] == 1]
        for a, b in pairs:
            if not (m[a, b] == 1 and m[b, a] == 1):
                continue
            for u, v in ((a, b), (b, a)):
                if _r1(m, u, v, known) or _r2(m, u, v, known) or _r3(m, u, v, known):
                    m[u, v] = -1
                    m[v, u] = 0
                    changed = True
                    break


def _known_mask(n: int, known: Iterable[int] | None):
    if known is None:
        return None
    mask = np.zeros(n, dtype=bool)
    mask[list(known)] = True
    return mask


def meek_rules(
    g: Pdag,
    order: Sequence[tuple[int, int]] | None = None,
    known: Iterable[int] | None = None,
) -> Pdag:
    """Close ``g`` under Meek rules R1-R3 and return the result as a new graph.

    Only undirected edges are ever oriented. Pairs are swept in ascending
    index order unless ``order`` (a sequence of node pairs) is given; the
    fixpoint does not depend on the order for consistent inputs.

    ``known`` restricts which missing edges count as non-adjacency: a pair
    is treated as non-adjacent only if at least one endpoint is in
    ``known`` (its full neighbourhood has been discovered). ``None`` trusts
    every missing edge.
    """
    out = g.copy()
    _apply_meek(out.m, order, _known_mask(g.n, known))
    return out


def meek_inplace(g: Pdag, known: Iterable[int] | None = None) -> Pdag:
    _apply_meek(g.m, None, _known_mask(g.n, known))
    return g


def v_structures(g: Pdag) -> set[tuple[int, int, int]]:
    """Triples ``(a, c, b)`` with ``a -> c <- b``, ``a`` and ``b`` non-adjacent, ``a < b``."""
    out = set()
    for c in range(g.n):
        ps = sorted(g.parents(c))
        for a, b in itertools.combinations(ps, 2):
            if not g.adjacent(a, b):
                out.add((a, c, b))
    return out


def dag_to_cpdag(dag: Pdag) -> Pdag:
    """Completed PDAG of the Markov equivalence class of a DAG."""
    if dag.n_undirected():
        raise StructureError("dag_to_cpdag expects a fully directed graph")
    if dag.has_directed_cycle():
        raise StructureError("input graph has a directed cycle")
    out = Pdag(dag.n, dag.names)
    for e in dag.edges():
        out.add_undirected_if_new(e.a, e.b)
    for a, c, b in v_structures(dag):
        out.orient(a, c)
        out.orient(b, c)
    return meek_inplace(out)


# serialisation ------------------------------------------------------------

def write_edge_list(g: Pdag, stream: TextIO) -> None:
    """One edge per line: ``a -> b`` or ``a -- b`` by node name."""
    for e in g.edges():
        stream.write(g.edge_str(e) + "\n")


def read_edge_list(stream: TextIO | str, names: Sequence[str]) -> Pdag:
    """Parse an edge list against a fixed node-name schema.

    Raises ``KeyError`` naming the first unknown variable.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    index = {n: i for i, n in enumerate(names)}
    g = Pdag(len(names), names)
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for op in ("->", "--", "<-"):
            if op in line:
                a, b = (s.strip() for s in line.split(op, 1))
                break
        else:
            raise ValueError(f"line {lineno}: expected 'a -> b' or 'a -- b', got {raw.strip()!r}")
        for v in (a, b):
            if v not in index:
                raise KeyError(f"line {lineno}: unknown variable {v!r}")
        ia, ib = index[a], index[b]
        if op == "->":
            g.orient(ia, ib)
        elif op == "<-":
            g.orient(ib, ia)
        else:
            g.add_undirected_if_new(ia, ib)
    return g


def write_adjacency_csv(g: Pdag, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(g.names)
    writer.writerows(g.m.astype(int).tolist())


def read_adjacency_csv(stream: TextIO | str) -> Pdag:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    rows = list(csv.reader(stream))
    names = rows[0]
    m = np.array([[int(v) for v in r] for r in rows[1:] if r], dtype=np.int8)
    return Pdag.from_matrix(m, names)


def iter_dags(n: int, max_edges: int | None = None) -> Iterator[Pdag]:
    """Every labelled DAG on ``n`` nodes (optionally with at most ``max_edges`` edges)."""
    pairs = list(itertools.combinations(range(n), 2))
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        k = sum(1 for s in states if s)
        if max_edges is not None and k > max_edges:
            continue
        g = Pdag(n)
        for (a, b), s in zip(pairs, states):
            if s == 1:
                g.m[a, b] = -1
            elif s == 2:
                g.m[b, a] = -1
        if not g.has_directed_cycle():
            yield g
