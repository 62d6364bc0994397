"""Any-part structure learning around a target node.

Starting from the target, the learner pops nodes breadth-first, finds each
node's Markov blanket, and orients

1. non-collider V-structures ``A -> B <- C`` from the spouses ``C`` of ``A``,
2. collider V-structures ``X -> A <- Y`` from non-adjacent pairs in PC(A),

then propagates orientations with the Meek rules. Layers are 1-indexed
(layer 1 is the target); with depth ``K`` the run stops as soon as no node of
layer ``K`` touches an undirected edge once layer ``K + 1`` has been entered.
"""

from __future__ import annotations

import itertools
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Literal

from .citest import CiTester, ConditionTooLarge, G2Tester, TestConfig
from .dataset import Dataset
from .graph import Pdag, meek_inplace
from .localdiscovery import (
    DEFAULT_DELTA,
    MbResult,
    PcCache,
    SuTable,
    fcbf,
    find_sepset,
    get_mb,
    hiton_pc,
    mb_fs,
)

Backend = Literal["hiton", "fcbf"]


@dataclass(frozen=True)
class ApslConfig:
    """Run configuration.

    ``depth`` is a positive layer depth or ``None`` (also accepted as the
    string ``"max"``) to learn the whole connected structure.
    ``certified_nonadjacency`` lets the Meek rules read a missing edge as
    non-adjacency only once one endpoint's neighbourhood is known.
    """

    depth: int | None = 1
    backend: Backend = "hiton"
    test: TestConfig = TestConfig()
    delta: float = DEFAULT_DELTA
    certified_nonadjacency: bool = True

    def __post_init__(self):
        depth = self.depth
        if isinstance(depth, str):
            if depth.lower() != "max":
                raise ValueError(f"depth must be a positive integer or 'max', got {depth!r}")
            depth = None
        if depth is not None:
            depth = int(depth)
            if depth < 1:
                raise ValueError(f"depth must be >= 1, got {depth}")
        object.__setattr__(self, "depth", depth)
        if self.backend not in ("hiton", "fcbf"):
            raise ValueError(f"unknown backend {self.backend!r}")


@dataclass
class LayerState:
    layer_num: int = 1
    layer_nodes: dict = field(default_factory=dict)
    visited: list = field(default_factory=list)
    queue: deque = field(default_factory=deque)
    countdown: int = 1


@dataclass
class ApslResult:
    graph: Pdag
    state: LayerState
    blankets: dict  # node -> MbResult for every popped node
    tester: CiTester
    runtime: float
    stopped_early: bool

    @property
    def n_ci_tests(self) -> int:
        return self.tester.n_tests()


def learn_part(
    data: Dataset | None,
    target: int,
    cfg: ApslConfig = ApslConfig(),
    tester: CiTester | None = None,
    names=None,
    on_iteration: Callable[[int, LayerState, Pdag], None] | None = None,
) -> ApslResult:
    """Run the any-part learner and return the graph with its bookkeeping.

    ``tester`` replaces the G-squared test (e.g. a d-separation oracle).
    With the ``"fcbf"`` backend ``data`` is required because FCBF scores
    variables from empirical frequencies.
    """
    started = time.perf_counter()
    if tester is None:
        if data is None:
            raise ValueError("either data or tester is required")
        tester = G2Tester(data, cfg.test)
    if cfg.backend == "fcbf" and data is None:
        raise ValueError("the fcbf backend needs data")
    n = tester.n_vars
    if not 0 <= target < n:
        raise IndexError(f"target {target} out of range [0, {n})")
    if names is None:
        names = data.names if data is not None else None

    cache = PcCache()
    su = SuTable(data) if cfg.backend == "fcbf" else None
    tcfg = cfg.test
    K = cfg.depth

    def blanket(a: int) -> MbResult:
        if cfg.backend == "hiton":
            return get_mb(data, a, tcfg, cache, tester)
        return mb_fs(data, a, cfg.delta, tcfg, cache, tester, su)

    def pc_with_sepsets(x: int):
        if cfg.backend == "hiton":
            return hiton_pc(data, x, tcfg, cache, tester)
        return cache.get_or_compute(x, lambda: (fcbf(data, x, cfg.delta, su), {}))

    def pair_sepset(x: int, y: int):
        pcx, sepx = pc_with_sepsets(x)
        if y in sepx:
            return sepx[y]
        return find_sepset(tester, x, y, pcx - {y}, tcfg.max_cond_size)

    g = Pdag(n, names)
    st = LayerState(layer_nodes={1: {target}}, queue=deque([target]))
    visited: set[int] = set()
    blankets: dict[int, MbResult] = {}
    stopped_early = False

    while len(visited) < n and st.queue:
        # step 1: skeleton around A and non-collider V-structures
        a = st.queue.popleft()
        if a in visited:
            continue
        mb = blanket(a)
        blankets[a] = mb
        visited.add(a)
        st.visited.append(a)
        pc_a = sorted(mb.pc)
        st.queue.extend(pc_a)
        for b in pc_a:
            g.add_undirected_if_new(a, b)
        for b in pc_a:
            for c in sorted(mb.spouses.get(b, ())):
                g.orient(a, b)
                g.orient(c, b)

        # step 2: collider V-structures at A
        with tester.phase("collider"):
            for x, y in itertools.combinations(pc_a, 2):
                z = pair_sepset(x, y)
                if z is None or a in z:
                    continue
                try:
                    dependent = not tester.independent(x, y, z | {a})
                except ConditionTooLarge:
                    continue
                if dependent:
                    g.orient(x, a)
                    g.orient(y, a)

        # step 3: propagate, then layer bookkeeping and the depth stop test
        meek_inplace(g, visited if cfg.certified_nonadjacency else None)
        st.countdown -= 1
        if st.countdown == 0:
            st.layer_num += 1
            prev = st.layer_nodes[st.layer_num - 1]
            nxt = set()
            for x in prev:
                if x in blankets:
                    nxt |= blankets[x].pc
            st.layer_nodes[st.layer_num] = nxt
            st.countdown = len(nxt - visited)
        if on_iteration is not None:
            on_iteration(a, st, g)
        if K is not None and st.layer_num > K:
            if not any(g.undirected_neighbors(x) for x in st.layer_nodes[K]):
                stopped_early = True
                break

    return ApslResult(g, st, blankets, tester, time.perf_counter() - started, stopped_early)


def apsl(data: Dataset | None, t: int, cfg: ApslConfig = ApslConfig(), tester: CiTester | None = None) -> Pdag:
    """Learn the part of the structure around ``t`` with the HITON-MB backend."""
    if cfg.backend != "hiton":
        cfg = ApslConfig(cfg.depth, "hiton", cfg.test, cfg.delta, cfg.certified_nonadjacency)
    return learn_part(data, t, cfg, tester).graph


def apsl_fs(data: Dataset, t: int, cfg: ApslConfig = ApslConfig(backend="fcbf"), tester: CiTester | None = None) -> Pdag:
    """Same driver with FCBF-based blankets (MB-FS)."""
    if cfg.backend != "fcbf":
        cfg = ApslConfig(cfg.depth, "fcbf", cfg.test, cfg.delta, cfg.certified_nonadjacency)
    return learn_part(data, t, cfg, tester).graph
