"""Local structure primitives: PC sets, Markov blankets, FCBF filtering.

All conditional-independence questions go through a
:class:`~partbn.citest.CiTester`; pass ``tester=`` to share its result cache
and counters across calls, or to substitute the d-separation oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .citest import CiTester, ConditionTooLarge, G2Tester, TestConfig, symmetric_uncertainty
from .dataset import Dataset

DEFAULT_DELTA = 0.05


@dataclass
class MbResult:
    """Markov blanket of a target.

    ``spouses[x]`` holds the other parents of common child ``x``;
    ``sepsets[y]`` is the conditioning set that separated ``y`` from the
    target.
    """

    target: int
    pc: frozenset
    spouses: dict = field(default_factory=dict)
    sepsets: dict = field(default_factory=dict)

    @property
    def all_spouses(self) -> frozenset:
        return frozenset().union(*self.spouses.values()) if self.spouses else frozenset()

    @property
    def blanket(self) -> frozenset:
        return self.pc | self.all_spouses


class PcCache:
    """PC sets (and their separating sets) already found during one run."""

    def __init__(self):
        self.entries: dict[int, tuple[frozenset, dict]] = {}
        self.hits = 0

    def __contains__(self, v):
        return v in self.entries

    def get_or_compute(self, v: int, compute: Callable[[], tuple[frozenset, dict]]):
        hit = self.entries.get(v)
        if hit is not None:
            self.hits += 1
            return hit
        return self.entries.setdefault(v, compute())


def _tester(data: Dataset | None, cfg: TestConfig, tester: CiTester | None) -> CiTester:
    if tester is not None:
        return tester
    if data is None:
        raise ValueError("either data or tester is required")
    return G2Tester(data, cfg)


def find_sepset(
    tester: CiTester,
    x: int,
    y: int,
    pool: Iterable[int],
    max_size: int | None,
    min_size: int = 0,
) -> frozenset | None:
    """First ``z`` within ``pool`` making ``x`` and ``y`` independent.

    Subsets are tried by increasing size, then lexicographically over the
    sorted pool.
    """
    pool = sorted(set(pool) - {x, y})
    top = len(pool) if max_size is None else min(len(pool), max_size)
    for k in range(min_size, top + 1):
        for z in itertools.combinations(pool, k):
            try:
                if tester.independent(x, y, z):
                    return frozenset(z)
            except ConditionTooLarge:
                return None
    return None


def hiton_pc(
    data: Dataset | None,
    t: int,
    cfg: TestConfig = TestConfig(),
    cache: PcCache | None = None,
    tester: CiTester | None = None,
) -> tuple[frozenset, dict]:
    """Interleaved HITON-PC.

    Candidates dependent on ``t`` are admitted strongest first (by the
    unconditional G-squared statistic, ties by id). After each admission
    every admitted variable is re-checked against all subsets of the other
    admitted variables; a variable found independent is dropped and its
    witness stored as its separating set.
    """
    tester = _tester(data, cfg, tester)
    if cache is not None:
        return cache.get_or_compute(t, lambda: _hiton_pc(tester, t, cfg.max_cond_size))
    return _hiton_pc(tester, t, cfg.max_cond_size)


def _hiton_pc(tester: CiTester, t: int, max_size: int | None) -> tuple[frozenset, dict]:
    if tester.max_cond_size is not None:
        max_size = tester.max_cond_size if max_size is None else min(max_size, tester.max_cond_size)
    sepsets: dict[int, frozenset] = {}
    ranked = []
    with tester.phase("pc"):
        for v in range(tester.n_vars):
            if v == t:
                continue
            res = tester.test(t, v, ())
            if res.independent:
                sepsets[v] = frozenset()
            else:
                ranked.append((-res.statistic, v))
        ranked.sort()

        current: list[int] = []
        for _, v in ranked:
            current.append(v)
            for x in list(current):
                others = [u for u in current if u != x]
                z = find_sepset(tester, t, x, others, max_size, min_size=1)
                if z is not None:
                    current.remove(x)
                    sepsets[x] = z
    return frozenset(current), sepsets


def get_mb(
    data: Dataset | None,
    t: int,
    cfg: TestConfig = TestConfig(),
    cache: PcCache | None = None,
    tester: CiTester | None = None,
    prune: bool = True,
) -> MbResult:
    """HITON-MB style blanket: PC of ``t`` plus spouses found through each child candidate.

    ``y`` in PC(x) is a spouse of ``t`` via ``x`` when the separating set of
    ``y`` from ``t`` stops separating them once ``x`` is added.

    With ``prune`` (default), PC members are re-checked against conditioning
    sets that include the spouses just found. HITON-PC only conditions on
    variables dependent on ``t``, so a descendant whose separator contains a
    marginally independent spouse survives it; the blanket pass removes it
    and the spouse search is repeated on the reduced PC.
    """
    tester = _tester(data, cfg, tester)
    cache = PcCache() if cache is None else cache
    pc, sep = hiton_pc(None, t, cfg, cache, tester)
    sep = dict(sep)
    while True:
        spouses = _spouses(tester, t, pc, sep, cfg, cache)
        if not prune or not spouses:
            break
        removed = _prune_with_blanket(tester, t, pc, spouses, sep, cfg.max_cond_size)
        if not removed:
            break
        pc = pc - removed
    return MbResult(t, pc, spouses, sep)


def _spouses(tester, t, pc, sep, cfg, cache) -> dict[int, frozenset]:
    spouses: dict[int, frozenset] = {}
    for x in sorted(pc):
        pcx, _ = hiton_pc(None, x, cfg, cache, tester)
        found = set()
        with tester.phase("spouse"):
            for y in sorted(pcx):
                if y == t or y in pc or y not in sep:
                    continue
                z = sep[y]
                if x in z:
                    continue
                try:
                    if not tester.independent(t, y, z | {x}):
                        found.add(y)
                except ConditionTooLarge:
                    continue
        if found:
            spouses[x] = frozenset(found)
    return spouses


def _prune_with_blanket(tester, t, pc, spouses, sep, max_size) -> set[int]:
    sp = frozenset().union(*spouses.values())
    removed: set[int] = set()
    with tester.phase("pc"):
        for x in sorted(pc):
            pool = sorted((pc - removed - {x}) | (sp - {x}))
            hi = len(pool) if max_size is None else min(max_size, len(pool))
            hit = None
            for k in range(1, hi + 1):
                for z in itertools.combinations(pool, k):
                    if sp.isdisjoint(z):
                        continue  # already covered by HITON-PC
                    try:
                        if tester.independent(t, x, z):
                            hit = frozenset(z)
                            break
                    except ConditionTooLarge:
                        break
                if hit is not None:
                    break
            if hit is not None:
                removed.add(x)
                sep[x] = hit
    return removed


class SuTable:
    """Memoised symmetric uncertainty over one dataset."""

    def __init__(self, data: Dataset):
        self.data = data
        self._memo: dict[tuple[int, int], float] = {}

    def __call__(self, x: int, y: int) -> float:
        key = (x, y) if x < y else (y, x)
        val = self._memo.get(key)
        if val is None:
            val = self._memo[key] = symmetric_uncertainty(self.data, x, y)
        return val


def fcbf(data: Dataset, t: int, delta: float = DEFAULT_DELTA, su: SuTable | None = None) -> frozenset:
    """Fast correlation-based filter around target ``t``.

    Keeps variables with SU(x; t) > ``delta``, orders them by decreasing
    SU(x; t) (ties by ascending id), then drops every later variable ``j``
    that is more correlated with an earlier survivor ``i`` than with ``t``.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    su = SuTable(data) if su is None else su
    t = data.check_var(t)
    scores = {v: su(v, t) for v in range(data.n_vars) if v != t}
    s = sorted((v for v, val in scores.items() if val > delta), key=lambda v: (-scores[v], v))
    i = 0
    while i < len(s):
        j = i + 1
        while j < len(s):
            if su(s[i], s[j]) > scores[s[j]]:
                del s[j]
            else:
                j += 1
        i += 1
    return frozenset(s)


def mb_fs(
    data: Dataset,
    t: int,
    delta: float = DEFAULT_DELTA,
    cfg: TestConfig = TestConfig(),
    cache: PcCache | None = None,
    tester: CiTester | None = None,
    su: SuTable | None = None,
) -> MbResult:
    """Markov blanket with FCBF for every PC set and CI tests only for spouses.

    Separating sets for spouse candidates are searched among subsets of the
    target's FCBF set.
    """
    tester = _tester(data, cfg, tester)
    cache = PcCache() if cache is None else cache
    su = SuTable(data) if su is None else su

    def pc_of(v):
        return cache.get_or_compute(v, lambda: (fcbf(data, v, delta, su), {}))[0]

    pc = pc_of(t)
    max_size = cfg.max_cond_size
    sepsets: dict[int, frozenset] = {}
    searched: set[int] = set()
    spouses: dict[int, frozenset] = {}
    for x in sorted(pc):
        found = set()
        for y in sorted(pc_of(x)):
            if y == t or y in pc:
                continue
            with tester.phase("spouse"):
                if y not in searched:
                    searched.add(y)
                    z = find_sepset(tester, t, y, pc, max_size)
                    if z is not None:
                        sepsets[y] = z
                z = sepsets.get(y)
                if z is None or x in z:
                    continue
                try:
                    if not tester.independent(t, y, z | {x}):
                        found.add(y)
                except ConditionTooLarge:
                    continue
        if found:
            spouses[x] = frozenset(found)
    return MbResult(t, pc, spouses, sepsets)


def true_pc(parents: Sequence[Iterable[int]], t: int) -> frozenset:
    """Parents and children of ``t`` in a DAG given by parent lists."""
    kids = {v for v, ps in enumerate(parents) if t in ps}
    return frozenset(parents[t]) | frozenset(kids)
