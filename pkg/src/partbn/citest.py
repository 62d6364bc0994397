"""Conditional independence decisions and association scores.

Every discovery routine talks to a :class:`CiTester`. Two backends share that
interface: :class:`G2Tester` decides from data with the G-squared likelihood
ratio test, :class:`DSeparationOracle` answers exactly from a known DAG. The
learners cannot tell them apart, which is what makes their correctness under
perfect independence information testable.
"""

from __future__ import annotations

from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import special

from .dataset import Dataset, count, joint_index


class ConditionTooLarge(ValueError):
    """Conditioning set exceeds ``TestConfig.max_cond_size``; callers prune on it."""


@dataclass(frozen=True)
class TestConfig:
    """Knobs of the G-squared test.

    ``max_cond_size=None`` lifts the cap on conditioning-set size.
    ``reliability_factor`` is the minimum number of rows per degree of
    freedom below which a test cannot establish dependence.
    ``adjust_dof`` counts degrees of freedom stratum by stratum over the
    observed levels only; with ``False`` the nominal
    ``(|x|-1)(|y|-1) * prod |z_i|`` is used.
    """

    __test__ = False  # not a pytest class

    alpha: float = 0.01
    reliability_factor: float = 5.0
    max_cond_size: int | None = 3
    adjust_dof: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.reliability_factor <= 0:
            raise ValueError("reliability_factor must be positive")
        if self.max_cond_size is not None and self.max_cond_size < 0:
            raise ValueError("max_cond_size must be >= 0 or None")


@dataclass(frozen=True)
class CiResult:
    statistic: float
    dof: int
    p_value: float
    independent: bool
    reliable: bool


def _check_args(x: int, y: int, z: Iterable[int]) -> tuple[int, ...]:
    z = tuple(sorted(set(int(v) for v in z)))
    if x == y:
        raise ValueError(f"x and y must differ (both {x})")
    if x in z or y in z:
        raise ValueError(f"conditioning set {z} contains a tested variable ({x}, {y})")
    return z


def g2_test(data: Dataset, x: int, y: int, z: Iterable[int] = (), cfg: TestConfig = TestConfig()) -> CiResult:
    """G-squared test of ``x`` independent of ``y`` given ``z``.

    Expected counts are computed within each stratum of ``z``; empty strata
    and empty cells contribute nothing to the statistic. Degrees of freedom
    are ``sum_s (r_s - 1)(c_s - 1)`` over strata, where ``r_s`` and ``c_s``
    count the levels of ``x`` and ``y`` observed in stratum ``s``, or the
    nominal ``(|x|-1)(|y|-1) * prod |z_i|`` when ``cfg.adjust_dof`` is off.
    Either way the result is floored at 1.
    """
    x, y = data.check_var(x), data.check_var(y)
    z = _check_args(x, y, (data.check_var(v) for v in z))
    if cfg.max_cond_size is not None and len(z) > cfg.max_cond_size:
        raise ConditionTooLarge(f"|z|={len(z)} exceeds max_cond_size={cfg.max_cond_size}")

    kx, ky = data.cardinalities[x], data.cardinalities[y]
    if z:
        zidx, zdims = joint_index(data, z)
        n_strata_full = int(np.prod(zdims))
        if n_strata_full > data.n_rows:
            # only observed strata matter for the statistic
            _, zidx = np.unique(zidx, return_inverse=True)
            n_strata = int(zidx.max()) + 1
        else:
            n_strata = n_strata_full
    else:
        zidx = np.zeros(data.n_rows, dtype=np.int64)
        n_strata = n_strata_full = 1

    cell = (zidx * kx + data.columns[x]) * ky + data.columns[y]
    obs = np.bincount(cell, minlength=n_strata * kx * ky).reshape(n_strata, kx, ky).astype(float)
    row = obs.sum(axis=2, keepdims=True)
    col = obs.sum(axis=1, keepdims=True)
    tot = row.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        expected = row * col / tot
        terms = np.where(obs > 0, obs * np.log(obs / expected), 0.0)
    stat = max(0.0, 2.0 * float(terms.sum()))

    if cfg.adjust_dof:
        rs = np.maximum((row[:, :, 0] > 0).sum(axis=1) - 1, 0)
        cs = np.maximum((col[:, 0, :] > 0).sum(axis=1) - 1, 0)
        dof = max(1, int((rs * cs).sum()))
    else:
        dof = max(1, (kx - 1) * (ky - 1) * n_strata_full)
    p_value = chi2_sf(stat, dof)
    reliable = data.n_rows >= cfg.reliability_factor * dof
    independent = (p_value > cfg.alpha) if reliable else True
    return CiResult(stat, dof, p_value, independent, reliable)


def entropy_bits(counts: np.ndarray) -> float:
    c = np.asarray(counts, dtype=float).ravel()
    c = c[c > 0]
    if c.size == 0:
        return 0.0
    p = c / c.sum()
    return float(-(p * np.log2(p)).sum())


def symmetric_uncertainty(data: Dataset, x: int, y: int) -> float:
    """SU(x; y) = 2 I(x; y) / (H(x) + H(y)) from empirical frequencies, in [0, 1]."""
    x, y = data.check_var(x), data.check_var(y)
    if x == y:
        raise ValueError("symmetric_uncertainty needs two distinct variables")
    joint = count(data, [x, y]).counts
    hx = entropy_bits(joint.sum(axis=1))
    hy = entropy_bits(joint.sum(axis=0))
    if hx + hy == 0.0:
        return 0.0
    mi = hx + hy - entropy_bits(joint)
    return float(min(1.0, max(0.0, 2.0 * mi / (hx + hy))))


class CiTester:
    """Memoised independence oracle with per-phase test counters.

    Subclasses implement :meth:`_compute`. Results are cached on the
    unordered pair plus conditioning set, so repeated questions are free and
    are not counted as issued tests. ``counts`` is keyed by
    ``(phase, "marginal" | "conditional")``.
    """

    def __init__(self, n_vars: int, max_cond_size: int | None = None):
        self.n_vars = n_vars
        self.max_cond_size = max_cond_size
        self.counts: Counter = Counter()
        self.cache_hits = 0
        self._cache: dict = {}
        self._phase = "other"

    @contextmanager
    def phase(self, name: str):
        prev, self._phase = self._phase, name
        try:
            yield self
        finally:
            self._phase = prev

    def test(self, x: int, y: int, z: Iterable[int] = ()) -> CiResult:
        zs = frozenset(z)
        key = (x, y, zs) if x < y else (y, x, zs)
        hit = self._cache.get(key)
        if hit is not None:
            self.cache_hits += 1
            return hit
        # only validated questions ever reach the cache
        z = _check_args(int(x), int(y), zs)
        if self.max_cond_size is not None and len(z) > self.max_cond_size:
            raise ConditionTooLarge(f"|z|={len(z)} exceeds max_cond_size={self.max_cond_size}")
        res = self._compute(min(x, y), max(x, y), z)
        self.counts[(self._phase, "conditional" if z else "marginal")] += 1
        return self._cache.setdefault(key, res)

    def independent(self, x: int, y: int, z: Iterable[int] = ()) -> bool:
        return self.test(x, y, z).independent

    def association(self, x: int, y: int) -> float:
        """Strength of unconditional dependence; larger is stronger."""
        return self.test(x, y, ()).statistic

    def n_tests(self, phase: str | None = None, kind: str | None = None) -> int:
        return sum(
            n for (p, k), n in self.counts.items()
            if (phase is None or p == phase) and (kind is None or k == kind)
        )

    def _compute(self, x: int, y: int, z: tuple[int, ...]) -> CiResult:
        raise NotImplementedError


class G2Tester(CiTester):
    def __init__(self, data: Dataset, cfg: TestConfig = TestConfig()):
        super().__init__(data.n_vars, cfg.max_cond_size)
        self.data = data
        self.cfg = cfg

    def _compute(self, x, y, z):
        return g2_test(self.data, x, y, z, self.cfg)


class DSeparationOracle(CiTester):
    """Exact CI answers read off a DAG by d-separation.

    ``parents[v]`` lists the parents of node ``v``. Association is 1 for
    d-connected pairs and 0 otherwise, so candidate ranking falls back to
    variable id.
    """

    def __init__(self, parents: Sequence[Iterable[int]], max_cond_size: int | None = None):
        super().__init__(len(parents), max_cond_size)
        self.parents = [frozenset(p) for p in parents]

    def _compute(self, x, y, z):
        sep = d_separated(self.parents, x, y, z)
        return CiResult(0.0 if sep else 1.0, 1, 1.0 if sep else 0.0, sep, True)


def d_separated(parents: Sequence[Iterable[int]], x: int, y: int, z: Iterable[int]) -> bool:
    """True iff ``x`` and ``y`` are d-separated by ``z`` in the DAG given by ``parents``.

    Uses the moralised ancestral graph: restrict to ancestors of
    ``{x, y} | z``, marry co-parents, drop directions, delete ``z`` and check
    reachability.
    """
    parents = [set(p) for p in parents]
    z = set(z)
    anc = set()
    stack = [x, y, *z]
    while stack:
        v = stack.pop()
        if v in anc:
            continue
        anc.add(v)
        stack.extend(parents[v])
    nbrs: dict[int, set[int]] = {v: set() for v in anc}
    for v in anc:
        ps = [p for p in parents[v] if p in anc]
        for p in ps:
            nbrs[v].add(p)
            nbrs[p].add(v)
        for i, a in enumerate(ps):
            for b in ps[i + 1:]:
                nbrs[a].add(b)
                nbrs[b].add(a)
    seen = {x}
    stack = [x]
    while stack:
        v = stack.pop()
        for w in nbrs[v]:
            if w == y:
                return False
            if w not in seen and w not in z:
                seen.add(w)
                stack.append(w)
    return True


def chi2_sf(stat: float, dof: int) -> float:
    """Upper tail of the chi-squared distribution (regularised upper incomplete gamma)."""
    if stat <= 0:
        return 1.0
    return float(special.gammaincc(dof / 2.0, stat / 2.0))


__all__ = [
    "CiResult",
    "CiTester",
    "ConditionTooLarge",
    "DSeparationOracle",
    "G2Tester",
    "TestConfig",
    "chi2_sf",
    "d_separated",
    "entropy_bits",
    "g2_test",
    "symmetric_uncertainty",
]
