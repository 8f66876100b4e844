"""Closed-form delivery rates and bounds for correlated libraries.

All rates are normalized by the file size: a rate R means the server ships
R * file_size bits in the worst case.  Three schemes are covered:

* CAUC: uncoded delivery with correlation-aware cache allocation,
* CACC: coded (multicast) delivery with correlation-aware allocation,
* CICC: coded delivery that ignores correlation (files treated as opaque),

plus a cut-set converse bound that no scheme can beat.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

from .combinat import comb0
from .model import CacheAllocation, LibraryConfig

_INT_TOL = 1e-9


@dataclass(frozen=True)
class RatePoint:
    """One evaluated (capacity, rate) pair for a named scheme."""

    scheme: str
    cache_capacity: float
    rate: float


@dataclass(frozen=True)
class LevelRateCurve:
    """Per-level coded rate against the integer caching share t in [0, K].

    points are the K+1 raw integer evaluations; envelope is the lower convex
    hull of those points (vertices, t ascending), realizable at fractional t
    by splitting the level's bits between the two bracketing vertices.
    """

    level: int
    points: tuple[tuple[int, float], ...]
    envelope: tuple[tuple[float, float], ...]

    def envelope_value(self, t: float) -> float:
        verts = self.envelope
        if t < verts[0][0] - _INT_TOL or t > verts[-1][0] + _INT_TOL:
            raise ValueError(f"t={t} outside [{verts[0][0]}, {verts[-1][0]}]")
        t = min(max(t, verts[0][0]), verts[-1][0])
        for (t0, r0), (t1, r1) in zip(verts, verts[1:]):
            if t <= t1 + _INT_TOL:
                if t1 == t0:
                    return r1
                w = (t - t0) / (t1 - t0)
                return r0 + w * (r1 - r0)
        return verts[-1][1]


def lower_convex_hull(points) -> tuple[tuple[float, float], ...]:
    """Lower convex hull of (x, y) points with strictly increasing x.

    Monotone-chain construction; collinear middle points are dropped so ties
    resolve toward the smaller x vertex.
    """
    hull: list[tuple[float, float]] = []
    for x, y in points:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            # keep hull[-1] only if it lies strictly below segment (hull[-2], p)
            if (y1 - y0) * (x - x0) >= (y - y0) * (x1 - x0):
                hull.pop()
            else:
                break
        hull.append((float(x), float(y)))
    return tuple(hull)


def cumulative_tail(config: LibraryConfig, level: int):
    """Library bits at commonness `level` and above: sum_{i>=l} binom(N,i) F_i.

    Defined for level in [1, N+1]; the N+1 tail is 0.
    """
    n = config.n_files
    if not 1 <= level <= n + 1:
        raise ValueError("level out of range")
    return sum(
        comb0(n, i) * config.subfile_sizes[i - 1] for i in range(level, n + 1)
    )


def _needed_subfile_count(n_files: int, n_users: int, level: int) -> int:
    """Level-l subfiles touched by a worst-case demand set of min(N, K) files."""
    return comb0(n_files, level) - comb0(max(n_files - n_users, 0), level)


def cauc_rate(config: LibraryConfig, alloc: CacheAllocation) -> float:
    """Worst-case uncoded delivery rate for a given per-level allocation.

    Every subfile that intersects the demanded set ships its uncached
    remainder once: R = (1/F) sum_l (1 - p_l) F_l (binom(N,l) - binom(max(N-K,0),l)).
    """
    n, k = config.n_files, config.n_users
    total = 0.0
    for l in config.levels():
        total += (
            (1.0 - alloc.fractions[l - 1])
            * config.subfile_sizes[l - 1]
            * _needed_subfile_count(n, k, l)
        )
    return total / config.file_size


def cauc_optimal_allocation(config: LibraryConfig) -> CacheAllocation:
    """Capacity-optimal uncoded allocation: fill highest commonness first.

    With C(l) the cumulative tail, level l gets p_l = 1 when C(l) fits in the
    budget, the fractional remainder when the budget lands inside level l,
    and 0 below that.  Uses the whole budget whenever the budget is below the
    total library size.
    """
    budget = config.cache_capacity * config.file_size
    n = config.n_files
    fractions = []
    for l in config.levels():
        size_l = comb0(n, l) * config.subfile_sizes[l - 1]
        tail_here = cumulative_tail(config, l)
        tail_above = tail_here - size_l
        if tail_here <= budget or size_l == 0:
            fractions.append(1.0 if tail_here <= budget else 0.0)
        elif budget > tail_above:
            fractions.append((budget - tail_above) / size_l)
        else:
            fractions.append(0.0)
    return CacheAllocation(tuple(fractions))


def cacc_alpha(config: LibraryConfig, level: int, t: int) -> float:
    """Per-level rate of the multicast XOR delivery procedure at integer share t.

    Sums over s = bits of the subfile index falling outside the demand
    window; each window then runs binom(min(N,K)-1, l-s-1) delivery steps
    whose multicast count is capped by the distinct step-demand bound.
    """
    n, k = config.n_files, config.n_users
    _check_level_t(config, level, t)
    if t == k:
        return 0.0
    size = config.subfile_sizes[level - 1]
    if size == 0:
        return 0.0
    w = min(n, k)
    lo = max(level - k, 0)
    hi = max(min(level - 1, n - k), 0)
    total = 0.0
    for s in range(lo, hi + 1):
        blocks = level - s
        distinct_cap = max(k - math.ceil(w / blocks) - 1, 0)
        per_step = comb0(k, t + 1) - comb0(distinct_cap, t + 1)
        total += (
            comb0(max(n - k, 0), s)
            * comb0(w - 1, level - s - 1)
            * per_step
        )
    return total * size / (config.file_size * comb0(k, t))


def cacc_m(config: LibraryConfig, level: int, t: int) -> float:
    """Per-level rate of shipping uncached remainders of needed subfiles."""
    _check_level_t(config, level, t)
    n, k = config.n_files, config.n_users
    size = config.subfile_sizes[level - 1]
    return (
        _needed_subfile_count(n, k, level)
        * (size - t * size / k)
        / config.file_size
    )


def _check_level_t(config: LibraryConfig, level: int, t) -> None:
    config.level_size(level)  # range check
    if t < -_INT_TOL or t > config.n_users + _INT_TOL:
        raise ValueError(f"share t={t} outside [0, {config.n_users}]")


@functools.lru_cache(maxsize=4096)
def build_level_curve(config: LibraryConfig, level: int) -> LevelRateCurve:
    """Raw integer points min(alpha, m) and their lower convex hull."""
    k = config.n_users
    pts = tuple(
        (t, min(cacc_alpha(config, level, t), cacc_m(config, level, t)))
        for t in range(k + 1)
    )
    return LevelRateCurve(level=level, points=pts, envelope=lower_convex_hull(pts))


def cacc_level_rate(config: LibraryConfig, level: int, t: float) -> float:
    """Coded per-level rate at share t.

    Integer t evaluates the raw point min(alpha, m); fractional t evaluates
    the lower convex hull of the integer points, which memory sharing between
    the two bracketing hull vertices achieves.
    """
    _check_level_t(config, level, t)
    if abs(t - round(t)) <= _INT_TOL:
        ti = int(round(t))
        return min(cacc_alpha(config, level, ti), cacc_m(config, level, ti))
    return build_level_curve(config, level).envelope_value(t)


def cacc_rate(config: LibraryConfig, alloc: CacheAllocation) -> float:
    """Worst-case coded delivery rate: sum of per-level rates at t_l = K p_l."""
    k = config.n_users
    total = 0.0
    for l in config.levels():
        if config.subfile_sizes[l - 1] == 0:
            continue
        total += cacc_level_rate(config, l, alloc.fractions[l - 1] * k)
    return total


def cicc_curve(config: LibraryConfig) -> LevelRateCurve:
    """Integer rate points for opaque-file coded delivery, with their hull."""
    n, k = config.n_files, config.n_users
    pts = []
    for ti in range(k + 1):
        if ti == k:
            pts.append((ti, 0.0))
            continue
        val = (comb0(k, ti + 1) - comb0(k - min(n, k), ti + 1)) / comb0(k, ti)
        pts.append((ti, val))
    return LevelRateCurve(
        level=0, points=tuple(pts), envelope=lower_convex_hull(pts)
    )


def cicc_rate(config: LibraryConfig, cache_capacity: float | None = None) -> float:
    """Coded delivery rate when correlation is ignored (files are opaque).

    Classic shared-cache tradeoff over N independent files of size F with
    t = K * M / N; fractional t interpolates the convex hull of the integer
    points.
    """
    n, k = config.n_files, config.n_users
    m_files = config.cache_capacity if cache_capacity is None else cache_capacity
    if m_files < 0 or m_files > n + _INT_TOL:
        raise ValueError("capacity outside [0, N]")
    t = k * min(m_files, n) / n
    curve = cicc_curve(config)
    if abs(t - round(t)) <= _INT_TOL:
        return curve.points[int(round(t))][1]
    return curve.envelope_value(t)


def cutset_bound(config: LibraryConfig, cache_capacity: float | None = None) -> float:
    """Cut-set converse: no scheme with this capacity beats the returned rate.

    Maximizes over the number p of caches on the cut; b = floor(N/p) demand
    rounds expose p*b files, and the remaining N - p*b files contribute via
    the s index (F_{l+s} is 0 beyond level N).  Clamped at 0.
    """
    n = config.n_files
    k = config.n_users
    m_files = config.cache_capacity if cache_capacity is None else cache_capacity
    best = 0.0
    for p in range(1, min(n, k) + 1):
        b = n // p
        exposed = p * b
        total = 0.0
        for s in range(0, n - exposed + 1):
            for l in range(1, exposed + 1):
                if l + s > n:
                    continue
                total += (
                    comb0(n - exposed, s)
                    * comb0(exposed, l)
                    * config.subfile_sizes[l + s - 1]
                )
        value = (total / config.file_size - p * m_files) / b
        best = max(best, value)
    return best
