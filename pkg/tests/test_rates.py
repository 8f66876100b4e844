import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import config_strategy, random_config, single_level_config
from corrcache import (
    CacheAllocation,
    LibraryConfig,
    build_level_curve,
    cacc_alpha,
    cacc_level_rate,
    cacc_m,
    cacc_rate,
    cauc_optimal_allocation,
    cauc_rate,
    cicc_rate,
    cutset_bound,
    lower_convex_hull,
    optimize_allocation,
)

import random


# ---------------------------------------------------------------------------
# convex hull / envelope machinery

def test_hull_drops_points_above_segments():
    pts = [(0, 10), (1, 8), (2, 4), (3, 2), (4, 0.8), (5, 0)]
    hull = lower_convex_hull(pts)
    assert hull == ((0.0, 10.0), (2.0, 4.0), (3.0, 2.0), (4.0, 0.8), (5.0, 0.0))


def test_hull_drops_collinear_middle_points():
    assert lower_convex_hull([(0, 4), (1, 2), (2, 0)]) == ((0.0, 4.0), (2.0, 0.0))


@given(
    st.lists(
        st.floats(0, 100, allow_nan=False), min_size=2, max_size=12
    )
)
def test_hull_lies_at_or_below_points(ys):
    pts = list(enumerate(ys))
    hull = lower_convex_hull(pts)
    xs = [x for x, _ in hull]
    assert xs == sorted(xs)
    assert hull[0] == (0.0, float(ys[0]))
    assert hull[-1][0] == len(ys) - 1
    # every original point sits on or above the hull
    for x, y in pts:
        for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
            if x0 <= x <= x1:
                interp = y0 + (y1 - y0) * (x - x0) / (x1 - x0) if x1 > x0 else y0
                assert y >= interp - 1e-9
                break


# ---------------------------------------------------------------------------
# uncoded scheme

def test_cauc_rate_no_cache_two_users():
    """Two files sharing one subfile: everything ships, 3 bits over 2-bit files."""
    config = LibraryConfig(2, 2, 0.0, (1, 1))
    rate = cauc_rate(config, CacheAllocation((0.0, 0.0)))
    assert rate == pytest.approx(1.5)


def test_cauc_rate_full_cache_is_zero():
    config = LibraryConfig(2, 2, 1.5, (1, 1))
    assert cauc_rate(config, CacheAllocation((1.0, 1.0))) == 0.0


def test_cauc_rate_ignores_unreachable_subfiles():
    # N=3, K=1: only subfiles touching the single demanded file count
    config = LibraryConfig(3, 1, 0.0, (3, 3, 3))
    # needed: 1 of 3 level-1, 2 of 3 level-2, 1 level-3 -> (3+6+3)/file
    assert cauc_rate(config, CacheAllocation((0, 0, 0))) == pytest.approx(
        (1 * 3 + 2 * 3 + 1 * 3) / config.file_size
    )


def test_cauc_optimal_fills_commonest_levels_first():
    config = LibraryConfig(2, 2, 0.5, (1, 1))  # budget = 1 bit, level-2 tail = 1
    alloc = cauc_optimal_allocation(config)
    assert alloc.fractions == (0.0, 1.0)


def test_cauc_optimal_partial_level():
    # budget lands inside level 1: tail(2)=1, budget=2 -> p2=1, p1=(2-1)/2
    config = LibraryConfig(2, 2, 1.0, (1, 1))
    alloc = cauc_optimal_allocation(config)
    assert alloc.fractions[1] == 1.0
    assert alloc.fractions[0] == pytest.approx(0.5)


@settings(max_examples=60)
@given(config_strategy(), st.integers(0, 10**6))
def test_cauc_optimal_beats_random_feasible_allocations(config, seed):
    rng = random.Random(seed)
    best = cauc_optimal_allocation(config)
    assert best.satisfies_capacity(config)
    budget = config.cache_capacity * config.file_size
    for _ in range(5):
        probe = CacheAllocation(
            tuple(rng.uniform(0, 1) for _ in range(config.n_files))
        )
        if probe.cached_bits(config) > budget:
            continue
        assert cauc_rate(config, best) <= cauc_rate(config, probe) + 1e-9


# ---------------------------------------------------------------------------
# coded scheme, per-level curve

def five_user_level2():
    return single_level_config(5, 5, 2, units=1)  # F2 = 10, file = 40


def test_coded_level_curve_raw_points():
    config = five_user_level2()
    f2_over_f = config.level_size(2) / config.file_size
    want = [10, 8, 4, 2, 0.8, 0]
    got = [cacc_level_rate(config, 2, t) for t in range(6)]
    assert got == pytest.approx([w * f2_over_f for w in want])


def test_coded_step_bound_anchor():
    """Level 2 of 5 shared by 5 users at share 1: 4 steps of at most 10
    payload groups, each binom(5,1)-th of a subfile."""
    config = five_user_level2()
    assert cacc_alpha(config, 2, 1) == pytest.approx(
        8 * config.level_size(2) / config.file_size
    )
    assert cacc_m(config, 2, 1) == pytest.approx(
        8 * config.level_size(2) / config.file_size
    )


def test_coded_fractional_share_uses_envelope():
    config = five_user_level2()
    f2_over_f = config.level_size(2) / config.file_size
    # hull vertices: (0,10),(2,4),(3,2),(4,0.8),(5,0); t=1 raw point 8 sits above
    curve = build_level_curve(config, 2)
    assert [t for t, _ in curve.envelope] == [0, 2, 3, 4, 5]
    assert curve.envelope_value(1.0) == pytest.approx(7 * f2_over_f)
    assert cacc_level_rate(config, 2, 0.5) == pytest.approx(8.5 * f2_over_f)
    # integer shares evaluate the raw min, not the hull
    assert cacc_level_rate(config, 2, 1) == pytest.approx(8 * f2_over_f)


def test_level_curve_is_cached():
    config = five_user_level2()
    assert build_level_curve(config, 2) is build_level_curve(config, 2)


@settings(max_examples=60)
@given(config_strategy())
def test_coded_level_rates_nonincreasing_in_share(config):
    for level in config.levels():
        if config.subfile_sizes[level - 1] == 0:
            continue
        vals = [cacc_level_rate(config, level, t) for t in range(config.n_users + 1)]
        assert vals[-1] == 0.0
        for a, b in zip(vals, vals[1:]):
            assert b <= a + 1e-9


@settings(max_examples=60)
@given(config_strategy())
def test_coded_envelope_below_raw(config):
    for level in config.levels():
        if config.subfile_sizes[level - 1] == 0:
            continue
        curve = build_level_curve(config, level)
        for t, raw in curve.points:
            assert curve.envelope_value(t) <= raw + 1e-9
        # envelope is convex: interior vertices lie below adjacent chords
        verts = curve.envelope
        for (x0, y0), (x1, y1), (x2, y2) in zip(verts, verts[1:], verts[2:]):
            chord = y0 + (y2 - y0) * (x1 - x0) / (x2 - x0)
            assert y1 <= chord + 1e-9


def test_cacc_rate_sums_levels():
    config = LibraryConfig(3, 3, 3.0, (6, 6, 6))
    alloc = CacheAllocation.from_replication((1, 2, 0), 3)
    want = sum(cacc_level_rate(config, l, t) for l, t in zip((1, 2, 3), (1, 2, 0)))
    assert cacc_rate(config, alloc) == pytest.approx(want)


def test_share_out_of_range_rejected():
    config = five_user_level2()
    with pytest.raises(ValueError):
        cacc_level_rate(config, 2, -0.5)
    with pytest.raises(ValueError):
        cacc_level_rate(config, 2, 5.5)
    with pytest.raises(ValueError):
        cacc_alpha(config, 6, 1)


# ---------------------------------------------------------------------------
# correlation-ignorant scheme and converse bound

def test_cicc_rate_classic_point():
    """Ten users, ten opaque files, one file of cache each: rate 4.5."""
    config = LibraryConfig(10, 10, 1.0, (2520,) + (0,) * 9)
    assert cicc_rate(config) == pytest.approx(4.5)
    assert cicc_rate(config, cache_capacity=0.0) == pytest.approx(10.0)
    assert cicc_rate(config, cache_capacity=10.0) == 0.0


def test_cicc_rate_fewer_files_than_users():
    # N=2, K=4, M=1: t = 2, rate = (binom(4,3)-binom(2,3))/binom(4,2)
    config = LibraryConfig(2, 4, 1.0, (12, 12))
    assert cicc_rate(config) == pytest.approx(4 / 6)


def test_cicc_rate_independent_of_sharing_structure():
    a = LibraryConfig(3, 3, 1.0, (6, 0, 0))
    b = LibraryConfig(3, 3, 1.0, (0, 0, 6))
    assert cicc_rate(a) == pytest.approx(cicc_rate(b))


def test_cutset_no_cache_requires_whole_library():
    config = LibraryConfig(2, 2, 0.0, (1, 1))
    assert cutset_bound(config) == pytest.approx(1.5)


def test_cutset_zero_at_full_storage():
    config = LibraryConfig(2, 2, 1.5, (1, 1))
    assert cutset_bound(config) == 0.0


@settings(max_examples=40, deadline=None)
@given(config_strategy())
def test_cutset_below_every_achievable_rate(config):
    lo = cutset_bound(config)
    assert lo <= cauc_rate(config, cauc_optimal_allocation(config)) + 1e-9
    assert lo <= optimize_allocation(config).rate + 1e-9
    assert lo <= cicc_rate(config) + 1e-9


@settings(max_examples=40)
@given(config_strategy(), st.floats(0, 1))
def test_cutset_nonincreasing_in_capacity(config, frac):
    m = frac * config.n_files
    step = config.n_files / 10
    assert cutset_bound(config, m) + 1e-9 >= cutset_bound(
        config, min(m + step, float(config.n_files))
    )


def test_rates_agree_on_seeded_random_configs():
    """Coded allocation never loses to uncoded; with at least as many files
    as users it never loses to ignoring correlation either.

    (With N < K the closed-form coded rate assumes the worst-case number of
    distinct step demands, which can push the formula above the opaque-file
    rate even though actual deliveries stay cheaper.)
    """
    rng = random.Random(99)
    for _ in range(25):
        config = random_config(rng)
        coded = optimize_allocation(config).rate
        assert coded <= cauc_rate(config, cauc_optimal_allocation(config)) + 1e-9
        if config.n_files >= config.n_users:
            assert coded <= cicc_rate(config) + 1e-9
