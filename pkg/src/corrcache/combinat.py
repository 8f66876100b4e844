"""Small combinatorial and bitmask helpers shared across the package.

File indices are 1-based everywhere in the public API; a set of indices is
carried as an int bitmask with bit (i - 1) set for member i, which keeps set
algebra cheap in the delivery hot paths.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations


def comb0(n: int, k: int) -> int:
    """Binomial coefficient extended to be 0 outside 0 <= k <= n.

    Negative n (which arises when a formula subtracts a larger population
    from a smaller one) also yields 0, except comb0(0, 0) == 1.
    """
    if k < 0 or n < 0 or k > n:
        return 0
    return math.comb(n, k)


def mask_of(members) -> int:
    """Bitmask for an iterable of 1-based indices."""
    mask = 0
    for i in members:
        if i < 1:
            raise ValueError(f"indices are 1-based, got {i}")
        mask |= 1 << (i - 1)
    return mask


def members_of(mask: int) -> tuple[int, ...]:
    """Sorted 1-based indices present in a bitmask."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def subset_masks(members, size: int) -> list[int]:
    """All size-element subsets of the given index collection, as bitmasks.

    Canonical order: lexicographic over the sorted member tuple, which every
    caller relies on for determinism.
    """
    base = sorted(members)
    return [mask_of(c) for c in combinations(base, size)]


@lru_cache(maxsize=None)
def part_labels(n_users: int, share: int) -> tuple[int, ...]:
    """Canonical part labels: all share-element subsets of [n_users] as masks."""
    return tuple(subset_masks(range(1, n_users + 1), share))


@lru_cache(maxsize=None)
def divisibility_unit(n_users: int) -> int:
    """lcm of binom(K, t) over t in [0, K]; subfile sizes divisible by this
    split evenly into parts for every integer caching share."""
    unit = 1
    for t in range(n_users + 1):
        unit = math.lcm(unit, math.comb(n_users, t))
    return unit


def mix_seed(*parts: int) -> int:
    """Deterministic 64-bit seed derivation from integer components.

    Avoids Python's salted hash() so schedules and combination streams are
    reproducible across processes.
    """
    acc = 0x9E3779B97F4A7C15
    for p in parts:
        p &= 0xFFFFFFFFFFFFFFFF
        acc ^= p
        acc = (acc * 0xBF58476D1CE4E5B9 + 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        acc ^= acc >> 31
    return acc
