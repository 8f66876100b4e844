"""Library model: files assembled from shared subfiles, plus cache bookkeeping.

A library holds n_files files over n_users cache-equipped users.  Every
nonempty subset S of file indices owns one subfile; file i is the
concatenation of all subfiles whose subset contains i.  All subfiles with
|S| = l ("level l") have the same size, so a config is fully described by
(n_files, n_users, cache_capacity, per-level sizes).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .combinat import (
    comb0,
    divisibility_unit,
    mask_of,
    members_of,
    mix_seed,
    subset_masks,
)

# Relative tolerance applied to the cache capacity constraint.
CAPACITY_TOLERANCE = 1e-9


@dataclass(frozen=True, order=True)
class SubfileId:
    """Identifier of one subfile: the set of files that share it.

    Backed by a bitmask with bit (i - 1) set for member file i; members are
    always reported sorted ascending so two ids built from any ordering of
    the same indices compare equal.
    """

    mask: int

    @classmethod
    def of(cls, *members: int) -> "SubfileId":
        return cls(mask_of(members))

    @property
    def members(self) -> tuple[int, ...]:
        return members_of(self.mask)

    @property
    def level(self) -> int:
        return self.mask.bit_count()

    def contains(self, file_index: int) -> bool:
        return bool(self.mask >> (file_index - 1) & 1)

    def __post_init__(self):
        if self.mask <= 0:
            raise ValueError("a subfile is owned by a nonempty set of files")

    def __repr__(self):
        return f"SubfileId{self.members}"


@dataclass(frozen=True)
class LibraryConfig:
    """Static description of a library and its cache network.

    subfile_sizes[l-1] is the bit size of every level-l subfile.  Sizes are
    ints for anything that will be simulated bit-for-bit; floats are accepted
    so the closed-form calculators can work on exact unrounded sizes.
    cache_capacity is in file units (a cache holds cache_capacity * file_size
    bits) and is clamped to the whole library.
    """

    n_files: int
    n_users: int
    cache_capacity: float
    subfile_sizes: tuple

    def __post_init__(self):
        if self.n_files < 1 or self.n_files > 20:
            raise ValueError("n_files must be in [1, 20]")
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        sizes = tuple(self.subfile_sizes)
        if len(sizes) != self.n_files:
            raise ValueError("need one size per level 1..n_files")
        if any(s < 0 for s in sizes):
            raise ValueError("subfile sizes are nonnegative")
        object.__setattr__(self, "subfile_sizes", sizes)
        if self.file_size <= 0:
            raise ValueError("file size must be positive")
        if self.cache_capacity < 0:
            raise ValueError("cache capacity is nonnegative")
        lib_files = self.library_bits / self.file_size
        if self.cache_capacity > lib_files:
            object.__setattr__(self, "cache_capacity", lib_files)

    @property
    def file_size(self):
        """Bits per file: sum over levels of binom(N-1, l-1) * F_l."""
        n = self.n_files
        return sum(
            comb0(n - 1, l - 1) * self.subfile_sizes[l - 1] for l in range(1, n + 1)
        )

    @property
    def library_bits(self):
        """Total distinct bits stored at the server."""
        n = self.n_files
        return sum(comb0(n, l) * self.subfile_sizes[l - 1] for l in range(1, n + 1))

    def level_size(self, level: int):
        if not 1 <= level <= self.n_files:
            raise ValueError(f"level {level} out of range [1, {self.n_files}]")
        return self.subfile_sizes[level - 1]

    def is_integral(self) -> bool:
        return all(float(s).is_integer() for s in self.subfile_sizes)

    def levels(self) -> range:
        return range(1, self.n_files + 1)


def file_size(config: LibraryConfig):
    """Bits per file for a config."""
    return config.file_size


def subfiles_of_level(config: LibraryConfig, level: int) -> list[SubfileId]:
    """All level-l subfile ids in canonical (lexicographic) order."""
    config.level_size(level)  # range check
    return [SubfileId(m) for m in subset_masks(range(1, config.n_files + 1), level)]


@dataclass(frozen=True)
class DemandVector:
    """One file request per user, 1-based file indices."""

    demands: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(self.demands))

    def validate(self, config: LibraryConfig) -> None:
        if len(self.demands) != config.n_users:
            raise ValueError("need one demand per user")
        for d in self.demands:
            if not 1 <= d <= config.n_files:
                raise ValueError(f"demand {d} outside [1, {config.n_files}]")

    def distinct_files(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.demands)))

    def __iter__(self):
        return iter(self.demands)

    def __len__(self):
        return len(self.demands)


def as_demands(demands, config: LibraryConfig) -> tuple[int, ...]:
    """Normalize a DemandVector or plain sequence to a validated tuple."""
    dv = demands if isinstance(demands, DemandVector) else DemandVector(tuple(demands))
    dv.validate(config)
    return dv.demands


@dataclass(frozen=True)
class CacheAllocation:
    """Per-level cached fraction p_l in [0, 1] of every level-l subfile."""

    fractions: tuple[float, ...]

    def __post_init__(self):
        fr = tuple(float(p) for p in self.fractions)
        if any(p < -1e-12 or p > 1 + 1e-12 for p in fr):
            raise ValueError("fractions must lie in [0, 1]")
        object.__setattr__(
            self, "fractions", tuple(min(1.0, max(0.0, p)) for p in fr)
        )

    @classmethod
    def from_replication(cls, counts, n_users: int) -> "CacheAllocation":
        """Build from per-level replication counts t_l = K * p_l."""
        return cls(tuple(c / n_users for c in counts))

    def replication(self, n_users: int) -> tuple[float, ...]:
        return tuple(p * n_users for p in self.fractions)

    def cached_bits(self, config: LibraryConfig):
        """Bits one user stores under this allocation: sum binom(N,l) p_l F_l."""
        n = config.n_files
        return sum(
            comb0(n, l) * self.fractions[l - 1] * config.subfile_sizes[l - 1]
            for l in config.levels()
        )

    def satisfies_capacity(self, config: LibraryConfig) -> bool:
        budget = config.cache_capacity * config.file_size
        return self.cached_bits(config) <= budget + CAPACITY_TOLERANCE * config.file_size


def check_allocation(config: LibraryConfig, alloc: CacheAllocation) -> None:
    if len(alloc.fractions) != config.n_files:
        raise ValueError("allocation needs one fraction per level")
    if not alloc.satisfies_capacity(config):
        raise ValueError("allocation exceeds cache capacity")


@dataclass
class ContentStore:
    """Server-side ground truth: concrete bits for every subfile.

    Contents are pseudorandom from the seed; files are assembled by
    concatenating the subfiles containing the file index in canonical order
    (level ascending, then lexicographic members), least-significant bits
    first within each subfile.
    """

    config: LibraryConfig
    seed: int
    _contents: dict = field(repr=False)

    @classmethod
    def generate(cls, config: LibraryConfig, seed: int = 0) -> "ContentStore":
        if not config.is_integral():
            raise ValueError("content generation needs integer subfile sizes")
        contents = {}
        for level in config.levels():
            size = int(config.subfile_sizes[level - 1])
            for m in subset_masks(range(1, config.n_files + 1), level):
                rng = random.Random(mix_seed(seed, level, m))
                contents[m] = rng.getrandbits(size) if size else 0
        return cls(config=config, seed=seed, _contents=contents)

    def subfile_bits(self, subfile) -> int:
        mask = subfile.mask if isinstance(subfile, SubfileId) else subfile
        return self._contents[mask]

    def file_layout(self, file_index: int) -> list[int]:
        """Canonical subfile masks making up one file, in concatenation order."""
        if not 1 <= file_index <= self.config.n_files:
            raise ValueError("file index out of range")
        bit = 1 << (file_index - 1)
        layout = []
        for level in self.config.levels():
            for m in subset_masks(range(1, self.config.n_files + 1), level):
                if m & bit:
                    layout.append(m)
        return layout

    def file_bits(self, file_index: int) -> int:
        """Ground-truth assembled file, file_size bits."""
        out = 0
        shift = 0
        for m in self.file_layout(file_index):
            size = int(self.config.subfile_sizes[m.bit_count() - 1])
            out |= self._contents[m] << shift
            shift += size
        return out


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of a sweep/simulation experiment.

    ratios are commonness ratios r_l (fraction of one file made of level-l
    subfiles, summing to 1); file_bits is the target file size F before
    divisibility rounding.  sweep_level/grid describe which ratio is swept,
    with the complement assigned to level 1.
    """

    n_files: int
    n_users: int
    cache_capacity: float
    ratios: tuple[float, ...]
    file_bits: int
    sweep_level: int = 2
    grid: tuple[float, ...] = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        if len(self.ratios) != self.n_files:
            raise ValueError("need one ratio per level")
        if any(r < 0 for r in self.ratios):
            raise ValueError("ratios are nonnegative")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError("ratios must sum to 1")
        if self.file_bits <= 0:
            raise ValueError("file_bits must be positive")


def exact_sizes_from_ratios(n_files: int, ratios, file_bits) -> tuple[float, ...]:
    """Unrounded per-level sizes F_l = r_l * F / binom(N-1, l-1).

    Levels whose ratio is 0 get size 0; a positive ratio on a level with no
    subfiles through one file (impossible for l <= N) cannot occur.
    """
    sizes = []
    for l in range(1, n_files + 1):
        share = comb0(n_files - 1, l - 1)
        r = ratios[l - 1]
        sizes.append(r * file_bits / share if share else 0.0)
    return tuple(sizes)


def ratios_to_sizes(spec: ExperimentSpec) -> LibraryConfig:
    """Integer config realizing the requested ratios as closely as divisibility allows.

    Each level size is rounded down to a multiple of the divisibility unit
    lcm{binom(K, t)} so bit-level placement splits evenly for every integer
    share; the per-level loss is below one unit.
    """
    unit = divisibility_unit(spec.n_users)
    sizes = []
    for exact in exact_sizes_from_ratios(spec.n_files, spec.ratios, spec.file_bits):
        sizes.append(int(exact // unit) * unit)
    if sum(sizes) <= 0:
        raise ValueError(
            "file_bits too small for the divisibility unit; increase file_bits"
        )
    return LibraryConfig(
        n_files=spec.n_files,
        n_users=spec.n_users,
        cache_capacity=spec.cache_capacity,
        subfile_sizes=tuple(sizes),
    )


def rounding_loss_bits(spec: ExperimentSpec, config: LibraryConfig):
    """Total file-size deficit introduced by divisibility rounding."""
    return spec.file_bits - config.file_size
