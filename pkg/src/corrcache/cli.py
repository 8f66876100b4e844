"""Command-line front end for the caching/delivery toolkit.

Subcommands: `rates` (closed-form table), `optimize` (capacity allocation),
`simulate` (bit-level delivery of one demand vector), `verify` (exhaustive
demand-grid oracle) and `sweep` (rate curves against one commonness ratio).
All machine output is CSV with `#` comment lines echoing the configuration,
deterministic for fixed flags and seed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

from .allocation import optimize_allocation
from .delivery import (
    cauc_deliver,
    cauc_place,
    cicc_deliver,
    cicc_place,
    decode,
    deliver,
    place,
)
from .model import (
    CacheAllocation,
    ContentStore,
    ExperimentSpec,
    LibraryConfig,
    exact_sizes_from_ratios,
    ratios_to_sizes,
)
from .rates import (
    cacc_rate,
    cauc_optimal_allocation,
    cauc_rate,
    cicc_rate,
    cutset_bound,
)
from .verification import verify_all_demands
from . import __version__

__all__ = ["SweepResult", "main", "run_sweep"]

_DEFAULT_GRID = tuple(i / 10 for i in range(11))


@dataclass(frozen=True)
class SweepResult:
    """Rate curves of the four schemes along one commonness-ratio sweep."""

    spec: ExperimentSpec
    x_values: tuple[float, ...]
    r_cauc: tuple[float, ...]
    r_cacc: tuple[float, ...]
    r_cicc: tuple[float, ...]
    r_cutset: tuple[float, ...]

    def to_csv(self) -> str:
        s = self.spec
        lines = [
            f"# n={s.n_files} k={s.n_users} m={s.cache_capacity:g} "
            f"file_bits={s.file_bits} sweep_level={s.sweep_level} seed={s.seed}",
            "x,r_cauc,r_cacc,r_cicc,r_cutset",
        ]
        rows = zip(self.x_values, self.r_cauc, self.r_cacc, self.r_cicc, self.r_cutset)
        for x, a, b, c, d in rows:
            lines.append(f"{x:.10g},{a:.10g},{b:.10g},{c:.10g},{d:.10g}")
        return "\n".join(lines) + "\n"


def run_sweep(spec: ExperimentSpec) -> SweepResult:
    """Evaluate all four rate formulas along the requested ratio grid.

    The swept level carries ratio x and level 1 the complement 1-x; sizes
    are kept exact (no divisibility rounding) since only formulas run here.
    """
    if not 1 <= spec.sweep_level <= spec.n_files:
        raise ValueError("sweep_level out of range")
    grid = spec.grid or _DEFAULT_GRID
    xs, cauc, cacc, cicc, cut = [], [], [], [], []
    for x in grid:
        if not 0 <= x <= 1:
            raise ValueError(f"grid ratio {x} outside [0, 1]")
        ratios = [0.0] * spec.n_files
        ratios[spec.sweep_level - 1] = x
        ratios[0] += 1 - x
        sizes = exact_sizes_from_ratios(spec.n_files, ratios, spec.file_bits)
        config = LibraryConfig(
            n_files=spec.n_files,
            n_users=spec.n_users,
            cache_capacity=spec.cache_capacity,
            subfile_sizes=sizes,
        )
        xs.append(x)
        cauc.append(cauc_rate(config, cauc_optimal_allocation(config)))
        cacc.append(optimize_allocation(config).rate)
        cicc.append(cicc_rate(config))
        cut.append(cutset_bound(config))
    return SweepResult(spec, tuple(xs), tuple(cauc), tuple(cacc), tuple(cicc), tuple(cut))


# ---------------------------------------------------------------------------
# flag parsing helpers

def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip() != "")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p.strip() != "")


def _pad(values, n, name):
    if len(values) > n:
        raise ValueError(f"{name} has {len(values)} entries for {n} levels")
    return tuple(values) + (0,) * (n - len(values))


def _sizes_from_args(args) -> tuple:
    if args.level_sizes is not None:
        return _pad(_ints(args.level_sizes), args.n, "--level-sizes")
    if args.ratios is not None:
        ratios = _pad(_floats(args.ratios), args.n, "--ratios")
        spec = ExperimentSpec(
            n_files=args.n,
            n_users=args.k,
            cache_capacity=args.m if args.m is not None else 0.0,
            ratios=ratios,
            file_bits=args.file_bits,
        )
        return ratios_to_sizes(spec).subfile_sizes
    raise ValueError("need --level-sizes or --ratios")


def _config_and_alloc(args) -> tuple[LibraryConfig, CacheAllocation]:
    """Resolve the library plus a cache allocation from the flag set.

    Priority: explicit --t shares; else --m optimized; else t_l = 1 on every
    nonempty level (the smallest nontrivial coded placement).  When --m is
    absent the capacity is set to exactly fit the chosen allocation.
    """
    sizes = _sizes_from_args(args)
    t_arg = getattr(args, "t", None)
    if t_arg is not None:
        counts = _pad(_floats(t_arg), args.n, "--t")
        alloc = CacheAllocation.from_replication(counts, args.k)
    elif args.m is None:
        counts = tuple(1 if s > 0 else 0 for s in sizes)
        alloc = CacheAllocation.from_replication(counts, args.k)
    else:
        alloc = None

    if args.m is not None:
        m = args.m
    else:
        probe = LibraryConfig(args.n, args.k, 0.0, sizes)
        m = alloc.cached_bits(probe) / probe.file_size
    config = LibraryConfig(args.n, args.k, m, sizes)
    if alloc is None:
        alloc = optimize_allocation(config).alloc
    return config, alloc


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config_comment(config: LibraryConfig, seed=None, scheme=None) -> str:
    sizes = ",".join(f"{s:g}" for s in config.subfile_sizes)
    extra = ""
    if scheme is not None:
        extra += f" scheme={scheme}"
    if seed is not None:
        extra += f" seed={seed}"
    return (
        f"# n={config.n_files} k={config.n_users} "
        f"m={config.cache_capacity:g} level_sizes={sizes}{extra}"
    )


# ---------------------------------------------------------------------------
# subcommand bodies

def _cmd_rates(args) -> int:
    sizes = _sizes_from_args(args)
    if args.m is None:
        raise ValueError("rates needs --m")
    config = LibraryConfig(args.n, args.k, args.m, sizes)
    rows = [
        cauc_rate(config, cauc_optimal_allocation(config)),
        optimize_allocation(config).rate,
        cicc_rate(config),
        cutset_bound(config),
    ]
    text = (
        _config_comment(config)
        + "\nr_cauc,r_cacc,r_cicc,r_cutset\n"
        + ",".join(f"{r:.10g}" for r in rows)
        + "\n"
    )
    _emit(text, args.out)
    return 0


def _cmd_optimize(args) -> int:
    sizes = _sizes_from_args(args)
    if args.m is None:
        raise ValueError("optimize needs --m")
    config = LibraryConfig(args.n, args.k, args.m, sizes)
    sol = optimize_allocation(config)
    lines = [
        _config_comment(config),
        f"# method={sol.method} rate={sol.rate:.10g}",
        "level,fraction,t",
    ]
    for level in config.levels():
        p = sol.alloc.fractions[level - 1]
        lines.append(f"{level},{p:.10g},{p * config.n_users:.10g}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_simulate(args) -> int:
    config, alloc = _config_and_alloc(args)
    demands = _ints(args.demands)
    store = ContentStore.generate(config, args.seed)
    scheme = args.scheme
    if scheme == "cacc":
        caches = place(config, alloc, store)
        transcript = deliver(
            config, alloc, demands, store,
            schedule_source=args.fixture, seed=args.seed, caches=caches,
        )
    elif scheme == "cauc":
        caches = cauc_place(config, alloc, store)
        transcript = cauc_deliver(config, alloc, demands, store, caches=caches)
    elif scheme == "cicc":
        caches = cicc_place(config, config.cache_capacity, store)
        transcript = cicc_deliver(
            config, config.cache_capacity, demands, store, caches=caches
        )
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    ok = True
    for user in range(1, config.n_users + 1):
        if decode(user, caches[user - 1], transcript, demands) != store.file_bits(
            demands[user - 1]
        ):
            ok = False
    per_level = ";".join(
        f"{l}:{b}" for l, b in sorted(transcript.per_level_bits.items())
    )
    lines = [
        _config_comment(config, seed=args.seed, scheme=scheme),
        f"demands={'-'.join(map(str, demands))}",
        f"total_bits={transcript.total_bits}",
        f"rate={transcript.rate:.10g}",
        f"step_counts={','.join(map(str, transcript.step_counts))}",
        f"per_level_bits={per_level}",
        f"random_overshoot_bits={transcript.random_overshoot_bits}",
        f"decode={'ok' if ok else 'FAILED'}",
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if ok else 1


def _cmd_verify(args) -> int:
    config, alloc = _config_and_alloc(args)
    report = verify_all_demands(config, alloc, scheme=args.scheme, seed=args.seed)
    header = _config_comment(config, seed=args.seed, scheme=args.scheme)
    stats = (
        f"# max_rate={report.max_rate:.10g} "
        f"argmax={'-'.join(map(str, report.argmax_demand))} "
        f"violations={len(report.violations)}"
    )
    _emit(header + "\n" + stats + "\n" + report.to_csv(), args.out)
    if report.violations:
        for v in report.violations[:20]:
            print(f"violation: {v}", file=sys.stderr)
        return 1
    return 0


def _cmd_sweep(args) -> int:
    if args.m is None:
        raise ValueError("sweep needs --m")
    ratios = [0.0] * args.n
    ratios[0] = 1.0
    spec = ExperimentSpec(
        n_files=args.n,
        n_users=args.k,
        cache_capacity=args.m,
        ratios=tuple(ratios),
        file_bits=args.file_bits,
        sweep_level=args.sweep_level,
        grid=_floats(args.grid) if args.grid else (),
        seed=args.seed,
    )
    _emit(run_sweep(spec).to_csv(), args.out)
    return 0


def _add_common(sub, with_demands=False, with_scheme=False, with_t=True):
    sub.add_argument("--n", type=int, required=True, help="number of files")
    sub.add_argument("--k", type=int, required=True, help="number of users")
    sub.add_argument("--m", type=float, default=None, help="cache capacity in files")
    sub.add_argument("--ratios", default=None,
                     help="comma list of per-level commonness ratios (sum 1)")
    sub.add_argument("--file-bits", type=int, default=100_000,
                     help="target file size in bits for --ratios")
    sub.add_argument("--level-sizes", default=None,
                     help="comma list of exact per-level subfile sizes in bits")
    sub.add_argument("--seed", type=int, default=0, help="content/schedule seed")
    sub.add_argument("--out", default=None, help="write output to this path")
    sub.add_argument("--format", choices=["csv"], default="csv",
                     help="output format (CSV only)")
    if with_t:
        sub.add_argument("--t", default=None,
                         help="comma list of per-level cached shares t_l in [0, K]")
    if with_demands:
        sub.add_argument("--demands", required=True,
                         help="comma list of demanded file indices, one per user")
    if with_scheme:
        sub.add_argument("--scheme", choices=["cacc", "cauc", "cicc"],
                         default="cacc", help="delivery scheme")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrcache",
        description="Caching and coded delivery for libraries with shared subfiles.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("rates", help="closed-form rate table for one config")
    _add_common(p, with_t=False)
    p.set_defaults(func=_cmd_rates)

    p = subs.add_parser("optimize", help="capacity-optimal cache allocation")
    _add_common(p, with_t=False)
    p.set_defaults(func=_cmd_optimize)

    p = subs.add_parser("simulate", help="run one demand vector at the bit level")
    _add_common(p, with_demands=True, with_scheme=True)
    p.add_argument("--fixture", default=None,
                   help="assignment schedule: a path or the literal 'example1'")
    p.set_defaults(func=_cmd_simulate)

    p = subs.add_parser("verify", help="exhaustive demand-grid verification")
    _add_common(p, with_scheme=True)
    p.set_defaults(func=_cmd_verify)

    p = subs.add_parser("sweep", help="rate curves along one commonness ratio")
    _add_common(p, with_t=False)
    p.add_argument("--sweep-level", type=int, default=2,
                   help="level whose ratio sweeps the grid (complement on level 1)")
    p.add_argument("--grid", default=None,
                   help="comma list of ratio grid points (default 0,0.1,...,1)")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
