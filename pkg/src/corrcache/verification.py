"""Exhaustive demand-grid verification tying simulation to the formulas.

verify_all_demands drives the bit-level engine over every demand vector of a
config and checks two things everywhere: decodability (every user can
rebuild its file from cache + transcript) and rate soundness (measured bits
never exceed the formula plus declared slack).  Payloads and combination
streams depend on demands only through per-step patterns, so a shared
DeliverySession plus per-pattern decode checks keep the full N^K sweep fast
without weakening the quantifier: every emitted section is verified for
every user it serves, and sampled demands additionally run the end-to-end
decoder.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .delivery import (
    DeliverySession,
    RandomRecord,
    StepRecord,
    UncodedRecord,
    cauc_deliver,
    cauc_place,
    cicc_deliver,
    cicc_place,
    decode,
    deliver,
    place,
)
from .model import ContentStore, LibraryConfig, as_demands
from .rates import (
    RatePoint,
    cacc_rate,
    cauc_optimal_allocation,
    cauc_rate,
    cicc_rate,
    cutset_bound,
)

__all__ = [
    "GridReport",
    "compare_schemes",
    "verify_all_demands",
    "worst_case_demand",
]

_GRID_GUARD = 10**6


@dataclass
class GridReport:
    """Outcome of one exhaustive demand sweep."""

    config_digest: str
    scheme: str
    demands: tuple
    measured_rates: tuple
    decode_ok: tuple
    formula_rate: float
    max_rate: float
    argmax_demand: tuple
    slack_bits: int
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_csv(self) -> str:
        lines = ["demand,measured_rate,formula_rate,decode_ok"]
        for d, r, okflag in zip(self.demands, self.measured_rates, self.decode_ok):
            key = "-".join(map(str, d))
            lines.append(f"{key},{r:.10g},{self.formula_rate:.10g},{int(okflag)}")
        return "\n".join(lines) + "\n"


def worst_case_demand(config: LibraryConfig) -> tuple[int, ...]:
    """Distinct demands when possible, else cycle through every file."""
    n, k = config.n_files, config.n_users
    if n >= k:
        return tuple(range(1, k + 1))
    return tuple(i % n + 1 for i in range(k))


def _digest(config: LibraryConfig) -> str:
    sizes = ",".join(str(s) for s in config.subfile_sizes)
    return (
        f"n={config.n_files} k={config.n_users} "
        f"m={config.cache_capacity:.6g} sizes=[{sizes}]"
    )


def _verify_step(rec: StepRecord, caches, truth_of, n_users) -> list[str]:
    """Every user must recover its step-item layer slice exactly."""
    from .delivery import _decode_step  # shared private helper, same module family

    out = []
    off, size = rec.layer.offset, rec.layer.size
    seg = (1 << size) - 1
    for k in range(1, n_users + 1):
        masks, bits = caches[k - 1].state()
        try:
            _decode_step(k, rec, masks, bits, n_users)
        except Exception as exc:  # noqa: BLE001 - report, don't crash the sweep
            out.append(f"step {rec.level}/{rec.column}: user {k} raised {exc!r}")
            continue
        item = rec.step_items[k - 1]
        got_mask = (masks.get(item, 0) >> off) & seg
        if got_mask != seg:
            out.append(f"step {rec.level}/{rec.column}: user {k} missing bits")
            continue
        if (bits[item] >> off) & seg != (truth_of(item) >> off) & seg:
            out.append(f"step {rec.level}/{rec.column}: user {k} wrong bits")
    return out


def _verify_random(rec: RandomRecord, user: int, caches, truth_of) -> list[str]:
    from .delivery import _decode_random

    masks, bits = caches[user - 1].state()
    off, size = rec.layer.offset, rec.layer.size
    seg = (1 << size) - 1
    try:
        _decode_random(rec, masks, bits)
    except Exception as exc:  # noqa: BLE001
        return [f"random {rec.item}: user {user} raised {exc!r}"]
    if (bits[rec.item] >> off) & seg != (truth_of(rec.item) >> off) & seg:
        return [f"random {rec.item}: user {user} wrong bits"]
    return []


def verify_all_demands(
    config: LibraryConfig,
    alloc,
    scheme: str = "cacc",
    seed: int = 0,
    store: ContentStore | None = None,
    full_decode_samples: int = 3,
) -> GridReport:
    """Run delivery for every demand vector; check decode and rate soundness.

    Every distinct transmitted section is decode-verified for each user it
    serves (sections repeat across demand vectors, so this covers the whole
    grid); additionally `full_decode_samples` demand vectors per sweep run
    the complete user decoder against the ground-truth files.
    """
    n, k = config.n_files, config.n_users
    if n**k > _GRID_GUARD:
        raise ValueError(f"{n}**{k} demand vectors exceed the enumeration guard")
    if store is None:
        store = ContentStore.generate(config, seed)
    session = DeliverySession()

    if scheme == "cacc":
        caches = place(config, alloc, store)
        formula = cacc_rate(config, alloc)
        run = lambda d: deliver(
            config, alloc, d, store, caches=caches, session=session
        )
    elif scheme == "cauc":
        caches = cauc_place(config, alloc, store)
        formula = cauc_rate(config, alloc)
        run = lambda d: cauc_deliver(config, alloc, d, store, caches=caches)
    elif scheme == "cicc":
        caches = cicc_place(config, config.cache_capacity, store)
        formula = cicc_rate(config)
        run = lambda d: cicc_deliver(
            config, config.cache_capacity, d, store, caches=caches
        )
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    def truth_of(item):
        kind, ident = item
        return store.subfile_bits(ident) if kind == "sub" else store.file_bits(ident)

    all_demands = list(product(range(1, n + 1), repeat=k))
    sample_idx = set()
    if full_decode_samples and all_demands:
        step = max(1, len(all_demands) // full_decode_samples)
        sample_idx = set(range(0, len(all_demands), step))

    rates = []
    ok_flags = []
    violations = []
    slack_max = 0
    checked_steps: set = set()
    checked_random: set = set()
    file_bits_true = {}
    for idx, d in enumerate(all_demands):
        transcript = run(d)
        rates.append(transcript.rate)
        demand_ok = True
        for rec in transcript.sections:
            if isinstance(rec, StepRecord):
                key = (rec.level, rec.layer, rec.step_items)
                if key not in checked_steps:
                    checked_steps.add(key)
                    errs = _verify_step(rec, caches, truth_of, k)
                    violations.extend(errs)
                    if errs:
                        demand_ok = False
            elif isinstance(rec, RandomRecord):
                for user in rec.requesters:
                    key = (rec.item, rec.layer, rec.combo_seed, user)
                    if key not in checked_random:
                        checked_random.add(key)
                        errs = _verify_random(rec, user, caches, truth_of)
                        violations.extend(errs)
                        if errs:
                            demand_ok = False
            elif not isinstance(rec, UncodedRecord):
                violations.append(f"unknown record {type(rec)!r}")
                demand_ok = False

        slack = transcript.random_overshoot_bits
        slack_max = max(slack_max, slack)
        limit = formula * config.file_size + slack + 1e-9 * config.file_size + 1e-6
        if transcript.total_bits > limit:
            violations.append(
                f"demand {d}: {transcript.total_bits} bits > formula "
                f"{formula * config.file_size:.6f} + slack {slack}"
            )
            demand_ok = False

        if idx in sample_idx:
            for user in range(1, k + 1):
                want = file_bits_true.get(d[user - 1])
                if want is None:
                    want = file_bits_true[d[user - 1]] = store.file_bits(d[user - 1])
                got = decode(user, caches[user - 1], transcript, d)
                if got != want:
                    violations.append(f"demand {d}: user {user} decode mismatch")
                    demand_ok = False
        ok_flags.append(demand_ok)

    max_rate = max(rates) if rates else 0.0
    argmax = all_demands[rates.index(max_rate)] if rates else ()
    return GridReport(
        config_digest=_digest(config),
        scheme=scheme,
        demands=tuple(all_demands),
        measured_rates=tuple(rates),
        decode_ok=tuple(ok_flags),
        formula_rate=formula,
        max_rate=max_rate,
        argmax_demand=tuple(argmax),
        slack_bits=slack_max,
        violations=tuple(violations),
    )


def compare_schemes(config: LibraryConfig) -> list[RatePoint]:
    """Formula-level comparison of all schemes at the config's capacity."""
    m = config.cache_capacity
    from .allocation import optimize_allocation

    cauc_alloc = cauc_optimal_allocation(config)
    return [
        RatePoint("cauc", m, cauc_rate(config, cauc_alloc)),
        RatePoint("cacc", m, optimize_allocation(config).rate),
        RatePoint("cicc", m, cicc_rate(config)),
        RatePoint("cutset", m, cutset_bound(config)),
    ]
