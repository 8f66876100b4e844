"""Bit-exact placement, delivery, and decoding for the three schemes.

Everything here moves real bits: placement carves pseudorandom subfile
contents into cached parts, delivery emits XOR payloads / random parity
combinations / uncoded remainders, and decode reconstructs a user's file
from its cache plus the transcript alone.  Rate formulas never enter the
data path, so measured transcripts can be compared against them honestly.

Content layout conventions (shared by placement, delivery, and decode):
an item is a subfile (shared scheme) or a whole file (correlation-ignorant
scheme); an integer-share layer of size ``s`` at offset ``o`` within an item
is split into binom(K, t) equal parts ordered by the canonical part labels,
part i occupying item positions [o + i*psize, o + (i+1)*psize).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from itertools import combinations

from .combinat import (
    comb0,
    divisibility_unit,
    mask_of,
    members_of,
    mix_seed,
    part_labels,
    subset_masks,
)
from .gf2 import PrefixSolver
from .model import (
    CacheAllocation,
    ContentStore,
    LibraryConfig,
    as_demands,
    check_allocation,
)
from .rates import build_level_curve, cicc_curve
from .scheduling import AssignmentSchedule, generate_schedule, load_schedule

__all__ = [
    "DeliverySession",
    "LayerSpec",
    "RandomRecord",
    "StepRecord",
    "Transcript",
    "Transmission",
    "UncodedRecord",
    "UserCache",
    "cacc_layers",
    "cauc_deliver",
    "cauc_place",
    "cicc_deliver",
    "cicc_place",
    "coded_delivery_step",
    "decode",
    "deliver",
    "file_layout",
    "place",
    "random_delivery",
    "window_for",
]

_INT_TOL = 1e-9
# Extra random combinations tolerated per requester before a delivery is
# declared buggy (each extra is needed with probability 1/2).
_RANDOM_GUARD = 64


# ---------------------------------------------------------------------------
# layers: integer-share sublayers realizing a fractional caching share

@dataclass(frozen=True)
class LayerSpec:
    """One integer-share sublayer of an item: bits [offset, offset+size)."""

    t: int
    offset: int
    size: int


def _split_layers(total_size: int, t_exact: float, envelope, n_users: int):
    """Sublayers realizing share t_exact over an item of total_size bits.

    Integer shares keep the item whole.  Fractional shares split it between
    the two envelope vertices bracketing t_exact; the low-share slice is
    rounded down to the divisibility unit, which keeps the delivered bits at
    or below the envelope value while slightly over-filling the cache (the
    overage is declared as padding slack by the placement).
    """
    if abs(t_exact - round(t_exact)) <= _INT_TOL:
        return (LayerSpec(int(round(t_exact)), 0, total_size),)
    ta = tb = None
    for (a, _), (b, _) in zip(envelope, envelope[1:]):
        ta, tb = a, b
        if t_exact < b:
            break
    if tb is None or not ta <= t_exact <= tb:
        raise ValueError(f"share {t_exact} outside envelope range")
    lam = (tb - t_exact) / (tb - ta)
    unit = divisibility_unit(n_users)
    size_a = int(lam * total_size / unit + _INT_TOL) * unit
    layers = []
    if size_a:
        layers.append(LayerSpec(int(round(ta)), 0, size_a))
    if total_size - size_a:
        layers.append(LayerSpec(int(round(tb)), size_a, total_size - size_a))
    return tuple(layers)


def cacc_layers(config: LibraryConfig, level: int, t_exact: float):
    """Sublayer plan for one level of the shared-subfile coded scheme."""
    size = int(config.level_size(level))
    return _split_layers(
        size, t_exact, build_level_curve(config, level).envelope, config.n_users
    )


# ---------------------------------------------------------------------------
# caches

@dataclass
class UserCache:
    """One user's cached bits, held per item at their true positions.

    known_bits[item] only ever has bits inside known_masks[item]; pad_bits is
    the declared placement overage (divisibility padding) this cache may
    exceed the nominal budget by.
    """

    user: int
    known_masks: dict = field(default_factory=dict)
    known_bits: dict = field(default_factory=dict)
    pad_bits: float = 0.0

    def add(self, item, pos_mask: int, bits: int) -> None:
        self.known_masks[item] = self.known_masks.get(item, 0) | pos_mask
        self.known_bits[item] = self.known_bits.get(item, 0) | (bits & pos_mask)

    def total_bits(self) -> int:
        return sum(m.bit_count() for m in self.known_masks.values())

    def state(self) -> tuple[dict, dict]:
        """Mutable (masks, bits) copy for a decoding pass."""
        return dict(self.known_masks), dict(self.known_bits)


_TEMPLATES: dict = {}


def _part_templates(n_users: int, t: int, psize: int) -> list[int]:
    """Per-user OR-mask of the part segments a user caches (offset 0)."""
    key = (n_users, t, psize)
    tpl = _TEMPLATES.get(key)
    if tpl is None:
        seg = (1 << psize) - 1
        tpl = [0] * (n_users + 1)
        for i, lab in enumerate(part_labels(n_users, t)):
            block = seg << (i * psize)
            for u in members_of(lab):
                tpl[u] |= block
        _TEMPLATES[key] = tpl
    return tpl


def _place_items(caches, items, layers, n_users):
    """Spread each (item, content) across caches following the layer plan."""
    for item, content in items:
        for layer in layers:
            if layer.t == 0:
                continue
            nparts = comb0(n_users, layer.t)
            if layer.size % nparts:
                raise ValueError(
                    f"layer size {layer.size} not divisible into {nparts} parts"
                )
            psize = layer.size // nparts
            tpl = _part_templates(n_users, layer.t, psize)
            for cache in caches:
                pm = tpl[cache.user] << layer.offset
                if pm:
                    cache.add(item, pm, content & pm)


def _check_budget(config, caches, pad_bits):
    budget = config.cache_capacity * config.file_size
    for cache in caches:
        cache.pad_bits = pad_bits
        if cache.total_bits() > budget + pad_bits + 1e-6 * config.file_size + 1e-9:
            raise RuntimeError(
                f"user {cache.user} caches {cache.total_bits()} bits, over "
                f"budget {budget} + declared padding {pad_bits}"
            )


def place(config: LibraryConfig, alloc: CacheAllocation, store: ContentStore):
    """Shared-subfile placement: per level, split every subfile into labeled
    parts at the level's (possibly sublayered) share and hand each user the
    parts whose label contains it."""
    check_allocation(config, alloc)
    if not config.is_integral():
        raise ValueError("placement needs integer subfile sizes")
    k = config.n_users
    caches = [UserCache(user=u) for u in range(1, k + 1)]
    pad = 0.0
    for level in config.levels():
        size = int(config.subfile_sizes[level - 1])
        if size == 0:
            continue
        t_exact = alloc.fractions[level - 1] * k
        layers = cacc_layers(config, level, t_exact)
        cached = sum(layer.t * layer.size for layer in layers) / k
        pad += max(cached - t_exact * size / k, 0.0) * comb0(config.n_files, level)
        items = [
            (("sub", m), store.subfile_bits(m))
            for m in subset_masks(range(1, config.n_files + 1), level)
        ]
        _place_items(caches, items, layers, k)
    _check_budget(config, caches, pad)
    return caches


# ---------------------------------------------------------------------------
# transcript records

@dataclass(frozen=True)
class Transmission:
    """One on-air unit, for inspection/dumps."""

    kind: str  # "xor" | "random_combo" | "uncoded"
    payload: int
    bit_length: int
    meta: tuple


@dataclass(frozen=True)
class StepRecord:
    """One coded step: every XOR payload sent for one schedule column."""

    scheme: str
    level: int
    layer: LayerSpec
    column: int
    step_items: tuple  # per user, the item it recovers this step
    leader_mask: int
    part_size: int
    payloads: dict  # user-set mask V -> XOR payload

    @property
    def bits(self) -> int:
        return len(self.payloads) * self.part_size

    def transmissions(self):
        for v, p in self.payloads.items():
            yield Transmission("xor", p, self.part_size, (v, self.level, self.column))


@dataclass(frozen=True)
class RandomRecord:
    """Random parity combinations for one demanded item layer."""

    level: int
    layer: LayerSpec
    item: tuple
    requesters: tuple
    combo_seed: int
    n_combos: int
    payload: int  # bit i = value of combination i

    @property
    def bits(self) -> int:
        return self.n_combos

    def transmissions(self):
        yield Transmission(
            "random_combo", self.payload, self.n_combos, (self.item, self.combo_seed)
        )


@dataclass(frozen=True)
class UncodedRecord:
    """Plain bits of one item range (uncoded delivery remainders)."""

    item: tuple
    offset: int
    size: int
    payload: int

    @property
    def bits(self) -> int:
        return self.size

    def transmissions(self):
        yield Transmission("uncoded", self.payload, self.size, (self.item, self.offset))


@dataclass(frozen=True)
class Transcript:
    """Everything the server put on air for one demand vector."""

    scheme: str
    config: LibraryConfig
    seed: int
    sections: tuple
    total_bits: int
    step_counts: tuple
    per_level_bits: dict
    random_overshoot_bits: int
    cache_pad_bits: float

    @property
    def rate(self) -> float:
        return self.total_bits / self.config.file_size

    def transmissions(self):
        for rec in self.sections:
            yield from rec.transmissions()

    def dump(self) -> str:
        lines = [f"scheme={self.scheme} total_bits={self.total_bits} rate={self.rate:.6g}"]
        for tx in self.transmissions():
            lines.append(f"{tx.kind} len={tx.bit_length} meta={tx.meta}")
        return "\n".join(lines)


def _tally(sections) -> int:
    return sum(rec.bits for rec in sections)


# ---------------------------------------------------------------------------
# coded steps

_LABEL_INDEX: dict = {}


def _label_index(n_users: int, t: int) -> dict:
    key = (n_users, t)
    idx = _LABEL_INDEX.get(key)
    if idx is None:
        idx = {lab: i for i, lab in enumerate(part_labels(n_users, t))}
        _LABEL_INDEX[key] = idx
    return idx


def _leaders(step_items) -> int:
    """First user per distinct step-item, as a user-set mask."""
    seen = set()
    mask = 0
    for k, key in enumerate(step_items, start=1):
        if key not in seen:
            seen.add(key)
            mask |= 1 << (k - 1)
    return mask


def _xor_step(n_users, scheme, level, layer, column, step_items, content_of) -> StepRecord:
    """Emit every XOR payload for one step.

    For each user set V of size t+1 touching a leader, the payload XORs,
    over k in V, the part of user k's step-item labeled V minus k; each user
    in V misses exactly its own term and holds the rest in cache.
    """
    t = layer.t
    index = _label_index(n_users, t)
    nparts = comb0(n_users, t)
    if layer.size % nparts:
        raise ValueError(f"layer size {layer.size} not divisible into {nparts} parts")
    psize = layer.size // nparts
    pmask = (1 << psize) - 1
    leader_mask = _leaders(step_items)
    contents = {}
    payloads = {}
    for v in part_labels(n_users, t + 1):
        if not v & leader_mask:
            continue
        y = 0
        vv = v
        while vv:
            b = vv & -vv
            vv ^= b
            key = step_items[b.bit_length() - 1]
            c = contents.get(key)
            if c is None:
                c = contents[key] = content_of(key)
            pos = layer.offset + index[v ^ b] * psize
            y ^= (c >> pos) & pmask
        payloads[v] = y
    return StepRecord(
        scheme=scheme,
        level=level,
        layer=layer,
        column=column,
        step_items=step_items,
        leader_mask=leader_mask,
        part_size=psize,
        payloads=payloads,
    )


def coded_delivery_step(
    config: LibraryConfig,
    schedule: AssignmentSchedule,
    column: int,
    demands,
    store: ContentStore,
    layer: LayerSpec | None = None,
    t: int | None = None,
) -> StepRecord:
    """One coded step over a schedule column (whole-subfile layer unless
    a sublayer is passed)."""
    demands = as_demands(demands, config)
    if layer is None:
        layer = LayerSpec(t=t, offset=0, size=int(config.level_size(schedule.level)))
    pos = {f: i for i, f in enumerate(schedule.window)}
    col = schedule.columns[column]
    step_items = tuple(("sub", col[pos[d]].mask) for d in demands)
    return _xor_step(
        config.n_users,
        "cacc",
        schedule.level,
        layer,
        column,
        step_items,
        lambda key: store.subfile_bits(key[1]),
    )


# ---------------------------------------------------------------------------
# random-combination delivery

class _ComboStream:
    """Deterministic parity-combination stream for one item layer."""

    def __init__(self, seed: int, size: int, content: int):
        self.rng = random.Random(seed)
        self.size = size
        self.content = content
        self.masks: list[int] = []
        self.values: list[int] = []

    def ensure(self, n: int) -> None:
        while len(self.masks) < n:
            m = self.rng.getrandbits(self.size)
            self.masks.append(m)
            self.values.append((m & self.content).bit_count() & 1)


def _combo_seed(store_seed, level, item_mask, layer, attempt: int = 0) -> int:
    return mix_seed(store_seed, level, item_mask, layer.offset, layer.t, attempt)


# A stream whose worst requester needs more than this many rows beyond the
# unknown count is regenerated from the next seed (the record names the seed
# actually used, so decoding is unaffected); keeps declared overshoot tiny.
_EXCESS_RETRY = 3
_STREAM_TRIES = 8


def _need_count(stream: _ComboStream, known_local: int, size: int) -> int:
    """Prefix length of the stream a decoder with these known bits requires."""
    solver = PrefixSolver(size, known_local)
    if solver.unknowns == 0:
        return 0
    stream.ensure(solver.unknowns)
    solver.feed_opening_batch(
        stream.masks[: solver.unknowns], stream.values[: solver.unknowns]
    )
    i = solver.unknowns
    while solver.full_rank_at is None:
        if i >= size + _RANDOM_GUARD:
            raise RuntimeError("combination stream failed to reach full rank")
        stream.ensure(i + 1)
        solver.feed(stream.masks[i], stream.values[i])
        i += 1
    return solver.full_rank_at


def random_delivery(
    config: LibraryConfig,
    level: int,
    layer: LayerSpec,
    subfile_masks,
    demands,
    store: ContentStore,
    caches,
    session: "DeliverySession | None" = None,
):
    """Per demanded subfile, enough random parity bits for every requester.

    Returns (records, overshoot_bits): each record carries exactly as many
    combination values as its worst requester needs; overshoot counts the
    measured excess over the information-theoretic floor (the per-requester
    unknown count).

    At t=0 no requester caches any of the layer, so full rank is reached at
    exactly `size` rows; the layer bits themselves (a degenerate basis of
    combinations) hit that floor with zero overshoot and are shipped plainly.
    """
    demands = as_demands(demands, config)
    session = session if session is not None else DeliverySession()
    size_mask = (1 << layer.size) - 1
    records = []
    overshoot = 0
    for m in sorted(subfile_masks):
        requesters = tuple(
            k for k, d in enumerate(demands, start=1) if m >> (d - 1) & 1
        )
        if not requesters:
            continue
        if layer.t == 0:
            payload = (store.subfile_bits(m) >> layer.offset) & size_mask
            records.append(
                UncodedRecord(
                    item=("sub", m), offset=layer.offset, size=layer.size,
                    payload=payload,
                )
            )
            continue
        known = [
            (caches[k - 1].known_masks.get(("sub", m), 0) >> layer.offset)
            & size_mask
            for k in requesters
        ]
        unknowns = max(layer.size - km.bit_count() for km in known)
        best = None
        for attempt in range(_STREAM_TRIES):
            skey = (level, m, layer.offset, layer.t, attempt)
            stream = session.streams.get(skey)
            if stream is None:
                content = (store.subfile_bits(m) >> layer.offset) & size_mask
                stream = _ComboStream(
                    _combo_seed(store.seed, level, m, layer, attempt),
                    layer.size,
                    content,
                )
                session.streams[skey] = stream
            n = 0
            for k, km in zip(requesters, known):
                nkey = (skey, k)
                need = session.needs.get(nkey)
                if need is None:
                    need = _need_count(stream, km, layer.size)
                    session.needs[nkey] = need
                n = max(n, need)
            if best is None or n < best[0]:
                best = (n, attempt, stream)
            if n - unknowns <= _EXCESS_RETRY:
                break
        n, attempt, stream = best
        if n == 0:
            continue
        stream.ensure(n)
        payload = 0
        for i in range(n):
            payload |= stream.values[i] << i
        overshoot += n - unknowns
        records.append(
            RandomRecord(
                level=level,
                layer=layer,
                item=("sub", m),
                requesters=requesters,
                combo_seed=_combo_seed(store.seed, level, m, layer, attempt),
                n_combos=n,
                payload=payload,
            )
        )
    return records, overshoot


# ---------------------------------------------------------------------------
# full delivery

@dataclass
class DeliverySession:
    """Reusable memo across deliveries with the same config/alloc/store.

    Coded-step payloads depend on the demand vector only through the per-step
    item pattern, and combination streams only on (item, layer), so sweeps
    over many demand vectors share almost all bit-level work.
    """

    schedules: dict = field(default_factory=dict)
    steps: dict = field(default_factory=dict)
    streams: dict = field(default_factory=dict)
    needs: dict = field(default_factory=dict)


def window_for(config: LibraryConfig, demands) -> tuple[int, ...]:
    """Recovery window: all files when N <= K, else the demanded files padded
    with the smallest unrequested indices up to K."""
    demands = as_demands(demands, config)
    n, k = config.n_files, config.n_users
    if n <= k:
        return tuple(range(1, n + 1))
    chosen = sorted(set(demands))
    for i in range(1, n + 1):
        if len(chosen) == k:
            break
        if i not in set(chosen):
            chosen.append(i)
    return tuple(sorted(chosen))


def _pools(config: LibraryConfig, level: int, window):
    """(s, fixed-mask) pairs whose subfiles partition the level's deliverable
    set: fixed parts range over outside-window subsets of each feasible size."""
    outside = [i for i in range(1, config.n_files + 1) if i not in window]
    s_lo = max(level - config.n_users, 0)
    s_hi = max(min(level - 1, config.n_files - config.n_users), 0)
    for s in range(s_lo, s_hi + 1):
        for rbar in subset_masks(outside, s):
            yield s, rbar


def _schedule_for(config, window, rbar, level, fixture, seed, session):
    skey = (window, rbar, level, seed)
    sched = session.schedules.get(skey)
    if sched is None:
        fixed = members_of(rbar)
        if (
            fixture is not None
            and fixture.window == window
            and fixture.fixed_part == fixed
            and fixture.level == level
        ):
            sched = fixture
        else:
            sched = generate_schedule(
                window, fixed, level, seed=mix_seed(seed, level, rbar)
            )
        session.schedules[skey] = sched
    return sched


def _coded_sections(config, level, layer, window, demands, store, fixture, seed, session):
    """All coded steps for one level layer: every fixed-part pool, every column."""
    records = []
    pos = {f: i for i, f in enumerate(window)}
    for _, rbar in _pools(config, level, window):
        sched = _schedule_for(config, window, rbar, level, fixture, seed, session)
        for j, col in enumerate(sched.columns):
            step_items = tuple(("sub", col[pos[d]].mask) for d in demands)
            mkey = (level, layer, step_items)
            rec = session.steps.get(mkey)
            if rec is None:
                rec = _xor_step(
                    config.n_users,
                    "cacc",
                    level,
                    layer,
                    j,
                    step_items,
                    lambda key: store.subfile_bits(key[1]),
                )
                session.steps[mkey] = rec
            records.append(rec if rec.column == j else replace(rec, column=j))
    return records


def deliver(
    config: LibraryConfig,
    alloc: CacheAllocation,
    demands,
    store: ContentStore,
    schedule_source=None,
    seed: int = 0,
    caches=None,
    session: DeliverySession | None = None,
) -> Transcript:
    """Shared-subfile coded delivery for one demand vector.

    Per level and sublayer, runs every coded step over the window's pools,
    then keeps the coded section unless random combinations are provably or
    measurably cheaper (the comparison uses the random floor first, so the
    expensive simulation only runs when it could win).
    """
    demands = as_demands(demands, config)
    check_allocation(config, alloc)
    if caches is None:
        caches = place(config, alloc, store)
    session = session if session is not None else DeliverySession()
    fixture = load_schedule(schedule_source) if schedule_source is not None else None
    k = config.n_users
    window = window_for(config, demands)
    demand_mask = 0
    for d in demands:
        demand_mask |= 1 << (d - 1)

    sections = []
    step_counts = []
    per_level = {}
    overshoot_total = 0
    for level in config.levels():
        size = int(config.subfile_sizes[level - 1])
        if size == 0:
            continue
        level_bits = 0
        t_exact = alloc.fractions[level - 1] * k
        for layer in cacc_layers(config, level, t_exact):
            if layer.t >= k or layer.size == 0:
                continue
            coded = _coded_sections(
                config, level, layer, window, demands, store, fixture, seed, session
            )
            coded_bits = _tally(coded)
            demanded = [
                m
                for m in subset_masks(range(1, config.n_files + 1), level)
                if m & demand_mask
            ]
            unknowns = layer.size - layer.t * layer.size // k
            floor = len(demanded) * unknowns
            chosen = coded
            if coded_bits > floor:
                rand_records, overshoot = random_delivery(
                    config, level, layer, demanded, demands, store, caches, session
                )
                if _tally(rand_records) < coded_bits:
                    chosen = rand_records
                    overshoot_total += overshoot
            sections.extend(chosen)
            if chosen is coded:
                step_counts.extend(len(r.payloads) for r in coded)
            level_bits += _tally(chosen)
        per_level[level] = level_bits
    return Transcript(
        scheme="cacc",
        config=config,
        seed=store.seed,
        sections=tuple(sections),
        total_bits=sum(per_level.values()),
        step_counts=tuple(step_counts),
        per_level_bits=per_level,
        random_overshoot_bits=overshoot_total,
        cache_pad_bits=caches[0].pad_bits if caches else 0.0,
    )


# ---------------------------------------------------------------------------
# decoding (transcript + own cache only)

def file_layout(config: LibraryConfig, file_index: int):
    """(subfile mask, size, offset) triples in canonical file order."""
    if not 1 <= file_index <= config.n_files:
        raise ValueError("file index out of range")
    bit = 1 << (file_index - 1)
    out = []
    offset = 0
    for level in config.levels():
        size = int(config.subfile_sizes[level - 1])
        for m in subset_masks(range(1, config.n_files + 1), level):
            if m & bit:
                out.append((m, size, offset))
                offset += size
    return out


def _family_xor(rec: StepRecord, v: int) -> int:
    """Reconstruct an unsent leaderless payload from sent ones.

    Over the user set C = V plus leaders, the payloads of all size-|V|
    subsets W whose complement in C has pairwise-distinct step-items XOR to
    zero; V is the only such subset avoiding every leader, so it equals the
    XOR of the rest.
    """
    c = v | rec.leader_mask
    want = v.bit_count()
    members = members_of(c)
    y = 0
    for combo in combinations(members, want):
        w = mask_of(combo)
        if w == v:
            continue
        rest = members_of(c & ~w)
        items = [rec.step_items[u - 1] for u in rest]
        if len(set(items)) == len(items):
            y ^= rec.payloads[w]
    return y


def _take_bits(masks, bits, item, pos, width) -> int:
    seg = (1 << width) - 1
    if (masks.get(item, 0) >> pos) & seg != seg:
        raise RuntimeError(f"decoder missing bits of {item} at {pos}")
    return (bits[item] >> pos) & seg


def _decode_step(user: int, rec: StepRecord, masks, bits, n_users: int) -> None:
    t = rec.layer.t
    index = _label_index(n_users, t)
    psize = rec.part_size
    pmask = (1 << psize) - 1
    kbit = 1 << (user - 1)
    item = rec.step_items[user - 1]
    off = rec.layer.offset
    for i, lab in enumerate(part_labels(n_users, t)):
        if lab & kbit:
            continue
        v = lab | kbit
        y = rec.payloads[v] if v & rec.leader_mask else _family_xor(rec, v)
        vv = v & ~kbit
        while vv:
            b = vv & -vv
            vv ^= b
            u = b.bit_length()
            y ^= _take_bits(
                masks, bits, rec.step_items[u - 1], off + index[v ^ b] * psize, psize
            )
        pos = off + i * psize
        masks[item] = masks.get(item, 0) | (pmask << pos)
        bits[item] = bits.get(item, 0) | ((y & pmask) << pos)


def _decode_random(rec: RandomRecord, masks, bits) -> None:
    size = rec.layer.size
    seg = (1 << size) - 1
    off = rec.layer.offset
    item = rec.item
    local_mask = (masks.get(item, 0) >> off) & seg
    local_bits = (bits.get(item, 0) >> off) & seg
    solver = PrefixSolver(size, local_mask)
    rng = random.Random(rec.combo_seed)
    combo_masks = [rng.getrandbits(size) for _ in range(rec.n_combos)]
    # Each payload bit is the parity of the whole combination; fold the
    # receiver's known bits into the right-hand side so the solver works
    # over the unknown positions alone.
    values = [
        ((rec.payload >> i) & 1) ^ ((combo_masks[i] & local_bits).bit_count() & 1)
        for i in range(rec.n_combos)
    ]
    head = min(solver.unknowns, rec.n_combos)
    solver.feed_opening_batch(combo_masks[:head], values[:head])
    for i in range(head, rec.n_combos):
        if solver.full_rank_at is not None:
            break
        solver.feed(combo_masks[i], values[i])
    sol = solver.solution()
    if sol is None:
        raise RuntimeError(f"random section for {item} is not decodable")
    masks[item] = masks.get(item, 0) | (seg << off)
    bits[item] = bits.get(item, 0) | (sol << off)


def decode(user: int, cache: UserCache, transcript: Transcript, demands) -> int:
    """Reconstruct user's demanded file from its cache and the transcript."""
    config = transcript.config
    demands = as_demands(demands, config)
    d = demands[user - 1]
    masks, bits = cache.state()
    for rec in transcript.sections:
        if isinstance(rec, StepRecord):
            _decode_step(user, rec, masks, bits, config.n_users)
        elif isinstance(rec, RandomRecord):
            if user in rec.requesters:
                _decode_random(rec, masks, bits)
        elif isinstance(rec, UncodedRecord):
            item = rec.item
            seg = (1 << rec.size) - 1
            masks[item] = masks.get(item, 0) | (seg << rec.offset)
            bits[item] = bits.get(item, 0) | ((rec.payload & seg) << rec.offset)
        else:  # pragma: no cover - defensive
            raise TypeError(f"unknown record {type(rec)!r}")

    if transcript.scheme == "cicc":
        item = ("file", d)
        full = (1 << int(config.file_size)) - 1
        if masks.get(item, 0) & full != full:
            raise RuntimeError(f"user {user} cannot reconstruct file {d}")
        return bits[item] & full

    out = 0
    for m, size, offset in file_layout(config, d):
        if size == 0:
            continue
        seg = (1 << size) - 1
        item = ("sub", m)
        if masks.get(item, 0) & seg != seg:
            raise RuntimeError(f"user {user} cannot reconstruct subfile {m:b}")
        out |= (bits[item] & seg) << offset
    return out


# ---------------------------------------------------------------------------
# uncoded scheme (prefix caching, plain remainders)

def cauc_place(config: LibraryConfig, alloc: CacheAllocation, store: ContentStore):
    """Every user caches the same per-level prefix of every subfile."""
    check_allocation(config, alloc)
    if not config.is_integral():
        raise ValueError("placement needs integer subfile sizes")
    caches = [UserCache(user=u) for u in range(1, config.n_users + 1)]
    for level in config.levels():
        size = int(config.subfile_sizes[level - 1])
        if size == 0:
            continue
        cached = alloc.fractions[level - 1] * size
        c = int(round(cached))
        if abs(cached - c) > 1e-6:
            raise ValueError(
                f"level {level} prefix {cached} is not a whole number of bits"
            )
        if c == 0:
            continue
        prefix = (1 << c) - 1
        for m in subset_masks(range(1, config.n_files + 1), level):
            content = store.subfile_bits(m) & prefix
            for cache in caches:
                cache.add(("sub", m), prefix, content)
    _check_budget(config, caches, 0.0)
    return caches


def cauc_deliver(
    config: LibraryConfig,
    alloc: CacheAllocation,
    demands,
    store: ContentStore,
    caches=None,
) -> Transcript:
    """Ship, uncoded, the uncached remainder of every demanded subfile."""
    demands = as_demands(demands, config)
    check_allocation(config, alloc)
    if caches is None:
        caches = cauc_place(config, alloc, store)
    demand_mask = 0
    for d in demands:
        demand_mask |= 1 << (d - 1)
    sections = []
    per_level = {}
    for level in config.levels():
        size = int(config.subfile_sizes[level - 1])
        if size == 0:
            continue
        c = int(round(alloc.fractions[level - 1] * size))
        rem = size - c
        level_bits = 0
        if rem:
            for m in subset_masks(range(1, config.n_files + 1), level):
                if not m & demand_mask:
                    continue
                payload = (store.subfile_bits(m) >> c) & ((1 << rem) - 1)
                sections.append(
                    UncodedRecord(item=("sub", m), offset=c, size=rem, payload=payload)
                )
                level_bits += rem
        per_level[level] = level_bits
    return Transcript(
        scheme="cauc",
        config=config,
        seed=store.seed,
        sections=tuple(sections),
        total_bits=sum(per_level.values()),
        step_counts=(),
        per_level_bits=per_level,
        random_overshoot_bits=0,
        cache_pad_bits=0.0,
    )


# ---------------------------------------------------------------------------
# correlation-ignorant scheme (whole files as opaque units)

def _cicc_layers(config: LibraryConfig, cache_capacity: float):
    n, k = config.n_files, config.n_users
    t_exact = k * min(cache_capacity, n) / n
    return _split_layers(
        int(config.file_size), t_exact, cicc_curve(config).envelope, k
    ), t_exact


def cicc_place(config: LibraryConfig, cache_capacity: float, store: ContentStore):
    """Opaque-file placement: split each whole file into labeled parts."""
    if not config.is_integral():
        raise ValueError("placement needs integer subfile sizes")
    k = config.n_users
    layers, t_exact = _cicc_layers(config, cache_capacity)
    caches = [UserCache(user=u) for u in range(1, k + 1)]
    items = [(("file", i), store.file_bits(i)) for i in range(1, config.n_files + 1)]
    _place_items(caches, items, layers, k)
    cached = sum(layer.t * layer.size for layer in layers) / k
    pad = max(cached - t_exact * config.file_size / k, 0.0) * config.n_files
    budget = cache_capacity * config.file_size
    for cache in caches:
        cache.pad_bits = pad
        if cache.total_bits() > budget + pad + 1e-6 * config.file_size + 1e-9:
            raise RuntimeError(f"user {cache.user} over cache budget")
    return caches


def cicc_deliver(
    config: LibraryConfig,
    cache_capacity: float,
    demands,
    store: ContentStore,
    caches=None,
) -> Transcript:
    """Leader-based coded delivery over whole files (single step per layer)."""
    demands = as_demands(demands, config)
    if caches is None:
        caches = cicc_place(config, cache_capacity, store)
    k = config.n_users
    layers, _ = _cicc_layers(config, cache_capacity)
    step_items = tuple(("file", d) for d in demands)
    contents = {("file", i): store.file_bits(i) for i in sorted(set(demands))}
    sections = []
    step_counts = []
    for layer in layers:
        if layer.t >= k or layer.size == 0:
            continue
        rec = _xor_step(k, "cicc", 0, layer, 0, step_items, contents.__getitem__)
        sections.append(rec)
        step_counts.append(len(rec.payloads))
    total = _tally(sections)
    return Transcript(
        scheme="cicc",
        config=config,
        seed=store.seed,
        sections=tuple(sections),
        total_bits=total,
        step_counts=tuple(step_counts),
        per_level_bits={0: total},
        random_overshoot_bits=0,
        cache_pad_bits=caches[0].pad_bits if caches else 0.0,
    )
