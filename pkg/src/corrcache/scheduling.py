"""Delivery-step assignment schedules.

A schedule fixes, for each delivery step, which shared subfile every window
file is recovered through.  The pool for a (window, fixed_part, level) triple
is every level-sized index set that contains the fixed part and otherwise
stays inside the window; each window member must see each of its pool
subfiles in exactly one column.  Columns are built greedily: blocks of
``level - |fixed_part|`` members take one unused subfile each, a short
remainder block borrows a subfile whose leftover members carry over to the
head of the next column with that same subfile.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path

from .combinat import comb0, mask_of, members_of, mix_seed, subset_masks
from .model import SubfileId

__all__ = [
    "AssignmentSchedule",
    "EXAMPLE1_TEXT",
    "generate_schedule",
    "load_schedule",
    "pool_subfiles",
    "schedule_from_text",
    "schedule_to_text",
    "step_demands",
    "validate_schedule",
]


@dataclass(frozen=True)
class AssignmentSchedule:
    """Per-step subfile assignments for every file in the window.

    columns[j][i] is the subfile the i-th window member (ascending order)
    recovers at step j.
    """

    window: tuple[int, ...]
    fixed_part: tuple[int, ...]
    level: int
    columns: tuple[tuple[SubfileId, ...], ...]

    @property
    def block_size(self) -> int:
        return self.level - len(self.fixed_part)

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    def member_index(self, file_index: int) -> int:
        return self.window.index(file_index)

    def entry(self, file_index: int, column: int) -> SubfileId:
        return self.columns[column][self.member_index(file_index)]


def pool_subfiles(window, fixed_part, level: int) -> list[SubfileId]:
    """All level-sized index sets containing fixed_part with the rest in window."""
    fixed_mask = mask_of(fixed_part)
    block = level - len(tuple(fixed_part))
    return [
        SubfileId(fixed_mask | bmask) for bmask in subset_masks(window, block)
    ]


def _check_shape(window, fixed_part, level: int) -> tuple[tuple[int, ...], tuple[int, ...], int]:
    window = tuple(sorted(window))
    fixed_part = tuple(sorted(fixed_part))
    if not window:
        raise ValueError("window must be non-empty")
    if set(window) & set(fixed_part):
        raise ValueError("window and fixed_part must be disjoint")
    block = level - len(fixed_part)
    if not 1 <= block <= len(window):
        raise ValueError(
            f"level {level} with {len(fixed_part)} fixed indices needs blocks "
            f"of {block}, outside [1, {len(window)}]"
        )
    return window, fixed_part, block


def generate_schedule(
    window, fixed_part=(), level: int = 1, seed: int = 0, restarts: int = 1000
) -> AssignmentSchedule:
    """Build a valid schedule with seeded greedy attempts, then backtracking.

    Raises RuntimeError only if even exhaustive backtracking fails (no valid
    schedule exists for the shape); every returned schedule passes
    validate_schedule.
    """
    window, fixed_part, block = _check_shape(window, fixed_part, level)
    pool = subset_masks(window, block)
    n_columns = comb0(len(window) - 1, block - 1)
    window_mask = mask_of(window)

    columns = None
    for attempt in range(restarts):
        rng = random.Random(mix_seed(seed, attempt))
        columns = _greedy_columns(pool, window_mask, block, n_columns, rng)
        if columns is not None:
            break
    if columns is None:
        columns = _backtrack_columns(pool, window_mask, block, n_columns)
    if columns is None:
        raise RuntimeError(
            f"no schedule found for window={window} fixed={fixed_part} level={level}"
        )

    fixed_mask = mask_of(fixed_part)
    schedule = AssignmentSchedule(
        window=window,
        fixed_part=fixed_part,
        level=level,
        columns=tuple(
            tuple(SubfileId(fixed_mask | col[i]) for i in window)
            for col in columns
        ),
    )
    violations = validate_schedule(schedule)
    if violations:
        raise RuntimeError(f"generated schedule invalid: {violations[0]}")
    return schedule


def _greedy_columns(pool, window_mask, block, n_columns, rng):
    """One seeded greedy pass; returns member->block-mask dicts or None on stall."""
    unused = set(pool)
    carry_block = 0
    carry_members = 0
    columns = []
    for _ in range(n_columns):
        col = {}
        remaining = window_mask
        if carry_members:
            for i in members_of(carry_members):
                col[i] = carry_block
            remaining &= ~carry_members
            carry_block = carry_members = 0
        while remaining:
            r = remaining.bit_count()
            if r >= block:
                choices = sorted(b for b in unused if b & ~remaining == 0)
                if not choices:
                    return None
                pick = choices[rng.randrange(len(choices))]
                for i in members_of(pick):
                    col[i] = pick
                remaining &= ~pick
            else:
                choices = sorted(b for b in unused if remaining & ~b == 0)
                if not choices:
                    return None
                pick = choices[rng.randrange(len(choices))]
                for i in members_of(remaining):
                    col[i] = pick
                carry_block = pick
                carry_members = pick & ~remaining
                remaining = 0
            unused.discard(pick)
        columns.append(col)
    if unused or carry_members:
        return None
    return columns


def _backtrack_columns(pool, window_mask, block, n_columns):
    """Exhaustive ordered search over block choices; None iff none exists."""
    columns = []
    col = {}

    def fill(remaining, unused, carry_block, carry_members):
        if not remaining:
            columns.append(dict(col))
            if len(columns) == n_columns:
                if not unused and not carry_members:
                    return True
            else:
                nxt = window_mask
                extra = {}
                if carry_members:
                    for i in members_of(carry_members):
                        extra[i] = carry_block
                    nxt &= ~carry_members
                col_backup = dict(col)
                col.clear()
                col.update(extra)
                if fill(nxt, unused, 0, 0):
                    return True
                col.clear()
                col.update(col_backup)
            columns.pop()
            return False
        r = remaining.bit_count()
        if r >= block:
            for b in sorted(unused):
                if b & ~remaining:
                    continue
                for i in members_of(b):
                    col[i] = b
                if fill(remaining & ~b, unused - {b}, carry_block, carry_members):
                    return True
                for i in members_of(b):
                    del col[i]
        else:
            for b in sorted(unused):
                if remaining & ~b:
                    continue
                for i in members_of(remaining):
                    col[i] = b
                if fill(0, unused - {b}, b, b & ~remaining):
                    return True
                for i in members_of(remaining):
                    del col[i]
        return False

    if fill(window_mask, frozenset(pool), 0, 0):
        return columns
    return None


def validate_schedule(schedule: AssignmentSchedule) -> list[str]:
    """Check membership, coverage, width, and column count; [] iff valid."""
    violations = []
    window, fixed = schedule.window, schedule.fixed_part
    window_mask, fixed_mask = mask_of(window), mask_of(fixed)
    block = schedule.level - len(fixed)
    w = len(window)

    expected_cols = comb0(w - 1, block - 1)
    if schedule.n_columns != expected_cols:
        violations.append(
            f"column count {schedule.n_columns} != {expected_cols}"
        )

    for j, col in enumerate(schedule.columns, start=1):
        if len(col) != w:
            violations.append(f"column {j}: {len(col)} entries for {w} members")
            continue
        for i, sub in zip(window, col):
            m = sub.mask
            if not m & (1 << (i - 1)):
                violations.append(f"column {j}: entry for {i} lacks {i}")
            if fixed_mask & ~m:
                violations.append(f"column {j}: entry for {i} lacks fixed part")
            if m & ~fixed_mask & ~window_mask:
                violations.append(f"column {j}: entry for {i} leaves window")
            if sub.level != schedule.level:
                violations.append(f"column {j}: entry for {i} not level {schedule.level}")
        distinct = len({sub.mask for sub in col})
        cap = math.ceil(w / block) + 1
        if distinct > cap:
            violations.append(f"column {j}: {distinct} distinct subfiles > {cap}")
        if w % block == 0 and distinct != w // block:
            violations.append(
                f"column {j}: {distinct} distinct subfiles != {w // block}"
            )

    for idx, i in enumerate(window):
        seen = [col[idx].mask for col in schedule.columns]
        want = {
            fixed_mask | b
            for b in subset_masks(window, block)
            if b & (1 << (i - 1))
        }
        if len(seen) != len(set(seen)) or set(seen) != want:
            violations.append(f"member {i}: coverage broken")
    return violations


def step_demands(schedule: AssignmentSchedule, demands, column: int) -> tuple[SubfileId, ...]:
    """Subfile each user recovers at this step: its demand's schedule entry."""
    out = []
    for d in demands:
        if d not in schedule.window:
            raise ValueError(f"demand {d} outside schedule window")
        out.append(schedule.entry(d, column))
    return tuple(out)


# ---------------------------------------------------------------------------
# text fixtures

def schedule_to_text(schedule: AssignmentSchedule) -> str:
    lines = [
        "# window: " + ",".join(map(str, schedule.window)),
        "# fixed: " + (",".join(map(str, schedule.fixed_part)) or "-"),
        f"# level: {schedule.level}",
    ]
    for col in schedule.columns:
        lines.append(" ".join(",".join(map(str, s.members)) for s in col))
    return "\n".join(lines) + "\n"


def schedule_from_text(text: str) -> AssignmentSchedule:
    window = fixed = None
    level = None
    columns = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, _, value = body.partition(":")
            key, value = key.strip().lower(), value.strip()
            if key == "window":
                window = tuple(int(x) for x in value.split(",") if x)
            elif key == "fixed":
                fixed = () if value in ("", "-") else tuple(
                    int(x) for x in value.split(",")
                )
            elif key == "level":
                level = int(value)
            continue
        columns.append(
            tuple(
                SubfileId.of(*(int(x) for x in entry.split(",")))
                for entry in line.split()
            )
        )
    if window is None or fixed is None or level is None or not columns:
        raise ValueError("fixture needs window/fixed/level headers and columns")
    return AssignmentSchedule(
        window=tuple(sorted(window)),
        fixed_part=tuple(sorted(fixed)),
        level=level,
        columns=tuple(columns),
    )


EXAMPLE1_TEXT = """\
# window: 1,2,3,4,5
# fixed: -
# level: 2
1,2 1,2 3,4 3,4 1,5
1,5 2,3 2,3 4,5 4,5
1,3 2,5 1,3 2,4 2,5
1,4 2,4 3,5 1,4 3,5
"""


def load_schedule(source) -> AssignmentSchedule:
    """Load a fixture: the built-in name "example1" or a text file path."""
    if isinstance(source, AssignmentSchedule):
        return source
    if source == "example1":
        return schedule_from_text(EXAMPLE1_TEXT)
    return schedule_from_text(Path(source).read_text())
