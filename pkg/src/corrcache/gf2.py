"""GF(2) linear algebra for random-combination delivery.

Coefficient rows are int bitsets (bit i = coefficient of subfile bit i).
Small systems go through plain int elimination; large ones pack rows into
uint64 words with numpy so thousand-bit systems stay fast.
"""

from __future__ import annotations

import numpy as np


def gf2_rank(rows: list[int], n_cols: int) -> int:
    """Rank of int-bitset rows via Gaussian elimination."""
    work = [r for r in rows if r]
    rank = 0
    row_idx = 0
    for col in range(n_cols):
        pivot = None
        for r in range(row_idx, len(work)):
            if (work[r] >> col) & 1:
                pivot = r
                break
        if pivot is None:
            continue
        work[row_idx], work[pivot] = work[pivot], work[row_idx]
        for r in range(len(work)):
            if r != row_idx and ((work[r] >> col) & 1):
                work[r] ^= work[row_idx]
        rank += 1
        row_idx += 1
        if row_idx == len(work):
            break
    return rank


def _project_rows_packed(masks, rhs_bits, n_bits, unknown_positions):
    """Project masks onto unknown positions and pack, rhs appended as last column.

    Returns (rows, n_aug_cols) where rows is (len(masks), words) uint64 and
    column c corresponds to unknown_positions[c]; the final column is the rhs.
    """
    n_aug = len(unknown_positions) + 1
    nbytes = max(1, (n_bits + 7) // 8)
    buf = b"".join(int(m).to_bytes(nbytes, "little") for m in masks)
    raw = np.frombuffer(buf, dtype=np.uint8).reshape(len(masks), nbytes)
    bits = np.unpackbits(raw, axis=1, bitorder="little")
    cols = bits[:, unknown_positions] if unknown_positions else bits[:, :0]
    rhs = np.asarray(rhs_bits, dtype=np.uint8).reshape(-1, 1)
    aug = np.concatenate([cols, rhs], axis=1)
    pad = (-n_aug) % 64
    if pad:
        aug = np.concatenate(
            [aug, np.zeros((aug.shape[0], pad), dtype=np.uint8)], axis=1
        )
    packed = np.packbits(aug, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64), n_aug


def _unpack_row(row: np.ndarray) -> int:
    return int.from_bytes(row.tobytes(), "little")


class PrefixSolver:
    """Finds how many prefix rows of a coefficient stream a decoder needs.

    The decoder already knows the subfile bits at `known_mask` positions;
    each coefficient row is projected onto the unknown positions and reduced
    (with its right-hand-side bit) into a reduced row-echelon basis.
    `full_rank_at` records the first row count at which the unknowns became
    solvable.
    """

    def __init__(self, n_bits: int, known_mask: int):
        self.n_bits = n_bits
        self.unknown_positions = [
            i for i in range(n_bits) if not (known_mask >> i) & 1
        ]
        self.unknowns = len(self.unknown_positions)
        self.rows_seen = 0
        self.rank = 0
        self.full_rank_at: int | None = 0 if self.unknowns == 0 else None
        # pivot column -> [row bitset over unknown columns, rhs bit]
        self._pivots: dict[int, list] = {}

    def _project(self, mask: int) -> int:
        out = 0
        for c, pos in enumerate(self.unknown_positions):
            out |= ((mask >> pos) & 1) << c
        return out

    def feed(self, mask: int, rhs_bit: int) -> None:
        """Reduce one row into the basis."""
        self.rows_seen += 1
        if self.full_rank_at is not None:
            return
        row = self._project(mask)
        rhs_bit &= 1
        # One pass suffices: basis rows never contain other pivot columns.
        for k, entry in self._pivots.items():
            if (row >> k) & 1:
                row ^= entry[0]
                rhs_bit ^= entry[1]
        if not row:
            return
        top = row.bit_length() - 1
        for entry in self._pivots.values():
            if (entry[0] >> top) & 1:
                entry[0] ^= row
                entry[1] ^= rhs_bit
        self._pivots[top] = [row, rhs_bit]
        self.rank += 1
        if self.rank == self.unknowns:
            self.full_rank_at = self.rows_seen

    def feed_opening_batch(self, masks, rhs_bits) -> None:
        """Bulk-reduce the first rows of the stream (vectorized).

        Must be called before any feed(); with at most `unknowns` rows the
        earliest possible full-rank crossing is at the end of the batch, so
        exact crossing bookkeeping is preserved.
        """
        if self.rows_seen:
            raise RuntimeError("opening batch must come first")
        if len(masks) > self.unknowns:
            raise ValueError("opening batch larger than unknown count")
        if self.unknowns < 192 or len(masks) < 32:
            for m, b in zip(masks, rhs_bits):
                self.feed(m, b)
            return
        rows, n_aug = _project_rows_packed(
            masks, rhs_bits, self.n_bits, self.unknown_positions
        )
        m_rows = rows.shape[0]
        r = 0
        pivcols = []
        for col in range(self.unknowns):
            w, b = divmod(col, 64)
            colbits = (rows[r:, w] >> np.uint64(b)) & np.uint64(1)
            nz = np.nonzero(colbits)[0]
            if nz.size == 0:
                continue
            p = r + int(nz[0])
            if p != r:
                rows[[r, p]] = rows[[p, r]]
            hitters = np.nonzero((rows[:, w] >> np.uint64(b)) & np.uint64(1))[0]
            hitters = hitters[hitters != r]
            if hitters.size:
                rows[hitters] ^= rows[r]
            pivcols.append(col)
            r += 1
            if r == m_rows:
                break
        self._pivots = {}
        unknown_mask = (1 << self.unknowns) - 1
        for i, col in enumerate(pivcols):
            full = _unpack_row(rows[i])
            self._pivots[col] = [full & unknown_mask, (full >> self.unknowns) & 1]
        self.rank = len(pivcols)
        self.rows_seen = len(masks)
        if self.rank == self.unknowns:
            self.full_rank_at = self.rows_seen

    def solution(self) -> int | None:
        """Unknown bits (at their original positions) once solvable, else None."""
        if self.rank < self.unknowns:
            return None
        out = 0
        for col, (row, rhs) in self._pivots.items():
            if rhs:
                out |= 1 << self.unknown_positions[col]
        return out
