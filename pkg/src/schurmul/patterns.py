"""Support-set combinatorics for idempotent Schur multipliers.

A pattern is a finite 0/1 matrix identified with its set of cells.  The
central predicate is the 3-of-4 property: whenever three corners of a 2x2
subgrid lie in the pattern, so does the fourth.  Patterns with this
property are exactly the disjoint unions of combinatorial rectangles, and
exactly the patterns closed under the triple-product rule
(i,j), (k,j), (k,n) in E  =>  (i,n) in E.

Storage is a packed bit-grid (one integer bitmask per row), which makes
the pairwise row tests O(rows^2) word operations: a pattern has 3-of-4
iff every two rows have column sets that are either disjoint or equal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

__all__ = [
    "PatternSet",
    "RectanglePartition",
    "NotThreeOfFourError",
    "has_three_of_four",
    "find_three_of_four_violation",
    "decompose_rectangles",
    "tro_closure",
    "is_tro_closed",
    "compose_patterns",
]


class NotThreeOfFourError(ValueError):
    """Pattern violates the 3-of-4 property.

    Carries a witness quadruple (i1, i2, j1, j2): the cells (i1, j1),
    (i1, j2), (i2, j1) are present and (i2, j2) is missing.
    """

    def __init__(self, witness):
        self.witness = tuple(int(v) for v in witness)
        i1, i2, j1, j2 = self.witness
        super().__init__(
            f"3-of-4 violated: cells ({i1},{j1}), ({i1},{j2}), ({i2},{j1}) "
            f"present but ({i2},{j2}) missing"
        )


@dataclass(frozen=True)
class PatternSet:
    """A subset of {0..rows-1} x {0..cols-1}, stored as one bitmask per row."""

    rows: int
    cols: int
    row_bits: tuple[int, ...]

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid must be positive, got {self.rows}x{self.cols}")
        if len(self.row_bits) != self.rows:
            raise ValueError("row_bits length must equal rows")
        mask = (1 << self.cols) - 1
        for i, bits in enumerate(self.row_bits):
            if bits < 0 or bits & ~mask:
                raise ValueError(f"row {i} has cells out of range 0..{self.cols - 1}")

    @classmethod
    def from_cells(cls, rows: int, cols: int, cells: Iterable[tuple[int, int]]) -> "PatternSet":
        bits = [0] * rows
        for i, j in cells:
            i, j = int(i), int(j)
            if not (0 <= i < rows and 0 <= j < cols):
                raise ValueError(f"cell ({i},{j}) outside {rows}x{cols} grid")
            bits[i] |= 1 << j
        return cls(rows, cols, tuple(bits))

    @classmethod
    def from_bits(cls, rows: int, cols: int, packed: int) -> "PatternSet":
        """Unpack a row-major integer: bit i*cols + j is cell (i, j)."""
        if packed < 0 or packed >> (rows * cols):
            raise ValueError("packed value out of range for grid")
        mask = (1 << cols) - 1
        return cls(rows, cols, tuple((packed >> (i * cols)) & mask for i in range(rows)))

    @classmethod
    def from_matrix(cls, a, tol: float = 0.5) -> "PatternSet":
        """Pattern of entries with modulus above `tol`."""
        arr = np.asarray(a)
        if arr.ndim != 2:
            raise ValueError("expected a 2-d array")
        rows, cols = arr.shape
        bits = []
        for i in range(rows):
            b = 0
            for j in range(cols):
                if abs(arr[i, j]) > tol:
                    b |= 1 << j
            bits.append(b)
        return cls(rows, cols, tuple(bits))

    @classmethod
    def empty(cls, rows: int, cols: int) -> "PatternSet":
        return cls(rows, cols, (0,) * rows)

    @classmethod
    def full(cls, rows: int, cols: int) -> "PatternSet":
        return cls(rows, cols, ((1 << cols) - 1,) * rows)

    @property
    def cells(self) -> frozenset[tuple[int, int]]:
        return frozenset(self)

    def packed(self) -> int:
        """Row-major integer encoding: bit i*cols + j is cell (i, j)."""
        out = 0
        for i, bits in enumerate(self.row_bits):
            out |= bits << (i * self.cols)
        return out

    def to_matrix(self) -> np.ndarray:
        """The 0/1 indicator as a dense complex matrix."""
        out = np.zeros((self.rows, self.cols), dtype=np.complex128)
        for i, j in self:
            out[i, j] = 1.0
        return out

    def __len__(self) -> int:
        return sum(bits.bit_count() for bits in self.row_bits)

    def __contains__(self, cell) -> bool:
        i, j = cell
        return 0 <= i < self.rows and 0 <= j < self.cols and bool(self.row_bits[i] >> j & 1)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        for i, bits in enumerate(self.row_bits):
            while bits:
                low = bits & -bits
                yield (i, low.bit_length() - 1)
                bits ^= low

    def __le__(self, other: "PatternSet") -> bool:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("patterns live on different grids")
        return all(a & ~b == 0 for a, b in zip(self.row_bits, other.row_bits))


@dataclass(frozen=True)
class RectanglePartition:
    """Disjoint rectangles I_t x J_t whose union is a pattern on a rows x cols grid."""

    rows: int
    cols: int
    blocks: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    def __post_init__(self):
        seen_rows: set[int] = set()
        seen_cols: set[int] = set()
        for ridx, cidx in self.blocks:
            if not ridx or not cidx:
                raise ValueError("blocks must have nonempty row and column sets")
            if seen_rows & set(ridx) or seen_cols & set(cidx):
                raise ValueError("block row/column sets must be pairwise disjoint")
            seen_rows.update(ridx)
            seen_cols.update(cidx)
        if any(r < 0 or r >= self.rows for r in seen_rows) or any(
            c < 0 or c >= self.cols for c in seen_cols
        ):
            raise ValueError("block indices out of range")

    def reassemble(self) -> PatternSet:
        """The union of the blocks as a PatternSet."""
        cells = [(i, j) for ridx, cidx in self.blocks for i in ridx for j in cidx]
        return PatternSet.from_cells(self.rows, self.cols, cells)

    def __len__(self) -> int:
        return len(self.blocks)


def find_three_of_four_violation(pattern: PatternSet) -> Optional[tuple[int, int, int, int]]:
    """First violating quadruple (i1, i2, j1, j2) in row order, or None.

    The returned quadruple has (i1, j1), (i1, j2), (i2, j1) present and
    (i2, j2) missing.
    """
    bits = pattern.row_bits
    m = pattern.rows
    for a in range(m):
        for b in range(a + 1, m):
            common = bits[a] & bits[b]
            if not common or bits[a] == bits[b]:
                continue
            j1 = (common & -common).bit_length() - 1
            only_a = bits[a] & ~bits[b]
            if only_a:
                j2 = (only_a & -only_a).bit_length() - 1
                return (a, b, j1, j2)
            only_b = bits[b] & ~bits[a]
            j2 = (only_b & -only_b).bit_length() - 1
            return (b, a, j1, j2)
    return None


def has_three_of_four(pattern: PatternSet) -> bool:
    """Whether every 2x2 subgrid with three cells present contains the fourth.

    Equivalent formulation used here: any two rows have column sets that
    are disjoint or identical.
    """
    return find_three_of_four_violation(pattern) is None


def decompose_rectangles(pattern: PatternSet) -> RectanglePartition:
    """Partition a 3-of-4 pattern into disjoint rectangles I_t x J_t.

    Rows are grouped by chains of shared columns (union-find); each group's
    column set is the union of its rows' columns.  Blocks are emitted in
    ascending order of least row index.  Raises NotThreeOfFourError (with a
    witness quadruple) when the pattern lacks the 3-of-4 property.
    """
    witness = find_three_of_four_violation(pattern)
    if witness is not None:
        raise NotThreeOfFourError(witness)
    bits = pattern.row_bits
    m = pattern.rows

    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a in range(m):
        if not bits[a]:
            continue
        for b in range(a + 1, m):
            if bits[a] & bits[b]:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    groups: dict[int, list[int]] = {}
    for i in range(m):
        if bits[i]:
            groups.setdefault(find(i), []).append(i)

    blocks = []
    for root in sorted(groups):
        ridx = tuple(sorted(groups[root]))
        colmask = 0
        for i in ridx:
            colmask |= bits[i]
        cidx = tuple(j for j in range(pattern.cols) if colmask >> j & 1)
        blocks.append((ridx, cidx))
    return RectanglePartition(pattern.rows, pattern.cols, tuple(blocks))


def tro_closure(pattern: PatternSet) -> PatternSet:
    """Smallest superset closed under (i,j), (k,j), (k,n) => (i,n).

    Computed by iterating the rule to a fixed point: whenever two rows
    share a column, each absorbs the other's columns.
    """
    bits = list(pattern.row_bits)
    m = pattern.rows
    changed = True
    while changed:
        changed = False
        for a in range(m):
            for b in range(m):
                if a != b and bits[a] & bits[b] and bits[a] | bits[b] != bits[a]:
                    bits[a] |= bits[b]
                    changed = True
    return PatternSet(pattern.rows, pattern.cols, tuple(bits))


def is_tro_closed(pattern: PatternSet) -> bool:
    """Whether the pattern equals its own triple-product closure."""
    return tro_closure(pattern) == pattern


def compose_patterns(left: PatternSet, right: PatternSet) -> PatternSet:
    """Relation composition: (i,k) present iff some j has (i,j) in left, (j,k) in right."""
    if left.cols != right.rows:
        raise ValueError(
            f"dimension mismatch: left is {left.rows}x{left.cols}, "
            f"right is {right.rows}x{right.cols}"
        )
    out = []
    for i in range(left.rows):
        jbits = left.row_bits[i]
        acc = 0
        while jbits:
            low = jbits & -jbits
            acc |= right.row_bits[low.bit_length() - 1]
            jbits ^= low
        out.append(acc)
    return PatternSet(left.rows, right.cols, tuple(out))
