"""Finite dyadic tree on [0, 1), step functions and the Haar transform.

Every interval of a depth-``D`` grid is stored in one flat, level-major
array of length ``2**(D+1) - 1``: the interval ``(j, k)`` lives at index
``2**j - 1 + k``.  The first ``2**D - 1`` slots are the non-leaf
intervals, which are exactly the ones that carry a Haar function.
Children of ``(j, k)`` are ``(j+1, 2k)`` (left half) and ``(j+1, 2k+1)``
(right half).

All transforms act on the last axis, so a batch of step functions can be
passed as a 2-D array of shape ``(m, 2**D)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, NamedTuple

import numpy as np

MAX_DEPTH = 24


class GridError(ValueError):
    """Raised for malformed grids or intervals that are not on the grid."""


@dataclass(frozen=True)
class Grid:
    depth: int

    def __post_init__(self):
        if not isinstance(self.depth, (int, np.integer)) or isinstance(self.depth, bool):
            raise GridError(f"depth must be an integer, got {self.depth!r}")
        if not 1 <= self.depth <= MAX_DEPTH:
            raise GridError(f"depth must lie in [1, {MAX_DEPTH}], got {self.depth}")

    @property
    def n_cells(self) -> int:
        return 1 << self.depth

    @property
    def cell_width(self) -> float:
        return 1.0 / self.n_cells

    @property
    def n_intervals(self) -> int:
        return (1 << (self.depth + 1)) - 1

    @property
    def n_nonleaf(self) -> int:
        return self.n_cells - 1

    def intervals(self, *, leaves: bool = True) -> Iterator["DyadicInterval"]:
        """Level-major enumeration, root first."""
        top = self.depth + 1 if leaves else self.depth
        for j in range(top):
            for k in range(1 << j):
                yield DyadicInterval(j, k)

    def check(self, interval: "DyadicInterval") -> "DyadicInterval":
        j, k = interval
        if not (0 <= j <= self.depth and 0 <= k < (1 << j)):
            raise GridError(f"{interval} is not an interval of the depth-{self.depth} grid")
        return interval

    def interval_at(self, index: int) -> "DyadicInterval":
        """Inverse of :meth:`DyadicInterval.index`."""
        if not 0 <= index < self.n_intervals:
            raise GridError(f"flat index {index} out of range")
        j = int(index + 1).bit_length() - 1
        return DyadicInterval(j, index - (1 << j) + 1)

    def level_lengths(self) -> np.ndarray:
        """|I| for every interval, flat level-major order."""
        return np.concatenate([np.full(1 << j, 2.0 ** -j) for j in range(self.depth + 1)])

    def level_of(self) -> np.ndarray:
        return np.concatenate([np.full(1 << j, j, dtype=np.int64) for j in range(self.depth + 1)])


def build_grid(depth: int) -> Grid:
    return Grid(depth)


class DyadicInterval(NamedTuple):
    level: int
    position: int

    @property
    def length(self) -> float:
        return 2.0 ** -self.level

    @property
    def left(self) -> float:
        return self.position * self.length

    @property
    def right(self) -> float:
        return (self.position + 1) * self.length

    @property
    def index(self) -> int:
        return (1 << self.level) - 1 + self.position

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        """(I-, I+): left half first."""
        return (DyadicInterval(self.level + 1, 2 * self.position),
                DyadicInterval(self.level + 1, 2 * self.position + 1))

    def parent(self) -> "DyadicInterval":
        if self.level == 0:
            raise GridError("the root has no parent")
        return DyadicInterval(self.level - 1, self.position // 2)

    def contains(self, other: "DyadicInterval") -> bool:
        if other.level < self.level:
            return False
        return other.position >> (other.level - self.level) == self.position

    def cell_slice(self, grid: Grid) -> slice:
        """Leaf cells covered by this interval."""
        grid.check(self)
        span = 1 << (grid.depth - self.level)
        return slice(self.position * span, (self.position + 1) * span)

    def __str__(self):
        return f"[{self.left:g},{self.right:g})"


# --- tree kernels on raw arrays -------------------------------------------------

def tree_means(values: np.ndarray) -> np.ndarray:
    """Averages over every dyadic interval, flat level-major along the last axis."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    if n < 1 or n & (n - 1):
        raise GridError(f"length {n} is not a power of two")
    levels = [values]
    cur = values
    while cur.shape[-1] > 1:
        cur = 0.5 * (cur[..., 0::2] + cur[..., 1::2])
        levels.append(cur)
    return np.concatenate(levels[::-1], axis=-1)


def level_view(tree: np.ndarray, j: int) -> np.ndarray:
    """Slice of a flat tree array belonging to level ``j``."""
    return tree[..., (1 << j) - 1:(1 << (j + 1)) - 1]


def tree_deltas(tree: np.ndarray) -> np.ndarray:
    """<f>_{I+} - <f>_{I-} for the non-leaf intervals, from a tree of averages."""
    n_nonleaf = (tree.shape[-1] - 1) // 2
    children = tree[..., 1:]
    return (children[..., 1::2] - children[..., 0::2])[..., :n_nonleaf]


def subtree_sums(nonleaf: np.ndarray, depth: int) -> np.ndarray:
    """Sum over J ⊆ I of ``nonleaf[J]`` for every interval I (leaves get 0).

    One bottom-up pass; returns a flat tree of length ``2**(depth+1) - 1``.
    """
    nonleaf = np.asarray(nonleaf, dtype=float)
    out = np.zeros(nonleaf.shape[:-1] + ((1 << (depth + 1)) - 1,))
    below = np.zeros(nonleaf.shape[:-1] + (1 << depth,))
    for j in range(depth - 1, -1, -1):
        own = level_view(nonleaf, j)
        cur = own + below[..., 0::2] + below[..., 1::2]
        level_view(out, j)[...] = cur
        below = cur
    return out


def expand_to_cells(level_values: np.ndarray, depth: int, j: int) -> np.ndarray:
    """Broadcast per-interval values at level j down to the leaf cells."""
    return np.repeat(level_values, 1 << (depth - j), axis=-1)


def haar_coefficients(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(mean, c) with c_I = <f, h_I> for non-leaf I in flat order.  O(n)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    depth = n.bit_length() - 1
    coeffs = np.empty(values.shape[:-1] + (n - 1,))
    cur = values
    for j in range(depth - 1, -1, -1):
        left, right = cur[..., 0::2], cur[..., 1::2]
        # <f,h_I> = sqrt|I| (<f>_{I+} - <f>_{I-}) / 2 with |I| = 2^-j
        level_view(coeffs, j)[...] = (right - left) * (0.5 * 2.0 ** (-j / 2))
        cur = 0.5 * (left + right)
    return cur[..., 0], coeffs


def haar_synthesis(mean, coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`haar_coefficients`; ``mean`` may be a scalar or array."""
    coeffs = np.asarray(coeffs, dtype=float)
    n = coeffs.shape[-1] + 1
    depth = n.bit_length() - 1
    cur = np.broadcast_to(np.asarray(mean, dtype=float), coeffs.shape[:-1])[..., None]
    for j in range(depth):
        half = level_view(coeffs, j) * 2.0 ** (j / 2)  # Δ_I / 2
        nxt = np.empty(cur.shape[:-1] + (2 * cur.shape[-1],))
        nxt[..., 0::2] = cur - half
        nxt[..., 1::2] = cur + half
        cur = nxt
    return cur


# --- value types ----------------------------------------------------------------

def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Piecewise constant function on the leaf cells of ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.shape != (self.grid.n_cells,):
            raise GridError(f"expected {self.grid.n_cells} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("step function values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "StepFunction":
        """Sample ``fn`` at cell midpoints."""
        x = (np.arange(grid.n_cells) + 0.5) * grid.cell_width
        return cls(grid, fn(x))

    @classmethod
    def indicator(cls, grid: Grid, interval: DyadicInterval) -> "StepFunction":
        vals = np.zeros(grid.n_cells)
        vals[interval.cell_slice(grid)] = 1.0
        return cls(grid, vals)

    @classmethod
    def haar(cls, grid: Grid, interval: DyadicInterval) -> "StepFunction":
        if interval.level >= grid.depth:
            raise GridError("leaf intervals carry no Haar function on this grid")
        vals = np.zeros(grid.n_cells)
        sl = interval.cell_slice(grid)
        half = (sl.stop - sl.start) // 2
        amp = 1.0 / np.sqrt(interval.length)
        vals[sl.start:sl.start + half] = -amp
        vals[sl.start + half:sl.stop] = amp
        return cls(grid, vals)

    @cached_property
    def tree(self) -> np.ndarray:
        """Averages over every interval (flat, level-major)."""
        out = tree_means(self.values)
        out.flags.writeable = False
        return out

    @cached_property
    def deltas(self) -> np.ndarray:
        out = tree_deltas(self.tree)
        out.flags.writeable = False
        return out

    def integral(self) -> float:
        return float(self.values.mean())

    def inner(self, other: "StepFunction") -> float:
        return float(np.dot(self.values, other.values) * self.grid.cell_width)

    def norm(self, weight: "StepFunction | None" = None) -> float:
        """L^2 norm, optionally with respect to the measure ``weight dx``."""
        sq = self.values ** 2 if weight is None else self.values ** 2 * weight.values
        return float(np.sqrt(sq.mean()))

    def _check_same_grid(self, other):
        if other.grid != self.grid:
            raise GridError("step functions live on different grids")

    def __add__(self, other):
        if isinstance(other, StepFunction):
            self._check_same_grid(other)
            return StepFunction(self.grid, self.values + other.values)
        return StepFunction(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, StepFunction):
            self._check_same_grid(other)
            return StepFunction(self.grid, self.values - other.values)
        return StepFunction(self.grid, self.values - other)

    def __mul__(self, other):
        if isinstance(other, StepFunction):
            self._check_same_grid(other)
            return StepFunction(self.grid, self.values * other.values)
        return StepFunction(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return StepFunction(self.grid, -self.values)

    def __repr__(self):
        return f"{type(self).__name__}(depth={self.grid.depth}, values={self.values!r})"


@dataclass(frozen=True, eq=False)
class HaarExpansion:
    grid: Grid
    mean: float
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = _frozen(self.coefficients)
        if coeffs.shape != (self.grid.n_nonleaf,):
            raise GridError(f"expected {self.grid.n_nonleaf} coefficients, got {coeffs.shape}")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "mean", float(self.mean))

    def coefficient(self, interval: DyadicInterval) -> float:
        if interval.level >= self.grid.depth:
            raise GridError("leaf intervals carry no Haar coefficient")
        return float(self.coefficients[self.grid.check(interval).index])

    def energy(self) -> float:
        """mean^2 + sum c_I^2, which equals the integral of f^2 (Plancherel)."""
        return self.mean ** 2 + float(np.dot(self.coefficients, self.coefficients))


def average(f: StepFunction, interval: DyadicInterval) -> float:
    """Integral average of ``f`` over ``interval`` (exact for step functions)."""
    f.grid.check(interval)
    return float(f.tree[interval.index])


def delta(f: StepFunction, interval: DyadicInterval) -> float:
    """<f>_{I+} - <f>_{I-}."""
    f.grid.check(interval)
    if interval.level >= f.grid.depth:
        raise GridError(f"{interval} is a leaf of the depth-{f.grid.depth} grid")
    return float(f.deltas[interval.index])


def haar_transform(f: StepFunction) -> HaarExpansion:
    mean, coeffs = haar_coefficients(f.values)
    return HaarExpansion(f.grid, float(mean), coeffs)


def inverse_haar(e: HaarExpansion, grid: Grid | None = None) -> StepFunction:
    if grid is not None and grid != e.grid:
        raise GridError("expansion belongs to a different grid")
    return StepFunction(e.grid, haar_synthesis(e.mean, e.coefficients))
