"""Haar multipliers, positive dyadic operators and the weighted maximal function.

The multipliers below are applied in O(n): analysis, a per-interval
multiplication of the Haar coefficients, synthesis.  Private ``_*_values``
helpers act on raw arrays whose last axis holds cell values, so the same
code serves single functions, batches and matrix assembly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .core import (
    DyadicInterval,
    Grid,
    GridError,
    StepFunction,
    expand_to_cells,
    haar_coefficients,
    haar_synthesis,
    level_view,
    tree_means,
)
from .weights import Weight


@dataclass(frozen=True, eq=False)
class SignPattern:
    """σ_I = ±1 on the non-leaf intervals, flat level-major order."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n_nonleaf,):
            raise GridError(f"expected {self.grid.n_nonleaf} signs, got shape {vals.shape}")
        if not np.all(np.abs(vals) == 1.0):
            raise ValueError("signs must be exactly +1 or -1")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def ones(cls, grid: Grid) -> "SignPattern":
        return cls(grid, np.ones(grid.n_nonleaf))

    @classmethod
    def random(cls, grid: Grid, rng: np.random.Generator) -> "SignPattern":
        return cls(grid, rng.choice([-1.0, 1.0], size=grid.n_nonleaf))

    @classmethod
    def from_bits(cls, grid: Grid, bits: int) -> "SignPattern":
        """Bit i set means σ = -1 on the interval with flat index i."""
        idx = np.arange(grid.n_nonleaf)
        return cls(grid, np.where((bits >> idx) & 1, -1.0, 1.0))

    def __getitem__(self, interval: DyadicInterval) -> float:
        return float(self.values[interval.index])


def _signs(sigma, grid: Grid) -> np.ndarray:
    if sigma is None:
        return np.ones(grid.n_nonleaf)
    if isinstance(sigma, SignPattern):
        if sigma.grid != grid:
            raise GridError("sign pattern belongs to a different grid")
        return sigma.values
    return np.broadcast_to(np.asarray(sigma, dtype=float), (grid.n_nonleaf,))


def _symbol(w: Weight, t: float, sigma) -> np.ndarray:
    """σ_I / <w>_I^t on the non-leaf intervals."""
    s = _signs(sigma, w.grid)
    if t == 0:
        return np.array(s, dtype=float)
    return s * w.tree[: w.grid.n_nonleaf] ** (-t)


# --- weighted Haar functions --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WeightedHaarCoeffs:
    """α_I^v and β_I^v on every non-leaf interval."""

    grid: Grid
    alpha: np.ndarray
    beta: np.ndarray

    def __getitem__(self, interval: DyadicInterval) -> tuple[float, float]:
        i = interval.index
        return float(self.alpha[i]), float(self.beta[i])


def _children_means(tree: np.ndarray, n_nonleaf: int) -> tuple[np.ndarray, np.ndarray]:
    children = tree[1:]
    return children[0::2][:n_nonleaf], children[1::2][:n_nonleaf]


def weighted_haar_split(v: Weight) -> WeightedHaarCoeffs:
    """α_I^v = sqrt(<v>_{I+}<v>_{I-}/<v>_I), β_I^v = Δ_I v / (2<v>_I)."""
    nl = v.grid.n_nonleaf
    lo, hi = _children_means(v.tree, nl)
    mean = v.tree[:nl]
    return WeightedHaarCoeffs(v.grid, np.sqrt(hi * lo / mean), (hi - lo) / (2.0 * mean))


def haar_split(v: Weight, interval: DyadicInterval) -> tuple[float, float]:
    v.grid.check(interval)
    if interval.level >= v.grid.depth:
        raise GridError(f"{interval} is a leaf: no Haar function on this grid")
    return weighted_haar_split(v)[interval]


def weighted_haar(v: Weight, interval: DyadicInterval) -> StepFunction:
    """The L^2(v)-normalised, v-mean-zero Haar function of ``interval``."""
    grid = v.grid
    grid.check(interval)
    if interval.level >= grid.depth:
        raise GridError(f"{interval} is a leaf: no Haar function on this grid")
    left, right = interval.children()
    m_lo, m_hi = v.mass(left), v.mass(right)
    if not (m_lo > 0 and m_hi > 0):
        raise ValueError("weighted Haar function needs positive mass on both halves")
    m = m_lo + m_hi
    vals = np.zeros(grid.n_cells)
    vals[left.cell_slice(grid)] = -np.sqrt(m_hi / m_lo) / np.sqrt(m)
    vals[right.cell_slice(grid)] = np.sqrt(m_lo / m_hi) / np.sqrt(m)
    return StepFunction(grid, vals)


def weighted_haar_pairings(F: np.ndarray, v: Weight) -> np.ndarray:
    """<F, h_I^v> (unweighted pairing) for every non-leaf I, batched on the last axis."""
    grid = v.grid
    nl = grid.n_nonleaf
    lengths = grid.level_lengths()
    ints = tree_means(F) * lengths
    ints_lo, ints_hi = _children_means(np.moveaxis(ints, -1, 0), nl)
    mass = v.tree * lengths
    m_lo, m_hi = _children_means(mass, nl)
    m = mass[:nl]
    ints_lo = np.moveaxis(ints_lo, 0, -1)
    ints_hi = np.moveaxis(ints_hi, 0, -1)
    return (np.sqrt(m_lo / m_hi) * ints_hi - np.sqrt(m_hi / m_lo) * ints_lo) / np.sqrt(m)


# --- multipliers --------------------------------------------------------------------

def _multiplier_values(F: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    _, c = haar_coefficients(F)
    return haar_synthesis(0.0, c * symbol)


def _t_haar_values(F, w: Weight, t, sigma):
    out = _multiplier_values(F, _symbol(w, t, sigma))
    return out if t == 0 else out * w.values ** t


def _adjoint_values(G, w: Weight, t, sigma):
    G = np.asarray(G, dtype=float)
    if t != 0:
        G = G * w.values ** t
    return _multiplier_values(G, _symbol(w, t, sigma))


def apply_t_haar(f: StepFunction, w: Weight, t: float, sigma=None) -> StepFunction:
    """sum_I σ_I (w(x)/<w>_I)^t <f,h_I> h_I(x); constants are annihilated."""
    return StepFunction(f.grid, _t_haar_values(f.values, w, t, sigma))


def apply_adjoint_t_haar(g: StepFunction, w: Weight, t: float, sigma=None) -> StepFunction:
    """Adjoint under the unweighted pairing: sum_I σ_I <w^t g, h_I>/<w>_I^t h_I."""
    return StepFunction(g.grid, _adjoint_values(g.values, w, t, sigma))


def apply_constant_haar(f: StepFunction, w: Weight, t: float, sigma=None) -> StepFunction:
    """sum_I σ_I <f,h_I>/<w>_I^t h_I: the symbol is constant on each interval."""
    return StepFunction(f.grid, _multiplier_values(f.values, _symbol(w, t, sigma)))


def _positive_values(F, w: Weight, t, lam: np.ndarray):
    depth = w.grid.depth
    means = tree_means(F)
    acc = level_view(lam, 0) * level_view(means, 0)
    for j in range(1, depth):
        acc = np.repeat(acc, 2, axis=-1) + level_view(lam, j) * 2.0 ** j * level_view(means, j)
    out = expand_to_cells(acc, depth, depth - 1)
    return out if t == 0 else out * w.values ** t


def _positive_adjoint_values(G, w: Weight, t, lam: np.ndarray):
    """P* g(y) = sum_{I ∋ y} (λ_I/|I|) <w^t g>_I."""
    G = np.asarray(G, dtype=float)
    if t != 0:
        G = G * w.values ** t
    return _positive_values(G, w, 0, lam)


def _lambda_values(lam, grid: Grid) -> np.ndarray:
    vals = np.asarray(getattr(lam, "values", lam), dtype=float)
    if vals.shape != (grid.n_nonleaf,):
        raise GridError(f"expected {grid.n_nonleaf} sequence entries, got shape {vals.shape}")
    if np.any(vals < 0):
        raise ValueError("the sequence driving the positive operator must be nonnegative")
    return vals


def apply_positive(f: StepFunction, w: Weight, t: float, lam) -> StepFunction:
    """P f(x) = sum_{I ∋ x} (w^t(x)/|I|) λ_I <f>_I."""
    return StepFunction(f.grid, _positive_values(f.values, w, t, _lambda_values(lam, f.grid)))


def maximal(f: StepFunction, u: Weight | None = None) -> StepFunction:
    """Weighted dyadic maximal function sup_{I ∋ x} <|f|>^u_I, top-down in O(n)."""
    grid = f.grid
    a = np.abs(f.values)
    if u is None:
        avg = tree_means(a)
    else:
        avg = tree_means(a * u.values) / u.tree
    run = level_view(avg, 0)
    for j in range(1, grid.depth + 1):
        run = np.maximum(np.repeat(run, 2), level_view(avg, j))
    return StepFunction(grid, run)


# --- dense representation -------------------------------------------------------------

OperatorKind = Literal["t-haar", "adjoint", "constant-haar", "positive", "maximal"]
LINEAR_KINDS = ("t-haar", "adjoint", "constant-haar", "positive")


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Closed description of one operator and its parameters."""

    kind: OperatorKind
    w: Weight | None = None
    t: float = 0.0
    sigma: SignPattern | None = None
    lam: object = None
    u: Weight | None = None
    params: dict = field(default_factory=dict)

    def apply_values(self, F: np.ndarray) -> np.ndarray:
        """Apply to a batch of cell-value vectors (last axis)."""
        if self.kind == "maximal":
            grid = Grid(int(np.shape(F)[-1]).bit_length() - 1)
            F2 = np.atleast_2d(F)
            out = np.stack([maximal(StepFunction(grid, row), self.u).values for row in F2])
            return out.reshape(np.shape(F))
        w = self.w
        if w is None:
            raise ValueError(f"operator {self.kind!r} needs a weight w")
        if self.kind == "t-haar":
            return _t_haar_values(F, w, self.t, self.sigma)
        if self.kind == "adjoint":
            return _adjoint_values(F, w, self.t, self.sigma)
        if self.kind == "constant-haar":
            return _multiplier_values(F, _symbol(w, self.t, self.sigma))
        if self.kind == "positive":
            return _positive_values(F, w, self.t, _lambda_values(self.lam, w.grid))
        raise ValueError(f"unsupported operator kind {self.kind!r}")

    def apply(self, f: StepFunction) -> StepFunction:
        return StepFunction(f.grid, self.apply_values(f.values))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Integral kernel on the leaf cells: (T f)_i = sum_j K_ij f_j |cell|.

    Column j is the image of the j-th cell indicator scaled to unit mass.
    """

    grid: Grid
    kernel: np.ndarray
    source: str = "u"
    target: str = "v"

    def __post_init__(self):
        k = np.array(self.kernel, dtype=float)
        n = self.grid.n_cells
        if k.shape != (n, n):
            raise GridError(f"kernel must be {n}x{n}, got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise ValueError("kernel entries must be finite")
        k.flags.writeable = False
        object.__setattr__(self, "kernel", k)

    def apply(self, f: StepFunction) -> StepFunction:
        return StepFunction(self.grid, self.kernel @ f.values * self.grid.cell_width)

    @classmethod
    def from_value_map(cls, grid: Grid, A: np.ndarray, source="u", target="v") -> "OperatorMatrix":
        """Wrap a matrix acting on cell values, (T f)_i = sum_j A_ij f_j."""
        return cls(grid, np.asarray(A, dtype=float) * grid.n_cells, source, target)


def assemble_matrix(op: OperatorSpec, grid: Grid, source: str = "u", target: str = "v") -> OperatorMatrix:
    if op.kind not in LINEAR_KINDS:
        raise ValueError(f"operator {op.kind!r} is not linear and has no matrix")
    n = grid.n_cells
    images = op.apply_values(np.eye(n) * n)  # row j = T(unit-mass indicator of cell j)
    return OperatorMatrix(grid, images.T, source, target)
