"""Weights on the dyadic grid and their Muckenhoupt-type characteristics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DyadicInterval,
    Grid,
    GridError,
    StepFunction,
    level_view,
    subtree_sums,
    tree_means,
)

FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Weight(StepFunction):
    """A step function bounded below by ``floor`` (default 1e-12)."""

    floor: float = FLOOR

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if np.any(vals < 0):
            raise ValueError("a weight cannot take negative values")
        if not self.floor > 0:
            raise ValueError("the positivity floor must be > 0")
        object.__setattr__(self, "values", np.maximum(vals, self.floor))
        super().__post_init__()

    @classmethod
    def constant(cls, grid: Grid, c: float = 1.0) -> "Weight":
        return cls(grid, np.full(grid.n_cells, float(c)))

    def _derived(self, vals: np.ndarray, floor: float) -> "Weight":
        # values computed from positive weights are kept as they are; only
        # an underflow to zero is lifted to the smallest positive double
        lo = float(np.min(vals))
        return Weight(self.grid, vals, min(floor, lo) if lo > 0 else np.finfo(float).tiny)

    def power(self, a: float) -> "Weight":
        """Pointwise power of the cell values."""
        if a == 0:
            return Weight.constant(self.grid, 1.0)
        return self._derived(self.values ** a, self.floor)

    def reciprocal(self) -> "Weight":
        return self._derived(1.0 / self.values, self.floor)

    def mass(self, interval: DyadicInterval) -> float:
        """w(I) = integral of w over I."""
        self.grid.check(interval)
        return float(self.tree[interval.index] * interval.length)

    def is_constant(self, rtol: float = 1e-14) -> bool:
        v = self.values
        return bool(np.ptp(v) <= rtol * np.max(np.abs(v)))

    def __mul__(self, other):
        if isinstance(other, Weight):
            self._check_same_grid(other)
            return self._derived(self.values * other.values, min(self.floor, other.floor))
        if np.isscalar(other) and other > 0:
            return self._derived(self.values * other, self.floor)
        return StepFunction.__mul__(self, other)

    __rmul__ = __mul__


def power_weight(alpha: float, grid: Grid) -> Weight:
    """Cell averages of x**alpha on [0, 1), computed from exact integrals."""
    if not alpha > -1:
        raise ValueError(f"x**{alpha} is not integrable near 0 (need alpha > -1)")
    edges = np.arange(grid.n_cells + 1) * grid.cell_width
    if alpha == 0:
        return Weight.constant(grid)
    a1 = alpha + 1.0
    prim = edges ** a1 / a1
    return Weight(grid, np.diff(prim) / grid.cell_width)


def cascade_weight(grid: Grid, volatility: float, seed: int) -> Weight:
    """Multiplicative dyadic cascade with mean one.

    Each split multiplies the left child by ``1 + δξ`` and the right by
    ``1 - δξ`` with ξ uniform on [-1, 1].  The ξ are drawn level by level
    from one seeded stream, so a deeper grid refines a shallower one built
    from the same seed.
    """
    if not 0 <= volatility < 1:
        raise ValueError(f"volatility must lie in [0, 1), got {volatility}")
    rng = np.random.default_rng(seed)
    vals = np.ones(1)
    for j in range(grid.depth):
        xi = rng.uniform(-1.0, 1.0, size=1 << j)
        nxt = np.empty(2 * vals.size)
        nxt[0::2] = vals * (1.0 + volatility * xi)
        nxt[1::2] = vals * (1.0 - volatility * xi)
        vals = nxt
    return Weight(grid, vals)


@dataclass(frozen=True)
class WeightCharacteristics:
    value: float
    witness: DyadicInterval
    kind: str
    parameter: float | None = None

    def __float__(self):
        return self.value


def _sup(tree_values: np.ndarray, grid: Grid, kind: str, parameter=None) -> WeightCharacteristics:
    # argmax returns the first maximiser: shallowest level, then leftmost
    idx = int(np.argmax(tree_values))
    return WeightCharacteristics(float(tree_values[idx]), grid.interval_at(idx), kind, parameter)


def _with_unit_leaves(tree: np.ndarray, depth: int, leaf_value: float = 1.0) -> np.ndarray:
    # on a single cell every weight is constant; pin the exact value
    out = np.array(tree)
    level_view(out, depth)[...] = leaf_value
    return out


def ap_ratio_tree(w: Weight, p: float) -> np.ndarray:
    """<w>_I <w^{-1/(p-1)}>_I^{p-1} for every interval."""
    dual = tree_means(w.values ** (-1.0 / (p - 1.0)))
    return _with_unit_leaves(w.tree * dual ** (p - 1.0), w.grid.depth)


def ap_constant(w: Weight, p: float) -> WeightCharacteristics:
    if not p > 1:
        raise ValueError("A_p needs p > 1")
    return _sup(ap_ratio_tree(w, p), w.grid, "Ap", p)


def rhp_ratio_tree(w: Weight, p: float) -> np.ndarray:
    return _with_unit_leaves(tree_means(w.values ** p) ** (1.0 / p) / w.tree, w.grid.depth)


def rhp_constant(w: Weight, p: float) -> WeightCharacteristics:
    if not p > 1:
        raise ValueError("RH_p needs p > 1")
    return _sup(rhp_ratio_tree(w, p), w.grid, "RHp", p)


def rh1_ratio_tree(w: Weight) -> np.ndarray:
    """<(w/<w>_I) log(w/<w>_I)>_I = <w log w>_I/<w>_I - log <w>_I."""
    wlogw = tree_means(w.values * np.log(w.values))
    ent = wlogw / w.tree - np.log(w.tree)
    return _with_unit_leaves(ent, w.grid.depth, 0.0)


def rh1_constant(w: Weight) -> WeightCharacteristics:
    return _sup(rh1_ratio_tree(w), w.grid, "RH1")


def c2t_ratio_tree(w: Weight, t: float) -> np.ndarray:
    if t == 0:
        return np.ones(w.grid.n_intervals)
    return _with_unit_leaves(tree_means(w.values ** (2 * t)) * w.tree ** (-2 * t), w.grid.depth)


def c2t_constant(w: Weight, t: float) -> WeightCharacteristics:
    return _sup(c2t_ratio_tree(w, t), w.grid, "C2t", t)


# --- packing (Carleson-type) constants -------------------------------------------

def packing_tree(g: StepFunction, base: Weight, s: float, m: Weight) -> np.ndarray:
    """(1/(|I|<m>_I)) sum_{J ⊆ I, J non-leaf} |J| |Δ_J g|^2 / <base>_J^s."""
    grid = g.grid
    if np.any(base.values <= 0):
        raise ValueError("packing base weight must be strictly positive")
    lengths = grid.level_lengths()
    n_nl = grid.n_nonleaf
    terms = lengths[:n_nl] * g.deltas ** 2 * base.tree[:n_nl] ** (-s)
    return subtree_sums(terms, grid.depth) / (lengths * m.tree)


def packing_constant(g: StepFunction, base: Weight, s: float, m: Weight,
                     kind: str = "packing") -> WeightCharacteristics:
    for other in (base, m):
        if other.grid != g.grid:
            raise GridError("packing inputs live on different grids")
    return _sup(packing_tree(g, base, s, m), g.grid, kind, s)


def buckley_packing(v: Weight) -> WeightCharacteristics:
    """Buckley's summation condition for RH_1."""
    return packing_constant(v, v, 1.0, v, "packing:RH1")


def rhp_packing(w: Weight, p: float) -> WeightCharacteristics:
    wp = w.power(p)
    return packing_constant(wp, w, p, wp, "packing:RHp")


def ap_packing(w: Weight, p: float) -> WeightCharacteristics:
    dual = w.power(-1.0 / (p - 1.0))
    return packing_constant(dual, w, -1.0 / (p - 1.0), dual, "packing:Ap")


def dual_ap_packing(w: Weight, p: float) -> WeightCharacteristics:
    dual = w.power(-1.0 / (p - 1.0))
    return packing_constant(w, dual, -(p - 1.0), w, "packing:Ap-dual")
