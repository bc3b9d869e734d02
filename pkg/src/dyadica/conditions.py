"""Two-weight conditions for t-Haar multipliers and their Carleson sequences.

For a triple (u, v, w) and exponent t we write U = u^{-1} and
V = v w^{2t}.  All four conditions are sweeps over the finite dyadic tree:
C1 is a maximum over intervals, C2 and C3 are Carleson intensities of the
sequences μ and ρ, and C4 is the L^2(u) -> L^2(v) norm of the positive
operator driven by λ.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DyadicInterval, Grid, GridError, StepFunction, level_view, subtree_sums, tree_means
from .operators import (
    OperatorSpec,
    SignPattern,
    _multiplier_values,
    _positive_adjoint_values,
    _positive_values,
    _symbol,
    assemble_matrix,
)
from .weights import Weight


@dataclass(frozen=True, eq=False)
class CarlesonSequence:
    """Nonnegative masses on the non-leaf intervals, measured against ``measure``."""

    values: np.ndarray
    measure: Weight

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.measure.grid.n_nonleaf,):
            raise GridError(f"expected {self.measure.grid.n_nonleaf} entries, got {vals.shape}")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("Carleson sequences are finite and nonnegative")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def grid(self) -> Grid:
        return self.measure.grid

    def __getitem__(self, interval: DyadicInterval) -> float:
        return float(self.values[interval.index])

    def ratio_tree(self) -> np.ndarray:
        """sum_{J ⊆ I} λ_J / μ(I) for every interval I."""
        grid = self.grid
        return subtree_sums(self.values, grid.depth) / (self.measure.tree * grid.level_lengths())


@dataclass(frozen=True)
class Constant:
    value: float
    witness: DyadicInterval

    def __float__(self):
        return self.value


def _argmax(tree: np.ndarray, grid: Grid) -> Constant:
    idx = int(np.argmax(tree))
    return Constant(float(tree[idx]), grid.interval_at(idx))


def carleson_intensity(seq: CarlesonSequence) -> Constant:
    return _argmax(seq.ratio_tree(), seq.grid)


@dataclass(frozen=True, eq=False)
class Triple:
    """(u, v, w, t) with the derived weights U = u^{-1} and V = v w^{2t} cached."""

    u: Weight
    v: Weight
    w: Weight
    t: float

    def __post_init__(self):
        if not (self.u.grid == self.v.grid == self.w.grid):
            raise GridError("u, v, w live on different grids")

    @property
    def grid(self) -> Grid:
        return self.w.grid

    @property
    def U(self) -> Weight:
        cached = self.__dict__.get("_U")
        if cached is None:
            cached = self.u.reciprocal()
            object.__setattr__(self, "_U", cached)
        return cached

    @property
    def V(self) -> Weight:
        cached = self.__dict__.get("_V")
        if cached is None:
            cached = self.v if self.t == 0 else self.v * self.w.power(2 * self.t)
            object.__setattr__(self, "_V", cached)
        return cached

    @property
    def w_pow(self) -> np.ndarray:
        """<w>_I^{2t} on every interval."""
        return np.ones(self.grid.n_intervals) if self.t == 0 else self.w.tree ** (2 * self.t)


def _triple(u, v, w, t) -> Triple:
    return u if isinstance(u, Triple) else Triple(u, v, w, t)


def c1_tree(tr: Triple) -> np.ndarray:
    return tr.U.tree * tr.V.tree / tr.w_pow


def condition_c1(u, v=None, w=None, t=None) -> Constant:
    """Joint three-weight condition sup_I <u^{-1}>_I <v w^{2t}>_I / <w>_I^{2t}."""
    tr = _triple(u, v, w, t)
    return _argmax(c1_tree(tr), tr.grid)


def condition_c2_sequence(u, v=None, w=None, t=None) -> CarlesonSequence:
    """μ_J = |J| |Δ_J u^{-1}|^2 <v w^{2t}>_J / <w>_J^{2t}, measured by u^{-1}."""
    tr = _triple(u, v, w, t)
    nl = tr.grid.n_nonleaf
    lengths = tr.grid.level_lengths()[:nl]
    mu = lengths * tr.U.deltas ** 2 * tr.V.tree[:nl] / tr.w_pow[:nl]
    return CarlesonSequence(mu, tr.U)


def condition_c3_sequence(u, v=None, w=None, t=None) -> CarlesonSequence:
    """ρ_J = |J| |Δ_J (v w^{2t})|^2 <u^{-1}>_J / <w>_J^{2t}, measured by v w^{2t}."""
    tr = _triple(u, v, w, t)
    nl = tr.grid.n_nonleaf
    lengths = tr.grid.level_lengths()[:nl]
    rho = lengths * tr.V.deltas ** 2 * tr.U.tree[:nl] / tr.w_pow[:nl]
    return CarlesonSequence(rho, tr.V)


def lambda_sequence(u, v=None, w=None, t=None) -> CarlesonSequence:
    """λ_I = (|Δ_I V|/<V>_I)(|Δ_I U|/<U>_I)(|I|/<w>_I^t).

    Returned with measure V; the measure is informational only, λ is used
    as the coefficient sequence of the positive operator.
    """
    tr = _triple(u, v, w, t)
    nl = tr.grid.n_nonleaf
    lengths = tr.grid.level_lengths()[:nl]
    U, V = tr.U, tr.V
    lam = (np.abs(V.deltas) / V.tree[:nl]) * (np.abs(U.deltas) / U.tree[:nl]) * lengths
    if tr.t != 0:
        lam = lam / tr.w.tree[:nl] ** tr.t
    return CarlesonSequence(lam, V)


def positive_operator(tr: Triple, lam: CarlesonSequence | None = None) -> OperatorSpec:
    lam = lambda_sequence(tr) if lam is None else lam
    return OperatorSpec("positive", w=tr.w, t=tr.t, lam=lam)


def condition_c4(u, v=None, w=None, t=None, *, method: str = "auto"):
    """||P^t_{w,λ}||_{L^2(u) -> L^2(v)} as a NormEstimate."""
    from .normest import NormEstimate, matrix_free_norm, weighted_operator_norm

    tr = _triple(u, v, w, t)
    lam = lambda_sequence(tr)
    if not np.any(lam.values):
        return NormEstimate(0.0, "exact-spectral", 0, 0.0, "exact")
    grid = tr.grid
    if method == "auto":
        method = "exact-spectral" if grid.depth <= 12 else "power-iteration"
    if method == "exact-spectral" and grid.depth <= 9:
        M = assemble_matrix(positive_operator(tr, lam), grid, "u", "v")
        return weighted_operator_norm(M, tr.u, tr.v, method="exact-spectral")
    lamv = lam.values
    su, sv = np.sqrt(tr.u.values), np.sqrt(tr.v.values)

    def mv(x):
        return sv * _positive_values(x / su, tr.w, tr.t, lamv)

    def rmv(y):
        return _positive_adjoint_values(sv * y, tr.w, tr.t, lamv) / su

    return matrix_free_norm(mv, rmv, grid.n_cells, method=method)


@dataclass(frozen=True, eq=False)
class ConditionReport:
    c1: Constant
    c2: Constant
    c3: Constant
    c4: object  # NormEstimate, or None when skipped
    lam: CarlesonSequence
    t: float
    one_weight: bool = False
    unweighted: bool = False
    martingale: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def combined(self) -> float:
        """sqrt(C1) + sqrt(C2) + sqrt(C3) + C4 (C4 counted as 0 when skipped)."""
        c4 = 0.0 if self.c4 is None else self.c4.value
        return math.sqrt(self.c1.value) + math.sqrt(self.c2.value) + math.sqrt(self.c3.value) + c4

    @property
    def one_weight_bound(self) -> float:
        """sqrt(C1) + sqrt(C2) + sqrt(C3) + sqrt(C2 C3)."""
        a, b, c = self.c1.value, self.c2.value, self.c3.value
        return math.sqrt(a) + math.sqrt(b) + math.sqrt(c) + math.sqrt(b * c)

    def to_dict(self) -> dict:
        def wit(c):
            return [c.witness.level, c.witness.position]

        out = {
            "t": self.t,
            "c1": self.c1.value, "c1_witness": wit(self.c1),
            "c2": self.c2.value, "c2_witness": wit(self.c2),
            "c3": self.c3.value, "c3_witness": wit(self.c3),
            "c4": None if self.c4 is None else self.c4.value,
            "c4_method": None if self.c4 is None else self.c4.method,
            "c4_residual": None if self.c4 is None else self.c4.residual,
            "combined": self.combined,
            "one_weight": self.one_weight,
            "unweighted": self.unweighted,
            "martingale": self.martingale,
        }
        out.update(self.extras)
        return out


def condition_report(u, v=None, w=None, t=None, *, with_c4: bool = True,
                     c4_method: str = "auto") -> ConditionReport:
    tr = _triple(u, v, w, t)
    same = bool(np.array_equal(tr.u.values, tr.v.values))
    ones = bool(np.all(tr.u.values == 1.0)) and same
    mart = tr.t == 0 or tr.w.is_constant()
    return ConditionReport(
        c1=condition_c1(tr),
        c2=carleson_intensity(condition_c2_sequence(tr)),
        c3=carleson_intensity(condition_c3_sequence(tr)),
        c4=condition_c4(tr, method=c4_method) if with_c4 else None,
        lam=lambda_sequence(tr),
        t=tr.t,
        one_weight=same,
        unweighted=ones,
        martingale=mart,
    )


# --- Sawyer-type testing constants ---------------------------------------------------

@dataclass(frozen=True)
class TestingConstants:
    """Maxima over grid intervals of the four testing ratios for T_σ T_{w,t}.

    ``full``: ∫|T(1_I U)|^2 V / U(I);  ``dual_full``: ∫|T(1_I V)|^2 U / V(I);
    ``local`` and ``local_dual``: the same integrals restricted to I;
    ``pairing``: |<T(1_I U), 1_J V>| / sqrt(U(I) V(J)) over |I| = |J|, squared.
    """

    __test__ = False  # not a pytest class

    full: Constant
    dual_full: Constant
    local: Constant
    local_dual: Constant
    pairing: float
    pairing_witness: tuple[DyadicInterval, DyadicInterval]

    def values(self) -> dict:
        return {"full": self.full.value, "dual_full": self.dual_full.value,
                "local": self.local.value, "local_dual": self.local_dual.value,
                "pairing": self.pairing}


def _interval_indicators(grid: Grid) -> np.ndarray:
    """Row i is the indicator of the interval with flat index i."""
    n = grid.n_cells
    rows = []
    for j in range(grid.depth + 1):
        span = n >> j
        rows.append(np.kron(np.eye(1 << j), np.ones(span)))
    return np.vstack(rows)


def sawyer_testing(u, v=None, w=None, t=None, sigma=None) -> TestingConstants:
    """Testing constants for the constant-symbol multiplier from L^2(u) to L^2(v w^{2t}).

    Cost is O(n^2) memory; meant for depth <= 11.
    """
    tr = _triple(u, v, w, t)
    grid = tr.grid
    U, V = tr.U.values, tr.V.values
    h = grid.cell_width
    sym = _symbol(tr.w, tr.t, sigma)
    ind = _interval_indicators(grid)
    lengths = grid.level_lengths()
    U_mass = tr.U.tree * lengths
    V_mass = tr.V.tree * lengths

    TU = _multiplier_values(ind * U, sym)  # T(1_I U), one row per interval
    TV = _multiplier_values(ind * V, sym)  # T is self-adjoint in the unweighted pairing
    full = (TU ** 2 * V).sum(axis=1) * h / U_mass
    dual = (TV ** 2 * U).sum(axis=1) * h / V_mass
    local = (TU ** 2 * V * ind).sum(axis=1) * h / U_mass
    local_dual = (TV ** 2 * U * ind).sum(axis=1) * h / V_mass

    best, best_pair = 0.0, (DyadicInterval(0, 0), DyadicInterval(0, 0))
    for j in range(grid.depth + 1):
        sl = slice((1 << j) - 1, (1 << (j + 1)) - 1)
        # G[I, J] = <T(1_I U), 1_J V>
        G = (TU[sl] * V) @ ind[sl].T * h
        R = G ** 2 / np.outer(U_mass[sl], V_mass[sl])
        i, k = np.unravel_index(int(np.argmax(R)), R.shape)
        if R[i, k] > best:
            best = float(R[i, k])
            best_pair = (DyadicInterval(j, int(i)), DyadicInterval(j, int(k)))
    return TestingConstants(
        full=_argmax(full, grid),
        dual_full=_argmax(dual, grid),
        local=_argmax(local, grid),
        local_dual=_argmax(local_dual, grid),
        pairing=best,
        pairing_witness=best_pair,
    )
