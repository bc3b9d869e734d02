"""Operator norms between weighted L^2 spaces and the sign-pattern machinery.

Every weighted norm is reduced to a Euclidean one: for step functions,
``||T||_{L^2(u) -> L^2(v)}`` is the spectral norm of
``diag(sqrt v) T diag(1/sqrt u)`` acting on cell values, so the operators
here are handed around as a pair of callables ``(matvec, rmatvec)`` on
arrays whose last axis holds cell values.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, svds

from .conditions import Triple, _triple, condition_report, lambda_sequence
from .core import StepFunction, haar_coefficients, haar_synthesis, tree_means
from .operators import (
    OperatorMatrix,
    OperatorSpec,
    SignPattern,
    _multiplier_values,
    _signs,
    assemble_matrix,
    weighted_haar_pairings,
    weighted_haar_split,
)
from .weights import Weight

logger = logging.getLogger(__name__)

POWER_TOL = 1e-10
POWER_MAXITER = 10_000
DENSE_LIMIT = 512  # largest n for which a full SVD is used


@dataclass(frozen=True)
class NormEstimate:
    value: float
    method: str  # exact-spectral | power-iteration | sigma-alternation
    iterations: int
    residual: float
    bound_kind: str  # exact | lower-bound | upper-bound
    history: tuple = ()
    upper_proxy: float | None = None
    sigma: SignPattern | None = field(default=None, compare=False, repr=False)

    def __float__(self):
        return self.value

    def to_dict(self) -> dict:
        return {"value": self.value, "method": self.method, "iterations": self.iterations,
                "residual": self.residual, "bound_kind": self.bound_kind,
                "upper_proxy": self.upper_proxy}


class SingularTriple(NamedTuple):
    value: float
    right: np.ndarray  # unit x maximising |A x|
    left: np.ndarray  # unit y = A x / |A x|
    iterations: int
    residual: float


MatVec = Callable[[np.ndarray], np.ndarray]


def _dense_from(mv: MatVec, n: int) -> np.ndarray:
    # mv maps row batches: mv(I)[j] = A e_j
    return np.asarray(mv(np.eye(n))).T


def _residual(mv, rmv, s, x, y) -> float:
    return float(np.linalg.norm(rmv(y) - s * x))


def top_singular(mv: MatVec, rmv: MatVec, n: int, *, method: str = "lanczos",
                 v0: np.ndarray | None = None, tol: float = POWER_TOL,
                 maxiter: int = POWER_MAXITER) -> SingularTriple:
    """Largest singular value and vectors of the n x n operator given by (mv, rmv)."""
    if method == "dense" or (method == "lanczos" and n <= 64):
        A = _dense_from(mv, n)
        U, S, Vt = np.linalg.svd(A)
        x, y = Vt[0], U[:, 0]
        return SingularTriple(float(S[0]), x, y, 1, _residual(mv, rmv, S[0], x, y))
    if method == "lanczos":
        op = LinearOperator((n, n), matvec=lambda x: mv(np.ravel(x)),
                            rmatvec=lambda y: rmv(np.ravel(y)), dtype=float)
        y, S, xt = svds(op, k=1, v0=v0, tol=0, solver="arpack", maxiter=maxiter)
        s, x, y = float(S[0]), xt[0], y[:, 0]
        return SingularTriple(s, x, y, 0, _residual(mv, rmv, s, x, y))
    if method == "power":
        return _power_iteration(mv, rmv, n, v0=v0, tol=tol, maxiter=maxiter)
    raise ValueError(f"unknown singular-value method {method!r}")


def _power_iteration(mv, rmv, n, *, v0=None, tol=POWER_TOL, maxiter=POWER_MAXITER):
    """Power iteration on A^T A; the returned value |A x| is a certified lower bound."""
    x = np.ones(n) if v0 is None else np.array(v0, dtype=float)
    x /= np.linalg.norm(x)
    prev = 0.0
    it = 0
    for it in range(1, maxiter + 1):
        ax = mv(x)
        rq = float(np.linalg.norm(ax))
        if rq == 0.0:
            break
        x = rmv(ax)
        x /= np.linalg.norm(x)
        if abs(rq - prev) <= tol * rq:
            break
        prev = rq
    ax = mv(x)
    s = float(np.linalg.norm(ax))
    y = ax / s if s > 0 else ax
    return SingularTriple(s, x, y, it, _residual(mv, rmv, s, x, y) if s > 0 else 0.0)


def matrix_free_norm(mv: MatVec, rmv: MatVec, n: int, *, method: str = "exact-spectral",
                     v0=None) -> NormEstimate:
    """Spectral norm of a square operator given by batched callables."""
    if method == "exact-spectral":
        if n <= DENSE_LIMIT:
            st = top_singular(mv, rmv, n, method="dense")
        else:
            A = _dense_from(mv, n)
            st = top_singular(lambda x: A @ x if x.ndim == 1 else x @ A.T,
                              lambda y: A.T @ y if y.ndim == 1 else y @ A, n,
                              method="lanczos", v0=v0)
        return NormEstimate(st.value, "exact-spectral", st.iterations, st.residual, "exact")
    if method == "lanczos":
        st = top_singular(mv, rmv, n, method="lanczos", v0=v0)
        return NormEstimate(st.value, "exact-spectral", st.iterations, st.residual, "exact")
    if method == "power-iteration":
        st = top_singular(mv, rmv, n, method="power", v0=v0)
        if st.iterations >= POWER_MAXITER:
            logger.warning("power iteration hit the cap; residual %.3g", st.residual)
        return NormEstimate(st.value, "power-iteration", st.iterations, st.residual, "lower-bound")
    raise ValueError(f"unknown norm method {method!r}")


def weighted_operator_norm(M: OperatorMatrix, u: Weight, v: Weight, *,
                           method: str = "auto") -> NormEstimate:
    """sup ||T f||_{L^2(v)} / ||f||_{L^2(u)} for the kernel operator ``M``."""
    grid = M.grid
    if u.grid != grid or v.grid != grid:
        raise ValueError("weights and operator live on different grids")
    # (T f)_i = h sum_j K_ij f_j; in L^2 coordinates x = sqrt(u h) f, y = sqrt(v h) Tf
    A = grid.cell_width * np.sqrt(v.values)[:, None] * M.kernel / np.sqrt(u.values)[None, :]
    if method == "auto":
        method = "exact-spectral" if grid.depth <= 12 else "power-iteration"
    if method == "exact-spectral":
        if grid.n_cells <= DENSE_LIMIT:
            s = float(np.linalg.norm(A, 2))
            return NormEstimate(s, "exact-spectral", 1, 0.0, "exact")
        st = top_singular(lambda x: A @ x, lambda y: A.T @ y, grid.n_cells, method="lanczos")
        return NormEstimate(st.value, "exact-spectral", st.iterations, st.residual, "exact")
    if method == "power-iteration":
        return matrix_free_norm(lambda x: x @ A.T if x.ndim > 1 else A @ x,
                                lambda y: y @ A if y.ndim > 1 else A.T @ y,
                                grid.n_cells, method="power-iteration")
    raise ValueError(f"unknown norm method {method!r}")


# --- fixed-sign and sup-over-sign norms ------------------------------------------------

def _multiplier_pair(tr: Triple, symbol: np.ndarray):
    """(mv, rmv) for V^{1/2} T u^{-1/2} with T the constant symbol multiplier."""
    su = np.sqrt(tr.u.values)
    sV = np.sqrt(tr.V.values)

    def mv(x):
        return sV * _multiplier_values(x / su, symbol)

    def rmv(y):
        return _multiplier_values(sV * y, symbol) / su

    return mv, rmv


def _abs_symbol(tr: Triple) -> np.ndarray:
    nl = tr.grid.n_nonleaf
    return np.ones(nl) if tr.t == 0 else tr.w.tree[:nl] ** (-tr.t)


def fixed_sigma_norm(u, v=None, w=None, t=None, sigma=None, *, method: str = "lanczos") -> NormEstimate:
    """||T^t_{w,σ}||_{L^2(u) -> L^2(v)} (equivalently ||T_σ T_{w,t}||_{L^2(u) -> L^2(v w^{2t})})."""
    tr = _triple(u, v, w, t)
    sym = _signs(sigma, tr.grid) * _abs_symbol(tr)
    mv, rmv = _multiplier_pair(tr, sym)
    st = top_singular(mv, rmv, tr.grid.n_cells, method=method)
    kind = "lower-bound" if method == "power" else "exact"
    return NormEstimate(st.value, "exact-spectral" if kind == "exact" else "power-iteration",
                        st.iterations, st.residual, kind, sigma=sigma)


POLISH_LIMIT = 31  # flip search runs by default when there are at most this many signs


def _alternate(tr: Triple, sig: np.ndarray, a: np.ndarray, *, method: str, max_steps: int):
    """Sign alternation from ``sig``; returns (value, sigma, history, residual)."""
    n = tr.grid.n_cells
    su = np.sqrt(tr.u.values)
    sV = np.sqrt(tr.V.values)
    hist = []
    best = (-1.0, sig, 0.0)
    v0 = None
    for _ in range(max_steps):
        mv, rmv = _multiplier_pair(tr, sig * a)
        st = top_singular(mv, rmv, n, method=method, v0=v0)
        hist.append(st.value)
        if st.value > best[0]:
            best = (st.value, sig, st.residual)
        _, cx = haar_coefficients(st.right / su)
        _, cy = haar_coefficients(sV * st.left)
        prod = cx * cy
        new = np.where(prod > 0, 1.0, np.where(prod < 0, -1.0, sig))
        if np.array_equal(new, sig):
            break
        sig = new
        v0 = st.right
    return best[0], best[1], hist, best[2]


def _factors(tr: Triple):
    """Dense B (n x m), C (m x n) with V^{1/2} T_d u^{-1/2} = B diag(d) C on cell values."""
    n = tr.grid.n_cells
    nl = tr.grid.n_nonleaf
    B = np.sqrt(tr.V.values)[:, None] * haar_synthesis(0.0, np.eye(nl)).T
    C = haar_coefficients(np.diag(1.0 / np.sqrt(tr.u.values)))[1].T
    return B, C


def _flip_search(tr, sig, value, a, *, method, max_steps, screen_steps: int = 6):
    """Best single-sign flip while it raises the norm, each followed by fresh alternation.

    Trial norms are screened by a few power steps from the current top right
    singular vector (each screened value is a lower bound); the exact batched
    SVD only runs when screening finds no improving flip.
    """
    B, C = _factors(tr)
    hist = []
    while True:
        d = sig * a
        A = (B * d) @ C
        # flipping sign i subtracts the rank-one term 2 d_i B[:, i] C[i, :]
        trials = A[None] - 2.0 * d[:, None, None] * B.T[:, :, None] * C[:, None, :]
        x = np.broadcast_to(np.linalg.svd(A)[2][0], (d.size, A.shape[1]))
        for _ in range(screen_steps):
            x = np.einsum("kij,ki->kj", trials, np.einsum("kij,kj->ki", trials, x))
            x = x / np.linalg.norm(x, axis=1, keepdims=True)
        vals = np.linalg.norm(np.einsum("kij,kj->ki", trials, x), axis=1)
        if not vals.max() > value * (1 + 1e-12):
            vals = np.linalg.norm(trials, ord=2, axis=(1, 2))
        i = int(np.argmax(vals))
        if not vals[i] > value * (1 + 1e-12):
            return value, sig, hist
        trial = sig.copy()
        trial[i] = -trial[i]
        value, sig, more, _ = _alternate(tr, trial, a, method=method, max_steps=max_steps)
        hist.extend(more)


def sup_sigma_norm(u, v=None, w=None, t=None, *, restarts: int = 16, seed: int = 0,
                   max_steps: int = 100, upper_proxy: bool = False,
                   method: str = "lanczos", polish: bool | None = None) -> NormEstimate:
    """Lower bound on sup_σ ||T^t_{w,σ}||_{L^2(u) -> L^2(v)} by sign alternation.

    Given the top singular pair (x, y) of the current operator, every sign
    is flipped so that σ_I <u^{-1/2} x, h_I> <v^{1/2} w^t y, h_I> >= 0,
    which can only increase the bilinear form; the next singular value is
    at least that.  Iterate to a fixed point, keep the best of ``restarts``
    starts (the first start is σ ≡ +1, the rest are random).

    Alternation can stop at a pattern where no coordinated change helps but
    a single flip does.  With ``polish`` (default: at most 31 signs) every
    fixed point is then improved by single flips until none raises the norm.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    tr = _triple(u, v, w, t)
    grid = tr.grid
    a = _abs_symbol(tr)
    rng = np.random.default_rng(seed)
    if polish is None:
        polish = grid.n_nonleaf <= POLISH_LIMIT

    best_val, best_sigma, best_hist, best_res, steps = -1.0, None, [], 0.0, 0
    seen = set()
    for r in range(restarts):
        sig = np.ones(grid.n_nonleaf) if r == 0 else rng.choice([-1.0, 1.0], size=grid.n_nonleaf)
        value, sig, hist, res = _alternate(tr, sig, a, method=method, max_steps=max_steps)
        steps += len(hist)
        key = sig.tobytes()
        if polish and key not in seen:
            seen.add(key)
            value, sig, more = _flip_search(tr, sig, value, a, method=method, max_steps=max_steps)
            steps += len(more) + grid.n_nonleaf
            hist = hist + more
        if value > best_val:
            best_val, best_sigma, best_hist, best_res = value, sig, hist, res
    proxy = condition_report(tr).combined if upper_proxy else None
    return NormEstimate(best_val, "sigma-alternation", steps, best_res, "lower-bound",
                        history=tuple(best_hist), upper_proxy=proxy,
                        sigma=SignPattern(grid, best_sigma))


def exhaustive_sup_sigma(u, v=None, w=None, t=None, *, max_patterns: int = 1 << 15) -> NormEstimate:
    """Exact sup over every sign pattern; only feasible for tiny grids."""
    tr = _triple(u, v, w, t)
    grid = tr.grid
    count = 1 << grid.n_nonleaf
    if count > max_patterns:
        raise ValueError(f"{count} sign patterns exceed the enumeration limit {max_patterns}")
    a = _abs_symbol(tr)
    best, best_bits = -1.0, 0
    for bits in range(count):
        sig = SignPattern.from_bits(grid, bits).values
        mv, rmv = _multiplier_pair(tr, sig * a)
        s = top_singular(mv, rmv, grid.n_cells, method="dense").value
        if s > best:
            best, best_bits = s, bits
    return NormEstimate(best, "exact-spectral", count, 0.0, "exact",
                        sigma=SignPattern.from_bits(grid, best_bits))


# --- Khintchine expectation -------------------------------------------------------------

@dataclass(frozen=True)
class KhintchineResult:
    closed_form: float
    monte_carlo: float | None = None
    samples: int = 0
    stderr: float | None = None


def khintchine_closed_form(V: Weight, w: Weight, t: float, f: StepFunction) -> float:
    """E_σ ||T_σ T_{w,t} f||^2_{L^2(V)} = 1/4 sum_I |I| |Δ_I f|^2 <V>_I / <w>_I^{2t}."""
    grid = f.grid
    nl = grid.n_nonleaf
    lengths = grid.level_lengths()[:nl]
    wt = np.ones(nl) if t == 0 else w.tree[:nl] ** (2 * t)
    return 0.25 * float(np.sum(lengths * f.deltas ** 2 * V.tree[:nl] / wt))


def _squared_norms(V: Weight, w: Weight, t: float, f: StepFunction, signs: np.ndarray) -> np.ndarray:
    """||T_σ T_{w,t} f||^2_{L^2(V)} for each row of ``signs``."""
    nl = f.grid.n_nonleaf
    _, c = haar_coefficients(f.values)
    a = np.ones(nl) if t == 0 else w.tree[:nl] ** (-t)
    out = haar_synthesis(0.0, signs * (c * a))
    return (out ** 2 * V.values).mean(axis=-1)


def khintchine_expectation(V: Weight, w: Weight, t: float, f: StepFunction, *,
                           samples: int = 0, seed: int = 0, batch: int = 4096) -> KhintchineResult:
    closed = khintchine_closed_form(V, w, t, f)
    if samples <= 0:
        return KhintchineResult(closed)
    rng = np.random.default_rng(seed)
    vals = []
    left = samples
    while left > 0:
        m = min(batch, left)
        signs = rng.choice([-1.0, 1.0], size=(m, f.grid.n_nonleaf))
        vals.append(_squared_norms(V, w, t, f, signs))
        left -= m
    vals = np.concatenate(vals)
    return KhintchineResult(closed, float(vals.mean()), samples,
                            float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else None)


def khintchine_enumeration(V: Weight, w: Weight, t: float, f: StepFunction) -> float:
    """Exact average over all 2^(n-1) sign patterns."""
    nl = f.grid.n_nonleaf
    if nl > 20:
        raise ValueError("too many sign patterns to enumerate")
    signs = np.array(list(itertools.product([1.0, -1.0], repeat=nl)))
    return float(_squared_norms(V, w, t, f, signs).mean())


# --- bilinear decomposition -------------------------------------------------------------

class Decomposition(NamedTuple):
    s1: float
    s2: float
    s3: float
    s4: float

    @property
    def total(self) -> float:
        return self.s1 + self.s2 + self.s3 + self.s4


def bilinear_pairing(f: StepFunction, g: StepFunction, u, v=None, w=None, t=None, sigma=None) -> float:
    """<T^t_{w,σ}(f u^{-1}), g v> computed directly."""
    from .operators import apply_t_haar

    tr = _triple(u, v, w, t)
    Tf = apply_t_haar(StepFunction(f.grid, f.values / tr.u.values), tr.w, tr.t, sigma)
    return float(np.mean(Tf.values * g.values * tr.v.values))


def bilinear_decomposition(f: StepFunction, g: StepFunction, u, v=None, w=None, t=None,
                           sigma=None) -> Decomposition:
    """The four sums obtained by splitting each h_I against u^{-1} and v w^{2t}."""
    tr = _triple(u, v, w, t)
    grid = tr.grid
    nl = grid.n_nonleaf
    sqrt_len = np.sqrt(grid.level_lengths()[:nl])
    U, V = tr.U, tr.V
    F = f.values / tr.u.values
    G = g.values * tr.v.values * (1.0 if tr.t == 0 else tr.w.values ** tr.t)
    sU, sV = weighted_haar_split(U), weighted_haar_split(V)
    pU = weighted_haar_pairings(F, U)
    pV = weighted_haar_pairings(G, V)
    mU = tree_means(F)[:nl] * sqrt_len  # <F, 1_I>/sqrt|I|
    mV = tree_means(G)[:nl] * sqrt_len
    coef = _signs(sigma, grid) * _abs_symbol(tr)
    a_f, b_f = sU.alpha * pU, sU.beta * mU
    a_g, b_g = sV.alpha * pV, sV.beta * mV
    return Decomposition(float(np.sum(coef * a_f * a_g)), float(np.sum(coef * b_f * a_g)),
                         float(np.sum(coef * a_f * b_g)), float(np.sum(coef * b_f * b_g)))


def positive_bilinear_form(f: StepFunction, g: StepFunction, u, v=None, w=None, t=None) -> float:
    """sum_I λ_I <f u^{-1/2}>_I <g v^{1/2} w^t>_I  (= <v^{1/2} P(u^{-1/2} f), g>)."""
    tr = _triple(u, v, w, t)
    nl = tr.grid.n_nonleaf
    lam = lambda_sequence(tr).values
    a = tree_means(f.values / np.sqrt(tr.u.values))[:nl]
    gw = g.values * np.sqrt(tr.v.values) * (1.0 if tr.t == 0 else tr.w.values ** tr.t)
    b = tree_means(gw)[:nl]
    return float(np.sum(lam * a * b))
