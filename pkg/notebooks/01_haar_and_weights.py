# %% [markdown]
# # Haar coefficients and weight characteristics
#
# A step function on the depth-D grid is stored by its 2^D cell values.
# Averages over every dyadic interval live in one flat array, root first,
# and the Haar coefficients come out of the same tree in linear time.

# %%
import numpy as np

from dyadica import (
    DyadicInterval,
    StepFunction,
    ap_constant,
    build_grid,
    c2t_constant,
    cascade_weight,
    haar_transform,
    inverse_haar,
    power_weight,
    rh1_constant,
    rhp_constant,
)

grid = build_grid(3)
f = StepFunction.from_callable(grid, lambda x: np.sin(2 * np.pi * x))
e = haar_transform(f)
print("mean", round(e.mean, 12))
print("coefficients", np.round(e.coefficients, 4))
print("round trip error", np.abs(inverse_haar(e).values - f.values).max())

# %% [markdown]
# Plancherel: the mean squared plus the squared coefficients recovers the
# integral of f squared.

# %%
print(e.energy(), f.norm() ** 2)

# %% [markdown]
# ## Power weights
#
# Cells hold exact averages of x**alpha, so the singularity at 0 is seen
# through its integral rather than a sample.

# %%
for alpha in (-0.5, 0.5, 2.0):
    w = power_weight(alpha, build_grid(10))
    a2 = ap_constant(w, 2)
    print(f"x^{alpha:+.1f}: [A2] = {a2.value:.4f} at {a2.witness}, "
          f"[RH2] = {rhp_constant(w, 2).value:.4f}, [RH1] = {rh1_constant(w).value:.4f}")

# %% [markdown]
# ## Cascades
#
# A cascade multiplies the two halves of each interval by 1 + δξ and 1 - δξ.
# Larger δ gives rougher weights and larger characteristics.

# %%
g = build_grid(12)
for delta in (0.2, 0.5, 0.8):
    w = cascade_weight(g, delta, seed=1)
    print(f"δ={delta}: min {w.values.min():.2e}, max {w.values.max():.2e}, "
          f"[A2] {ap_constant(w, 2).value:.3f}, [C2t] at t=1 {c2t_constant(w, 1.0).value:.3f}")

# %% [markdown]
# A shallower cascade with the same seed is the coarse version of a deeper one.

# %%
coarse = cascade_weight(build_grid(4), 0.5, seed=1)
fine = cascade_weight(build_grid(8), 0.5, seed=1)
I = DyadicInterval(2, 3)
print(coarse.tree[I.index], fine.tree[I.index])
