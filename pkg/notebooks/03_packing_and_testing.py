# %% [markdown]
# # Packing constants and testing conditions
#
# The RH_p packing constant of x**alpha stays bounded when alpha·p > -1 and
# grows without bound otherwise.  Convergence in the bounded case is slow.

# %%
from dyadica import SignPattern, build_grid, cascade_weight, fixed_sigma_norm, power_weight, rhp_packing, sawyer_testing

for alpha in (-0.4, -0.6):
    seq = [rhp_packing(power_weight(alpha, build_grid(d)), 2).value for d in range(6, 17, 2)]
    print(f"x^{alpha}:", " ".join(f"{x:8.2f}" for x in seq))

# %% [markdown]
# ## Testing on indicators
#
# Applying the operator to weighted indicators of dyadic intervals gives
# lower bounds for its squared norm.

# %%
import numpy as np

grid = build_grid(6)
u, v, w = (cascade_weight(grid, 0.6, s) for s in (1, 2, 3))
sigma = SignPattern.random(grid, np.random.default_rng(0))
tc = sawyer_testing(u, v, w, 1.0, sigma)
norm_sq = fixed_sigma_norm(u, v, w, 1.0, sigma).value ** 2
for name, value in tc.values().items():
    print(f"{name:10s} {value:8.4f}   ratio to squared norm {value / norm_sq:.3f}")
