"""
Wigner function and purity with error bars
==========================================

Push posterior samples through nonlinear functions of the parameters:
the Wigner function on a grid, and the purity.
"""

# %%
import numpy as np

from bayestomo import SamplerConfig, StateParams, derived_posterior, purity, reconstruct_wigner, run_chains
from bayestomo import simulate_dataset

truth = StateParams(0.316, 6.889, 0.171)
chains = run_chains(simulate_dataset(truth, n=100_000, seed=5),
                    SamplerConfig(iterations=6000, burn_in=2000, n_chains=2, seed=5))

# %%
# Every grid cell gets a posterior mean and standard deviation.
grid = reconstruct_wigner(chains, x_range=(-4, 4), p_range=(-8, 8), resolution=41, subsample=200)
i = j = 20
print(f"W(0,0) = {grid.mean[i, j]:.5f} +- {grid.std[i, j]:.5f}")
print("largest relative cell error:", float(np.max(grid.std / np.maximum(grid.mean, 1e-12))))

# %%
# The purity posterior.  Its spread comes mostly from V_phi, which enters
# the purity much more strongly than V_x or V_p.
post = derived_posterior(chains, purity, name="purity")
print(f"purity = {post.mean:.4f} +- {post.std:.4f}   (at truth {purity(truth):.4f})")
