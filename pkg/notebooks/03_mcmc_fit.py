"""
Posterior sampling
==================

Run a few Metropolis-Hastings chains on synthetic data and summarise
them.  The chains here are shorter than the default 40,000 iterations so
the script finishes in well under a minute.
"""

# %%
import numpy as np

from bayestomo import SamplerConfig, StateParams, gelman_rubin, run_chains, simulate_dataset, summarize
from bayestomo.analysis import marginal_histogram

truth = StateParams(0.316, 6.889, 0.171)
data = simulate_dataset(truth, n=100_000, seed=11)

# %%
# Each chain starts from the most likely of a few hundred random physical
# points and adapts its proposal widths toward 44% acceptance during
# burn-in only.
config = SamplerConfig(iterations=8000, burn_in=2000, thin=10, n_chains=3, seed=11)
chains = run_chains(data, config)
for c in chains:
    print(f"chain {c.chain_index}: acceptance {c.acceptance_rate():.3f}, final proposal {c.proposal}")

# %%
summary = summarize(chains)
for i, name in enumerate(("v_x", "v_p", "v_phi")):
    print(f"{name:6} {summary.mean[i]:.4f} +- {summary.std[i]:.4f}   truth {truth.as_array()[i]}"
          f"   R-hat {gelman_rubin(chains, name):.4f}")
print("correlation:\n", np.round(summary.correlation, 3))

# %%
# Marginal histograms are plot-ready densities.
m = marginal_histogram(chains, "v_phi", 30)
print("v_phi mode:", m.mode, " integral:", m.integral())
