"""
Fisher error bars and the greedy maximum
========================================

The Fisher matrix of the multinomial model gives Cramer-Rao error bars
without any sampling.  A greedy variant of the sampler, which only ever
moves uphill, finds the maximum-likelihood point.
"""

# %%
import numpy as np

from bayestomo import SamplerConfig, StateParams, fisher_matrix, simulate_dataset
from bayestomo.likelihood import LikelihoodModel
from bayestomo.sampler import greedy_search

truth = StateParams(0.316, 6.889, 0.171)
data = simulate_dataset(truth, n=100_000, seed=2009)

# %%
f = fisher_matrix(truth, data)
print("Fisher sigma:", np.round(f.sigma, 5))

# %%
# Fisher information is linear in the counts, so quadrupling the data
# halves the error bars.
print("sigma with 4x the data:", np.round(fisher_matrix(truth, [(h.theta, h.interior_edges, 4 * h.total)
                                                               for h in data]).sigma, 5))

# %%
model = LikelihoodModel(data)
res = greedy_search(None, model, SamplerConfig(iterations=6000, burn_in=100, seed=2009))
print("ML point:", res.params)
print("distance in Fisher sd:", np.round(np.abs(res.params.as_array() - truth.as_array()) / f.sigma, 2))
print("trace never decreases:", bool(np.all(np.diff(res.trace.log_lik) >= 0)))
