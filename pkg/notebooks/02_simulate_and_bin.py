"""
Synthetic homodyne data
=======================

Draw quadrature samples from the exact model at two phases, bin them
with the span rule and write the dataset to disk.  Everything follows
from one seed.
"""

# %%
import tempfile
from pathlib import Path

import numpy as np

from bayestomo import StateParams, bin_samples, load_dataset, save_dataset, simulate_samples
from bayestomo.data import Dataset, simulate_settings
from bayestomo.state import bin_probabilities

truth = StateParams(0.316, 6.889, 0.171)
sets = simulate_settings(truth, thetas=(0.0, np.pi / 2), n=100_000, seed=2009)
for s in sets:
    print(f"theta={s.theta:.4f}  n={len(s)}  sample var={np.var(s.samples):.4f}")

# %%
# The span rule puts 69 interior edges evenly over +-5 sample standard
# deviations, giving 70 bins including the two infinite outer ones.
hists = [bin_samples(s, 70) for s in sets]
data = Dataset(tuple(hists))
print("bins per setting:", [h.n_bins for h in data], "total counts:", data.total)

# %%
# Observed frequencies against the model probabilities: the residuals
# should look like noise of size sqrt(N P).
h = hists[0]
expected = h.total * bin_probabilities(truth, h.theta, h.interior_edges)
z = (h.counts - expected) / np.sqrt(np.maximum(expected, 1))
print("chi^2 / bins:", float(np.sum(z**2)) / h.n_bins)

# %%
# Same seed, same numbers.
again = simulate_samples(truth, 0.0, 5, seed=7)
print(again.samples, simulate_samples(truth, 0.0, 5, seed=7).samples)

# %%
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "dataset.json"
    save_dataset(path, data)
    print("round trip equal:", load_dataset(path) == data)
