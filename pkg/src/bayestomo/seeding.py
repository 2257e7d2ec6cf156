"""Per-purpose random streams derived from one user seed.

Every stream is ``SeedSequence(seed, spawn_key=(purpose, index))``:
simulation of setting ``i`` uses ``(SIMULATION, i)``, MCMC chain ``i``
(start selection, proposals and acceptance draws) uses ``(CHAIN, i)``, and
the greedy maximum-likelihood climb uses ``(GREEDY, 0)``.
"""

import numpy as np

SIMULATION = 0
CHAIN = 1
GREEDY = 2


def derive_rng(seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(purpose, index)))
