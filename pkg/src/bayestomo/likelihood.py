"""Multinomial log-likelihood of binned homodyne data.

The multinomial coefficient is constant in the parameters and is dropped,
so the log-likelihood is ``sum n_l ln P_l`` over all settings and bins.
Unphysical parameter points and points where an occupied bin has
probability below :data:`PROB_FLOOR` get the sentinel ``-inf``.
"""

from __future__ import annotations

import math

import numpy as np

from .data import Dataset
from .state import (
    PROB_FLOOR,
    QuadratureSpec,
    _bin_coefficients,
    _mixture_bin_probs,
    _unpack,
    is_physical,
    phase_nodes,
)


class LikelihoodModel:
    """Log-likelihood of a fixed dataset, with per-setting arrays precomputed.

    Instances are immutable after construction and may be shared between
    chains.
    """

    def __init__(self, data: Dataset, spec: QuadratureSpec | None = None):
        self.data = data
        self.spec = spec or QuadratureSpec()
        self._settings = []
        for h in data.histograms:
            occupied = h.counts > 0
            self._settings.append((
                h.theta,
                h.interior_edges,
                h.counts[occupied].astype(float),
                occupied,
                _bin_coefficients(h.interior_edges),
            ))

    def probabilities(self, params) -> list[np.ndarray]:
        v_x, v_p, v_phi = _unpack(params)
        u, w = phase_nodes(v_phi, self.spec)
        out = []
        for theta, edges, _, _, coeffs in self._settings:
            phi = u + theta
            sd = np.sqrt(v_x * np.cos(phi) ** 2 + v_p * np.sin(phi) ** 2)
            out.append(_mixture_bin_probs(edges, sd, w, coeffs))
        return out

    def __call__(self, params) -> float:
        v_x, v_p, v_phi = _unpack(params)
        if not is_physical(v_x, v_p, v_phi):
            return -math.inf
        total = 0.0
        for (_, _, counts, occupied, _), probs in zip(self._settings, self.probabilities((v_x, v_p, v_phi))):
            p = probs[occupied]
            if np.any(~(p >= PROB_FLOOR)):
                return -math.inf
            total += float(counts @ np.log(p))
        return total


def log_likelihood(params, data: Dataset, spec: QuadratureSpec | None = None) -> float:
    """``sum_{theta,l} n_{theta,l} ln P_{theta,l}(params)``; ``-inf`` when impossible."""
    return LikelihoodModel(data, spec)(params)


def log_ratio(log_a: float, log_b: float) -> float:
    """``ln(L_a / L_b)`` from two log-likelihoods, with the sentinel rules.

    Two sentinels give 0; exactly one gives -inf or +inf.
    """
    a_dead = log_a == -math.inf
    b_dead = log_b == -math.inf
    if a_dead and b_dead:
        return 0.0
    if a_dead:
        return -math.inf
    if b_dead:
        return math.inf
    return log_a - log_b


def likelihood_ratio_log(params_a, params_b, data: Dataset, spec: QuadratureSpec | None = None) -> float:
    model = LikelihoodModel(data, spec)
    return log_ratio(model(params_a), model(params_b))
