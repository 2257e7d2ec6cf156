"""
The phase-diffused squeezed vacuum
==================================

A squeezed vacuum with quadrature variances ``V_x`` and ``V_p`` whose
phase jitters with Gaussian variance ``V_phi`` is no longer Gaussian.
This script evaluates the pieces of the forward model on the reference
state and checks them against their closed forms.
"""

# %%
import numpy as np

from bayestomo import StateParams, bin_probabilities, homodyne_pdf, purity, wigner

state = StateParams(0.316, 6.889, 0.171)
print(state)

# %%
# Without phase noise the homodyne marginal is a centred Gaussian with
# variance V_x cos^2(theta) + V_p sin^2(theta).  With noise it becomes a
# mixture of such Gaussians, and its tails are heavier.
x = np.linspace(-6, 6, 7)
no_noise = StateParams(state.v_x, state.v_p, 0.0)
var = state.v_x
print("closed form :", np.exp(-x**2 / (2 * var)) / np.sqrt(2 * np.pi * var))
print("V_phi = 0   :", homodyne_pdf(no_noise, 0.0, x))
print("V_phi = .171:", homodyne_pdf(state, 0.0, x))

# %%
# Binned probabilities: the outer bins reach to infinity, so every row
# sums to one whatever the edges.
edges = np.linspace(-3, 3, 13)
for theta in (0.0, np.pi / 4, np.pi / 2):
    p = bin_probabilities(state, theta, edges)
    print(f"theta={theta:.3f}  P={np.round(p, 4)}  sum-1={p.sum() - 1:.1e}")

# %%
# The Wigner function on a coarse grid.  Its integral is one and it is
# point-symmetric about the origin.
axis = np.linspace(-15, 15, 301)
w = wigner(state, axis[:, None], axis[None, :])
step = axis[1] - axis[0]
print("integral of W :", w.sum() * step**2)
print("W(0, 0)       :", w[150, 150])

# %%
# Purity falls from 1/sqrt(V_x V_p) as the phase noise grows.
for v_phi in (0.0, 0.05, 0.1, 0.171, 0.3):
    print(f"V_phi={v_phi:<6} purity={purity((state.v_x, state.v_p, v_phi)):.5f}")
