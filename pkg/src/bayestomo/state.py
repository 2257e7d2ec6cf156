"""Forward model of a phase-diffused squeezed vacuum state.

All quadratures are vacuum-normalized (vacuum variance 1).  The phase noise
is a zero-mean Gaussian of variance ``v_phi`` on the real line.  Every
quantity averaged over it is pi-periodic in the phase, which
:func:`phase_nodes` exploits for broad phase noise.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

DEFAULT_NODES = 64
PROB_FLOOR = 1e-300
# switch from Gauss-Hermite to the periodic rule once sqrt(v_phi) * nodes exceeds this
TRAPEZOID_RESOLUTION = 6.0
# numpy's Hermite weights overflow beyond roughly 370 nodes
MAX_NODES = 256


class PhysicalityError(ValueError):
    """Raised when a parameter vector violates positivity or V_x V_p >= 1."""


@dataclass(frozen=True)
class StateParams:
    """Squeezed/anti-squeezed variances and phase-noise variance."""

    v_x: float
    v_p: float
    v_phi: float

    def __post_init__(self):
        object.__setattr__(self, "v_x", float(self.v_x))
        object.__setattr__(self, "v_p", float(self.v_p))
        object.__setattr__(self, "v_phi", float(self.v_phi))
        if not is_physical(self.v_x, self.v_p, self.v_phi):
            raise PhysicalityError(
                f"unphysical parameters v_x={self.v_x!r}, v_p={self.v_p!r}, v_phi={self.v_phi!r}"
            )

    @classmethod
    def from_array(cls, values) -> "StateParams":
        v_x, v_p, v_phi = (float(v) for v in values)
        return cls(v_x, v_p, v_phi)

    def as_array(self) -> np.ndarray:
        return np.array([self.v_x, self.v_p, self.v_phi])


def is_physical(v_x: float, v_p: float, v_phi: float) -> bool:
    """Positivity of all variances and the Heisenberg bound (closed set)."""
    if not (np.isfinite(v_x) and np.isfinite(v_p) and np.isfinite(v_phi)):
        return False
    return v_x > 0 and v_p > 0 and v_phi >= 0 and v_x * v_p >= 1.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Number of Gauss-Hermite nodes used for the phase-noise integral."""

    nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if int(self.nodes) != self.nodes or not 8 <= self.nodes <= MAX_NODES:
            raise ValueError(f"quadrature needs an integer number of nodes in [8, {MAX_NODES}], got {self.nodes!r}")


@functools.lru_cache(maxsize=32)
def _hermite_table(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    z, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / np.sqrt(2 * np.pi)
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def phase_nodes(v_phi: float, spec: QuadratureSpec | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights so that ``sum(w * f(u))`` approximates ``E[f(u)]``, u ~ N(0, v_phi).

    Valid for pi-periodic ``f``, which covers every phase average in this
    package.  Narrow phase noise uses probabilists' Gauss-Hermite nodes.
    Once the noise spans several node spacings the Hermite rule converges
    slowly (the rotated variance has complex zeros close to the real axis
    for strong squeezing), so the equispaced trapezoid rule over one period,
    weighted by the wrapped normal density, is used instead; it converges
    geometrically for periodic integrands.
    """
    spec = spec or QuadratureSpec()
    sd = float(np.sqrt(v_phi))
    if sd > np.pi / 2:
        warnings.warn(
            "phase noise std exceeds pi/2; the unwrapped Gaussian phase model "
            "is a poor description of such strong diffusion",
            RuntimeWarning,
            stacklevel=3,
        )
    if sd * spec.nodes < TRAPEZOID_RESOLUTION:
        z, w = _hermite_table(spec.nodes)
        return sd * z, w
    return _wrapped_trapezoid(sd, spec.nodes)


def _wrapped_trapezoid(sd: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    u = -np.pi / 2 + np.pi * np.arange(nodes) / nodes
    k = int(np.ceil(12 * sd / np.pi)) + 1
    shifts = np.pi * np.arange(-k, k + 1)
    density = np.exp(-((u[:, None] + shifts[None, :]) ** 2) / (2 * sd * sd)).sum(axis=1)
    return u, density / density.sum()


def _unpack(params) -> tuple[float, float, float]:
    if isinstance(params, StateParams):
        return params.v_x, params.v_p, params.v_phi
    v_x, v_p, v_phi = params
    return float(v_x), float(v_p), float(v_phi)


def rotated_variance(params, phi):
    """Quadrature variance ``V_x cos^2 phi + V_p sin^2 phi`` along angle ``phi``."""
    v_x, v_p, _ = _unpack(params)
    phi = np.asarray(phi, dtype=float)
    return v_x * np.cos(phi) ** 2 + v_p * np.sin(phi) ** 2


def wigner(params, x, p, spec: QuadratureSpec | None = None):
    """Wigner function of the phase-diffused state at phase-space points (x, p).

    ``x`` and ``p`` broadcast against each other; the result has their
    broadcast shape.
    """
    v_x, v_p, v_phi = _unpack(params)
    u, w = phase_nodes(v_phi, spec)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    xb, pb = np.broadcast_arrays(x, p)
    c = np.cos(u).reshape((-1,) + (1,) * xb.ndim)
    s = np.sin(u).reshape((-1,) + (1,) * xb.ndim)
    x_rot = xb * c + pb * s
    p_rot = pb * c - xb * s
    g = np.exp(-(x_rot**2 / (2 * v_x) + p_rot**2 / (2 * v_p)))
    out = np.tensordot(w, g, axes=(0, 0))
    return out / (2 * np.pi * np.sqrt(v_x * v_p))


def homodyne_pdf(params, theta: float, x, spec: QuadratureSpec | None = None):
    """Probability density of the rotated quadrature ``x_theta``."""
    v_x, v_p, v_phi = _unpack(params)
    u, w = phase_nodes(v_phi, spec)
    var = rotated_variance((v_x, v_p, v_phi), u + theta)
    x = np.asarray(x, dtype=float)
    var = var.reshape((-1,) + (1,) * x.ndim)
    g = np.exp(-(x**2) / (2 * var)) / np.sqrt(2 * np.pi * var)
    return np.tensordot(w, g, axes=(0, 0))


def check_edges(edges) -> np.ndarray:
    """Validate interior bin edges; returns them as a float array."""
    edges = np.asarray(edges, dtype=float).reshape(-1)
    if not np.all(np.isfinite(edges)):
        raise ValueError("bin edges must be finite")
    bad = np.nonzero(np.diff(edges) <= 0)[0]
    if bad.size:
        i = int(bad[0]) + 1
        raise ValueError(f"bin edges not strictly increasing at index {i}: {edges[i - 1]!r} >= {edges[i]!r}")
    return edges


def _bin_coefficients(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients expressing each bin mass through the tail masses of its ends.

    With ``t(q) = Pr(|X| > |q|) / 2`` the mass of ``[a, b)`` is
    ``t(b) - t(a)`` below zero, ``t(a) - t(b)`` above zero and
    ``1 - t(a) - t(b)`` for the bin straddling zero.  Writing the masses as
    ``c + A t(a) + B t(b)`` keeps far-tail bins free of cancellation.
    """
    lo = np.concatenate([[-np.inf], edges])
    hi = np.concatenate([edges, [np.inf]])
    neg = hi <= 0
    pos = lo >= 0
    c = np.where(neg | pos, 0.0, 1.0)
    a = np.where(neg, -1.0, np.where(pos, 1.0, -1.0))
    b = np.where(neg, 1.0, np.where(pos, -1.0, -1.0))
    return c, a, b


def _mixture_bin_probs(edges: np.ndarray, sd: np.ndarray, w: np.ndarray, coeffs=None) -> np.ndarray:
    c, a, b = coeffs if coeffs is not None else _bin_coefficients(edges)
    tail = w @ ndtr(-np.abs(edges[None, :] / sd[:, None]))
    t_lo = np.concatenate([[0.0], tail])
    t_hi = np.concatenate([tail, [0.0]])
    return c + a * t_lo + b * t_hi


def bin_probabilities(params, theta: float, edges, spec: QuadratureSpec | None = None) -> np.ndarray:
    """Probabilities of the L = len(edges)+1 bins, outer bins open to +-inf."""
    edges = check_edges(edges)
    return _bin_probabilities(_unpack(params), theta, edges, spec)


def _bin_probabilities(params, theta, edges, spec):
    v_x, v_p, v_phi = params
    u, w = phase_nodes(v_phi, spec)
    sd = np.sqrt(rotated_variance((v_x, v_p, v_phi), u + theta))
    return _mixture_bin_probs(edges, sd, w)


def purity(params, spec: QuadratureSpec | None = None) -> float:
    """Purity ``4 pi \\iint W^2``.

    Each phase component of W is a normalized Gaussian, so the overlap
    integral of two components at angles u, u' only depends on u - u'
    through ``det(S(u) + S(u')) = 4 V_x V_p cos^2 + (V_x + V_p)^2 sin^2``.
    The remaining double phase average is a tensor Gauss-Hermite sum.
    """
    v_x, v_p, v_phi = _unpack(params)
    u, w = phase_nodes(v_phi, spec)
    d = u[:, None] - u[None, :]
    det = 4 * v_x * v_p * np.cos(d) ** 2 + (v_x + v_p) ** 2 * np.sin(d) ** 2
    return float(2 * (w @ (det**-0.5) @ w))


def purity_batch(samples, spec: QuadratureSpec | None = None) -> np.ndarray:
    """:func:`purity` of each row of an (n, 3) array of parameter vectors."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    return np.array([purity(row, spec) for row in samples])
