"""Posterior summaries, convergence diagnostics and the Fisher-information cross-check."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .sampler import Chain
from .state import QuadratureSpec, _bin_probabilities, _unpack

PARAM_NAMES = ("v_x", "v_p", "v_phi")
MIN_RETAINED = 100
DEFAULT_MARGINAL_BINS = 100
FD_RELATIVE_STEP = 1e-5


class DiagnosticError(ValueError):
    """Too few samples, a stuck chain, or a non-finite derived quantity."""


class SingularFisherError(np.linalg.LinAlgError):
    """The Fisher matrix cannot be inverted; the binning carries no information on some direction."""


def param_index(param) -> int:
    if isinstance(param, str):
        try:
            return PARAM_NAMES.index(param)
        except ValueError:
            raise KeyError(f"unknown parameter {param!r}; expected one of {PARAM_NAMES}") from None
    i = int(param)
    if not 0 <= i < 3:
        raise KeyError(f"parameter index {param!r} out of range")
    return i


def _as_chains(chains) -> list[Chain]:
    if isinstance(chains, Chain):
        return [chains]
    return list(chains)


def pooled_samples(chains) -> np.ndarray:
    """Retained samples of all chains stacked in chain order, shape (n, 3)."""
    chains = _as_chains(chains)
    if not chains:
        raise DiagnosticError("no chains given")
    return np.concatenate([c.retained() for c in chains], axis=0)


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    mean: np.ndarray
    std: np.ndarray
    correlation: np.ndarray
    n_retained: int

    @property
    def covariance(self) -> np.ndarray:
        return self.correlation * np.outer(self.std, self.std)


def summarize_samples(samples: np.ndarray, min_samples: int = MIN_RETAINED) -> PosteriorSummary:
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    if n < min_samples:
        raise DiagnosticError(f"only {n} retained samples; need at least {min_samples}")
    mean = samples.mean(axis=0)
    std = samples.std(axis=0, ddof=1)
    if np.any(std <= 0):
        stuck = [PARAM_NAMES[i] for i in np.nonzero(std <= 0)[0]]
        raise DiagnosticError(f"degenerate chain: zero spread in {', '.join(stuck)} (stuck sampler?)")
    corr = np.corrcoef(samples, rowvar=False)
    corr = np.clip((corr + corr.T) / 2, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return PosteriorSummary(mean, std, corr, n)


def summarize(chains, min_samples: int = MIN_RETAINED) -> PosteriorSummary:
    """Mean, unbiased standard deviation and correlation of the pooled retained samples."""
    return summarize_samples(pooled_samples(chains), min_samples)


@dataclass(frozen=True, eq=False)
class Marginal:
    name: str
    centers: np.ndarray
    density: np.ndarray

    @property
    def width(self) -> float:
        return float(self.centers[1] - self.centers[0]) if self.centers.size > 1 else math.nan

    def integral(self) -> float:
        return float(np.sum(self.density) * self.width) if self.centers.size > 1 else 1.0

    @property
    def mode(self) -> float:
        return float(self.centers[np.argmax(self.density)])


def histogram_density(values, n_bins: int = DEFAULT_MARGINAL_BINS, name: str = "") -> Marginal:
    """Normalized histogram of ``values``.

    A constant sequence gets a single spike of unit mass on a bin of width
    ``max(1e-12, 1e-9 |value|)``.
    """
    values = np.asarray(values, dtype=float)
    if values.size < n_bins:
        raise DiagnosticError(f"{values.size} values cannot fill {n_bins} bins")
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        half = max(1e-12, 1e-9 * abs(lo)) / 2
        lo, hi = lo - half, lo + half
    counts, edges = np.histogram(values, bins=n_bins, range=(lo, hi))
    width = edges[1] - edges[0]
    density = counts / (values.size * width)
    return Marginal(name, (edges[:-1] + edges[1:]) / 2, density)


def marginal_histogram(chains, param, n_bins: int = DEFAULT_MARGINAL_BINS) -> Marginal:
    """Marginal posterior density of one parameter from the pooled retained samples."""
    i = param_index(param)
    samples = pooled_samples(chains)
    if samples.shape[0] < MIN_RETAINED:
        raise DiagnosticError(f"only {samples.shape[0]} retained samples; need at least {MIN_RETAINED}")
    return histogram_density(samples[:, i], n_bins, PARAM_NAMES[i])


def gelman_rubin(chains, param) -> float:
    """Potential scale reduction factor from the retained samples of >= 2 chains.

    Returns ``inf`` when the chains are internally constant but disagree, and
    ``sqrt((n-1)/n)`` when they are constant and agree.
    """
    chains = _as_chains(chains)
    if len(chains) < 2:
        raise ValueError("the potential scale reduction needs at least two chains")
    i = param_index(param)
    seqs = [c.retained()[:, i] for c in chains]
    n = len(seqs[0])
    if any(len(s) != n for s in seqs):
        raise ValueError("chains must have equal retained lengths")
    if n < 2:
        raise DiagnosticError("need at least two retained samples per chain")
    return psrf(np.vstack(seqs))


def psrf(seqs: np.ndarray) -> float:
    """Gelman-Rubin statistic of an (m chains, n samples) array."""
    m, n = seqs.shape
    w = float(np.mean(np.var(seqs, axis=1, ddof=1)))
    b = float(n * np.var(seqs.mean(axis=1), ddof=1))
    if w == 0:
        return math.inf if b > 0 else math.sqrt((n - 1) / n)
    return math.sqrt((w * (n - 1) / n + b / n) / w)


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    matrix: np.ndarray
    sigma: np.ndarray

    @property
    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


def _dataset_shape(shape):
    """Normalize a Dataset or an iterable of ``(theta, edges, n)`` to that triple form."""
    if isinstance(shape, Dataset):
        return [(h.theta, h.interior_edges, h.total) for h in shape.histograms]
    return [(float(th), np.asarray(e, dtype=float), n) for th, e, n in shape]


def bin_probability_gradients(params, theta, edges, spec=None, step=FD_RELATIVE_STEP, stencil=3):
    """Probabilities and their parameter derivatives, shape (L,) and (3, L).

    Central differences with relative step ``step`` per parameter (absolute
    step ``step`` for a zero parameter); ``stencil=5`` uses the fourth-order
    five-point formula.  A parameter too close to zero for a symmetric
    stencil gets a one-sided second-order difference.
    """
    lam = np.array(_unpack(params), dtype=float)
    p0 = _bin_probabilities(tuple(lam), theta, edges, spec)
    grads = np.empty((3, p0.size))
    for i in range(3):
        h = step * abs(lam[i]) if lam[i] != 0 else step

        def at(k):
            x = lam.copy()
            x[i] += k * h
            return _bin_probabilities(tuple(x), theta, edges, spec)

        if stencil not in (3, 5):
            raise ValueError("stencil must be 3 or 5")
        if lam[i] - (stencil // 2) * h < 0:
            # on the v_phi = 0 boundary: one-sided second-order formula
            grads[i] = (-3 * p0 + 4 * at(1) - at(2)) / (2 * h)
        elif stencil == 3:
            grads[i] = (at(1) - at(-1)) / (2 * h)
        else:
            grads[i] = (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h)
    return p0, grads


def fisher_matrix(params, shape, spec: QuadratureSpec | None = None, step: float = FD_RELATIVE_STEP,
                  stencil: int = 3) -> FisherMatrix:
    """Expected Fisher information of the binned multinomial model.

    ``F_ij = sum_theta N_theta sum_l dP_l/di dP_l/dj / P_l``.  ``shape`` is a
    :class:`Dataset` (its edges and per-setting totals are used) or an
    iterable of ``(theta, interior_edges, N_theta)``.
    """
    f = np.zeros((3, 3))
    for theta, edges, n in _dataset_shape(shape):
        if n < 1:
            raise ValueError(f"setting theta={theta} has no samples")
        p, g = bin_probability_gradients(params, theta, edges, spec, step, stencil)
        f += n * (g / p) @ g.T
    f = (f + f.T) / 2
    try:
        cov = np.linalg.inv(f)
    except np.linalg.LinAlgError:
        raise SingularFisherError("Fisher matrix is singular") from None
    if not np.all(np.isfinite(cov)) or np.linalg.cond(f) > 1e14:
        raise SingularFisherError(f"Fisher matrix is singular (condition number {np.linalg.cond(f):.3g})")
    diag = np.diag(cov)
    if np.any(diag <= 0):
        raise SingularFisherError("Fisher matrix is not positive definite")
    return FisherMatrix(f, np.sqrt(diag))


@dataclass(frozen=True)
class Comparison:
    mcmc_sigma: np.ndarray
    fisher_sigma: np.ndarray
    ratios: np.ndarray

    def table(self) -> str:
        rows = [f"{'parameter':<10}{'sigma_mcmc':>14}{'sigma_fisher':>14}{'ratio':>10}"]
        for name, a, b, r in zip(PARAM_NAMES, self.mcmc_sigma, self.fisher_sigma, self.ratios):
            rows.append(f"{name:<10}{a:>14.6g}{b:>14.6g}{r:>10.4f}")
        return "\n".join(rows)


def compare(summary: PosteriorSummary, fisher: FisherMatrix) -> Comparison:
    """Ratios of posterior standard deviations to Fisher standard deviations."""
    if isinstance(fisher, Exception):
        raise fisher
    return Comparison(summary.std.copy(), fisher.sigma.copy(), summary.std / fisher.sigma)


@dataclass(frozen=True, eq=False)
class DerivedPosterior:
    values: np.ndarray
    marginal: Marginal
    mean: float
    std: float


def derived_posterior(chains, f, n_bins: int = DEFAULT_MARGINAL_BINS, name: str = "derived",
                      vectorized: bool = False) -> DerivedPosterior:
    """Push the retained samples through ``f`` (parameters -> real).

    ``f`` receives a length-3 array ``(v_x, v_p, v_phi)``; with
    ``vectorized=True`` it receives the whole (n, 3) array instead.
    """
    samples = chains if isinstance(chains, np.ndarray) else pooled_samples(chains)
    if samples.shape[0] < MIN_RETAINED:
        raise DiagnosticError(f"only {samples.shape[0]} retained samples; need at least {MIN_RETAINED}")
    if vectorized:
        values = np.asarray(f(samples), dtype=float).reshape(-1)
    else:
        values = np.array([float(f(s)) for s in samples])
    bad = np.nonzero(~np.isfinite(values))[0]
    if bad.size:
        k = int(bad[0])
        raise DiagnosticError(f"{name} is not finite ({values[k]!r}) at retained sample {k}: {samples[k].tolist()}")
    marginal = histogram_density(values, n_bins, name)
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return DerivedPosterior(values, marginal, float(values.mean()), std)
