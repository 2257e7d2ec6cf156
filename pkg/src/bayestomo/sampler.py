"""Metropolis-Hastings sampling of the posterior over (V_x, V_p, V_phi).

The prior is flat on the physical region (positive variances, V_x V_p >= 1),
so the target density is the likelihood restricted to that region and a
proposal leaving it is rejected without evaluating the likelihood.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .likelihood import LikelihoodModel, log_ratio
from .seeding import CHAIN, GREEDY, derive_rng
from .state import QuadratureSpec, StateParams, is_physical

# random starts scored per chain; see select_start
DEFAULT_START_CANDIDATES = 512


@dataclass(frozen=True)
class ProposalSpec:
    """Per-parameter standard deviations of the Gaussian jump proposal."""

    sigma_x: float = 0.0042
    sigma_p: float = 0.022
    sigma_phi: float = 0.0037

    def __post_init__(self):
        if not all(s > 0 and math.isfinite(s) for s in self.as_array()):
            raise ValueError(f"proposal widths must be positive and finite: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.sigma_x, self.sigma_p, self.sigma_phi], dtype=float)

    @classmethod
    def from_array(cls, values) -> "ProposalSpec":
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class ChainState:
    params: np.ndarray
    log_lik: float
    accepted: bool = True


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int = 40_000
    n_chains: int = 4
    burn_in: int = 2_000
    thin: int = 10
    adapt: bool = True
    target_acceptance: float = 0.44
    seed: int = 0
    adapt_window: int = 100
    proposal: ProposalSpec = field(default_factory=ProposalSpec)
    threads: int = 1
    start_candidates: int = DEFAULT_START_CANDIDATES

    def __post_init__(self):
        if self.iterations <= self.burn_in:
            raise ValueError(f"iterations ({self.iterations}) must exceed burn_in ({self.burn_in})")
        if self.burn_in < 0 or self.thin < 1 or self.n_chains < 1 or self.adapt_window < 1:
            raise ValueError("burn_in >= 0, thin >= 1, n_chains >= 1 and adapt_window >= 1 are required")
        if self.start_candidates < 1:
            raise ValueError("start_candidates must be >= 1")
        if not 0 < self.target_acceptance < 1:
            raise ValueError("target_acceptance must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class Chain:
    """Full record of one chain; row 0 is the starting point."""

    samples: np.ndarray
    log_lik: np.ndarray
    accepted: np.ndarray
    seed: int
    proposal: ProposalSpec
    burn_in: int
    thin: int
    chain_index: int = 0
    initial_proposal: ProposalSpec | None = None

    def __post_init__(self):
        if not 0 <= self.burn_in < len(self.samples):
            raise ValueError("burn_in must index into the chain")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, i) -> ChainState:
        return ChainState(self.samples[i].copy(), float(self.log_lik[i]), bool(self.accepted[i]))

    @property
    def states(self) -> list[ChainState]:
        return [self[i] for i in range(len(self))]

    def retained_index(self) -> np.ndarray:
        return np.arange(self.burn_in, len(self), self.thin)

    def retained(self) -> np.ndarray:
        """Post burn-in samples at the thinning stride, shape (n, 3)."""
        return self.samples[self.burn_in::self.thin]

    def retained_log_lik(self) -> np.ndarray:
        return self.log_lik[self.burn_in::self.thin]

    def acceptance_rate(self, after_burn_in: bool = True) -> float:
        acc = self.accepted[self.burn_in + 1:] if after_burn_in else self.accepted[1:]
        return float(np.mean(acc)) if acc.size else math.nan


def _as_target(data, spec):
    if isinstance(data, Dataset):
        if data.total == 0:
            raise ValueError("dataset has no counts")
        return LikelihoodModel(data, spec)
    if isinstance(data, LikelihoodModel):
        if data.data.total == 0:
            raise ValueError("dataset has no counts")
        return data
    if callable(data):
        return data
    raise TypeError("data must be a Dataset, a LikelihoodModel or a log-likelihood callable")


def mh_step(current: ChainState, data, proposal, rng: np.random.Generator,
            greedy: bool = False, spec: QuadratureSpec | None = None) -> ChainState:
    """One Metropolis-Hastings transition.

    Draws three normals for the jump and one uniform on every call, so the
    stream position does not depend on the outcome.  With ``greedy`` a move
    is taken only if it does not lower the likelihood.
    """
    target = _as_target(data, spec)
    sigma = proposal.as_array() if isinstance(proposal, ProposalSpec) else np.asarray(proposal, float)
    x0 = np.asarray(current.params, dtype=float)
    xi = x0 + sigma * rng.standard_normal(3)
    u = rng.random()
    if not is_physical(*xi):
        return ChainState(x0, current.log_lik, False)
    ll = float(target(xi))
    lr = log_ratio(ll, current.log_lik)
    if greedy:
        ok = lr >= 0 and ll != -math.inf
    else:
        ok = math.log(u) < lr if u > 0 else lr > -math.inf
    if ok:
        return ChainState(xi, ll, True)
    return ChainState(x0, current.log_lik, False)


def init_params(rng: np.random.Generator) -> StateParams:
    """Random physical start: (V_x, V_p) uniform on (0, 10]^2 with V_x V_p >= 1, V_phi on [0, 1]."""
    while True:
        v_x, v_p = 10.0 * (1.0 - rng.random(2))
        if v_x * v_p >= 1.0:
            break
    return StateParams(v_x, v_p, rng.random())


def select_start(target, rng: np.random.Generator, candidates: int = DEFAULT_START_CANDIDATES) -> StateParams:
    """Best of ``candidates`` random physical starts under ``target``.

    A single uniform draw often lands in the basin of a spurious mode with
    the squeezing axis swapped and very large phase noise.  Even inside the
    right basin a distant start can stall near ``V_phi = 0`` while the
    burn-in adaptation shrinks the proposal, leaving the chain short of
    equilibrium when the proposal freezes.  Keeping the most likely of a
    few hundred draws avoids both while leaving the start random.
    ``candidates=1`` is a plain :func:`init_params` draw.
    """
    best, best_ll = None, -math.inf
    for _ in range(candidates):
        p = init_params(rng)
        ll = float(target(p.as_array()))
        if best is None or ll > best_ll:
            best, best_ll = p, ll
    return best


def _run(init, target, config: SamplerConfig, rng, greedy: bool, chain_index: int) -> Chain:
    n = config.iterations
    samples = np.empty((n, 3))
    log_lik = np.empty(n)
    accepted = np.zeros(n, dtype=bool)
    x = np.asarray(init.as_array() if isinstance(init, StateParams) else init, dtype=float)
    if not is_physical(*x):
        raise ValueError(f"initial point {x} is not physical")
    state = ChainState(x, float(target(x)), True)
    if state.log_lik == -math.inf:
        raise ValueError(f"initial point {x} has zero likelihood")
    samples[0], log_lik[0], accepted[0] = state.params, state.log_lik, True
    sigma = config.proposal.as_array()
    window = config.adapt_window
    # greedy runs keep adapting so the step shrinks as the climb approaches the peak
    adapt_until = n if greedy else config.burn_in
    for t in range(1, n):
        state = mh_step(state, target, sigma, rng, greedy=greedy)
        samples[t], log_lik[t], accepted[t] = state.params, state.log_lik, state.accepted
        if config.adapt and t <= adapt_until and t % window == 0:
            rate = accepted[t - window + 1:t + 1].mean()
            sigma = sigma * math.exp((rate - config.target_acceptance) / 2)
    return Chain(samples, log_lik, accepted, config.seed, ProposalSpec.from_array(sigma),
                 config.burn_in, config.thin, chain_index, config.proposal)


def run_chain(init, data, config: SamplerConfig, chain_index: int = 0,
              spec: QuadratureSpec | None = None, rng: np.random.Generator | None = None) -> Chain:
    """Run one chain of ``config.iterations`` states (including the start).

    ``init=None`` picks the start with :func:`select_start` from the chain's
    own stream.  The proposal widths are adapted toward the target acceptance
    in windows during burn-in and frozen afterwards.
    """
    target = _as_target(data, spec)
    rng = rng or derive_rng(config.seed, CHAIN, chain_index)
    if init is None:
        init = select_start(target, rng, config.start_candidates)
    return _run(init, target, config, rng, greedy=False, chain_index=chain_index)


def run_chains(data, config: SamplerConfig, inits=None, spec: QuadratureSpec | None = None) -> list[Chain]:
    """Run ``config.n_chains`` independent chains, up to ``config.threads`` at once."""
    target = _as_target(data, spec)
    inits = list(inits) if inits is not None else [None] * config.n_chains

    def one(i):
        return run_chain(inits[i], target, config, chain_index=i)

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            return list(pool.map(one, range(config.n_chains)))
    return [one(i) for i in range(config.n_chains)]


@dataclass(frozen=True, eq=False)
class GreedyResult:
    params: StateParams
    log_lik: float
    trace: Chain


def run_greedy_ml(init, data, config: SamplerConfig, spec: QuadratureSpec | None = None,
                  rng: np.random.Generator | None = None) -> tuple[StateParams, float]:
    """Hill-climbing variant that only accepts moves with ``ln r >= 0``.

    Returns the best point and its log-likelihood.  Use
    :func:`greedy_search` to also get the trace.
    """
    res = greedy_search(init, data, config, spec, rng)
    return res.params, res.log_lik


def greedy_search(init, data, config: SamplerConfig, spec: QuadratureSpec | None = None,
                  rng: np.random.Generator | None = None) -> GreedyResult:
    target = _as_target(data, spec)
    rng = rng or derive_rng(config.seed, GREEDY)
    if init is None:
        init = select_start(target, rng, config.start_candidates)
    trace = _run(init, target, config, rng, greedy=True, chain_index=0)
    best = int(np.argmax(trace.log_lik))
    return GreedyResult(StateParams.from_array(trace.samples[best]), float(trace.log_lik[best]), trace)
