"""Bayesian tomography of phase-diffused squeezed vacuum from binned homodyne data.

The forward model lives in :mod:`bayestomo.state`, data handling in
:mod:`bayestomo.data`, the multinomial likelihood in
:mod:`bayestomo.likelihood`, Metropolis-Hastings sampling in
:mod:`bayestomo.sampler`, posterior analysis and the Fisher cross-check in
:mod:`bayestomo.analysis` and Wigner reconstruction in
:mod:`bayestomo.reconstruct`.  ``python -m bayestomo`` runs the batch
pipeline.
"""

__version__ = "0.1.0"

from .state import (
    PhysicalityError,
    QuadratureSpec,
    StateParams,
    bin_probabilities,
    homodyne_pdf,
    purity,
    rotated_variance,
    wigner,
)
from .data import (
    Dataset,
    QuadratureHistogram,
    SampleSet,
    bin_samples,
    load_dataset,
    load_histogram,
    load_samples,
    save_dataset,
    save_histogram,
    simulate_dataset,
    simulate_samples,
)
from .likelihood import LikelihoodModel, likelihood_ratio_log, log_likelihood
from .sampler import (
    Chain,
    ChainState,
    ProposalSpec,
    SamplerConfig,
    init_params,
    mh_step,
    run_chain,
    run_chains,
    run_greedy_ml,
)
from .analysis import (
    compare,
    derived_posterior,
    fisher_matrix,
    gelman_rubin,
    marginal_histogram,
    summarize,
)
from .reconstruct import WignerGrid, reconstruct_wigner

TABLE1_TRUTH = StateParams(0.316, 6.889, 0.171)
