"""Stale-read probabilities and quorum tuning for Dynamo-style partial quorums."""

from .dist_core import HypoexponentialSpec, hypoexp_cdf, hypoexp_pdf, spacing_rate
from .errors import NumericalInstabilityError, UnsupportedMethodError, ValidationError
from .model import DelayModel, QuorumSpec
from .quorum_pmf import (
    QuorumSizePmf,
    mean_quorum_size,
    quorum_size_at_read_pmf,
    quorum_size_pmf,
)
from .sim import SimConfig, SimResult, estimate_pt, estimate_pt_batch, estimate_quorum_pmf, run_trial
from .staleness import (
    StalenessEstimate,
    analytic_general_pt,
    closed_form_pt,
    exact_pt,
    instantaneous_read_limit,
    staleness,
    worst_case_bound,
)
from .tune import TuningRequest, TuningResult, expected_latency, min_visibility_delay, tune

__version__ = "0.1.0"
