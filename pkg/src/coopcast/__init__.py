"""Broadcast latency of source-only and cooperative flooding in finite wireless cells."""

from .channel_model import (
    NetworkConfig,
    ProtocolKind,
    StageDistribution,
    cdf_z,
    coop_success_prob,
    stage_success_pmf_noncoop,
    threshold,
)
from .latency_analytic import (
    LatencyResult,
    estimate_enumeration_cost,
    expected_latency,
    expected_latency_absorption,
    latency_pmf_enumeration,
    latency_pmf_markov,
)
from .simulator import SimSummary, TrialRecord, run_batch, run_density_sweep, run_trial

__all__ = [
    "LatencyResult",
    "NetworkConfig",
    "ProtocolKind",
    "SimSummary",
    "StageDistribution",
    "TrialRecord",
    "cdf_z",
    "coop_success_prob",
    "estimate_enumeration_cost",
    "expected_latency",
    "expected_latency_absorption",
    "latency_pmf_enumeration",
    "latency_pmf_markov",
    "run_batch",
    "run_density_sweep",
    "run_trial",
    "stage_success_pmf_noncoop",
    "threshold",
]
