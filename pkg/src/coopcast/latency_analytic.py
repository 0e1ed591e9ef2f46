"""Expected broadcast latency from the per-slot outcome distributions.

The number of reached nodes evolves as an absorbing Markov chain on
``0..N``: from state ``t`` the next slot adds ``s`` nodes with the stage
probability of the current protocol. Three routes are provided:

* :func:`latency_pmf_enumeration` sums over every outcome sequence, which is
  exponential in the number of slots and kept as an oracle;
* :func:`latency_pmf_markov` iterates the state distribution forward;
* :func:`expected_latency_absorption` solves the hitting-time recursion with
  no truncation at all.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .channel_model import NetworkConfig, ProtocolKind, StageDistribution, stage_distribution
from .special_fn import composition_count, log_sum_exp

ENUMERATION_BUDGET = 200_000
COST_BUDGET = 1e9
DEFAULT_TAIL_TOL = 1e-9
MAX_K_PRIME = 10_000

__all__ = [
    "ENUMERATION_BUDGET",
    "COST_BUDGET",
    "CostEstimate",
    "EnumerationBudgetError",
    "LatencyResult",
    "Method",
    "NonConvergenceError",
    "StageDistribution",
    "estimate_enumeration_cost",
    "expected_latency",
    "expected_latency_absorption",
    "latency_pmf_enumeration",
    "latency_pmf_markov",
    "transition_matrix",
]


class NonConvergenceError(ArithmeticError):
    """The latency distribution cannot be resolved to the requested tolerance."""


class EnumerationBudgetError(RuntimeError):
    pass


class Method(str, enum.Enum):
    ENUMERATION = "enumeration"
    MARKOV_DP = "markov_dp"


@dataclass(frozen=True)
class LatencyResult:
    """Truncated latency distribution; ``pmf[k - 1] = P(K = k)`` for ``k = 1..k_prime``."""

    pmf: np.ndarray
    expected_k: float
    truncation_k_prime: int
    tail_mass: float
    method: Method = Method.MARKOV_DP

    def __post_init__(self):
        if np.any(self.pmf < -1e-15) or np.any(self.pmf > 1 + 1e-15):
            raise ValueError("pmf entries must lie in [0, 1]")
        if self.tail_mass < -1e-12:
            raise ValueError(f"negative tail mass {self.tail_mass}")


def _stage_table(cfg: NetworkConfig, protocol: ProtocolKind) -> list[np.ndarray]:
    return [stage_distribution(cfg, protocol, t).probs for t in range(cfg.n_nodes)]


def transition_matrix(cfg: NetworkConfig, protocol: ProtocolKind) -> np.ndarray:
    """Upper-triangular transition matrix on reached counts ``0..N``; ``N`` absorbs."""
    n = cfg.n_nodes
    P = np.zeros((n + 1, n + 1))
    for t, probs in enumerate(_stage_table(cfg, protocol)):
        P[t, t:] = probs
    P[n, n] = 1.0
    return P


def latency_pmf_enumeration(cfg: NetworkConfig, protocol: ProtocolKind, k: int,
                            budget: int = ENUMERATION_BUDGET) -> float:
    """``P(K = k)`` by explicit summation over every outcome sequence ``(S_1, ..., S_k)``.

    Each sequence has ``S_1..S_{k-1} >= 0``, ``S_k >= 1`` and total ``N``; its
    probability is the product of stage probabilities, accumulated in logs.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    n = cfg.n_nodes
    count = composition_count(n, k)
    if count > budget:
        raise EnumerationBudgetError(
            f"{count} outcome sequences for N={n}, k={k} exceed the budget of {budget}"
        )
    with np.errstate(divide="ignore"):
        log_stage = [np.log(p) for p in _stage_table(cfg, ProtocolKind(protocol))]
    terms: list[float] = []

    def walk(stage: int, reached: int, log_prob: float) -> None:
        remaining = n - reached
        if stage == k:
            # last slot must finish the broadcast
            terms.append(log_prob + log_stage[reached][remaining])
            return
        # intermediate slots may not finish it
        for s in range(remaining):
            walk(stage + 1, reached + s, log_prob + log_stage[reached][s])

    walk(1, 0, 0.0)
    return math.exp(log_sum_exp(terms))


def latency_pmf_markov(cfg: NetworkConfig, protocol: ProtocolKind, k_prime: int) -> LatencyResult:
    """Forward iteration of the reached-count distribution for ``k_prime`` slots."""
    if k_prime < 1:
        raise ValueError(f"k_prime must be positive, got {k_prime}")
    P = transition_matrix(cfg, ProtocolKind(protocol))
    return _forward(P, k_prime, k_prime)


def _forward(P: np.ndarray, k_min: int, k_max: int, stop=None) -> LatencyResult:
    n = P.shape[0] - 1
    Q = P[:n, :n]
    finish = P[:n, n]
    state = np.zeros(n)
    state[0] = 1.0
    pmf: list[float] = []
    tail = 1.0
    for k in range(1, k_max + 1):
        pmf.append(math.fsum(state * finish))
        state = state @ Q
        tail = math.fsum(state)
        if k >= k_min and stop is not None and stop(pmf, tail):
            break
    pmf_arr = np.array(pmf)
    expected = math.fsum(np.arange(1, len(pmf) + 1) * pmf_arr)
    return LatencyResult(pmf=pmf_arr, expected_k=expected, truncation_k_prime=len(pmf),
                         tail_mass=max(tail, 0.0), method=Method.MARKOV_DP)


def _progress_floor(P: np.ndarray) -> float:
    n = P.shape[0] - 1
    stay = np.diag(P)[:n]
    return float(np.min(1.0 - stay))


def expected_latency(cfg: NetworkConfig, protocol: ProtocolKind,
                     tail_tol: float = DEFAULT_TAIL_TOL, max_k_prime: int = MAX_K_PRIME) -> LatencyResult:
    """Truncated expectation ``sum_{k <= K'} k P(K = k)`` with ``K'`` grown adaptively.

    ``K'`` stops growing once the tail mass is below ``tail_tol`` and the bound
    ``tail_mass * (K' + N / p_min)`` on the omitted expectation is below
    ``tail_tol * K_bar``, where ``p_min`` is the smallest per-slot chance of
    any progress over all transient states.

    Raises
    ------
    NonConvergenceError
        When some state can make no progress, or ``max_k_prime`` is reached.
    """
    if not 0 < tail_tol < 1:
        raise ValueError(f"tail_tol must lie in (0, 1), got {tail_tol}")
    P = transition_matrix(cfg, ProtocolKind(protocol))
    p_min = _progress_floor(P)
    if not p_min > 0:
        raise NonConvergenceError(
            f"per-slot success probability underflows to zero (theta={cfg.theta:.6g})"
        )
    n = cfg.n_nodes

    def done(pmf, tail):
        k_prime = len(pmf)
        partial = math.fsum(k * p for k, p in enumerate(pmf, start=1))
        return tail < tail_tol and tail * (k_prime + n / p_min) < tail_tol * partial

    result = _forward(P, 1, max_k_prime, stop=done)
    if not done(list(result.pmf), result.tail_mass):
        raise NonConvergenceError(
            f"tail mass {result.tail_mass:.3g} still above tolerance at K'={max_k_prime}"
        )
    return result


def expected_latency_absorption(cfg: NetworkConfig, protocol: ProtocolKind) -> float:
    """Exact ``E[K]`` from ``E_t = (1 + sum_{s>=1} P(s|t) E_{t+s}) / (1 - P(0|t))``, ``E_N = 0``."""
    P = transition_matrix(cfg, ProtocolKind(protocol))
    n = cfg.n_nodes
    if not _progress_floor(P) > 0:
        raise NonConvergenceError("a transient state has zero chance of progress")
    E = np.zeros(n + 1)
    for t in range(n - 1, -1, -1):
        E[t] = (1.0 + math.fsum(P[t, t + 1:] * E[t + 1:])) / (1.0 - P[t, t])
    return float(E[0])


@dataclass(frozen=True)
class CostEstimate:
    operations: float
    overflowed: bool = False

    @property
    def feasible(self) -> bool:
        return not self.overflowed and self.operations <= COST_BUDGET


def estimate_enumeration_cost(n_nodes: int, k_prime: int, ops_per_eval: int) -> CostEstimate:
    """Operation count ``sum_{k=1}^{K'} X**k C(N, k)`` of the full outcome enumeration.

    The sum is exact in integers; a value too large for a float is reported as
    ``inf`` with ``overflowed`` set.
    """
    if n_nodes < 1 or k_prime < 1 or ops_per_eval < 1:
        raise ValueError("n_nodes, k_prime and ops_per_eval must all be positive")
    total = sum(ops_per_eval**k * math.comb(n_nodes + k - 2, k - 1) for k in range(1, k_prime + 1))
    try:
        return CostEstimate(float(total))
    except OverflowError:
        return CostEstimate(math.inf, overflowed=True)

