"""Rayleigh fading combined with bounded path loss ``l(r) = 1 / (1 + r**alpha)``.

A link succeeds when ``|h|**2 / (1 + r**alpha) >= theta`` with ``|h|**2 ~ Exp(1)``
and ``theta = (2**rate - 1) / tx_snr``. Receiver positions are uniform in a
``dims``-ball of radius ``radius`` around the source.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .special_fn import log_binomial_pmf, scaled_lower_incomplete_gamma

# Closed-form nearest-transmitter success is used up to this many transmitters.
CLOSED_FORM_MAX_T = 20
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12


class QuadratureError(ArithmeticError):
    """Adaptive integration did not reach the requested tolerance."""


class ProtocolKind(str, enum.Enum):
    NON_COOPERATIVE = "non_cooperative"
    COOPERATIVE = "cooperative"


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class NetworkConfig:
    """Physical and geometric parameters of one broadcast cell.

    ``tx_snr`` is a linear power ratio ``P_tx / sigma_w**2``. ``theta_override``
    bypasses the rate/SNR derivation and is meant for tests.
    """

    n_nodes: int
    radius: float
    dims: int = 2
    alpha: float = 2.0
    rate: float = 1.0
    tx_snr: float = 1.0
    theta_override: float | None = None

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 1:
            raise ValueError(f"n_nodes must be a positive integer, got {self.n_nodes}")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.dims not in (1, 2, 3):
            raise ValueError(f"dims must be 1, 2 or 3, got {self.dims}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if not self.tx_snr > 0:
            raise ValueError(f"tx_snr must be positive, got {self.tx_snr}")
        if self.theta_override is not None and not self.theta_override >= 0:
            raise ValueError(f"theta_override must be non-negative, got {self.theta_override}")

    @classmethod
    def from_snr_db(cls, snr_db: float, **kwargs) -> NetworkConfig:
        return cls(tx_snr=db_to_linear(snr_db), **kwargs)

    @property
    def delta(self) -> float:
        return self.dims / self.alpha

    @property
    def theta(self) -> float:
        if self.theta_override is not None:
            return self.theta_override
        return threshold(self)

    def replace(self, **changes) -> NetworkConfig:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class StageDistribution:
    """Distribution of the number of newly reached nodes in one slot."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty vector")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n_receivers(self) -> int:
        return self.probs.size - 1

    def __getitem__(self, s):
        return self.probs[s]

    def __len__(self):
        return self.probs.size


def threshold(cfg: NetworkConfig) -> float:
    """Decoding threshold ``(2**rate - 1) / tx_snr``."""
    return (2.0**cfg.rate - 1.0) / cfg.tx_snr


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if math.isnan(theta) or theta < 0:
        raise ValueError(f"theta must be in [0, inf], got {theta}")
    return theta


def success_prob_source(theta: float, cfg: NetworkConfig) -> float:
    """Probability that a uniformly placed receiver decodes the source at the origin.

    Computed directly rather than as ``1 - cdf_z`` so small values keep their
    relative accuracy.
    """
    theta = _check_theta(theta)
    if theta == 0.0:
        return 1.0
    if math.isinf(theta):
        return 0.0
    x = cfg.radius**cfg.alpha * theta
    return math.exp(-theta) * scaled_lower_incomplete_gamma(cfg.delta, x)


def cdf_z(theta: float, cfg: NetworkConfig) -> float:
    """CDF of ``Z = |h|**2 / (1 + r**alpha)`` for a receiver uniform in the ball.

    ``F(theta) = 1 - delta e^-theta gamma(delta, R**alpha theta) / (R**d theta**delta)``,
    with ``F(0) = 0`` and ``F(inf) = 1``.
    """
    theta = _check_theta(theta)
    if theta == 0.0:
        return 0.0
    if math.isinf(theta):
        return 1.0
    return 1.0 - success_prob_source(theta, cfg)


def cdf_z_delta_one(theta: float, cfg: NetworkConfig) -> float:
    """Elementary form of :func:`cdf_z` valid only when ``dims == alpha``."""
    if not math.isclose(cfg.delta, 1.0):
        raise ValueError(f"requires delta == 1, got {cfg.delta}")
    theta = _check_theta(theta)
    if theta == 0.0:
        return 0.0
    if math.isinf(theta):
        return 1.0
    area = cfg.radius**cfg.dims
    return 1.0 - (math.exp(-theta) - math.exp(-theta * (area + 1.0))) / (area * theta)


def _binomial_stage(n_receivers: int, p_success: float) -> StageDistribution:
    if n_receivers < 0:
        raise ValueError(f"n_receivers must be non-negative, got {n_receivers}")
    probs = np.array([math.exp(log_binomial_pmf(n_receivers, s, p_success))
                      for s in range(n_receivers + 1)])
    # renormalize away last-ulp drift from the exp/log round trip
    probs /= math.fsum(probs)
    return StageDistribution(probs)


def stage_success_pmf_noncoop(n_receivers: int, cfg: NetworkConfig) -> StageDistribution:
    """Number of successes when the source alone transmits to ``n_receivers`` nodes."""
    if n_receivers < 1:
        raise ValueError(f"n_receivers must be positive, got {n_receivers}")
    return _binomial_stage(n_receivers, success_prob_source(cfg.theta, cfg))


def stage_success_pmf_noncoop_delta_one(n_receivers: int, cfg: NetworkConfig) -> np.ndarray:
    """Elementary ``delta == 1`` expansion of the source-only stage distribution.

    Kept separate from :func:`stage_success_pmf_noncoop` as an algebraic
    cross-check; it does not renormalize.
    """
    if not math.isclose(cfg.delta, 1.0):
        raise ValueError(f"requires delta == 1, got {cfg.delta}")
    theta = cfg.theta
    area = cfg.radius**cfg.dims
    good = math.exp(-theta) - math.exp(-theta * (area + 1.0))
    bad = area * theta - good
    scale = area * theta
    return np.array([
        math.comb(n_receivers, s) * (good / scale) ** s * (bad / scale) ** (n_receivers - s)
        for s in range(n_receivers + 1)
    ])


def _closed_form_finite_sum(n_tx: int, c: float) -> float:
    """``T! [sum_i (-1)^i / (c^(i+1) (T-1-i)!) - (-1)^(T-1) e^-c / c^T]``, evaluated as printed."""
    total = 0.0
    term = n_tx / c  # T! / ((T-1)! c)
    for i in range(n_tx):
        total += term if i % 2 == 0 else -term
        term *= (n_tx - 1 - i) / c
    log_tail = math.lgamma(n_tx + 1) - n_tx * math.log(c) - c
    tail = math.exp(log_tail)
    total -= tail if (n_tx - 1) % 2 == 0 else -tail
    return total


def _closed_form_series(n_tx: int, c: float) -> float:
    """Same quantity as ``_closed_form_finite_sum`` rearranged as ``sum_m T! (-c)^m / (T+m)!``."""
    total = 1.0
    term = 1.0
    m = 0
    while True:
        term *= -c / (n_tx + m + 1)
        total += term
        m += 1
        if abs(term) <= 1e-17 * abs(total):
            return total
        if m > 100_000:
            raise ArithmeticError("closed-form series did not converge")


def coop_success_prob_closed_form(n_tx: int, theta: float, radius: float, dims: int = 2) -> float:
    """Nearest-of-``n_tx`` success probability for ``delta = 1`` in closed form.

    The alternating finite sum cancels catastrophically when ``theta R**d`` is
    small relative to ``n_tx``; there the identical power series in
    ``theta R**d`` is summed instead.
    """
    if n_tx < 1:
        raise ValueError(f"n_tx must be positive, got {n_tx}")
    theta = _check_theta(theta)
    if math.isinf(theta):
        return 0.0
    c = theta * radius**dims
    if c == 0.0:
        return math.exp(-theta)
    if c >= n_tx:
        bracket = _closed_form_finite_sum(n_tx, c)
    else:
        bracket = _closed_form_series(n_tx, c)
    return math.exp(-theta) * bracket


def coop_success_prob_quadrature(n_tx: int, theta: float, cfg: NetworkConfig) -> float:
    """Nearest-of-``n_tx`` success probability by adaptive quadrature, any ``delta``.

    The nearest-transmitter law of ``r**alpha`` is integrated after substituting
    ``v = (r / R)**d``, which removes the ``y**(delta-1)`` endpoint singularity:
    ``T e^-theta int_0^1 (1 - v)**(T-1) exp(-theta R**alpha v**(1/delta)) dv``.
    """
    if n_tx < 1:
        raise ValueError(f"n_tx must be positive, got {n_tx}")
    theta = _check_theta(theta)
    if math.isinf(theta):
        return 0.0
    scale = theta * cfg.radius**cfg.alpha
    inv_delta = 1.0 / cfg.delta

    def integrand(v):
        return (1.0 - v) ** (n_tx - 1) * math.exp(-scale * v**inv_delta)

    value, abserr, info = integrate.quad(
        integrand, 0.0, 1.0, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=500, full_output=True
    )[:3]
    if abserr > max(1e-10, 1e-9 * abs(value)):
        raise QuadratureError(
            f"quadrature error estimate {abserr:.3g} too large (n_tx={n_tx}, theta={theta})"
        )
    return min(1.0, max(0.0, n_tx * math.exp(-theta) * value))


def coop_success_prob(n_tx: int, cfg: NetworkConfig) -> float:
    """Probability that a receiver at the origin decodes its nearest of ``n_tx`` uniform transmitters."""
    if n_tx < 1:
        raise ValueError(f"n_tx must be positive, got {n_tx}")
    if math.isclose(cfg.delta, 1.0) and n_tx <= CLOSED_FORM_MAX_T:
        p = coop_success_prob_closed_form(n_tx, cfg.theta, cfg.radius, cfg.dims)
        return min(1.0, max(0.0, p))
    return coop_success_prob_quadrature(n_tx, cfg.theta, cfg)


def stage_success_pmf_coop(n_receivers: int, n_transmitters: int, cfg: NetworkConfig) -> StageDistribution:
    """Stage distribution in a cooperative slot with ``n_transmitters`` reached nodes.

    With no reached nodes yet the source is still the transmitter.
    """
    if n_receivers < 1:
        raise ValueError(f"n_receivers must be positive, got {n_receivers}")
    if n_transmitters == 0:
        return stage_success_pmf_noncoop(n_receivers, cfg)
    return _binomial_stage(n_receivers, coop_success_prob(n_transmitters, cfg))


def stage_distribution(cfg: NetworkConfig, protocol: ProtocolKind, n_reached: int) -> StageDistribution:
    """Stage distribution from the state with ``n_reached`` of ``cfg.n_nodes`` reached."""
    n_receivers = cfg.n_nodes - n_reached
    if ProtocolKind(protocol) is ProtocolKind.NON_COOPERATIVE:
        return stage_success_pmf_noncoop(n_receivers, cfg)
    return stage_success_pmf_coop(n_receivers, n_reached, cfg)
