"""Binomial point processes in a ``d``-ball and nearest-neighbour distance laws.

Analytic laws here take the reference point at the centre of the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel_model import NetworkConfig


@dataclass(frozen=True)
class DiskWindow:
    radius: float
    dims: int = 2

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.dims not in (1, 2, 3):
            raise ValueError(f"dims must be 1, 2 or 3, got {self.dims}")

    @classmethod
    def of(cls, cfg: NetworkConfig) -> DiskWindow:
        return cls(cfg.radius, cfg.dims)

    def measure_ratio(self, r: float) -> float:
        """Fraction of the window covered by a centred ball of radius ``r``."""
        return (r / self.radius) ** self.dims


@dataclass(frozen=True)
class PointSet:
    """Positions as an ``(n, d)`` array; every row lies inside the window."""

    positions: np.ndarray

    def __len__(self):
        return self.positions.shape[0]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.positions, axis=1)


def sample_ball(n: int, radius: float, dims: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. uniform points in the ``dims``-ball, as an ``(n, dims)`` array.

    The radius is drawn by inverse CDF, ``R * u**(1/d)``, and the direction as a
    normalized Gaussian vector.
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if n == 0:
        return np.empty((0, dims))
    direction = rng.standard_normal((n, dims))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / dims)
    return direction * r[:, None]


def sample_bpp(n: int, window: DiskWindow, rng: np.random.Generator) -> PointSet:
    return PointSet(sample_ball(n, window.radius, window.dims, rng))


def nearest_distances(receivers: np.ndarray, transmitters: np.ndarray) -> np.ndarray:
    """Distance from each receiver row to its nearest transmitter row."""
    if transmitters.shape[0] == 0:
        raise ValueError("transmitter set is empty")
    diff = receivers[:, None, :] - transmitters[None, :, :]
    return np.sqrt(np.min(np.einsum("ijk,ijk->ij", diff, diff), axis=1))


def nearest_distance(receiver, transmitters: PointSet) -> float:
    """Euclidean distance from ``receiver`` to the closest point of ``transmitters``."""
    pts = np.asarray(transmitters.positions, dtype=float)
    if pts.shape[0] == 0:
        raise ValueError("transmitter set is empty")
    return float(np.min(np.linalg.norm(pts - np.asarray(receiver, dtype=float), axis=1)))


def nn_ccdf(r: float, n_th: int, n_points: int, window: DiskWindow) -> float:
    """P(distance from the centre to the ``n_th`` nearest of ``n_points`` exceeds ``r``)."""
    if not 0 <= r <= window.radius:
        raise ValueError(f"r must lie in [0, {window.radius}], got {r}")
    if not 1 <= n_th <= n_points:
        raise ValueError(f"need 1 <= n_th <= n_points, got n_th={n_th}, n_points={n_points}")
    p = window.measure_ratio(r)
    return math.fsum(
        math.comb(n_points, i) * p**i * (1.0 - p) ** (n_points - i) for i in range(n_th)
    )


def nn_alpha_pdf(y: float, n_points: int, cfg: NetworkConfig) -> float:
    """Density of ``r_1**alpha``, the nearest-of-``n_points`` distance raised to ``alpha``.

    ``(delta T / R**(dT)) (R**d - y**delta)**(T-1) y**(delta-1)`` on ``[0, R**alpha]``.
    """
    upper = cfg.radius**cfg.alpha
    if not 0 <= y <= upper * (1 + 1e-15):
        raise ValueError(f"y must lie in [0, {upper}], got {y}")
    if n_points < 1:
        raise ValueError(f"n_points must be positive, got {n_points}")
    delta = cfg.delta
    if y == 0.0:
        if delta < 1:
            return math.inf
        if delta > 1:
            return 0.0
    # (R^d - y^delta)^(T-1) / R^(d(T-1)) = (1 - (y/R^alpha)^delta)^(T-1)
    frac = min(1.0, (y / upper) ** delta)
    area = cfg.radius**cfg.dims
    return delta * n_points * (1.0 - frac) ** (n_points - 1) * y ** (delta - 1) / area
