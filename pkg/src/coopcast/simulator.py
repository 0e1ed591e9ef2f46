"""Slot-by-slot Monte-Carlo simulation of source-only and cooperative flooding.

Every slot redraws the positions of all nodes uniformly in the cell, draws an
independent ``Exp(1)`` fading power per receiver, and each unreached node
decodes its nearest active transmitter iff ``|h|**2 / (1 + r**alpha) >= theta``.
Concurrent transmissions are neither combined nor treated as interference.

Trial ``i`` of a batch always uses the ``i``-th child of
``SeedSequence(seed)``, so results do not depend on execution order or on the
number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel_model import NetworkConfig, ProtocolKind
from .point_process import nearest_distances, sample_ball

DEFAULT_SEED = 20120105
MAX_SLOTS = 1_000_000
Z_95 = 1.959963984540054

__all__ = [
    "DEFAULT_SEED",
    "ProtocolKind",
    "SimSummary",
    "SimulationError",
    "TrialRecord",
    "density_nodes",
    "run_batch",
    "run_density_sweep",
    "run_trial",
    "simulate_trials",
    "summarize",
    "trial_streams",
]


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrialRecord:
    slots_used: int
    per_slot_successes: tuple[int, ...]

    def __post_init__(self):
        if len(self.per_slot_successes) != self.slots_used:
            raise ValueError("one success count per slot is required")
        if self.per_slot_successes and self.per_slot_successes[-1] < 1:
            raise ValueError("the final slot must reach at least one node")


@dataclass(frozen=True)
class SimSummary:
    n_trials: int
    mean_k: float
    std_err: float
    ci95: tuple[float, float]
    empirical_pmf: np.ndarray  # empirical_pmf[k - 1] = fraction of trials with K = k
    seed: int
    n_nodes: int = 0


def trial_streams(seed_seq: np.random.SeedSequence) -> tuple[np.random.Generator, np.random.Generator]:
    """Receiver/fading stream and relay-position stream for one trial.

    Keeping relay draws on their own stream means both protocols see the same
    receiver positions and fades for a given seed (common random numbers).
    """
    rx, relay = seed_seq.spawn(2)
    return np.random.default_rng(rx), np.random.default_rng(relay)


def run_trial(cfg: NetworkConfig, protocol: ProtocolKind, rng: np.random.Generator,
              max_slots: int = MAX_SLOTS, relay_rng: np.random.Generator | None = None) -> TrialRecord:
    """Simulate one broadcast until all ``cfg.n_nodes`` receivers hold the message.

    Relay positions come from ``relay_rng`` when given, else from ``rng``.
    """
    relay_rng = rng if relay_rng is None else relay_rng
    protocol = ProtocolKind(protocol)
    n = cfg.n_nodes
    radius, dims, alpha, theta = cfg.radius, cfg.dims, cfg.alpha, cfg.theta
    cooperative = protocol is ProtocolKind.COOPERATIVE
    reached = 0
    successes: list[int] = []
    while reached < n:
        if len(successes) >= max_slots:
            raise SimulationError(f"broadcast not finished after {max_slots} slots")
        waiting = n - reached
        receivers = sample_ball(waiting, radius, dims, rng)
        fading = rng.exponential(1.0, waiting)
        if cooperative and reached > 0:
            relays = sample_ball(reached, radius, dims, relay_rng)
            r = nearest_distances(receivers, relays)
        else:
            r = np.linalg.norm(receivers, axis=1)
        s = int(np.count_nonzero(fading >= theta * (1.0 + r**alpha)))
        successes.append(s)
        reached += s
    return TrialRecord(len(successes), tuple(successes))


def _seeded_trial(cfg, protocol, seed_seq, max_slots):
    rng, relay_rng = trial_streams(seed_seq)
    return run_trial(cfg, protocol, rng, max_slots, relay_rng=relay_rng)


def _run_chunk(cfg, protocol, seeds, max_slots):
    return [_seeded_trial(cfg, protocol, ss, max_slots) for ss in seeds]


def simulate_trials(cfg: NetworkConfig, protocol: ProtocolKind, n_trials: int, seed: int,
                    workers: int = 1, max_slots: int = MAX_SLOTS) -> list[TrialRecord]:
    if n_trials < 1:
        raise ValueError(f"n_trials must be positive, got {n_trials}")
    children = np.random.SeedSequence(seed).spawn(n_trials)
    if workers <= 1:
        records = []
        for i, ss in enumerate(children):
            try:
                records.append(_seeded_trial(cfg, protocol, ss, max_slots))
            except SimulationError as exc:
                raise SimulationError(f"trial {i}: {exc}") from exc
        return records
    step = math.ceil(n_trials / workers)
    chunks = [children[i:i + step] for i in range(0, n_trials, step)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_chunk, [cfg] * len(chunks), [protocol] * len(chunks),
                         chunks, [max_slots] * len(chunks))
        return [rec for part in parts for rec in part]


def summarize(records: list[TrialRecord], seed: int, n_nodes: int = 0) -> SimSummary:
    """Mean, standard error, normal 95% interval and empirical pmf of the slot counts."""
    ks = np.array([rec.slots_used for rec in records], dtype=float)
    n = ks.size
    mean = math.fsum(ks) / n
    if n > 1:
        var = math.fsum((ks - mean) ** 2) / (n - 1)
        std_err = math.sqrt(var / n)
    else:
        std_err = 0.0
    counts = np.bincount(ks.astype(int))[1:]
    return SimSummary(
        n_trials=n,
        mean_k=mean,
        std_err=std_err,
        ci95=(mean - Z_95 * std_err, mean + Z_95 * std_err),
        empirical_pmf=counts / n,
        seed=seed,
        n_nodes=n_nodes,
    )


def run_batch(cfg: NetworkConfig, protocol: ProtocolKind, n_trials: int, seed: int = DEFAULT_SEED,
              workers: int = 1) -> SimSummary:
    """Run ``n_trials`` independent broadcasts and aggregate them."""
    records = simulate_trials(cfg, protocol, n_trials, seed, workers=workers)
    return summarize(records, seed, cfg.n_nodes)


def density_nodes(rho: float, radius: float) -> int:
    """``ceil(rho * pi * R**2)``; the tiny slack absorbs float noise at exact integers."""
    return max(1, math.ceil(rho * math.pi * radius**2 - 1e-9))


def run_density_sweep(rho: float, radius_grid, cfg_template: NetworkConfig, protocol: ProtocolKind,
                      n_trials: int, seed: int = DEFAULT_SEED, workers: int = 1) -> list[SimSummary]:
    """One batch per radius with ``N = ceil(rho pi R**2)``; the SNR is taken from ``cfg_template``.

    Every radius reuses ``seed`` (common random numbers across the sweep).
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if cfg_template.dims != 2:
        raise ValueError("density sweeps are defined for dims == 2 only")
    out = []
    for radius in radius_grid:
        cfg = cfg_template.replace(radius=float(radius), n_nodes=density_nodes(rho, radius))
        out.append(run_batch(cfg, protocol, n_trials, seed, workers=workers))
    return out
