"""Seeded Monte Carlo engine for the slot-level system.

Each replication walks the exact one-slot law from state (1, 1) using one
uniform draw per slot (the same thresholds sample_slot uses, so a scalar
walk with the same stream visits the same states), then reduces the
observation window to a gap histogram. Replications are aggregated into
normal-approximation confidence intervals across replication means.

Seeding is stateless: replication r of base seed s draws from
SeedSequence(entropy=s, spawn_key=(r,)), so any execution order or degree
of parallelism yields bit-identical results.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analytics import OutageConvention, DEFAULT_CONVENTION, outage_event
from .model import ChannelParams, Policy, SecrecyThreshold, slot_thresholds

DEFAULT_HORIZON = 10**6
DEFAULT_BURN_IN = 10**4
DEFAULT_REPLICATIONS = 32

# ages are tracked in int64; keep far away from the edge
_MAX_SLOTS = 2**62

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class SimConfig:
    """Replication geometry and seeding.

    A replication simulates burn_in + horizon states starting at (1, 1) and
    keeps statistics over the last `horizon` of them (the initial state
    counts as the first observed state when burn_in = 0).
    """

    horizon: int = DEFAULT_HORIZON
    burn_in: int = DEFAULT_BURN_IN
    replications: int = DEFAULT_REPLICATIONS
    base_seed: int = 0
    threshold: Optional[SecrecyThreshold] = None

    def __post_init__(self) -> None:
        if not (isinstance(self.horizon, int) and self.horizon >= 1):
            raise ValueError(f"horizon must be an integer >= 1, got {self.horizon!r}")
        if not (isinstance(self.burn_in, int) and self.burn_in >= 0):
            raise ValueError(f"burn_in must be an integer >= 0, got {self.burn_in!r}")
        if self.burn_in >= self.horizon:
            raise ValueError("burn_in must be smaller than horizon")
        if not (isinstance(self.replications, int) and self.replications >= 1):
            raise ValueError(f"replications must be an integer >= 1, got {self.replications!r}")
        if not (isinstance(self.base_seed, int) and 0 <= self.base_seed < 2**64):
            raise ValueError("base_seed must fit an unsigned 64-bit integer")
        if self.burn_in + self.horizon >= _MAX_SLOTS:
            raise ValueError("burn_in + horizon too large: age counters could overflow")


@dataclass(frozen=True)
class ReplicationStats:
    """Sufficient statistics of one replication's observation window.

    gap_hist[k] counts observed slots with secrecy age exactly k, so
    gap_hist[0] is the mass of nonpositive gaps and the histogram alone
    determines the mean and any threshold frequency.
    """

    replication_index: int
    slots_observed: int
    gap_hist: np.ndarray
    state11_count: int

    @property
    def mean_secrecy_age(self) -> float:
        ks = np.arange(len(self.gap_hist))
        return float(ks @ self.gap_hist) / self.slots_observed

    def outage_at(self, k: int) -> float:
        """Observed frequency of {secrecy age <= k}."""
        if k < 0:
            raise ValueError("event index must be >= 0")
        above = self.gap_hist[k + 1 :].sum() if k + 1 < len(self.gap_hist) else 0
        return float(self.slots_observed - above) / self.slots_observed

    def gap_frequency(self, d: int) -> float:
        if d < len(self.gap_hist):
            return float(self.gap_hist[d]) / self.slots_observed
        return 0.0


@dataclass(frozen=True)
class SimEstimate:
    """Aggregated estimates with 95% half-widths (None when replications = 1)."""

    mean_secrecy_age: float
    mean_halfwidth: Optional[float]
    outage_estimate: Optional[float]
    outage_halfwidth: Optional[float]
    outage_event: Optional[int]
    empirical_gap_pmf: dict[int, float] = field(default_factory=dict)
    slots_observed: int = 0
    replications: int = 0


def _replication_rng(base_seed: int, replication_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(replication_index,))
    return np.random.default_rng(seq)


def run_replication(
    params: ChannelParams,
    policy: Policy,
    config: SimConfig,
    replication_index: int,
    trace_path: str | None = None,
) -> ReplicationStats:
    """Simulate one replication and reduce it to a gap histogram.

    The whole trajectory is materialized vectorized: ages follow from the
    running index of the most recent reset on each side. Memory is ~40 bytes
    per slot, fine for the default horizon; trace export is meant for small
    horizons only.
    """
    n_states = config.burn_in + config.horizon
    rng = _replication_rng(config.base_seed, replication_index)
    u = rng.random(n_states - 1)
    c1, c2, c3 = slot_thresholds(params, policy)
    d_reset = (u < c1) | ((u >= c2) & (u < c3))
    e_reset = u < c2
    times = np.arange(1, n_states, dtype=np.int64)
    # age(t) = t - time of last reset + 1, the start state acting as a reset at 0
    last_d = np.maximum.accumulate(np.where(d_reset, times, 0))
    last_e = np.maximum.accumulate(np.where(e_reset, times, 0))
    ages_d = np.empty(n_states, dtype=np.int64)
    ages_e = np.empty(n_states, dtype=np.int64)
    ages_d[0] = 1
    ages_e[0] = 1
    np.subtract(times, last_d, out=ages_d[1:])
    np.subtract(times, last_e, out=ages_e[1:])
    ages_d[1:] += 1
    ages_e[1:] += 1
    if trace_path is not None:
        _write_trace(trace_path, ages_d, ages_e)
    obs_d = ages_d[config.burn_in :]
    obs_e = ages_e[config.burn_in :]
    gap = obs_e - obs_d
    np.clip(gap, 0, None, out=gap)
    hist = np.bincount(gap, minlength=1)
    state11 = int(np.count_nonzero((obs_d == 1) & (obs_e == 1)))
    return ReplicationStats(
        replication_index=replication_index,
        slots_observed=int(obs_d.shape[0]),
        gap_hist=hist,
        state11_count=state11,
    )


def _write_trace(path: str, ages_d: np.ndarray, ages_e: np.ndarray) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["slot", "delta_d", "delta_e", "secrecy_age"])
        for t in range(len(ages_d)):
            gap = int(ages_e[t] - ages_d[t])
            writer.writerow([t, int(ages_d[t]), int(ages_e[t]), gap if gap > 0 else 0])


def _ci(values: Sequence[float]) -> tuple[float, Optional[float]]:
    arr = np.asarray(values, dtype=float)
    center = float(arr.mean())
    if arr.size < 2:
        return center, None
    spread = float(arr.std(ddof=1)) / math.sqrt(arr.size)
    return center, _Z95 * spread


def aggregate(stats: Sequence[ReplicationStats], event: int | None = None) -> SimEstimate:
    """Combine replications: across-replication CIs, pooled gap frequencies."""
    if not stats:
        raise ValueError("no replications to aggregate")
    mean, mean_hw = _ci([s.mean_secrecy_age for s in stats])
    out_prob: Optional[float] = None
    out_hw: Optional[float] = None
    if event is not None:
        out_prob, out_hw = _ci([s.outage_at(event) for s in stats])
    total = sum(s.slots_observed for s in stats)
    width = max(len(s.gap_hist) for s in stats)
    pooled = np.zeros(width, dtype=np.int64)
    for s in stats:
        pooled[: len(s.gap_hist)] += s.gap_hist
    pmf = {d: float(pooled[d]) / total for d in range(1, width) if pooled[d] > 0}
    return SimEstimate(
        mean_secrecy_age=mean,
        mean_halfwidth=mean_hw,
        outage_estimate=out_prob,
        outage_halfwidth=out_hw,
        outage_event=event,
        empirical_gap_pmf=pmf,
        slots_observed=total,
        replications=len(stats),
    )


def estimate(
    params: ChannelParams,
    policy: Policy,
    config: SimConfig,
    convention: OutageConvention = DEFAULT_CONVENTION,
    workers: int = 1,
) -> SimEstimate:
    """Run all replications (optionally on a thread pool) and aggregate.

    Results are identical for every worker count: each replication owns a
    stateless stream and the reduction runs in replication order.
    """
    indices = range(config.replications)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(lambda r: run_replication(params, policy, config, r), indices))
    else:
        stats = [run_replication(params, policy, config, r) for r in indices]
    event = None
    if config.threshold is not None:
        event = outage_event(config.threshold, convention)
    return aggregate(stats, event)
