"""Closed-form secrecy metrics of the two-age chain.

Everything here is exact algebra on the stationary law of the chain defined
in model.py: the joint age distribution, the distribution of the positive
age gap, its mean, threshold outage probabilities under both exponent
conventions, and the transmit probability maximizing the throughput-style
objective p_tx * (1 - P_out).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import ChannelParams, Policy, SecrecyReport, SecrecyThreshold

# Switch to log-domain exponentiation for huge exponents; below this plain
# pow is exact enough and faster.
_LOG_POW_CUTOFF = 10**6


class OutageConvention(Enum):
    """Two readings of the outage threshold event.

    STRICT_DEFINITION evaluates Pr(secrecy age <= eta_th) itself, tail
    exponent eta_th. PAPER_PRINTED evaluates the widely printed closed form
    whose tail exponent is eta_th - 1; it equals the strict event at
    threshold eta_th - 1. The two differ by exactly the gap pmf at eta_th.
    """

    PAPER_PRINTED = "paper"
    STRICT_DEFINITION = "strict"

    @classmethod
    def from_label(cls, label: str) -> "OutageConvention":
        for member in cls:
            if member.value == label:
                return member
        raise ValueError(f"unknown convention label {label!r}; use 'paper' or 'strict'")


DEFAULT_CONVENTION = OutageConvention.STRICT_DEFINITION


@dataclass(frozen=True)
class StationaryQuery:
    """Index pair (i, j) of a joint stationary probability."""

    i: int
    j: int

    def __post_init__(self) -> None:
        if not (isinstance(self.i, int) and self.i >= 1):
            raise ValueError(f"i must be an integer >= 1, got {self.i!r}")
        if not (isinstance(self.j, int) and self.j >= 1):
            raise ValueError(f"j must be an integer >= 1, got {self.j!r}")


def geometric_power(base: float, n: int) -> float:
    """base**n for base in [0, 1], n >= 0, stable for very large n."""
    if n < 0:
        raise ValueError("negative exponent")
    if n > _LOG_POW_CUTOFF and 0.0 < base < 1.0:
        return math.exp(n * math.log(base))
    return base**n


def _rates(params: ChannelParams, policy: Policy) -> tuple[float, float, float]:
    """Per-slot reset rates of the two ages and the no-reset probability."""
    ptx = policy.p_tx
    rate_d = ptx * params.p
    rate_e = ptx * params.q
    stay = ptx * (1.0 - params.p) * (1.0 - params.q) + 1.0 - ptx
    return rate_d, rate_e, stay


def stationary_pi(query: StationaryQuery, params: ChannelParams, policy: Policy) -> float:
    """Joint stationary probability of the age pair (i, j).

    Three cases by the sign of i - j; the younger coordinate pins the slot of
    the most recent reset on its side, the excess on the other side decays
    geometrically in that side's survival probability.
    """
    i, j = query.i, query.j
    p, q, ptx = params.p, params.q, policy.p_tx
    rate_d, rate_e, stay = _rates(params, policy)
    if i == j:
        return ptx * p * q * geometric_power(stay, i - 1)
    if i > j:
        head = rate_d * ptx * (1.0 - p) * q
        return head * geometric_power(1.0 - rate_d, i - j - 1) * geometric_power(stay, j - 1)
    head = rate_e * ptx * (1.0 - q) * p
    return head * geometric_power(1.0 - rate_e, j - i - 1) * geometric_power(stay, i - 1)


def stationary_block(params: ChannelParams, policy: Policy, n: int) -> np.ndarray:
    """Dense (n, n) array of stationary_pi over 1 <= i, j <= n.

    Vectorized evaluation of the same three-case formula; block[i-1, j-1]
    equals stationary_pi(StationaryQuery(i, j), ...) up to rounding.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p, q, ptx = params.p, params.q, policy.p_tx
    rate_d, rate_e, stay = _rates(params, policy)
    idx = np.arange(n)
    gap = idx[None, :] - idx[:, None]  # j - i
    stay_pow = np.power(stay, np.minimum(idx[:, None], idx[None, :]))
    block = np.where(
        gap == 0,
        ptx * p * q * stay_pow,
        np.where(
            gap < 0,
            rate_d * ptx * (1.0 - p) * q * np.power(1.0 - rate_d, np.maximum(-gap - 1, 0)) * stay_pow,
            rate_e * ptx * (1.0 - q) * p * np.power(1.0 - rate_e, np.maximum(gap - 1, 0)) * stay_pow,
        ),
    )
    return block


def row_sum(i: int, params: ChannelParams, policy: Policy) -> float:
    """Marginal Pr(delta_d = i): geometric with the legitimate reset rate."""
    if not (isinstance(i, int) and i >= 1):
        raise ValueError(f"i must be an integer >= 1, got {i!r}")
    rate_d = policy.p_tx * params.p
    return rate_d * geometric_power(1.0 - rate_d, i - 1)


def col_sum(j: int, params: ChannelParams, policy: Policy) -> float:
    """Marginal Pr(delta_e = j): geometric with the eavesdropper reset rate."""
    if not (isinstance(j, int) and j >= 1):
        raise ValueError(f"j must be an integer >= 1, got {j!r}")
    rate_e = policy.p_tx * params.q
    return rate_e * geometric_power(1.0 - rate_e, j - 1)


def _gap_denominator(params: ChannelParams) -> float:
    # p + q - pq, the probability that a transmitted slot resets at least one age
    # divided by p_tx; zero only when both links are dead.
    denom = params.p + params.q - params.p * params.q
    if denom == 0.0:
        raise ValueError("p = q = 0: no resets ever happen, gap law undefined")
    return denom


def secrecy_gap_pmf(d: int, params: ChannelParams, policy: Policy) -> float:
    """Stationary Pr(delta_e - delta_d = d) for d >= 1.

    Geometric in d with ratio (1 - p_tx q). The mass at gaps <= 0 is the
    complement of positive_gap_mass.
    """
    if not (isinstance(d, int) and d >= 1):
        raise ValueError(f"d must be an integer >= 1, got {d!r}")
    denom = _gap_denominator(params)
    p, q, ptx = params.p, params.q, policy.p_tx
    return ptx * q * p * (1.0 - q) * geometric_power(1.0 - ptx * q, d - 1) / denom


def positive_gap_mass(params: ChannelParams, policy: Policy) -> float:
    """Stationary Pr(delta_e > delta_d) = p(1-q)/(p+q-pq); p_tx cancels."""
    denom = _gap_denominator(params)
    return params.p * (1.0 - params.q) / denom


def average_secrecy_age(params: ChannelParams, policy: Policy) -> float:
    """Stationary mean of max(delta_e - delta_d, 0), in slots.

    Infinite when q = 0 (the eavesdropper never decodes, its age diverges);
    reported as math.inf rather than raising so sweeps can tabulate it.
    """
    denom = _gap_denominator(params)  # rejects p = q = 0
    if params.q == 0.0:
        return math.inf
    p, q, ptx = params.p, params.q, policy.p_tx
    return p * (1.0 - q) / (ptx * q * denom)


def _outage_from_exponent(k: int, params: ChannelParams, policy: Policy) -> float:
    """Pr(secrecy age <= k) = 1 - sum of the gap pmf over d > k.

    Single code path for both conventions, so their bridge identity holds
    bit for bit.
    """
    denom = _gap_denominator(params)
    p, q, ptx = params.p, params.q, policy.p_tx
    tail = p * (1.0 - q) * geometric_power(1.0 - ptx * q, k) / denom
    return 1.0 - tail


def outage_probability(
    params: ChannelParams,
    policy: Policy,
    threshold: SecrecyThreshold,
    convention: OutageConvention = DEFAULT_CONVENTION,
) -> float:
    """Probability that the secrecy age fails to exceed the target lag.

    STRICT_DEFINITION: the event is secrecy age <= eta_th (tail exponent
    eta_th). PAPER_PRINTED: tail exponent eta_th - 1, i.e. the strict event
    at threshold eta_th - 1.
    """
    k = threshold.eta_th
    if convention is OutageConvention.PAPER_PRINTED:
        k -= 1
    return _outage_from_exponent(k, params, policy)


def outage_event(threshold: SecrecyThreshold, convention: OutageConvention) -> int:
    """The realized event index k: the convention's outage is Pr(gap <= k)."""
    if convention is OutageConvention.PAPER_PRINTED:
        return threshold.eta_th - 1
    return threshold.eta_th


def objective(
    params: ChannelParams,
    policy: Policy,
    threshold: SecrecyThreshold,
    convention: OutageConvention = DEFAULT_CONVENTION,
) -> float:
    """Throughput-style score p_tx * (1 - P_out) traded off by the policy."""
    return policy.p_tx * (1.0 - outage_probability(params, policy, threshold, convention))


def optimal_ptx(
    q: float,
    threshold: SecrecyThreshold,
    convention: OutageConvention = DEFAULT_CONVENTION,
) -> float:
    """Maximizer of the objective over p_tx in (0, 1]; independent of p.

    First-order condition of p_tx (1 - p_tx q)^k gives 1/(q (k+1)) with
    k the convention's tail exponent, clamped into (0, 1]. q = 0 makes the
    objective strictly increasing, so the boundary 1 is optimal.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    if q == 0.0:
        return 1.0
    k = outage_event(threshold, convention)
    return min(1.0 / (q * (k + 1)), 1.0)


def closed_form_report(
    params: ChannelParams,
    policy: Policy,
    threshold: SecrecyThreshold | None = None,
    convention: OutageConvention = DEFAULT_CONVENTION,
    gap_support: int = 64,
) -> SecrecyReport:
    """Bundle the closed-form metrics into a SecrecyReport.

    gap_support bounds the tabulated pmf only; means and outage stay exact.
    """
    pmf = {d: secrecy_gap_pmf(d, params, policy) for d in range(1, gap_support + 1)}
    out_prob = None
    event = None
    label = None
    if threshold is not None:
        out_prob = outage_probability(params, policy, threshold, convention)
        event = outage_event(threshold, convention)
        label = convention.value
    return SecrecyReport(
        provenance="closed_form",
        average_secrecy_age=average_secrecy_age(params, policy),
        outage_probability=out_prob,
        outage_event=event,
        convention=label,
        gap_pmf=pmf,
    )
