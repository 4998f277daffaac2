"""Numerical ground truth: steady state of the truncated two-age chain.

The infinite chain is cut at age N per coordinate with a saturating clamp
(an age that would exceed N stays at N), which keeps the operator
row-stochastic and makes the truncation error quantifiable: the clamped
stationary law is the image of the infinite-chain law under the clamp map,
so interior entries are exact and all distortion lives in the two boundary
masses Pr(delta_d >= N) and Pr(delta_e >= N), which are tracked and attached
to every reported metric as rigorous error bounds.

Transition entries come from model.transition_distribution; none of the
closed forms in analytics.py are consulted here, so agreement between the
two routes is evidence, not circularity.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .analytics import OutageConvention, DEFAULT_CONVENTION, outage_event
from .model import AgeState, ChannelParams, Policy, SecrecyReport, SecrecyThreshold, transition_distribution


class PowerIterationError(RuntimeError):
    """Raised when the iteration fails to reach the requested residual."""

    def __init__(self, residual: float, iterations: int, tol: float):
        super().__init__(
            f"no convergence after {iterations} iterations: residual {residual:.3e} > tol {tol:.3e}"
        )
        self.residual = residual
        self.iterations = iterations
        self.tol = tol


@dataclass(frozen=True)
class TruncatedChain:
    """Finite stand-in for the infinite age chain, ages clamped at N.

    States are (i, j), 1 <= i, j <= N. The one-slot law moves all mass by
    the four outcomes of model.transition_distribution; increments that
    would pass N saturate. p_both/p_only_e/p_only_d/p_neither are the four
    outcome masses read off that law.
    """

    params: ChannelParams
    policy: Policy
    truncation: int
    p_both: float
    p_only_e: float
    p_only_d: float
    p_neither: float

    @property
    def n_states(self) -> int:
        return self.truncation * self.truncation

    @property
    def reset_rate_d(self) -> float:
        return self.p_both + self.p_only_d

    @property
    def reset_rate_e(self) -> float:
        return self.p_both + self.p_only_e

    def stationary_tail_bounds(self) -> tuple[float, float]:
        """Exact stationary clamp masses (Pr(delta_d >= N), Pr(delta_e >= N))."""
        n = self.truncation
        return (
            (1.0 - self.reset_rate_d) ** (n - 1),
            (1.0 - self.reset_rate_e) ** (n - 1),
        )

    def apply(self, dist: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """One application of the transition operator: out = dist @ T.

        dist[i-1, j-1] holds the mass on (i, j). Column/row 0 of the output
        collect the single-reset outcomes, entry (0, 0) the double reset,
        the shifted diagonal block the no-reset outcome, with the last row
        and column folding the clamped increments back onto themselves.
        """
        n = self.truncation
        if dist.shape != (n, n):
            raise ValueError(f"distribution shape {dist.shape} != ({n}, {n})")
        if out is None:
            out = np.empty_like(dist)
        stay = self.p_neither
        np.multiply(dist[:-1, :-1], stay, out=out[1:, 1:])
        out[n - 1, 1:] += stay * dist[n - 1, :-1]
        out[1:, n - 1] += stay * dist[:-1, n - 1]
        out[n - 1, n - 1] += stay * dist[n - 1, n - 1]
        row = dist.sum(axis=1)
        col = dist.sum(axis=0)
        out[1:, 0] = self.p_only_e * row[:-1]
        out[n - 1, 0] += self.p_only_e * row[n - 1]
        out[0, 1:] = self.p_only_d * col[:-1]
        out[0, n - 1] += self.p_only_d * col[n - 1]
        out[0, 0] = self.p_both * row.sum()
        return out

    def to_sparse(self):
        """CSR matrix of the same operator, built state by state from
        transition_distribution. Quadratic in N; meant for cross-checks."""
        from scipy.sparse import csr_matrix

        n = self.truncation
        rows: list[int] = []
        cols: list[int] = []
        vals: list[float] = []
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                src = (i - 1) * n + (j - 1)
                acc: dict[int, float] = {}
                for succ, prob in transition_distribution(AgeState(i, j), self.params, self.policy):
                    di = min(succ.delta_d, n)  # saturating clamp
                    dj = min(succ.delta_e, n)
                    dst = (di - 1) * n + (dj - 1)
                    acc[dst] = acc.get(dst, 0.0) + prob
                for dst, prob in acc.items():
                    rows.append(src)
                    cols.append(dst)
                    vals.append(prob)
        return csr_matrix((vals, (rows, cols)), shape=(self.n_states, self.n_states))


def build_truncated_chain(
    params: ChannelParams,
    policy: Policy,
    truncation: int,
    max_tail_mass: float | None = None,
) -> TruncatedChain:
    """Assemble the clamped chain; optionally insist the clamp masses are small.

    max_tail_mass bounds the sum of the two stationary boundary masses; a
    truncation too small to meet it raises with the numbers rather than
    being accepted silently.
    """
    if not (isinstance(truncation, int) and truncation >= 2):
        raise ValueError(f"truncation must be an integer >= 2, got {truncation!r}")
    # Read the four outcome masses off the generic one-slot law.
    probe = AgeState(2, 2)
    masses = {(1, 1): 0.0, (3, 1): 0.0, (1, 3): 0.0, (3, 3): 0.0}
    for succ, prob in transition_distribution(probe, params, policy):
        masses[(succ.delta_d, succ.delta_e)] = prob
    chain = TruncatedChain(
        params=params,
        policy=policy,
        truncation=truncation,
        p_both=masses[(1, 1)],
        p_only_e=masses[(3, 1)],
        p_only_d=masses[(1, 3)],
        p_neither=masses[(3, 3)],
    )
    if max_tail_mass is not None:
        tail_d, tail_e = chain.stationary_tail_bounds()
        if tail_d + tail_e > max_tail_mass:
            raise ValueError(
                f"truncation {truncation} leaves clamp mass {tail_d + tail_e:.3e} "
                f"> requested bound {max_tail_mass:.3e}; increase the truncation"
            )
    return chain


@dataclass(frozen=True)
class SteadyState:
    """Converged stationary distribution of a truncated chain."""

    chain: TruncatedChain
    pi: np.ndarray  # pi[i-1, j-1] = stationary mass on (i, j)
    residual: float  # L1 norm of one further operator application
    iterations: int

    def prob(self, i: int, j: int) -> float:
        return float(self.pi[i - 1, j - 1])

    @property
    def boundary_mass_d(self) -> float:
        """Converged mass sitting on the clamped row delta_d = N."""
        return float(self.pi[-1, :].sum())

    @property
    def boundary_mass_e(self) -> float:
        return float(self.pi[:, -1].sum())


def default_max_iters(chain: TruncatedChain, tol: float) -> int:
    """Iteration budget: front passage through the truncation plus geometric
    mixing at the slower reset rate (for arbitrary starting distributions)."""
    rates = [r for r in (chain.reset_rate_d, chain.reset_rate_e) if r > 0.0]
    mixing = 0
    if rates:
        mixing = math.ceil(math.log(2.0 / tol) / min(rates))
    return chain.truncation + 50 + mixing


def steady_state(
    chain: TruncatedChain,
    tol: float = 1e-12,
    max_iters: int | None = None,
    init: np.ndarray | None = None,
) -> SteadyState:
    """Power iteration to the stationary law of the clamped operator.

    Stops when the L1 change of one application is <= tol; since the operator
    is an L1 contraction on differences, the returned iterate's stationarity
    residual is bounded by the same tol. Default start is the point mass at
    (1, 1), from which every truncated-state probability is determined by the
    last <= N slot outcomes, so the iteration settles to rounding noise after
    about N steps whatever the mixing rate.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    n = chain.truncation
    if init is None:
        current = np.zeros((n, n))
        current[0, 0] = 1.0
    else:
        current = np.asarray(init, dtype=float).copy()
        if current.shape != (n, n):
            raise ValueError(f"init shape {current.shape} != ({n}, {n})")
        if np.any(current < 0.0) or not math.isclose(current.sum(), 1.0, abs_tol=1e-9):
            raise ValueError("init must be a probability distribution over the states")
        current /= current.sum()
    if max_iters is None:
        max_iters = default_max_iters(chain, tol)
    scratch = np.empty_like(current)
    residual = math.inf
    for iteration in range(1, max_iters + 1):
        chain.apply(current, scratch)
        residual = float(np.abs(scratch - current).sum())
        current, scratch = scratch, current
        if residual <= tol:
            return SteadyState(chain=chain, pi=current, residual=residual, iterations=iteration)
    raise PowerIterationError(residual, max_iters, tol)


def mean_truncation_bound(chain: TruncatedChain) -> float:
    """Rigorous bound on the mean secrecy age lost to the clamp.

    Clamping never inflates the positive gap's contribution beyond the
    eavesdropper-side excess over N, whose stationary mean is
    (1 - r_e)^N / r_e. Infinite when that side never resets.
    """
    r_e = chain.reset_rate_e
    if r_e <= 0.0:
        return math.inf
    return (1.0 - r_e) ** chain.truncation / r_e


def outage_truncation_bound(chain: TruncatedChain) -> float:
    """Bound on any Pr(gap <= k) distortion: only histories with
    delta_e > N can flip the indicator, mass (1 - r_e)^N."""
    return (1.0 - chain.reset_rate_e) ** chain.truncation


def truncation_for_mean_tol(
    params: ChannelParams, policy: Policy, tol: float, minimum: int = 2
) -> int:
    """Smallest truncation whose mean_truncation_bound is <= tol."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    r_e = policy.p_tx * params.q
    if r_e <= 0.0:
        raise ValueError("q = 0: no finite truncation bounds the mean error")
    if r_e == 1.0:
        return max(minimum, 2)
    needed = math.log(tol * r_e) / math.log(1.0 - r_e)
    return max(minimum, 2, math.ceil(needed))


def gap_pmf_array(state: SteadyState) -> np.ndarray:
    """pmf[d] = converged Pr(gap = d) for d = 0..N-1; pmf[0] is all of gap <= 0."""
    pi = state.pi
    n = state.chain.truncation
    pmf = np.empty(n)
    pmf[0] = np.sum(np.tril(pi))  # gap <= 0, diagonal included
    for d in range(1, n):
        pmf[d] = np.trace(pi, offset=d)
    return pmf


def oracle_metrics(
    state: SteadyState,
    threshold: SecrecyThreshold | None = None,
    convention: OutageConvention = DEFAULT_CONVENTION,
) -> SecrecyReport:
    """Secrecy metrics summed exhaustively over the truncated support.

    The outage event index follows the requested convention (eta_th under
    strict, eta_th - 1 under the printed variant). Attached error bounds
    cover everything the clamp can distort.
    """
    chain = state.chain
    n = chain.truncation
    pmf = gap_pmf_array(state)
    gaps = np.arange(n)
    mean = float(np.dot(gaps, pmf))
    mean_bound = mean_truncation_bound(chain)
    if chain.reset_rate_e <= 0.0:
        mean = math.inf
    out_prob = None
    event = None
    label = None
    out_bound = 0.0
    if threshold is not None:
        event = outage_event(threshold, convention)
        label = convention.value
        # 1 minus the tail keeps the small quantity explicit
        tail = float(pmf[event + 1 :].sum()) if event + 1 < n else 0.0
        out_prob = 1.0 - tail
        out_bound = outage_truncation_bound(chain)
    return SecrecyReport(
        provenance="oracle",
        average_secrecy_age=mean,
        outage_probability=out_prob,
        outage_event=event,
        convention=label,
        gap_pmf={d: float(pmf[d]) for d in range(1, n)},
        mean_error_bound=mean_bound,
        outage_error_bound=out_bound,
    )


def write_pi_csv(state: SteadyState, path: str) -> None:
    """Dump the converged distribution as rows (i, j, probability)."""
    n = state.chain.truncation
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["i", "j", "probability"])
        for i in range(1, n + 1):
            row = state.pi[i - 1]
            for j in range(1, n + 1):
                writer.writerow([i, j, f"{row[j - 1]:.9g}"])
