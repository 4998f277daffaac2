"""Truncated-chain steady state: operator correctness, convergence, bounds.

The oracle builds its transitions from model.transition_distribution alone,
so comparisons against the closed forms in analytics.py are genuine
cross-route checks. Two operator implementations exist on purpose (the
structured apply() and the per-state sparse matrix); they are compared here
and must stay independent.
"""

import csv
import math

import numpy as np
import pytest

from aoi_secrecy.analytics import (
    OutageConvention,
    StationaryQuery,
    average_secrecy_age,
    outage_probability,
    positive_gap_mass,
    secrecy_gap_pmf,
    stationary_block,
    stationary_pi,
)
from aoi_secrecy.model import ChannelParams, Policy, SecrecyThreshold, transition_distribution, AgeState
from aoi_secrecy.oracle import (
    PowerIterationError,
    build_truncated_chain,
    gap_pmf_array,
    mean_truncation_bound,
    oracle_metrics,
    outage_truncation_bound,
    steady_state,
    truncation_for_mean_tol,
    write_pi_csv,
)

P = ChannelParams(0.8, 0.2)
HALF = Policy(0.5)

# slow-mixing corner used where boundary masses need to be visible
SLOW = ChannelParams(0.3, 0.1)

PARAM_DRAWS = [
    (0.8, 0.2, 0.5),
    (0.15, 0.85, 1.0),
    (0.5, 0.5, 0.3),
    (1.0, 0.4, 0.7),
]


def random_dist(n, seed):
    rng = np.random.default_rng(seed)
    d = rng.random((n, n))
    return d / d.sum()


class TestChainConstruction:
    def test_outcome_masses_read_off_transition_law(self):
        chain = build_truncated_chain(P, HALF, 50)
        probs = {
            (s.delta_d, s.delta_e): pr
            for s, pr in transition_distribution(AgeState(2, 2), P, HALF)
        }
        assert chain.p_both == probs[(1, 1)]
        assert chain.p_only_e == probs[(3, 1)]
        assert chain.p_only_d == probs[(1, 3)]
        assert chain.p_neither == probs[(3, 3)]
        assert chain.reset_rate_d == pytest.approx(0.5 * 0.8, abs=1e-15)
        assert chain.reset_rate_e == pytest.approx(0.5 * 0.2, abs=1e-15)
        assert chain.n_states == 2500

    def test_truncation_must_be_at_least_two(self):
        with pytest.raises(ValueError):
            build_truncated_chain(P, HALF, 1)
        with pytest.raises(ValueError):
            build_truncated_chain(P, HALF, 40.0)

    def test_tail_mass_budget_enforced(self):
        # rate_e = 0.02: (0.98)^49 is about 0.37, nowhere near 1e-6
        with pytest.raises(ValueError, match="clamp mass"):
            build_truncated_chain(SLOW, Policy(0.2), 50, max_tail_mass=1e-6)
        build_truncated_chain(SLOW, Policy(0.2), 50)  # fine without the budget

    def test_stationary_tail_bounds_formula(self):
        chain = build_truncated_chain(SLOW, HALF, 80)
        tail_d, tail_e = chain.stationary_tail_bounds()
        assert tail_d == pytest.approx((1 - 0.15) ** 79, rel=1e-12)
        assert tail_e == pytest.approx((1 - 0.05) ** 79, rel=1e-12)


class TestOperator:
    def test_sparse_rows_are_stochastic(self):
        for p, q, ptx in PARAM_DRAWS:
            chain = build_truncated_chain(ChannelParams(p, q), Policy(ptx), 12)
            sums = np.asarray(chain.to_sparse().sum(axis=1)).ravel()
            assert np.allclose(sums, 1.0, atol=1e-12)

    def test_sparse_collapses_under_certain_delivery(self):
        chain = build_truncated_chain(ChannelParams(1.0, 1.0), Policy(1.0), 2)
        dense = chain.to_sparse().toarray()
        expected = np.zeros((4, 4))
        expected[:, 0] = 1.0  # every state jumps to (1, 1)
        assert np.array_equal(dense, expected)

    def test_apply_matches_sparse_matvec(self):
        n = 25
        for k, (p, q, ptx) in enumerate(PARAM_DRAWS):
            chain = build_truncated_chain(ChannelParams(p, q), Policy(ptx), n)
            dist = random_dist(n, seed=100 + k)
            via_apply = chain.apply(dist)
            flat = chain.to_sparse().T.dot(dist.reshape(-1))
            assert np.max(np.abs(via_apply - flat.reshape(n, n))) < 1e-14

    def test_apply_conserves_mass(self):
        chain = build_truncated_chain(P, HALF, 40)
        dist = random_dist(40, seed=7)
        out = chain.apply(dist)
        assert out.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(out >= 0.0)

    def test_apply_rejects_wrong_shape(self):
        chain = build_truncated_chain(P, HALF, 10)
        with pytest.raises(ValueError):
            chain.apply(np.zeros((9, 9)))


class TestSteadyState:
    def test_certain_delivery_pins_the_corner(self):
        chain = build_truncated_chain(ChannelParams(1.0, 1.0), Policy(1.0), 6)
        st = steady_state(chain)
        assert st.prob(1, 1) == pytest.approx(1.0, abs=1e-12)
        assert st.iterations <= 10

    def test_frozen_corner_probability(self):
        st = steady_state(build_truncated_chain(P, HALF, 200))
        assert st.prob(1, 1) == pytest.approx(0.08, abs=1e-11)
        assert st.prob(2, 2) == pytest.approx(0.0464, abs=1e-11)
        assert st.residual <= 1e-12

    def test_interior_entries_match_closed_block(self):
        # the clamp only distorts the boundary row and column; interior
        # entries of the truncated stationary law are exact
        n = 120
        st = steady_state(build_truncated_chain(P, HALF, n))
        closed = stationary_block(P, HALF, 30)
        assert np.max(np.abs(st.pi[:30, :30] - closed)) < 1e-11

    def test_unique_limit_from_different_starts(self):
        chain = build_truncated_chain(P, HALF, 60)
        from_point = steady_state(chain)
        uniform = np.full((60, 60), 1.0 / 3600)
        from_uniform = steady_state(chain, init=uniform)
        assert np.abs(from_point.pi - from_uniform.pi).sum() < 1e-10

    def test_invalid_inputs(self):
        chain = build_truncated_chain(P, HALF, 10)
        with pytest.raises(ValueError):
            steady_state(chain, tol=0.0)
        with pytest.raises(ValueError):
            steady_state(chain, init=np.zeros((3, 3)))
        bad = np.full((10, 10), 1.0 / 100)
        bad[0, 0] = -bad[0, 0]
        with pytest.raises(ValueError):
            steady_state(chain, init=bad)

    def test_iteration_budget_exhaustion_raises(self):
        chain = build_truncated_chain(P, HALF, 60)
        with pytest.raises(PowerIterationError) as exc:
            steady_state(chain, max_iters=3)
        assert exc.value.iterations == 3
        assert exc.value.residual > exc.value.tol

    def test_settles_within_truncation_steps_from_point_mass(self):
        # from the (1, 1) point mass every truncated-state probability is a
        # function of the last <= N slots, so convergence is finite-time even
        # when the mixing rate is terrible (rate_e = 0.02 here)
        n = 120
        chain = build_truncated_chain(SLOW, Policy(0.2), n)
        st = steady_state(chain, tol=1e-12)
        assert st.iterations <= n + 2

    def test_boundary_masses_match_exact_tail(self):
        st = steady_state(build_truncated_chain(SLOW, HALF, 80))
        tail_d, tail_e = st.chain.stationary_tail_bounds()
        assert st.boundary_mass_d == pytest.approx(tail_d, rel=1e-9)
        assert st.boundary_mass_e == pytest.approx(tail_e, rel=1e-9)


class TestGapPmf:
    def test_distribution_is_proper(self):
        st = steady_state(build_truncated_chain(P, HALF, 150))
        pmf = gap_pmf_array(st)
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(pmf >= 0.0)

    def test_matches_closed_pmf(self):
        st = steady_state(build_truncated_chain(P, HALF, 150))
        pmf = gap_pmf_array(st)
        assert pmf[0] == pytest.approx(1.0 - positive_gap_mass(P, HALF), abs=1e-6)
        for d in range(1, 11):
            assert pmf[d] == pytest.approx(secrecy_gap_pmf(d, P, HALF), abs=1e-10)


class TestOracleMetrics:
    def test_mean_against_closed_form(self):
        st = steady_state(build_truncated_chain(P, Policy(1.0), 400))
        rep = oracle_metrics(st)
        assert rep.provenance == "oracle"
        assert rep.average_secrecy_age == pytest.approx(3.80952380952381, abs=1e-9)

    def test_mean_zero_when_eavesdropper_always_decodes(self):
        st = steady_state(build_truncated_chain(ChannelParams(0.8, 1.0), HALF, 60))
        assert oracle_metrics(st).average_secrecy_age == 0.0

    def test_outage_against_closed_form_both_conventions(self):
        st = steady_state(build_truncated_chain(P, HALF, 200))
        thr = SecrecyThreshold(5)
        slack = outage_truncation_bound(st.chain) + 1e-9
        for conv in OutageConvention:
            rep = oracle_metrics(st, thr, conv)
            assert rep.outage_probability == pytest.approx(
                outage_probability(P, HALF, thr, conv), abs=slack
            )
            assert rep.convention == conv.value
        strict = oracle_metrics(st, thr, OutageConvention.STRICT_DEFINITION)
        printed = oracle_metrics(st, thr, OutageConvention.PAPER_PRINTED)
        assert strict.outage_event == 5
        assert printed.outage_event == 4
        # measured difference between the conventions is the pmf at eta_th
        assert strict.outage_probability - printed.outage_probability == pytest.approx(
            secrecy_gap_pmf(5, P, HALF), abs=slack
        )

    def test_error_bounds_shrink_and_hold(self):
        policy = Policy(0.5)
        closed_mean = average_secrecy_age(SLOW, policy)
        bounds = []
        for n in (100, 200, 400):
            st = steady_state(build_truncated_chain(SLOW, policy, n))
            rep = oracle_metrics(st, SecrecyThreshold(5))
            # the truncation bound is near-exact, so the realized error can
            # sit a rounding epsilon above it; 1e-9 covers iteration residual
            diff = abs(rep.average_secrecy_age - closed_mean)
            assert diff <= rep.mean_error_bound + 1e-9
            if rep.mean_error_bound > 1e-6:
                assert diff >= 0.5 * rep.mean_error_bound  # bound is tight, not vacuous
            assert rep.mean_error_bound == pytest.approx(mean_truncation_bound(st.chain))
            assert rep.outage_error_bound == pytest.approx(outage_truncation_bound(st.chain))
            bounds.append((rep.mean_error_bound, rep.outage_error_bound))
        assert bounds[0][0] > bounds[1][0] > bounds[2][0]
        assert bounds[0][1] > bounds[1][1] > bounds[2][1]

    def test_mean_bound_infinite_when_q_zero(self):
        chain = build_truncated_chain(ChannelParams(0.8, 0.0), HALF, 30)
        assert math.isinf(mean_truncation_bound(chain))
        st = steady_state(chain)
        assert math.isinf(oracle_metrics(st).average_secrecy_age)


class TestTruncationSizing:
    def test_returned_size_is_minimal(self):
        for tol in (1e-4, 1e-6, 1e-8):
            n = truncation_for_mean_tol(SLOW, HALF, tol)
            r_e = 0.05
            assert (1 - r_e) ** n / r_e <= tol
            assert (1 - r_e) ** (n - 1) / r_e > tol

    def test_minimum_respected(self):
        assert truncation_for_mean_tol(ChannelParams(0.8, 1.0), Policy(1.0), 0.5, minimum=64) == 64

    def test_rejects_degenerate_inputs(self):
        with pytest.raises(ValueError):
            truncation_for_mean_tol(ChannelParams(0.8, 0.0), HALF, 1e-6)
        with pytest.raises(ValueError):
            truncation_for_mean_tol(P, HALF, 0.0)


def test_write_pi_csv_round_trip(tmp_path):
    st = steady_state(build_truncated_chain(P, HALF, 4))
    path = tmp_path / "pi.csv"
    write_pi_csv(st, str(path))
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["i", "j", "probability"]
    assert len(rows) == 1 + 16
    for i, j, prob in rows[1:]:
        assert prob == f"{st.prob(int(i), int(j)):.9g}"
