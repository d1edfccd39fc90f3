from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from listfb.planner import (
    BudgetViolation,
    PlannerParams,
    PlannerState,
    StageOverflow,
    delta_choice,
    gamma_floor,
    grid_sequences,
    kappa_plan,
    lambda_tilde,
    padded_length,
    round_up_to_grid,
    simulate_trajectory,
    step_clean,
    step_delta,
    step_kappa,
    termination_ready,
)
from listfb.qary import capped_entropy_q

# ceil(ln eps / ln(1 - gamma^3 / D) + 1) evaluated with 50-digit mpmath
LAMBDA_CASES = [
    (0.2, 0.3, 2, None, 2645),
    (0.1, 0.45, 3, None, 1777),
    (0.5, 0.2, 4, None, 7688),
    (0.01, 0.1, 2, None, 204291),
    (0.3, 0.434, 4, 0.2, 4),
]
# smallest k with (lam - 1) H_q(1/k) <= eps / 2, by linear search at 50 digits
DELTA_CASES = [(0.2, 4, 2, 289), (0.1, 10, 3, 1473), (0.5, 2, 2, 24)]


@pytest.mark.parametrize("eps,gamma,q,den,expected", LAMBDA_CASES)
def test_lambda_reference(eps, gamma, q, den, expected):
    assert lambda_tilde(eps, gamma, q, den) == expected


@pytest.mark.parametrize("eps,lam,q,k", DELTA_CASES)
def test_delta_choice_reference(eps, lam, q, k):
    assert delta_choice(eps, lam, q) == Fraction(1, k)


def test_lambda_edges():
    assert lambda_tilde(1.0, 0.3, 2) == 1
    with pytest.raises(ValueError):
        lambda_tilde(0.0, 0.3, 2)
    with pytest.raises(ValueError):
        lambda_tilde(0.2, 0.3, 2, denominator=0.001)


def test_gamma_floor_value():
    assert gamma_floor(0.5, 2) == pytest.approx(0.8325546111576977)


def test_round_up_to_grid():
    d = Fraction(1, 16)
    assert round_up_to_grid(0, d) == 0
    assert round_up_to_grid(Fraction(1, 16), d) == Fraction(1, 16)
    assert round_up_to_grid(0.07, d) == Fraction(2, 16)
    assert round_up_to_grid(1, Fraction(1, 3)) == 1


def test_padded_length():
    assert padded_length(Fraction(5), Fraction(4)) == 8
    assert padded_length(Fraction(8), Fraction(4)) == 8


def test_overspend_is_rejected():
    s = PlannerState.start(1, Fraction(1, 2), Fraction(1, 10), 2)
    with pytest.raises(BudgetViolation):
        step_clean(s, Fraction(1, 4))


def test_padded_stage_overflow():
    s = PlannerState.start(Fraction(1), Fraction(3, 4), Fraction(1, 20), 2)
    with pytest.raises(StageOverflow):
        step_kappa(s, 0, Fraction(1, 2), 1, 0)


def test_kappa_plan_checks_hold():
    rec = kappa_plan(0.3, 0.434, 4, 0.2)
    assert rec.lam == 4
    assert all(rec.checks.values()), rec.checks
    assert 0 < rec.kappa <= rec.b ** (rec.lam - 1) / 2


def test_termination_when_nothing_left():
    s = PlannerState(n=Fraction(1), ell=Fraction(0), rate=Fraction(0), rho=Fraction(0), q=2)
    assert termination_ready(s, 0.3)


def test_trajectory_small_example():
    params = PlannerParams(q=2, n=Fraction(1), rate=Fraction(1, 2), rho=Fraction(1, 50), gamma=0.3,
                           stage_cap=6, delta=Fraction(1, 16))
    traj = simulate_trajectory(params, [Fraction(1, 25)], mode="delta")
    assert traj.terminated_at is not None
    assert traj.transmitted <= 1


def test_grid_sequences_end_in_terminated_or_capped_states():
    params = PlannerParams(q=2, n=Fraction(1), rate=Fraction(2, 5), rho=Fraction(1, 25), gamma=0.3,
                           stage_cap=3, delta=Fraction(1, 8))
    seqs = list(grid_sequences(params, [Fraction(k, 8) for k in range(9)], 3, mode="delta"))
    assert seqs
    for seq in seqs:
        # every sequence is budget-feasible by construction
        traj = simulate_trajectory(params, seq, mode="delta")
        assert traj.transmitted <= 1


rates = st.fractions(min_value=Fraction(1, 20), max_value=Fraction(19, 20), max_denominator=200)
budgets = st.fractions(min_value=Fraction(0), max_value=Fraction(2, 5), max_denominator=200)
unit = st.fractions(min_value=0, max_value=1, max_denominator=200)


@settings(max_examples=200)
@given(rates, budgets, unit, st.sampled_from([2, 3, 4]))
def test_budget_conservation_exact(rate, rho, u, q):
    assume(rho <= 1 - Fraction(1, q))
    s = PlannerState.start(1, rate, rho, q)
    p = u * min(Fraction(1), rho / rate)
    nxt = step_clean(s, p)
    assert (1 - rate) * nxt.rho + rate * p == rho
    assert nxt.n == 1 - rate


@settings(max_examples=200)
@given(rates, budgets, unit, st.sampled_from([2, 3, 4]))
def test_gap_grows_by_one_over_one_minus_rate(rate, rho, u, q):
    assume(rho <= Fraction(2, 5) and rho < 1 - Fraction(1, q))
    s = PlannerState.start(1, rate, rho, q)
    assume(s.gap > 0)
    p = u * min(Fraction(1), rho / rate)
    nxt = step_clean(s, p)
    assert nxt.gap >= s.gap / (1 - float(rate)) - 1e-12


@settings(max_examples=100)
@given(rates, budgets, unit, st.sampled_from([Fraction(1, 4), Fraction(1, 16)]))
def test_grid_rounding_only_lengthens(rate, rho, u, delta):
    s = PlannerState.start(1, rate, rho, 2)
    p = u * min(Fraction(1), rho / rate)
    a, b = step_clean(s, p), step_delta(s, p, delta)
    assert b.rho == a.rho
    assert b.ell >= a.ell
    # next length is rate * H(p) at n = 1; subadditivity of the capped entropy bounds the excess
    assert b.ell - a.ell <= rate * Fraction(capped_entropy_q(float(delta), 2)) + Fraction(1, 10**12)
