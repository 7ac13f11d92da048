from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lexmech.errors import SizeCapError
from lexmech.lps import classify_lps, sorted_payoffs
from lexmech.optimize import leximin_solve, verify_mu_optimal
from lexmech.publicgood import (
    AnonymousPGMechanism,
    PublicGoodEnv,
    cost_in_robust_interval,
    provision_curve,
    pub_asymptotics,
    pub_check_efficient_maximal_robust,
    pub_check_robust,
    pub_count_payoffs,
    pub_justifying_lps,
    pub_polytope,
    pub_primitives,
    pub_profile_payoffs,
    pub_properly_robust,
    q_closed_form,
    q_recursion,
    rate_bound_violations,
)

HALF = F(1, 2)


@st.composite
def envs(draw, max_agents=8):
    I = draw(st.integers(min_value=2, max_value=max_agents))
    lo = draw(st.fractions(min_value=-2, max_value=2, max_denominator=4))
    gap = draw(st.fractions(min_value=F(1, 4), max_value=3, max_denominator=4))
    hi = lo + gap
    if hi <= 0:
        hi = F(1, 2)
        lo = min(lo, F(1, 4))
    t = draw(st.fractions(min_value=F(1, 8), max_value=F(7, 8), max_denominator=8))
    return PublicGoodEnv(I, lo, hi, lo + t * (hi - lo))


def test_five_agent_golden():
    env = PublicGoodEnv(5, 0, 1, HALF)
    pr = pub_primitives(env)
    assert pr.k_star == 3 and pr.rho == HALF
    Q = pub_properly_robust(env).Q_by_count
    assert Q == (0, 0, 0, F(5, 31), F(15, 31), 1)
    pays = pub_count_payoffs(env, pub_properly_robust(env))
    assert pays[3:] == (F(5, 62),) * 3 and pays[:3] == (0, 0, 0)


def test_two_agent_golden():
    env = PublicGoodEnv(2, 0, 1, F(2, 5))
    assert pub_properly_robust(env).Q_by_count == (0, F(6, 11), 1)


@given(envs())
def test_recursion_matches_closed_form(env):
    q = q_recursion(env)
    assert q == q_closed_form(env)
    pays = pub_count_payoffs(env, pub_properly_robust(env))
    k = pub_primitives(env).k_star
    assert set(pays[k:]) == {1 / q[-1]}
    assert all(p == 0 for p in pays[:k])


@given(envs(max_agents=5))
def test_anonymous_leximin_matches_closed_form(env):
    res = leximin_solve(pub_polytope(env))
    assert tuple(res.mechanism[: env.agents + 1]) == pub_properly_robust(env).Q_by_count


@pytest.mark.parametrize("I", [2, 3])
def test_full_polytope_agrees(I):
    env = PublicGoodEnv(I, 0, 1, HALF)
    res = leximin_solve(pub_polytope(env, anonymous=False))
    target = pub_profile_payoffs(env, pub_properly_robust(env))
    assert sorted_payoffs(res.payoffs) == sorted_payoffs(target)


@pytest.mark.parametrize("I", [3, 4])
def test_justifying_lps(I):
    env = PublicGoodEnv(I, 0, 1, HALF)
    lps = pub_justifying_lps(env)
    pay = pub_profile_payoffs(env, pub_properly_robust(env))
    assert classify_lps(lps, pay).as_tuple() == (True, True, True)
    assert verify_mu_optimal(pay, pub_polytope(env, anonymous=False), lps)


@given(envs(max_agents=6))
def test_efficient_maximal_robust_iff_interval(env):
    rep = pub_check_efficient_maximal_robust(env)
    assert rep.conditions["efficient_maximal_robust"] == cost_in_robust_interval(env)


def test_properly_robust_is_robust():
    env = PublicGoodEnv(4, 0, 1, HALF)
    assert pub_check_robust(env, pub_properly_robust(env))
    assert not pub_check_robust(env, AnonymousPGMechanism((0, 0, 1, 1, 1)))


def test_provision_curve_floor():
    Q = pub_properly_robust(PublicGoodEnv(5, 0, 1, HALF)).Q_by_count
    assert provision_curve(Q, F(3, 5)) == F(5, 31)
    assert provision_curve(Q, F(59, 100)) == 0
    assert provision_curve(Q, 1) == 1


def test_rate_bound_and_asymptotics():
    assert rate_bound_violations(PublicGoodEnv(40, 0, 1, HALF, profile_cap=2**40)) == []
    rep = pub_asymptotics(0, 1, HALF, [5, 15], F(1, 10), x_grid=[F(1, 2), 1])
    assert rep.ok and len(rep.rows) == 6 + 16
    assert rep.curve[-1] == (15, 1, 1)


def test_profile_cap():
    env = PublicGoodEnv(12, 0, 1, HALF)
    with pytest.raises(SizeCapError):
        env.space()
    assert pub_properly_robust(env).Q_by_count[-1] == 1
