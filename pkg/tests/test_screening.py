from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lexmech.errors import PreconditionError
from lexmech.lps import LPS, Belief, classify_lps
from lexmech.optimize import leximin_solve, maxmin_solve, verify_mu_optimal
from lexmech.screening import (
    ScreeningEnv,
    ScreeningMechanism,
    efficient_qualities,
    screening_bayesian_optimal,
    screening_check_robust,
    screening_efficient_maximal,
    screening_from_assignment,
    screening_maximal_transfers,
    screening_payoffs,
    screening_polytope,
    screening_to_assignment,
    screening_violations,
)


def env3():
    return ScreeningEnv((1, 2, 3), (0, 1, 2, 3))


def test_efficient_maximal_transfers():
    env = env3()
    mech = screening_efficient_maximal(env)
    assert efficient_qualities(env) == (1, 2, 3)
    assert mech.transfers == (1, 3, 6)
    assert screening_payoffs(env, mech).values == (F(1, 2), 1, F(3, 2))
    assert screening_violations(env, mech) == []


def test_env_validation():
    with pytest.raises(ValueError):
        ScreeningEnv((2, 1), (0, 1, 2))
    with pytest.raises(ValueError):
        ScreeningEnv((1, 2), (1, 2))


def test_leximin_recovers_efficient_maximal():
    env = env3()
    res = leximin_solve(screening_polytope(env))
    assert res.level_values == (F(1, 2), 1, F(3, 2))
    assert screening_from_assignment(env, res.mechanism) == screening_efficient_maximal(env)


def test_maxmin_two_types():
    env = ScreeningEnv((1, 2), (0, 1, 2))
    value, _ = maxmin_solve(screening_polytope(env))
    assert value == F(1, 2)


def test_middle_distortion_is_perfectly_robust():
    # Pooling the middle type at the lowest quality is optimal when the top type is prioritized.
    env = env3()
    rows = ScreeningMechanism.dirac(env, (1, 1, 3), (0, 0, 0)).allocation
    mech = ScreeningMechanism(rows, screening_maximal_transfers(env, rows))
    assert mech.transfers == (1, 1, 7)
    poly = screening_polytope(env)
    space = env.space()
    lps = LPS((Belief.point(space, 1), Belief.point(space, 3), Belief.point(space, 2)))
    pay = screening_payoffs(env, mech)
    assert verify_mu_optimal(pay, poly, lps)
    assert classify_lps(lps, pay).as_tuple() == (True, True, False)
    natural = LPS((Belief.point(space, 1), Belief.point(space, 2), Belief.point(space, 3)))
    assert not verify_mu_optimal(pay, poly, natural)


def test_robust_set_for_two_types():
    env = ScreeningEnv((1, 2), tuple(F(k, 2) for k in range(0, 9)))
    robust = []
    for q2 in env.grid:
        if q2 < 1:
            continue
        mech = ScreeningMechanism.dirac(env, (1, q2), (1, 2 * q2 - 1))
        if not screening_violations(env, mech) and screening_check_robust(env, mech):
            robust.append(q2)
    assert min(robust) == 1 and max(robust) == 3


def test_check_robust_rejects_infeasible():
    env = env3()
    bad = ScreeningMechanism.dirac(env, (1, 2, 3), (5, 5, 5))
    with pytest.raises(PreconditionError):
        screening_check_robust(env, bad)


def test_assignment_round_trip():
    env = env3()
    mech = screening_efficient_maximal(env)
    assert screening_from_assignment(env, screening_to_assignment(env, mech)) == mech


def test_bayesian_distorts_low_type():
    env = env3()
    prior = Belief.uniform(env.space())
    mech = screening_bayesian_optimal(env, prior)
    assert mech.qualities(env) == (0, 1, 3)


@given(st.integers(min_value=2, max_value=60))
def test_bayesian_converges_to_efficient(ell):
    env = env3()
    r = F(1, ell)
    space = env.space()
    prior = Belief(space, (1 - r, r * (1 - r), r * r))
    q = screening_bayesian_optimal(env, prior).qualities(env)
    assert q[-1] == 3
    if ell >= 3:
        assert q == (1, 2, 3)
