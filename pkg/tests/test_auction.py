from __future__ import annotations

import itertools
from fractions import Fraction as F

import pytest

from lexmech.auction import (
    AuctionEnv,
    auction_bayesian_optimal,
    auction_benchmark_sorted_payoffs,
    auction_check_proper_structure,
    auction_check_robust,
    auction_efficient_maximal_uniform,
    auction_mechanism,
    auction_payoffs,
    auction_polytope,
    auction_proper_lps,
    auction_violations,
    example_misallocation_allocation,
    example_misallocation_lps,
    partial_withholding_allocation,
)
from lexmech.errors import PreconditionError, SizeCapError
from lexmech.lps import Belief, classify_lps, sorted_payoffs
from lexmech.optimize import dominance_check, leximin_solve, maxmin_solve, verify_mu_optimal


def _brute_revenue(env):
    """Second-highest-type pricing with uniform ties, computed directly per profile."""
    out = []
    for prof in itertools.product(range(1, env.n_types + 1), repeat=env.bidders):
        top = max(prof)
        winners = prof.count(top)
        if winners > 1:
            out.append(env.value(top))
            continue
        second = max(k for k in prof if k != top)
        J = prof.count(second)
        # The winner pays the envelope price; with uniform ties below, that mixes
        # the second value and the next step up.
        out.append(F(1, J + 1) * env.value(second) + F(J, J + 1) * env.value(second + 1))
    return tuple(sorted(out))


@pytest.mark.parametrize("I,N", [(2, 2), (2, 3), (3, 3), (2, 5), (3, 4), (4, 3)])
def test_benchmark_matches_direct_revenue(I, N):
    env = AuctionEnv(I, tuple(range(1, N + 1)))
    mech = auction_efficient_maximal_uniform(env)
    assert auction_benchmark_sorted_payoffs(env) == sorted_payoffs(auction_payoffs(env, mech))
    assert auction_benchmark_sorted_payoffs(env) == _brute_revenue(env)


def test_profile_cap():
    env = AuctionEnv(5, (1, 2, 3, 4), profile_cap=100)
    # Closed forms stay available past the cap; enumeration does not.
    assert len(auction_benchmark_sorted_payoffs(env)) == 4**5
    with pytest.raises(SizeCapError):
        auction_polytope(env)


def test_efficient_maximal_is_proper():
    env = AuctionEnv(2, (1, 2, 3))
    mech = auction_efficient_maximal_uniform(env)
    assert auction_check_robust(env, mech)
    assert auction_check_proper_structure(env, mech)
    lps = auction_proper_lps(env)
    pay = auction_payoffs(env, mech)
    assert len(lps) == 7 and len(auction_proper_lps(env, collapse=True)) == 6
    assert classify_lps(lps, pay).as_tuple() == (True, True, True)
    assert verify_mu_optimal(pay, auction_polytope(env), lps)


def test_leximin_matches_benchmark():
    env = AuctionEnv(2, (1, 2, 3))
    res = leximin_solve(auction_polytope(env))
    assert sorted_payoffs(res.payoffs) == auction_benchmark_sorted_payoffs(env)
    value, _ = maxmin_solve(auction_polytope(env))
    assert value == 1


def test_partial_withholding_is_robust_but_dominated():
    env = AuctionEnv(2, (1, 2))
    mech = auction_mechanism(env, partial_withholding_allocation(env))
    assert auction_check_robust(env, mech)
    assert set(auction_payoffs(env, mech).values) == {1}
    assert not dominance_check(auction_payoffs(env, mech), auction_polytope(env)).admissible


def test_misallocation_example():
    env = AuctionEnv(2, (1, 2, 3))
    mech = auction_mechanism(env, example_misallocation_allocation(env))
    pay = auction_payoffs(env, mech)
    lps = example_misallocation_lps(env)
    assert verify_mu_optimal(pay, auction_polytope(env), lps)
    flags = classify_lps(lps, pay)
    assert flags.full_support and flags.adversarial and not flags.strongly_adversarial
    report = auction_check_proper_structure(env, mech)
    assert not report and not report.conditions["efficient"]


def test_violations_and_monotonicity():
    env = AuctionEnv(2, (1, 2))
    alloc = {p: (F(1, 2), F(1, 2)) for p in env.profiles()}
    alloc[(2, 1)] = (F(0), F(1))
    with pytest.raises(PreconditionError):
        auction_mechanism(env, alloc)
    mech = auction_efficient_maximal_uniform(env)
    mech.transfers[(1, 1)] = (F(2), F(0))
    assert auction_violations(env, mech)


def test_bayesian_virtual_values():
    env = AuctionEnv(2, (1, 2, 3))
    space = env.space()
    prior = Belief.uniform(space)
    mech = auction_bayesian_optimal(env, prior)
    # With independent uniform types the lowest virtual value is negative.
    assert mech.allocation[(1, 1)] == (0, 0)
    assert mech.allocation[(3, 1)] == (1, 0)
    lps = auction_proper_lps(env, collapse=True)
    r = F(1, 50)
    weights = [F(0)] * len(space)
    mass = F(1)
    for k, b in enumerate(lps.beliefs):
        share = mass * (1 - r) if k < len(lps) - 1 else mass
        weights = [w + share * x for w, x in zip(weights, b.weights)]
        mass -= share
    eff = auction_bayesian_optimal(env, Belief(space, weights))
    assert auction_payoffs(env, eff) == auction_payoffs(env, auction_efficient_maximal_uniform(env))
