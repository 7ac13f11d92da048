"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v -s`` to see the lines inline; they
are also repeated in the terminal summary.
"""
from __future__ import annotations

import random
import time
from fractions import Fraction as F

import pytest

from lexmech.auction import (
    AuctionEnv,
    auction_benchmark_sorted_payoffs,
    auction_check_proper_structure,
    auction_efficient_maximal_uniform,
    auction_from_assignment,
    auction_mechanism,
    auction_payoffs,
    auction_polytope,
    auction_proper_lps,
    example_misallocation_allocation,
    example_misallocation_lps,
    example_withholding_allocation,
    example_withholding_lps,
)
from lexmech.errors import ConstructionFailure
from lexmech.lps import (
    LPS,
    Belief,
    Ordering,
    PayoffVector,
    ProfileSpace,
    _mixture,
    classify_lps,
    expectation,
    lex_bayes_threshold,
    lex_compare,
    lex_payoffs,
    sorted_payoffs,
)
from lexmech.optimize import (
    adversarial_optimal_belief,
    construct_adversarial_full_support_lps,
    construct_justifying_lps,
    dominance_check,
    is_leximin_optimal,
    is_maxmin_optimal,
    leximin_solve,
    menu_polytope,
    verify_mu_optimal,
)
from lexmech.publicgood import (
    PublicGoodEnv,
    pub_asymptotics,
    pub_polytope,
    pub_properly_robust,
    rate_bound_violations,
)
from lexmech.screening import (
    ScreeningEnv,
    ScreeningMechanism,
    screening_check_robust,
    screening_efficient_maximal,
    screening_from_assignment,
    screening_maximal_transfers,
    screening_payoffs,
    screening_polytope,
    screening_violations,
)

RESULTS: dict[int, str] = {}

# Plotted (x, f(x)) pairs of the published provision curves at theta_h = 1,
# theta_l = 0, gamma = 1/2, transcribed verbatim.
REFERENCE_CURVE = {
    5: (
        ("0", "0"),
        ("0.2", "0"),
        ("0.4", "0"),
        ("0.6", "0.161290322581"),
        ("0.8", "0.483870967742"),
        ("1", "1"),
    ),
    15: (
        ("0", "0"),
        ("0.0666666666667", "0"),
        ("0.133333333333", "0"),
        ("0.2", "0"),
        ("0.266666666667", "0"),
        ("0.333333333333", "0"),
        ("0.4", "0"),
        ("0.466666666667", "0"),
        ("0.533333333333", "0.00045777764214"),
        ("0.6", "0.00289925840022"),
        ("0.666666666667", "0.0116885891293"),
        ("0.733333333333", "0.036800962641"),
        ("0.8", "0.0981867645584"),
        ("0.866666666667", "0.232119423287"),
        ("0.933333333333", "0.499984740745"),
        ("1", "1"),
    ),
    55: (
        ("0", "0"),
        ("0.0181818181818", "0"),
        ("0.0363636363636", "0"),
        ("0.0545454545455", "0"),
        ("0.0727272727273", "0"),
        ("0.0909090909091", "0"),
        ("0.109090909091", "0"),
        ("0.127272727273", "0"),
        ("0.145454545455", "0"),
        ("0.163636363636", "0"),
        ("0.181818181818", "0"),
        ("0.2", "0"),
        ("0.218181818182", "0"),
        ("0.236363636364", "0"),
        ("0.254545454545", "0"),
        ("0.272727272727", "0"),
        ("0.290909090909", "0"),
        ("0.309090909091", "0"),
        ("0.327272727273", "0"),
        ("0.345454545455", "0"),
        ("0.363636363636", "0"),
        ("0.381818181818", "0"),
        ("0.4", "0"),
        ("0.418181818182", "0"),
        ("0.436363636364", "0"),
        ("0.454545454545", "0"),
        ("0.472727272727", "0"),
        ("0.490909090909", "0"),
        ("0.509090909091", "1.52655665886e-15"),
        ("0.527272727273", "3.00222809576e-14"),
        ("0.545454545455", "3.60572682823e-13"),
        ("0.563636363636", "3.19386184167e-12"),
        ("0.581818181818", "2.2712076047e-11"),
        ("0.6", "1.3627259506e-10"),
        ("0.618181818182", "7.12810614665e-10"),
        ("0.636363636364", "3.32644963687e-09"),
        ("0.654545454545", "1.40884926695e-08"),
        ("0.672727272727", "5.48709715299e-08"),
        ("0.690909090909", "1.98580658943e-07"),
        ("0.709090909091", "6.73447452134e-07"),
        ("0.727272727273", "2.16029243641e-06"),
        ("0.745454545455", "6.58798217773e-06"),
        ("0.763636363636", "1.92642211914e-05"),
        ("0.781818181818", "5.43689727783e-05"),
        ("0.8", "0.000148773193359"),
        ("0.818181818182", "0.00039529800415"),
        ("0.836363636364", "0.00102138519287"),
        ("0.854545454545", "0.00257158279419"),
        ("0.872727272727", "0.00628089904785"),
        ("0.890909090909", "0.0149173736572"),
        ("0.909090909091", "0.0340414047241"),
        ("0.927272727273", "0.0556223290598"),
        ("0.945454545455", "0.118055555556"),
        ("0.963636363636", "0.24537037037"),
        ("0.981818181818", "0.5"),
        ("1", "1"),
    ),
}


def _report(n: int, ok: bool, seconds: float, limit: float, detail: str = "") -> None:
    timing = f"{seconds:.2f}s/{limit:.0f}s"
    status = "PASS" if ok and seconds < limit else "FAIL"
    line = f"criterion {n}: {status} ({timing}){' ' + detail if detail else ''}"
    RESULTS[n] = line
    print(line)
    assert ok, detail
    assert seconds < limit, f"runtime {seconds:.2f}s over {limit}s"


def test_criterion_1_reference_curve():
    start = time.perf_counter()
    eps = F(1, 10)
    rep = pub_asymptotics(0, 1, F(1, 2), [5, 15, 55], eps)
    by_size = {}
    for row in rep.rows:
        by_size.setdefault(row.I, []).append(row)
    misses = []
    for I, points in REFERENCE_CURVE.items():
        rows = by_size[I]
        assert len(rows) == len(points)
        for row, (x, y) in zip(rows, points):
            if abs(float(row.fraction) - float(x)) > 1e-9 or abs(float(row.Q) - float(y)) > 1e-9:
                misses.append(f"I={I},k={row.k}: plotted {y} vs {float(row.Q):.12g}")
    q5 = pub_properly_robust(PublicGoodEnv(5, 0, 1, F(1, 2))).Q_by_count
    exact = q5[3] == F(5, 31) and q5[4] == F(15, 31)
    elapsed = time.perf_counter() - start
    detail = f"exact spot checks {'ok' if exact else 'wrong'}; {len(misses)} plotted points off"
    if misses:
        detail += " [" + "; ".join(misses) + "]"
    _report(1, exact and not misses, elapsed, 5, detail)


def _random_pg(rng: random.Random, max_agents: int) -> PublicGoodEnv:
    I = rng.randint(2, max_agents)
    lo = F(rng.randint(-4, 4), rng.randint(1, 4))
    gap = F(rng.randint(1, 12), rng.randint(1, 4))
    hi = lo + gap
    if hi <= 0:
        lo, hi = lo - hi + F(1, 4), F(1, 4)
    t = F(rng.randint(1, 15), 16)
    return PublicGoodEnv(I, lo, hi, lo + t * (hi - lo), profile_cap=2**max(I, 8))


def test_criterion_2_public_good_lp_oracle():
    start = time.perf_counter()
    rng = random.Random(20240602)
    bad = []
    for _ in range(20):
        env = _random_pg(rng, 8)
        res = leximin_solve(pub_polytope(env))
        if tuple(res.mechanism[: env.agents + 1]) != pub_properly_robust(env).Q_by_count:
            bad.append(str(env))
    _report(2, not bad, time.perf_counter() - start, 60, f"{20 - len(bad)}/20 instances equal")


def test_criterion_3_screening():
    start = time.perf_counter()
    checks = []
    for types, transfers in (((1, 2), (1, 3)), ((1, 2, 3), (1, 3, 6))):
        env = ScreeningEnv(types, tuple(range(0, types[-1] + 1)))
        res = leximin_solve(screening_polytope(env))
        mech = screening_from_assignment(env, res.mechanism)
        checks.append(mech == screening_efficient_maximal(env) and mech.transfers == transfers)
    env = ScreeningEnv((1, 2), tuple(F(k, 4) for k in range(0, 17)))
    robust = []
    for q2 in env.grid:
        rows = ScreeningMechanism.dirac(env, (1, q2), (0, 0)).allocation
        mech = ScreeningMechanism(rows, screening_maximal_transfers(env, rows))
        if not screening_violations(env, mech) and screening_check_robust(env, mech):
            robust.append(q2)
    boundary = (min(robust), max(robust)) == (1, 3) and robust == [q for q in env.grid if 1 <= q <= 3]
    detail = f"leximin matches closed form {checks}; robust quality range [{min(robust)}, {max(robust)}]"
    _report(3, all(checks) and boundary, time.perf_counter() - start, 30, detail)


def _uniform_ties_below_top(env, mech):
    for prof in env.profiles():
        top = max(prof)
        winners = [i for i, k in enumerate(prof) if k == top]
        if top < env.n_types and len(winners) > 1:
            if any(mech.allocation[prof][i] != F(1, len(winners)) for i in winners):
                return False
    return True


def test_criterion_4_auction():
    start = time.perf_counter()
    notes = []
    ok = True
    for N in (2, 3):
        env = AuctionEnv(2, tuple(range(1, N + 1)))
        res = leximin_solve(auction_polytope(env))
        mech = auction_from_assignment(env, res.mechanism)
        same = sorted_payoffs(res.payoffs) == auction_benchmark_sorted_payoffs(env)
        ties = _uniform_ties_below_top(env, mech)
        notes.append(f"N={N}: benchmark {'equal' if same else 'differs'}, ties {'uniform' if ties else 'not uniform'}")
        ok &= same and ties
    env = AuctionEnv(2, (1, 2, 3))
    poly = auction_polytope(env)
    for name, alloc, lps in (
        ("withholding example", example_withholding_allocation, example_withholding_lps),
        ("misallocation example", example_misallocation_allocation, example_misallocation_lps),
    ):
        mech = auction_mechanism(env, alloc(env))
        mu = verify_mu_optimal(auction_payoffs(env, mech), poly, lps(env))
        structure = auction_check_proper_structure(env, mech).ok
        notes.append(f"{name}: mu-optimal {mu}, structure check {structure}")
        ok &= mu and not structure
    _report(4, ok, time.perf_counter() - start, 60, "; ".join(notes))


def _random_menu(rng: random.Random):
    n_prof = rng.randint(1, 5)
    space = ProfileSpace(tuple(f"t{i}" for i in range(n_prof)))
    size = rng.randint(1, 30)
    menu = [PayoffVector(space, [F(rng.randint(0, 3)) for _ in range(n_prof)]) for _ in range(size)]
    return space, menu


def test_criterion_5_framework_round_trips():
    start = time.perf_counter()
    rng = random.Random(7)
    failures = []
    for trial in range(100):
        _, menu = _random_menu(rng)
        poly = menu_polytope(menu)
        best = leximin_solve(poly).payoffs
        candidates = list(dict.fromkeys(menu)) + [best]
        for cand in candidates:
            maxmin = is_maxmin_optimal(cand, poly)
            robust = adversarial_optimal_belief(cand, menu) is not None
            if robust != maxmin:
                failures.append(f"trial {trial}: robust {robust} vs maxmin {maxmin}")
            admissible = maxmin and dominance_check(cand, poly).admissible
            two = construct_adversarial_full_support_lps(cand, menu)
            perfect = two is not None and verify_mu_optimal(cand, poly, two)
            if perfect and not classify_lps(two, cand).adversarial:
                perfect = False
            if admissible != perfect:
                failures.append(f"trial {trial}: admissible {admissible} vs two-belief {perfect}")
            leximin = is_leximin_optimal(cand, poly)
            try:
                lps = construct_justifying_lps(cand, menu, check_precondition=False)
                proper = classify_lps(lps, cand).as_tuple() == (True, True, True) and verify_mu_optimal(cand, poly, lps)
            except ConstructionFailure:
                proper = False
            if leximin != proper:
                failures.append(f"trial {trial}: leximin {leximin} vs justified {proper}")
    detail = f"{len(failures)} failures" + (f" [{'; '.join(failures[:5])}]" if failures else "")
    _report(5, not failures, time.perf_counter() - start, 60, detail)


def _harmonic(lps):
    return lambda ell: tuple(F(1, ell) for _ in range(len(lps) - 1))


def _threshold_checks(lps, best, alternatives):
    out = []
    seq = _harmonic(lps)
    for alt in alternatives:
        if lex_compare(lex_payoffs(lps, best), lex_payoffs(lps, alt)) != Ordering.GREATER:
            out.append((None, False))
            continue
        L = lex_bayes_threshold(lps, best, alt, seq, 1000)
        if L is None:
            out.append((None, False))
            continue
        diff = PayoffVector(lps.space, [a - b for a, b in zip(best.values, alt.values)])
        held = all(expectation(_mixture(lps, seq(ell), closed_top=True), diff) > 0 for ell in (L, 2 * L, 10 * L))
        out.append((L, held))
    return out


def test_criterion_6_bayesian_limits():
    start = time.perf_counter()
    env = ScreeningEnv((1, 2, 3), (0, 1, 2, 3))
    space = env.space()
    lps = LPS(tuple(Belief.point(space, t) for t in space.labels))
    best = screening_payoffs(env, screening_efficient_maximal(env))
    alts = []
    for q in ((0, 2, 3), (1, 1, 3), (0, 1, 3), (1, 2, 2)):
        rows = ScreeningMechanism.dirac(env, q, (0, 0, 0)).allocation
        alts.append(screening_payoffs(env, ScreeningMechanism(rows, screening_maximal_transfers(env, rows))))
    screen = _threshold_checks(lps, best, alts)

    aenv = AuctionEnv(2, (1, 2, 3))
    auction_lps = auction_proper_lps(aenv, collapse=True)
    abest = auction_payoffs(aenv, auction_efficient_maximal_uniform(aenv))
    reserve = {p: auction_efficient_maximal_uniform(aenv).allocation[p] for p in aenv.profiles()}
    reserve[(1, 1)] = (F(0), F(0))
    aalts = [
        auction_payoffs(aenv, auction_mechanism(aenv, example_withholding_allocation(aenv))),
        auction_payoffs(aenv, auction_mechanism(aenv, example_misallocation_allocation(aenv))),
        auction_payoffs(aenv, auction_mechanism(aenv, reserve)),
    ]
    auction = _threshold_checks(auction_lps, abest, aalts)
    ok = all(L is not None and held for L, held in screen + auction)
    detail = f"screening L={[L for L, _ in screen]}, auction L={[L for L, _ in auction]}"
    _report(6, ok, time.perf_counter() - start, 30, detail)


def test_criterion_7_rate_bound():
    start = time.perf_counter()
    violations = []
    for I in range(2, 61):
        env = PublicGoodEnv(I, 0, 1, F(1, 2), profile_cap=2**I)
        violations += [(I, K) for K in rate_bound_violations(env)]
    rng = random.Random(15)
    for _ in range(5):
        base = _random_pg(rng, 2)
        for I in range(2, 61):
            env = PublicGoodEnv(I, base.theta_low, base.theta_high, base.gamma, profile_cap=2**I)
            violations += [(I, K) for K in rate_bound_violations(env)]
    _report(7, not violations, time.perf_counter() - start, 30, f"{len(violations)} violations over 6 parameter triples")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
