"""Single-unit auctions on a common finite type grid, profiles materialized in full."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Mapping

from .errors import PreconditionError, SizeCapError
from .lps import LPS, Belief, PayoffVector, ProfileSpace
from .optimize import Functional, MechanismPolytope
from .rational import to_rational
from .simplex import LinearProgram, LPStatus, solve_lp

DEFAULT_PROFILE_CAP = 256


@dataclass(frozen=True)
class AuctionEnv:
    bidders: int
    types: tuple
    profile_cap: int = DEFAULT_PROFILE_CAP

    def __post_init__(self):
        types = tuple(to_rational(t) for t in self.types)
        object.__setattr__(self, "types", types)
        if self.bidders < 2:
            raise ValueError("at least two bidders required")
        if len(types) < 2:
            raise ValueError("at least two types required")
        if types[0] <= 0 or any(a >= b for a, b in zip(types, types[1:])):
            raise ValueError("types must be positive and strictly increasing")

    @property
    def n_types(self) -> int:
        return len(self.types)

    @property
    def n_profiles(self) -> int:
        return self.n_types**self.bidders

    def profiles(self) -> list:
        """Profiles as tuples of 1-based type indices, lexicographic order."""
        return list(itertools.product(range(1, self.n_types + 1), repeat=self.bidders))

    def space(self) -> ProfileSpace:
        self.check_cap()
        return ProfileSpace(tuple(self.profiles()))

    def check_cap(self):
        if self.n_profiles > self.profile_cap:
            raise SizeCapError(f"{self.n_profiles} profiles exceed the cap of {self.profile_cap}")

    def value(self, k: int) -> Fraction:
        return self.types[k - 1]


@dataclass(frozen=True)
class AuctionMechanism:
    """Allocation and transfer vectors keyed by profile (tuples of type indices)."""

    allocation: Mapping
    transfers: Mapping

    def payoff(self, profile) -> Fraction:
        return sum(self.transfers[profile], Fraction(0))


def _replace(profile, i, k):
    return profile[:i] + (k,) + profile[i + 1 :]


def _check_monotone(env, allocation):
    for prof in env.profiles():
        for i in range(env.bidders):
            k = prof[i]
            if k > 1 and allocation[prof][i] < allocation[_replace(prof, i, k - 1)][i]:
                raise PreconditionError(f"allocation of bidder {i + 1} decreases in own type at {prof}")


def auction_maximal_transfers(env: AuctionEnv, allocation: Mapping) -> dict:
    """Each bidder pays the envelope telescope of its own allocation."""
    env.check_cap()
    _check_monotone(env, allocation)
    out = {}
    for prof in env.profiles():
        pays = []
        for i in range(env.bidders):
            total = Fraction(0)
            prev = Fraction(0)
            for k in range(1, prof[i] + 1):
                q = to_rational(allocation[_replace(prof, i, k)][i])
                total += (q - prev) * env.value(k)
                prev = q
            pays.append(total)
        out[prof] = tuple(pays)
    return out


def auction_mechanism(env: AuctionEnv, allocation: Mapping) -> AuctionMechanism:
    alloc = {p: tuple(to_rational(x) for x in allocation[p]) for p in env.profiles()}
    return AuctionMechanism(alloc, auction_maximal_transfers(env, alloc))


def efficient_uniform_allocation(env: AuctionEnv) -> dict:
    alloc = {}
    for prof in env.profiles():
        top = max(prof)
        winners = [i for i, k in enumerate(prof) if k == top]
        share = Fraction(1, len(winners))
        alloc[prof] = tuple(share if i in winners else Fraction(0) for i in range(env.bidders))
    return alloc


def auction_efficient_maximal_uniform(env: AuctionEnv) -> AuctionMechanism:
    return auction_mechanism(env, efficient_uniform_allocation(env))


def auction_payoffs(env: AuctionEnv, mech: AuctionMechanism) -> PayoffVector:
    space = env.space()
    return PayoffVector(space, [mech.payoff(p) for p in space.labels])


def auction_violations(env: AuctionEnv, mech: AuctionMechanism) -> list:
    bad = []
    for prof in env.profiles():
        q = mech.allocation[prof]
        if any(x < 0 for x in q) or sum(q) > 1:
            bad.append(f"feasibility{prof}")
    for prof in env.profiles():
        for i in range(env.bidders):
            k = prof[i]
            own = mech.allocation[prof][i] * env.value(k) - mech.transfers[prof][i]
            if own < 0:
                bad.append(f"EPIR[{i + 1}]{prof}")
            for r in range(1, env.n_types + 1):
                if r == k:
                    continue
                lie = _replace(prof, i, r)
                if own < mech.allocation[lie][i] * env.value(k) - mech.transfers[lie][i]:
                    bad.append(f"DSIC[{i + 1}]{prof}->{r}")
    return bad


def auction_polytope(env: AuctionEnv) -> MechanismPolytope:
    space = env.space()
    lp = LinearProgram()
    I = env.bidders
    q = {p: [lp.add_variable(f"Q{i + 1}{p}", 0) for i in range(I)] for p in space.labels}
    t = {p: [lp.add_variable(f"P{i + 1}{p}", None) for i in range(I)] for p in space.labels}
    for p in space.labels:
        lp.add_constraint({j: 1 for j in q[p]}, "<=", 1, f"feasibility{p}")
    for p in space.labels:
        for i in range(I):
            k = p[i]
            v = env.value(k)
            for r in range(1, env.n_types + 1):
                if r == k:
                    continue
                lie = _replace(p, i, r)
                lp.add_constraint(
                    {q[p][i]: v, t[p][i]: -1, q[lie][i]: -v, t[lie][i]: 1}, ">=", 0, f"DSIC[{i + 1}]{p}->{r}"
                )
            lp.add_constraint({q[p][i]: v, t[p][i]: -1}, ">=", 0, f"EPIR[{i + 1}]{p}")
    payoffs = [Functional({j: Fraction(1) for j in t[p]}) for p in space.labels]
    return MechanismPolytope(lp, space, payoffs)


def auction_to_assignment(env: AuctionEnv, mech: AuctionMechanism) -> tuple:
    profiles = env.profiles()
    alloc = [x for p in profiles for x in mech.allocation[p]]
    pays = [x for p in profiles for x in mech.transfers[p]]
    return tuple(alloc + pays)


def auction_from_assignment(env: AuctionEnv, values) -> AuctionMechanism:
    profiles = env.profiles()
    I = env.bidders
    half = len(profiles) * I
    alloc = {p: tuple(values[n * I : (n + 1) * I]) for n, p in enumerate(profiles)}
    pays = {p: tuple(values[half + n * I : half + (n + 1) * I]) for n, p in enumerate(profiles)}
    return AuctionMechanism(alloc, pays)


@dataclass
class AuctionReport:
    ok: bool
    conditions: dict

    def __bool__(self):
        return self.ok


def auction_check_robust(env: AuctionEnv, mech: AuctionMechanism) -> AuctionReport:
    bad = auction_violations(env, mech)
    if bad:
        raise PreconditionError(f"mechanism is infeasible: {', '.join(bad[:5])}")
    low = tuple([1] * env.bidders)
    q = mech.allocation[low]
    v = {p: mech.payoff(p) for p in env.profiles()}
    conds = {
        "efficient_lowest": sum(q) == 1,
        "full_surplus_lowest": v[low] == env.value(1),
        "lowest_payoff_lowest": all(x >= v[low] for x in v.values()),
    }
    return AuctionReport(all(conds.values()), conds)


def auction_check_proper_structure(env: AuctionEnv, mech: AuctionMechanism) -> AuctionReport:
    """Efficient allocation, maximal transfers, and uniform ties below the top type."""
    bad = auction_violations(env, mech)
    if bad:
        raise PreconditionError(f"mechanism is infeasible: {', '.join(bad[:5])}")
    efficient = True
    uniform = True
    for prof in env.profiles():
        top = max(prof)
        winners = [i for i, k in enumerate(prof) if k == top]
        q = mech.allocation[prof]
        if sum(q) != 1 or any(q[i] for i in range(env.bidders) if i not in winners):
            efficient = False
        if top < env.n_types and len(winners) > 1 and any(q[i] != Fraction(1, len(winners)) for i in winners):
            uniform = False
    try:
        maximal = dict(auction_maximal_transfers(env, mech.allocation)) == {
            p: tuple(mech.transfers[p]) for p in env.profiles()
        }
    except PreconditionError:
        maximal = False
    conds = {"efficient": efficient, "maximal_transfers": maximal, "uniform_ties_below_top": uniform}
    return AuctionReport(all(conds.values()), conds)


def _order_value(env, k, J):
    """Revenue when the second-highest type is k-1 and held by J bidders, winner above."""
    lo, hi = env.value(k - 1), env.value(k)
    return Fraction(1, J + 1) * lo + (1 - Fraction(1, J + 1)) * hi


def auction_benchmark_counts(env: AuctionEnv) -> list:
    """(value, multiplicity) pairs of the efficient-uniform revenue distribution, ascending."""
    I, N = env.bidders, env.n_types
    out = [(env.value(1), 1)]
    for k in range(2, N + 1):
        for J in range(1, I):
            # winner anywhere in types k..N, J bidders at type k-1, the rest strictly below.
            count = I * comb(I - 1, J) * (k - 2) ** (I - 1 - J) * (N - k + 1)
            if count:
                out.append((_order_value(env, k, J), count))
        ties = sum(comb(I, m) * (k - 1) ** (I - m) for m in range(2, I + 1))
        out.append((env.value(k), ties))
    return out


def auction_benchmark_sorted_payoffs(env: AuctionEnv) -> tuple:
    vals = []
    for v, count in sorted(auction_benchmark_counts(env)):
        vals += [v] * count
    return tuple(vals)


def _families(env):
    """Profile families indexed by (top type k, J bidders at k-1) in benchmark order."""
    I = env.bidders
    fam = {}
    for prof in env.profiles():
        top = max(prof)
        winners = sum(1 for k in prof if k == top)
        if top == 1:
            continue
        if winners > 1:
            fam.setdefault(("tie", top), []).append(prof)
            continue
        second = max(k for k in prof if k != top) if I > 1 else 0
        J = sum(1 for k in prof if k == second)
        # second-highest type second = k-1 defines family k.
        k = second + 1
        kind = "exact" if top == k else "above"
        fam.setdefault((kind, k, J), []).append(prof)
    return fam


def auction_proper_lps(env: AuctionEnv, collapse: bool = False) -> LPS:
    """Point mass on the lowest profile, then for each top type k the unique-winner
    families with J = 1..I-1 bidders at type k-1 (winner at k, then winner above k),
    then the multi-way ties at k. Empty families repeat the previous belief.
    """
    space = env.space()
    I, N = env.bidders, env.n_types
    fam = _families(env)
    beliefs = [Belief.point(space, tuple([1] * I))]

    def push(profiles):
        if profiles:
            beliefs.append(Belief.uniform(space, profiles))
        else:
            beliefs.append(beliefs[-1])

    for k in range(2, N + 1):
        for J in range(1, I):
            push(fam.get(("exact", k, J)))
            push(fam.get(("above", k, J)))
        push(fam.get(("tie", k)))
    lps = LPS(tuple(beliefs))
    return lps.collapse_repeats() if collapse else lps


def virtual_values(env: AuctionEnv, prior: Belief) -> dict:
    profiles = env.profiles()
    rho = {p: prior.weights[n] for n, p in enumerate(profiles)}
    N = env.n_types
    out = {}
    for p in profiles:
        vv = []
        for i in range(env.bidders):
            j = p[i]
            if rho[p] == 0:
                vv.append(Fraction(0))
            elif j == N:
                vv.append(env.value(N))
            else:
                upper = sum((rho[_replace(p, i, k)] for k in range(j + 1, N + 1)), Fraction(0))
                vv.append(env.value(j) - (env.value(j + 1) - env.value(j)) * upper / rho[p])
        out[p] = tuple(vv)
    return out


def auction_bayesian_optimal(env: AuctionEnv, prior: Belief, zero_rule: str = "withhold") -> AuctionMechanism:
    """Pointwise virtual-value allocation; LP with monotonicity rows when that is not monotone.

    ``zero_rule`` decides profiles whose largest virtual value is exactly 0:
    "withhold" or "allocate" (uniform over the maximizers).
    """
    if zero_rule not in ("withhold", "allocate"):
        raise ValueError(f"unknown zero_rule {zero_rule!r}")
    env.check_cap()
    if len(prior.weights) != env.n_profiles:
        raise PreconditionError("prior must be over the full profile grid")
    vv = virtual_values(env, prior)
    alloc = {}
    for p, v in vv.items():
        top = max(v)
        if top < 0 or (top == 0 and zero_rule == "withhold"):
            alloc[p] = tuple(Fraction(0) for _ in v)
        else:
            winners = [i for i, x in enumerate(v) if x == top]
            alloc[p] = tuple(Fraction(1, len(winners)) if i in winners else Fraction(0) for i in range(len(v)))
    try:
        return auction_mechanism(env, alloc)
    except PreconditionError:
        return _bayesian_lp(env, prior, vv)


def _bayesian_lp(env, prior, vv):
    """Maximize expected virtual surplus under monotonicity; break ties toward total surplus."""
    profiles = env.profiles()
    rho = dict(zip(profiles, prior.weights))
    lp = LinearProgram()
    I = env.bidders
    q = {p: [lp.add_variable(f"Q{i + 1}{p}", 0) for i in range(I)] for p in profiles}
    for p in profiles:
        lp.add_constraint({j: 1 for j in q[p]}, "<=", 1)
        for i in range(I):
            if p[i] > 1:
                lp.add_constraint({q[p][i]: 1, q[_replace(p, i, p[i] - 1)][i]: -1}, ">=", 0)
    primary = {q[p][i]: rho[p] * vv[p][i] for p in profiles for i in range(I) if rho[p] * vv[p][i]}
    lp.set_objective(primary)
    sol = solve_lp(lp)
    if sol.status is not LPStatus.OPTIMAL:
        raise RuntimeError("Bayesian auction LP failed")
    lp.add_constraint(primary, "==", sol.optimum)
    lp.set_objective({q[p][i]: env.value(p[i]) for p in profiles for i in range(I)})
    sol = solve_lp(lp)
    alloc = {p: tuple(sol[q[p][i]] for i in range(I)) for p in profiles}
    return auction_mechanism(env, alloc)


def example_withholding_allocation(env: AuctionEnv) -> dict:
    """Two bidders, three types: the higher report wins; ties at the bottom and top
    split evenly and the middle tie hands out only a quarter each.
    """
    if env.bidders != 2 or env.n_types != 3:
        raise PreconditionError("defined for two bidders and three types")
    half, quarter = Fraction(1, 2), Fraction(1, 4)
    alloc = {}
    for a, b in env.profiles():
        if a > b:
            alloc[(a, b)] = (Fraction(1), Fraction(0))
        elif b > a:
            alloc[(a, b)] = (Fraction(0), Fraction(1))
        elif a == 2:
            alloc[(a, b)] = (quarter, quarter)
        else:
            alloc[(a, b)] = (half, half)
    return alloc


def example_withholding_lps(env: AuctionEnv) -> LPS:
    space = env.space()
    return LPS(
        (
            Belief.point(space, (1, 1)),
            Belief.uniform(space, [(2, 2), (3, 2), (2, 3)]),
            Belief.uniform(space, [(1, 2), (2, 1)]),
            Belief.uniform(space, [(1, 3), (3, 1)]),
            Belief.point(space, (3, 3)),
        )
    )


def example_misallocation_allocation(env: AuctionEnv) -> dict:
    """Two bidders, three types: bidder 1 wins only with a strictly higher report other
    than (2, 1); every other profile goes to bidder 2.
    """
    if env.bidders != 2 or env.n_types != 3:
        raise PreconditionError("defined for two bidders and three types")
    alloc = {}
    for a, b in env.profiles():
        first = a > b and (a, b) != (2, 1)
        alloc[(a, b)] = (Fraction(int(first)), Fraction(int(not first)))
    return alloc


def example_misallocation_lps(env: AuctionEnv) -> LPS:
    space = env.space()
    return LPS(
        (
            Belief.point(space, (1, 1)),
            Belief.point(space, (3, 1)),
            Belief.point(space, (3, 2)),
            Belief.uniform(space, [(1, 2), (1, 3), (2, 1)]),
            Belief.uniform(space, [(2, 2), (2, 3), (3, 3)]),
        )
    )


def partial_withholding_allocation(env: AuctionEnv) -> dict:
    """Two bidders, two types: revenue equals the low type at every profile."""
    if env.bidders != 2 or env.n_types != 2:
        raise PreconditionError("defined for two bidders and two types")
    r = env.value(1) / env.value(2)
    half = Fraction(1, 2)
    return {
        (1, 1): (half, half),
        (1, 2): (Fraction(0), half + half * r),
        (2, 1): (half + half * r, Fraction(0)),
        (2, 2): (half * r, half * r),
    }
