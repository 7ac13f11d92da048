"""Binary-valuation public good provision by a profit-maximizing firm."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, floor
from typing import Mapping, Sequence

from .errors import PreconditionError, SizeCapError
from .lps import LPS, Belief, PayoffVector, ProfileSpace
from .optimize import Functional, MechanismPolytope
from .rational import to_rational
from .simplex import LinearProgram

DEFAULT_PROFILE_CAP = 256
LOW, HIGH = "l", "h"


@dataclass(frozen=True)
class PublicGoodEnv:
    agents: int
    theta_low: Fraction
    theta_high: Fraction
    gamma: Fraction
    profile_cap: int = DEFAULT_PROFILE_CAP

    def __post_init__(self):
        for name in ("theta_low", "theta_high", "gamma"):
            object.__setattr__(self, name, to_rational(getattr(self, name)))
        if self.agents < 2:
            raise ValueError("at least two agents required")
        if not self.theta_high > 0 or not self.theta_high > self.theta_low:
            raise ValueError("need theta_high > max(0, theta_low)")
        if not self.theta_low < self.gamma < self.theta_high:
            raise ValueError("per-capita cost must lie strictly between the two valuations")

    @property
    def cost(self) -> Fraction:
        return self.gamma * self.agents

    @property
    def gap(self) -> Fraction:
        return self.theta_high - self.theta_low

    def profiles(self) -> list:
        if 2**self.agents > self.profile_cap:
            raise SizeCapError(f"{2 ** self.agents} profiles exceed the cap of {self.profile_cap}")
        return list(itertools.product((LOW, HIGH), repeat=self.agents))

    def space(self) -> ProfileSpace:
        return ProfileSpace(tuple(self.profiles()))

    def value(self, t: str) -> Fraction:
        return self.theta_high if t == HIGH else self.theta_low


def count_high(profile) -> int:
    return sum(1 for t in profile if t == HIGH)


@dataclass(frozen=True)
class Primitives:
    surplus: tuple
    k_star: int
    rho: Fraction


def pub_primitives(env: PublicGoodEnv) -> Primitives:
    I = env.agents
    S = tuple(I * env.theta_low + k * env.gap - env.cost for k in range(I + 1))
    k_star = min(k for k in range(I + 1) if S[k] > 0)
    rho = (env.gamma - env.theta_low) / env.gap
    return Primitives(S, k_star, rho)


@dataclass(frozen=True)
class AnonymousPGMechanism:
    Q_by_count: tuple

    def __post_init__(self):
        q = tuple(to_rational(x) for x in self.Q_by_count)
        if any(a > b for a, b in zip(q, q[1:])) or q[0] < 0 or q[-1] > 1:
            raise ValueError("provision probabilities must be increasing within [0, 1]")
        object.__setattr__(self, "Q_by_count", q)

    def rule(self) -> dict:
        """Profile-indexed provision rule for the full profile grid."""
        I = len(self.Q_by_count) - 1
        return {p: self.Q_by_count[count_high(p)] for p in itertools.product((LOW, HIGH), repeat=I)}


def _flip(profile, i, t):
    return profile[:i] + (t,) + profile[i + 1 :]


def pub_maximal_transfers(env: PublicGoodEnv, Q) -> dict:
    """Per-agent transfers: the low type pays its full value, the high type pays the envelope step."""
    rule = Q.rule() if isinstance(Q, AnonymousPGMechanism) else {p: to_rational(x) for p, x in Q.items()}
    out = {}
    for p in env.profiles():
        pays = []
        for i in range(env.agents):
            lo = rule[_flip(p, i, LOW)]
            hi = rule[_flip(p, i, HIGH)]
            if hi < lo:
                raise PreconditionError(f"provision decreases in agent {i + 1}'s report at {p}")
            pay = lo * env.theta_low
            if p[i] == HIGH:
                pay += (hi - lo) * env.theta_high
            pays.append(pay)
        out[p] = tuple(pays)
    return out


def pub_profile_payoffs(env: PublicGoodEnv, Q, transfers: Mapping | None = None) -> PayoffVector:
    rule = Q.rule() if isinstance(Q, AnonymousPGMechanism) else {p: to_rational(x) for p, x in Q.items()}
    if transfers is None:
        transfers = pub_maximal_transfers(env, rule)
    space = env.space()
    return PayoffVector(space, [sum(transfers[p], Fraction(0)) - rule[p] * env.cost for p in space.labels])


def pub_count_payoffs(env: PublicGoodEnv, mech: AnonymousPGMechanism) -> tuple:
    """Payoff at a profile with k high types: Q_k S_k - k * gap * Q_{k-1}."""
    S = pub_primitives(env).surplus
    Q = mech.Q_by_count
    return tuple(Q[k] * S[k] - (k * env.gap * Q[k - 1] if k else 0) for k in range(env.agents + 1))


def q_recursion(env: PublicGoodEnv) -> tuple:
    """q_K for K = 0..I, zero below the threshold count."""
    pr = pub_primitives(env)
    q = [Fraction(0)] * (env.agents + 1)
    for K in range(pr.k_star, env.agents + 1):
        prev = q[K - 1] if K > pr.k_star else Fraction(0)
        q[K] = (1 + K * env.gap * prev) / pr.surplus[K]
    return tuple(q)


def q_closed_form(env: PublicGoodEnv) -> tuple:
    """q_K as the sum over k of (1/S_k) * prod_{j=k+1..K} j * gap / S_j."""
    pr = pub_primitives(env)
    S = pr.surplus
    out = [Fraction(0)] * (env.agents + 1)
    for K in range(pr.k_star, env.agents + 1):
        total = Fraction(0)
        for k in range(pr.k_star, K + 1):
            term = 1 / S[k]
            for j in range(k + 1, K + 1):
                term *= j * env.gap / S[j]
            total += term
        out[K] = total
    return tuple(out)


def pub_properly_robust(env: PublicGoodEnv) -> AnonymousPGMechanism:
    q = q_recursion(env)
    qI = q[-1]
    return AnonymousPGMechanism(tuple(x / qI for x in q))


def pub_efficient_maximal(env: PublicGoodEnv) -> AnonymousPGMechanism:
    S = pub_primitives(env).surplus
    return AnonymousPGMechanism(tuple(Fraction(int(s > 0)) for s in S))


def pub_weights(env: PublicGoodEnv) -> tuple:
    """w_k = (1/S_k) prod_{j=k+1..I} j * gap / S_j for k >= k*, else 0."""
    pr = pub_primitives(env)
    S, I = pr.surplus, env.agents
    w = [Fraction(0)] * (I + 1)
    for k in range(pr.k_star, I + 1):
        term = 1 / S[k]
        for j in range(k + 1, I + 1):
            term *= j * env.gap / S[j]
        w[k] = term
    return tuple(w)


def pub_polytope(env: PublicGoodEnv, anonymous: bool = True, per_profile: bool = False) -> MechanismPolytope:
    """Anonymous reduced form over counts (optionally with one functional per profile),
    or the full profile-indexed DSIC/EPIR polytope.
    """
    S = pub_primitives(env).surplus
    I = env.agents
    if anonymous:
        lp = LinearProgram()
        Q = [lp.add_variable(f"Q[{k}]", 0, 1) for k in range(I + 1)]
        for k in range(1, I + 1):
            lp.add_constraint({Q[k]: 1, Q[k - 1]: -1}, ">=", 0, f"monotone[{k}]")
        funcs = []
        for k in range(I + 1):
            coeffs = {Q[k]: S[k]} if S[k] else {}
            if k:
                coeffs[Q[k - 1]] = -k * env.gap
            funcs.append(Functional(coeffs))
        if per_profile:
            space = env.space()
            return MechanismPolytope(lp, space, [funcs[count_high(p)] for p in space.labels])
        return MechanismPolytope(
            lp, ProfileSpace(tuple(range(I + 1))), funcs, tuple(comb(I, k) for k in range(I + 1))
        )

    space = env.space()
    lp = LinearProgram()
    q = {p: lp.add_variable(f"Q{p}", 0, 1) for p in space.labels}
    t = {p: [lp.add_variable(f"P{i + 1}{p}", None) for i in range(I)] for p in space.labels}
    for p in space.labels:
        for i in range(I):
            v = env.value(p[i])
            other = _flip(p, i, LOW if p[i] == HIGH else HIGH)
            lp.add_constraint({q[p]: v, t[p][i]: -1, q[other]: -v, t[other][i]: 1}, ">=", 0, f"DSIC[{i + 1}]{p}")
            lp.add_constraint({q[p]: v, t[p][i]: -1}, ">=", 0, f"EPIR[{i + 1}]{p}")
    funcs = []
    for p in space.labels:
        coeffs = {j: Fraction(1) for j in t[p]}
        coeffs[q[p]] = -env.cost
        funcs.append(Functional(coeffs))
    return MechanismPolytope(lp, space, funcs)


@dataclass
class PGReport:
    ok: bool
    conditions: dict

    def __bool__(self):
        return self.ok


def pub_check_robust(env: PublicGoodEnv, Q, transfers: Mapping | None = None) -> PGReport:
    """Robust iff the firm's ex post payoff is nonnegative at every profile."""
    rule = Q.rule() if isinstance(Q, AnonymousPGMechanism) else {p: to_rational(x) for p, x in Q.items()}
    if transfers is None:
        transfers = pub_maximal_transfers(env, rule)
    bad = _violations(env, rule, transfers)
    if bad:
        raise PreconditionError(f"mechanism is infeasible: {', '.join(bad[:5])}")
    v = pub_profile_payoffs(env, rule, transfers)
    worst = min(v.values)
    return PGReport(worst >= 0, {"min_payoff": worst})


def _violations(env, rule, transfers):
    bad = []
    for p in env.profiles():
        if not 0 <= rule[p] <= 1:
            bad.append(f"range{p}")
        for i in range(env.agents):
            v = env.value(p[i])
            own = rule[p] * v - transfers[p][i]
            if own < 0:
                bad.append(f"EPIR[{i + 1}]{p}")
            other = _flip(p, i, LOW if p[i] == HIGH else HIGH)
            if own < rule[other] * v - transfers[other][i]:
                bad.append(f"DSIC[{i + 1}]{p}")
    return bad


def cost_in_robust_interval(env: PublicGoodEnv) -> bool:
    """Total cost in [(I-1) theta_h + theta_l, I theta_h)."""
    c = env.cost
    return (env.agents - 1) * env.theta_high + env.theta_low <= c < env.agents * env.theta_high


def pub_check_efficient_maximal_robust(env: PublicGoodEnv) -> PGReport:
    interval = cost_in_robust_interval(env)
    direct = pub_check_robust(env, pub_efficient_maximal(env)).ok
    return PGReport(interval and direct, {"cost_in_interval": interval, "efficient_maximal_robust": direct})


def pub_justifying_lps(env: PublicGoodEnv) -> LPS:
    """Uniform over profiles whose total value does not exceed the cost, then
    the w-weighted belief over the profitable counts.
    """
    space = env.space()
    pr = pub_primitives(env)
    q = q_recursion(env)
    w = pub_weights(env)
    low = [p for p in space.labels if sum(env.value(t) for t in p) <= env.cost]
    first = Belief.uniform(space, low)
    second = []
    for p in space.labels:
        k = count_high(p)
        if k >= pr.k_star:
            second.append(w[k] / (comb(env.agents, k) * q[-1]))
        else:
            second.append(Fraction(0))
    return LPS((first, Belief(space, second)))


# -- asymptotics -----------------------------------------------------------------------


def provision_curve(Q_by_count: Sequence, x) -> Fraction:
    """f(x) = Q_{floor(x I)} for x in [0, 1]."""
    x = to_rational(x)
    if not 0 <= x <= 1:
        raise ValueError("x must lie in [0, 1]")
    I = len(Q_by_count) - 1
    return Q_by_count[floor(x * I)]


def rate_bound(rho: Fraction, I: int, K: int) -> Fraction:
    return (1 - rho) ** (I - K)


def rate_bound_violations(env: PublicGoodEnv) -> list:
    """Counts K >= k* where Q_K exceeds (1 - rho)^(I - K)."""
    pr = pub_primitives(env)
    Q = pub_properly_robust(env).Q_by_count
    return [K for K in range(pr.k_star, env.agents + 1) if Q[K] > rate_bound(pr.rho, env.agents, K)]


@dataclass
class AsymptoticsRow:
    I: int
    k: int
    fraction: Fraction
    Q: Fraction


@dataclass
class AsymptoticsReport:
    rows: list
    curve: list
    bound_checks: list

    @property
    def ok(self) -> bool:
        return all(c["holds"] for c in self.bound_checks)


def pub_asymptotics(
    theta_low, theta_high, gamma, I_list: Sequence[int], epsilon, x_grid: Sequence | None = None
) -> AsymptoticsReport:
    """Properly robust provision probabilities for each economy size, the curve f^I
    on ``x_grid``, and the check sup_{x <= 1-eps} f^I(x) <= (1-rho)^(I - floor((1-eps) I)).
    """
    eps = to_rational(epsilon)
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie strictly between 0 and 1")
    rows, curve, checks = [], [], []
    for I in I_list:
        env = PublicGoodEnv(I, theta_low, theta_high, gamma, profile_cap=2**I)
        pr = pub_primitives(env)
        Q = pub_properly_robust(env).Q_by_count
        for k in range(I + 1):
            rows.append(AsymptoticsRow(I, k, Fraction(k, I), Q[k]))
        for x in x_grid or ():
            curve.append((I, to_rational(x), provision_curve(Q, x)))
        K = floor((1 - eps) * I)
        sup = Q[K]
        bound = rate_bound(pr.rho, I, K)
        checks.append({"I": I, "K": K, "sup": sup, "bound": bound, "holds": sup <= bound})
    return AsymptoticsReport(rows, curve, checks)
