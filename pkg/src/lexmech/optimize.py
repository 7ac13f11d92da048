"""Maxmin, leximin and belief-based decision procedures over mechanism polytopes."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ConstructionFailure, InfeasibleError, PreconditionError, UnboundedError
from .lps import (
    LPS,
    Belief,
    Ordering,
    PayoffVector,
    ProfileSpace,
    _same_space,
    classify_lps,
    lex_compare,
    lex_payoffs,
    sorted_payoffs,
)
from .simplex import LinearProgram, LPStatus, solve_lp

log = logging.getLogger(__name__)


@dataclass
class Functional:
    """Affine map: sum(coeffs[j] * x_j) + const."""

    coeffs: dict
    const: Fraction = Fraction(0)

    def __call__(self, values) -> Fraction:
        return self.const + sum((a * values[j] for j, a in self.coeffs.items()), Fraction(0))

    def scaled(self, w) -> "Functional":
        return Functional({j: w * a for j, a in self.coeffs.items()}, w * self.const)


def _combine(functionals, weights) -> Functional:
    coeffs, const = {}, Fraction(0)
    for f, w in zip(functionals, weights):
        if not w:
            continue
        const += w * f.const
        for j, a in f.coeffs.items():
            coeffs[j] = coeffs.get(j, Fraction(0)) + w * a
    return Functional({j: a for j, a in coeffs.items() if a}, const)


@dataclass
class MechanismPolytope:
    """Feasible mechanisms as an LP skeleton plus one payoff functional per profile."""

    lp: LinearProgram
    space: ProfileSpace
    payoffs: list
    multiplicities: tuple | None = None

    def __post_init__(self):
        if len(self.payoffs) != len(self.space):
            raise ValueError("one payoff functional per profile required")
        n = len(self.lp.variables)
        for f in self.payoffs:
            if any(not (0 <= j < n) for j in f.coeffs):
                raise ValueError("payoff functional references an undeclared variable")

    def evaluate(self, values) -> PayoffVector:
        return PayoffVector(self.space, [f(values) for f in self.payoffs])

    def contains(self, values) -> bool:
        return self.lp.is_feasible_point(values)

    def functional(self, label) -> Functional:
        return self.payoffs[self.space.index(label)]


def _add_affine(lp: LinearProgram, f: Functional, relation, rhs, extra=None, name=""):
    coeffs = dict(f.coeffs)
    if extra:
        for j, a in extra.items():
            coeffs[j] = coeffs.get(j, Fraction(0)) + a
    lp.add_constraint(coeffs, relation, rhs - f.const, name)


def _raise_status(sol, what):
    if sol.status is LPStatus.INFEASIBLE:
        raise InfeasibleError(f"{what}: infeasible")
    if sol.status is LPStatus.UNBOUNDED:
        raise UnboundedError(f"{what}: unbounded")


def menu_polytope(menu: Sequence[PayoffVector]) -> MechanismPolytope:
    """Mixtures over a finite menu: weights lambda >= 0 summing to one."""
    if not menu:
        raise PreconditionError("empty menu")
    space = menu[0].space
    for m in menu[1:]:
        _same_space(space, m.space)
    lp = LinearProgram()
    idx = [lp.add_variable(f"lambda[{j}]", 0) for j in range(len(menu))]
    lp.add_constraint({j: 1 for j in idx}, "==", 1, "mixture")
    payoffs = [
        Functional({j: m.values[t] for j, m in zip(idx, menu) if m.values[t]})
        for t in range(len(space))
    ]
    return MechanismPolytope(lp, space, payoffs)


# -- maxmin ---------------------------------------------------------------------------


def maxmin_solve(poly: MechanismPolytope):
    """Return (value, assignment) maximizing the worst-case profile payoff."""
    lp = poly.lp.copy()
    t = lp.add_variable("__t", None)
    for lab, f in zip(poly.space.labels, poly.payoffs):
        _add_affine(lp, f, ">=", 0, {t: -1}, f"floor[{lab}]")
    lp.set_objective({t: 1})
    sol = solve_lp(lp)
    _raise_status(sol, "maxmin")
    return sol.optimum, sol.values[:-1]


# -- leximin --------------------------------------------------------------------------


@dataclass
class LeximinResult:
    mechanism: tuple
    names: tuple
    level_values: tuple
    level_sets: tuple
    payoffs: PayoffVector

    def assignment(self) -> dict:
        return dict(zip(self.names, self.mechanism))


def _pinned_lp(poly, fixed):
    lp = poly.lp.copy()
    for i, value in fixed.items():
        _add_affine(lp, poly.payoffs[i], "==", value, name=f"pin[{poly.space.labels[i]}]")
    return lp


def leximin_solve(poly: MechanismPolytope) -> LeximinResult:
    """Saturation: raise the common floor, pin the profiles that cannot rise, repeat."""
    n = len(poly.space)
    fixed: dict[int, Fraction] = {}
    free = list(range(n))
    levels, sets = [], []
    last = None
    while free:
        lp = _pinned_lp(poly, fixed)
        t = lp.add_variable("__t", None)
        for i in free:
            _add_affine(lp, poly.payoffs[i], ">=", 0, {t: -1})
        lp.set_objective({t: 1})
        sol = solve_lp(lp)
        _raise_status(sol, "leximin round")
        tstar = sol.optimum
        last = sol.values[:-1]

        movable = {i for i in free if poly.payoffs[i](last) > tstar}
        pinned = []
        for i in free:
            if i in movable:
                continue
            probe = _pinned_lp(poly, fixed)
            for k in free:
                _add_affine(probe, poly.payoffs[k], ">=", tstar)
            probe.set_objective(poly.payoffs[i].coeffs)
            res = solve_lp(probe)
            if res.status is LPStatus.UNBOUNDED:
                movable.add(i)
                continue
            _raise_status(res, "leximin probe")
            if res.optimum + poly.payoffs[i].const > tstar:
                movable.update(k for k in free if poly.payoffs[k](res.values) > tstar)
            else:
                pinned.append(i)
        if not pinned:
            raise RuntimeError("leximin saturation fixed no profile; the LP engine is inconsistent")
        for i in pinned:
            fixed[i] = tstar
        free = [i for i in free if i not in fixed]
        levels.append(tstar)
        sets.append(tuple(poly.space.labels[i] for i in pinned))
        log.debug("leximin level %s fixes %d profiles", tstar, len(pinned))

    return LeximinResult(
        mechanism=tuple(last),
        names=tuple(v.name for v in poly.lp.variables),
        level_values=tuple(levels),
        level_sets=tuple(sets),
        payoffs=poly.evaluate(last),
    )


# -- dominance and beliefs ------------------------------------------------------------


@dataclass
class DominanceResult:
    admissible: bool
    witness: tuple | None = None
    total_slack: Fraction | None = None
    vacuous: bool = False


def dominance_check(candidate: PayoffVector, poly: MechanismPolytope) -> DominanceResult:
    """Is some feasible mechanism at least as good everywhere and better somewhere?"""
    _same_space(candidate.space, poly.space)
    lp = poly.lp.copy()
    slacks = []
    for lab, f, c in zip(poly.space.labels, poly.payoffs, candidate.values):
        s = lp.add_variable(f"__slack[{lab}]", 0)
        slacks.append(s)
        _add_affine(lp, f, "==", c, {s: -1})
    lp.set_objective({s: 1 for s in slacks})
    sol = solve_lp(lp)
    if sol.status is LPStatus.INFEASIBLE:
        # Nothing in the polytope reaches the candidate's payoffs at all.
        return DominanceResult(True, vacuous=True)
    if sol.status is LPStatus.UNBOUNDED:
        raise UnboundedError("payoffs unbounded above on the polytope")
    nvar = len(poly.lp.variables)
    if sol.optimum > 0:
        return DominanceResult(False, sol.values[:nvar], sol.optimum)
    return DominanceResult(True, total_slack=sol.optimum)


def optimal_full_support_belief(
    candidate: PayoffVector, menu: Sequence[PayoffVector], support: Sequence | None = None
) -> Belief | None:
    """A belief putting positive weight on every profile of ``support`` under which
    the candidate is a best reply within the menu; None if there is none.
    """
    if not menu:
        raise PreconditionError("empty menu")
    space = candidate.space
    for m in menu:
        _same_space(space, m.space)
    labels = list(space.labels if support is None else support)
    idx = [space.index(lab) for lab in labels]
    lp = LinearProgram()
    w = [lp.add_variable(f"w[{lab}]", 1) for lab in labels]
    for a, alt in enumerate(menu):
        row = {wj: candidate.values[i] - alt.values[i] for wj, i in zip(w, idx)}
        lp.add_constraint(row, ">=", 0, f"alt[{a}]")
    lp.set_objective({wj: 1 for wj in w}, "min")
    sol = solve_lp(lp)
    if sol.status is not LPStatus.OPTIMAL:
        return None
    total = sum(sol.values)
    weights = [Fraction(0)] * len(space)
    for i, x in zip(idx, sol.values):
        weights[i] = x / total
    return Belief(space, weights)


def adversarial_optimal_belief(candidate: PayoffVector, menu: Sequence[PayoffVector]) -> Belief | None:
    """A belief on the candidate's worst profiles against which it is a best reply."""
    if not menu:
        raise PreconditionError("empty menu")
    space = candidate.space
    floor = min(candidate.values)
    worst = [i for i, v in enumerate(candidate.values) if v == floor]
    lp = LinearProgram()
    w = [lp.add_variable(f"w[{space.labels[i]}]", 0) for i in worst]
    lp.add_constraint({wj: 1 for wj in w}, "==", 1)
    for a, alt in enumerate(menu):
        _same_space(space, alt.space)
        lp.add_constraint({wj: candidate.values[i] - alt.values[i] for wj, i in zip(w, worst)}, ">=", 0)
    sol = solve_lp(lp)
    if sol.status is not LPStatus.OPTIMAL:
        return None
    weights = [Fraction(0)] * len(space)
    for i, x in zip(worst, sol.values):
        weights[i] = x
    return Belief(space, weights)


def construct_adversarial_full_support_lps(candidate: PayoffVector, menu: Sequence[PayoffVector]) -> LPS | None:
    """Two-level LPS: an adversarial first belief, then a full-support one."""
    first = adversarial_optimal_belief(candidate, menu)
    if first is None:
        return None
    second = optimal_full_support_belief(candidate, menu)
    if second is None:
        return None
    return LPS((first, second))


def construct_justifying_lps(
    candidate: PayoffVector, menu: Sequence[PayoffVector], check_precondition: bool = True
) -> LPS:
    """Level k puts weight on exactly the k lowest payoff classes of the candidate."""
    if not menu:
        raise PreconditionError("empty menu")
    if check_precondition:
        best = leximin_solve(menu_polytope(menu))
        if lex_compare(sorted_payoffs(candidate), sorted_payoffs(best.payoffs)) != Ordering.EQUAL:
            raise PreconditionError("candidate is not leximin optimal within the menu")
    space = candidate.space
    values = sorted(set(candidate.values))
    beliefs = []
    support = []
    for v in values:
        support += [lab for lab, x in zip(space.labels, candidate.values) if x == v]
        belief = optimal_full_support_belief(candidate, menu, support)
        if belief is None:
            raise ConstructionFailure(f"no belief on the {len(beliefs) + 1} lowest payoff classes")
        beliefs.append(belief)
    return LPS(tuple(beliefs))


# -- mu-optimality ---------------------------------------------------------------------


@dataclass
class MuOptimalityReport:
    ok: bool
    level: int | None = None
    reason: str = ""
    candidate_levels: tuple = ()
    best_levels: tuple = ()

    def __bool__(self):
        return self.ok


def mu_optimality_report(candidate: PayoffVector, poly: MechanismPolytope, lps: LPS) -> MuOptimalityReport:
    _same_space(candidate.space, poly.space)
    _same_space(lps.space, poly.space)
    target = lex_payoffs(lps, candidate)
    lp = poly.lp.copy()
    best = []
    for k, belief in enumerate(lps.beliefs):
        f = _combine(poly.payoffs, belief.weights)
        lp.set_objective(f.coeffs)
        sol = solve_lp(lp)
        if sol.status is LPStatus.INFEASIBLE:
            return MuOptimalityReport(False, k + 1, "earlier levels cannot be matched", target, tuple(best))
        if sol.status is LPStatus.UNBOUNDED:
            return MuOptimalityReport(False, k + 1, "level payoff unbounded", target, tuple(best))
        value = sol.optimum + f.const
        best.append(value)
        if value > target[k]:
            return MuOptimalityReport(False, k + 1, "a feasible mechanism does strictly better", target, tuple(best))
        if value < target[k]:
            return MuOptimalityReport(
                False, k + 1, "candidate level payoff is not attainable in the polytope", target, tuple(best)
            )
        _add_affine(lp, f, "==", target[k], name=f"level[{k + 1}]")
    return MuOptimalityReport(True, candidate_levels=target, best_levels=tuple(best))


def verify_mu_optimal(candidate: PayoffVector, poly: MechanismPolytope, lps: LPS) -> bool:
    return mu_optimality_report(candidate, poly, lps).ok


def is_leximin_optimal(candidate: PayoffVector, poly: MechanismPolytope) -> bool:
    best = leximin_solve(poly)
    return lex_compare(sorted_payoffs(candidate), sorted_payoffs(best.payoffs)) == Ordering.EQUAL


def is_maxmin_optimal(candidate: PayoffVector, poly: MechanismPolytope) -> bool:
    value, _ = maxmin_solve(poly)
    return min(candidate.values) == value


def justification_check(candidate: PayoffVector, poly: MechanismPolytope, lps: LPS):
    """Classification flags plus mu-optimality, the certificate of proper robustness."""
    return classify_lps(lps, candidate), verify_mu_optimal(candidate, poly, lps)
