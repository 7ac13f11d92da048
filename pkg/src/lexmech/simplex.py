"""Exact two-phase simplex on rationals with Bland's anti-cycling rule.

The tableau is stored as sparse rows (dict column -> coefficient). When
gmpy2 is importable its ``mpq`` type is used internally for speed; every
value crossing the public API is a ``fractions.Fraction``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import MalformedProgramError
from .rational import fmt, to_rational

try:  # pragma: no cover - exercised implicitly
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

LE, EQ, GE = "<=", "==", ">="
_RELATIONS = {"<=": LE, "≤": LE, "==": EQ, "=": EQ, ">=": GE, "≥": GE}


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class Variable:
    name: str
    lower: Fraction | None = Fraction(0)
    upper: Fraction | None = None


@dataclass
class Constraint:
    coeffs: dict
    relation: str
    rhs: Fraction
    name: str = ""


@dataclass
class LinearProgram:
    """Variables with optional bounds, linear rows, and one objective."""

    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    sense: str = "max"
    _names: dict = field(default_factory=dict, repr=False)

    def add_variable(self, name: str, lower=0, upper=None) -> int:
        if name in self._names:
            raise MalformedProgramError(f"duplicate variable {name!r}")
        lo = None if lower is None else to_rational(lower)
        hi = None if upper is None else to_rational(upper)
        if lo is not None and hi is not None and lo > hi:
            raise MalformedProgramError(f"bounds of {name!r} are inconsistent: {lo} > {hi}")
        self._names[name] = len(self.variables)
        self.variables.append(Variable(name, lo, hi))
        return len(self.variables) - 1

    def var(self, name: str) -> int:
        return self._names[name]

    def add_constraint(self, coeffs: Mapping, relation: str, rhs, name: str = ""):
        if relation not in _RELATIONS:
            raise MalformedProgramError(f"unknown relation {relation!r}")
        row = {}
        for j, a in coeffs.items():
            j = self._resolve(j)
            a = to_rational(a)
            if a:
                row[j] = row.get(j, Fraction(0)) + a
        self.constraints.append(Constraint(row, _RELATIONS[relation], to_rational(rhs), name))

    def set_objective(self, coeffs: Mapping, sense: str = "max"):
        if sense not in ("max", "min"):
            raise MalformedProgramError(f"unknown sense {sense!r}")
        self.objective = {}
        for j, a in coeffs.items():
            j = self._resolve(j)
            a = to_rational(a)
            if a:
                self.objective[j] = self.objective.get(j, Fraction(0)) + a
        self.sense = sense

    def copy(self) -> "LinearProgram":
        return LinearProgram(
            [Variable(v.name, v.lower, v.upper) for v in self.variables],
            [Constraint(dict(c.coeffs), c.relation, c.rhs, c.name) for c in self.constraints],
            dict(self.objective),
            self.sense,
            dict(self._names),
        )

    def _resolve(self, j) -> int:
        if isinstance(j, str):
            if j not in self._names:
                raise MalformedProgramError(f"unknown variable {j!r}")
            return self._names[j]
        if not (0 <= j < len(self.variables)):
            raise MalformedProgramError(f"unknown variable index {j}")
        return j

    def validate(self):
        n = len(self.variables)
        for c in self.constraints:
            for j in c.coeffs:
                if not (isinstance(j, int) and 0 <= j < n):
                    raise MalformedProgramError(f"constraint {c.name!r} references unknown variable {j!r}")
        for j in self.objective:
            if not (isinstance(j, int) and 0 <= j < n):
                raise MalformedProgramError(f"objective references unknown variable {j!r}")
        for v in self.variables:
            if v.lower is not None and v.upper is not None and v.lower > v.upper:
                raise MalformedProgramError(f"bounds of {v.name!r} are inconsistent")

    def is_feasible_point(self, values) -> bool:
        for v, x in zip(self.variables, values):
            if (v.lower is not None and x < v.lower) or (v.upper is not None and x > v.upper):
                return False
        for c in self.constraints:
            lhs = sum((a * values[j] for j, a in c.coeffs.items()), Fraction(0))
            if (c.relation == LE and lhs > c.rhs) or (c.relation == GE and lhs < c.rhs) or (
                c.relation == EQ and lhs != c.rhs
            ):
                return False
        return True


@dataclass(frozen=True)
class LPSolution:
    status: LPStatus
    optimum: Fraction | None = None
    values: tuple | None = None
    names: tuple = ()

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL

    def __getitem__(self, key):
        if self.values is None:
            raise ValueError(f"no assignment for status {self.status.value}")
        if isinstance(key, str):
            key = self.names.index(key)
        return self.values[key]

    def assignment(self) -> dict:
        return dict(zip(self.names, self.values or ()))


def dump_lp(lp: LinearProgram) -> str:
    """Plain-text dump: a header, one line per row, then bounds.

    Row format is ``name: a1*x1 + a2*x2 ... REL rhs`` with every coefficient
    written as an exact "p/q" rational.
    """
    names = [v.name for v in lp.variables]

    def row(coeffs):
        if not coeffs:
            return "0"
        return " + ".join(f"{fmt(a)}*{names[j]}" for j, a in sorted(coeffs.items()))

    lines = [f"{lp.sense}: {row(lp.objective)}", "subject to"]
    for i, c in enumerate(lp.constraints):
        lines.append(f"{c.name or f'r{i}'}: {row(c.coeffs)} {c.relation} {fmt(c.rhs)}")
    lines.append("bounds")
    for v in lp.variables:
        lo = "-inf" if v.lower is None else fmt(v.lower)
        hi = "+inf" if v.upper is None else fmt(v.upper)
        lines.append(f"{lo} <= {v.name} <= {hi}")
    return "\n".join(lines) + "\n"


class _Tableau:
    """Sparse simplex tableau for: maximize c.y s.t. rows, y >= 0."""

    def __init__(self, rows, rhs, basis, ncols):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.ncols = ncols

    def pivot(self, r, j, cost_row):
        row = self.rows[r]
        p = row[j]
        inv = 1 / p
        for k in row:
            row[k] *= inv
        row[j] = _Q(1)
        self.rhs[r] *= inv
        b = self.rhs[r]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other.get(j)
            if f is None:
                continue
            for k, a in row.items():
                val = other.get(k, 0) - f * a
                if val:
                    other[k] = val
                else:
                    other.pop(k, None)
            self.rhs[i] -= f * b
        f = cost_row[0].get(j)
        if f is not None:
            for k, a in row.items():
                val = cost_row[0].get(k, 0) - f * a
                if val:
                    cost_row[0][k] = val
                else:
                    cost_row[0].pop(k, None)
            cost_row[1] -= f * b
        self.basis[r] = j

    def reduced_costs(self, c):
        """d_j = c_j - sum_i c_{basis i} row_i[j]; value = sum_i c_{basis i} rhs_i."""
        d = {j: _Q(a) for j, a in c.items() if a}
        value = _Q(0)
        for i, row in enumerate(self.rows):
            cb = c.get(self.basis[i])
            if not cb:
                continue
            value += cb * self.rhs[i]
            for k, a in row.items():
                val = d.get(k, 0) - cb * a
                if val:
                    d[k] = val
                else:
                    d.pop(k, None)
        # cost_row stores -(d) convention: entering when d_j > 0.
        return [d, -value]

    def optimize(self, c, allowed):
        cost = self.reduced_costs(c)
        while True:
            entering = None
            for j in sorted(cost[0]):
                if j in allowed and cost[0][j] > 0:
                    entering = j
                    break
            if entering is None:
                return "optimal", -cost[1]
            best = None
            for i, row in enumerate(self.rows):
                a = row.get(entering)
                if a is not None and a > 0:
                    ratio = self.rhs[i] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded", None
            self.pivot(best[1], entering, cost)


def solve_lp(lp: LinearProgram) -> LPSolution:
    lp.validate()
    names = tuple(v.name for v in lp.variables)
    # Map each original variable to nonnegative columns: x = offset + sum(sign * y).
    cols = []
    offsets = []
    bound_rows = []
    ncol = 0
    for v in lp.variables:
        if v.lower is not None:
            cols.append(((ncol, 1),))
            offsets.append(v.lower)
            if v.upper is not None:
                bound_rows.append(({ncol: Fraction(1)}, LE, v.upper - v.lower))
            ncol += 1
        elif v.upper is not None:
            cols.append(((ncol, -1),))
            offsets.append(v.upper)
            ncol += 1
        else:
            cols.append(((ncol, 1), (ncol + 1, -1)))
            offsets.append(Fraction(0))
            ncol += 2

    def translate(coeffs, rhs):
        row = {}
        for j, a in coeffs.items():
            rhs -= a * offsets[j]
            for col, sign in cols[j]:
                row[col] = row.get(col, 0) + sign * a
        return {k: a for k, a in row.items() if a}, rhs

    raw = [translate(c.coeffs, c.rhs) + (c.relation,) for c in lp.constraints]
    raw += [(r, rhs, rel) for r, rel, rhs in bound_rows]

    rows, rhs_list, basis, artificials = [], [], [], []
    n_struct = ncol
    extra = n_struct
    for coeffs, rhs, rel in raw:
        # Zero-rhs ">=" rows flip to "<=" so a slack can start in the basis.
        if rhs < 0 or (rhs == 0 and rel == GE):
            coeffs = {k: -a for k, a in coeffs.items()}
            rhs = -rhs
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        row = {k: _Q(a) for k, a in coeffs.items()}
        if rel == LE:
            row[extra] = _Q(1)
            basis.append(extra)
            extra += 1
        else:
            if rel == GE:
                row[extra] = _Q(-1)
                extra += 1
            artificials.append(len(rows))
            basis.append(None)
        rows.append(row)
        rhs_list.append(_Q(rhs))
    art_cols = set()
    for i in artificials:
        rows[i][extra] = _Q(1)
        basis[i] = extra
        art_cols.add(extra)
        extra += 1

    tab = _Tableau(rows, rhs_list, basis, extra)
    all_cols = set(range(extra))
    if art_cols:
        status, value = tab.optimize({j: -1 for j in art_cols}, all_cols)
        if value < 0:
            return LPSolution(LPStatus.INFEASIBLE, names=names)
        # Drive remaining (zero-valued) artificials out of the basis.
        dummy = [{}, _Q(0)]
        i = 0
        while i < len(tab.rows):
            if tab.basis[i] in art_cols:
                j = next((k for k in sorted(tab.rows[i]) if k not in art_cols), None)
                if j is None:
                    del tab.rows[i]
                    del tab.rhs[i]
                    del tab.basis[i]
                    continue
                tab.pivot(i, j, dummy)
            i += 1
        for row in tab.rows:
            for k in art_cols:
                row.pop(k, None)
    allowed = all_cols - art_cols

    sign = 1 if lp.sense == "max" else -1
    c = {}
    const = Fraction(0)
    for j, a in lp.objective.items():
        const += a * offsets[j]
        for col, s in cols[j]:
            c[col] = c.get(col, 0) + sign * s * a
    status, value = tab.optimize(c, allowed)
    if status == "unbounded":
        return LPSolution(LPStatus.UNBOUNDED, names=names)

    y = [Fraction(0)] * extra
    for i, j in enumerate(tab.basis):
        y[j] = _frac(tab.rhs[i])
    x = []
    for j in range(len(lp.variables)):
        x.append(offsets[j] + sum((s * y[col] for col, s in cols[j]), Fraction(0)))
    optimum = sign * _frac(value) + const
    return LPSolution(LPStatus.OPTIMAL, optimum, tuple(x), names)


def _frac(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    return Fraction(int(q.numerator), int(q.denominator))
