"""Single-agent screening with a finite type set and a discrete quality grid."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import PreconditionError
from .lps import Belief, PayoffVector, ProfileSpace
from .optimize import Functional, MechanismPolytope
from .rational import to_rational
from .simplex import LinearProgram


@dataclass(frozen=True)
class ScreeningEnv:
    """Types, a quality grid containing 0, and u/c given by name or by table.

    ``utility`` is "linear" (u = type * q) or a table indexed
    [type][grid point]. ``cost`` is "quadratic" (q^2/2), "constant"
    (``cost_constant`` everywhere) or a table indexed by grid point.
    """

    types: tuple
    grid: tuple
    utility: object = "linear"
    cost: object = "quadratic"
    cost_constant: Fraction = Fraction(0)
    u_table: tuple = field(init=False, repr=False)
    c_table: tuple = field(init=False, repr=False)

    def __post_init__(self):
        types = tuple(to_rational(t) for t in self.types)
        grid = tuple(to_rational(g) for g in self.grid)
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "cost_constant", to_rational(self.cost_constant))
        if not types:
            raise ValueError("at least one type required")
        if any(t <= 0 for t in types) or any(a >= b for a, b in zip(types, types[1:])):
            raise ValueError("types must be positive and strictly increasing")
        if any(a >= b for a, b in zip(grid, grid[1:])) or 0 not in grid:
            raise ValueError("quality grid must be strictly increasing and contain 0")

        if isinstance(self.utility, str):
            if self.utility != "linear":
                raise ValueError(f"unknown utility {self.utility!r}")
            u = tuple(tuple(t * q for q in grid) for t in types)
        else:
            u = tuple(tuple(to_rational(x) for x in row) for row in self.utility)
            if len(u) != len(types) or any(len(row) != len(grid) for row in u):
                raise ValueError("utility table must be types x grid")
        if isinstance(self.cost, str):
            if self.cost == "quadratic":
                c = tuple(q * q / 2 for q in grid)
            elif self.cost == "constant":
                c = tuple(self.cost_constant for _ in grid)
            else:
                raise ValueError(f"unknown cost {self.cost!r}")
        else:
            c = tuple(to_rational(x) for x in self.cost)
            if len(c) != len(grid):
                raise ValueError("cost table must have one entry per grid point")
        object.__setattr__(self, "u_table", u)
        object.__setattr__(self, "c_table", c)
        self._validate()

    def _validate(self):
        u, c, grid = self.u_table, self.c_table, self.grid
        z = grid.index(0)
        if any(x < 0 for x in c):
            raise ValueError("cost must be nonnegative")
        for i, row in enumerate(u):
            if row[z] != 0:
                raise ValueError(f"u(0, type {i + 1}) must be 0")
            if any(x < 0 for x in row):
                raise ValueError("utility must be nonnegative")
            if any(a > b for a, b in zip(row, row[1:])):
                raise ValueError("utility must be increasing in quality")
        for i in range(len(u) - 1):
            for g in range(len(grid)):
                for h in range(g + 1, len(grid)):
                    if not u[i + 1][h] - u[i + 1][g] > u[i][h] - u[i][g]:
                        raise ValueError(
                            f"strictly increasing differences fail between types {i + 1},{i + 2}"
                            f" at qualities {grid[g]},{grid[h]}"
                        )
        for i in range(len(u)):
            surplus = [u[i][g] - c[g] for g in range(len(grid))]
            if surplus.count(max(surplus)) > 1:
                raise ValueError(f"efficient quality for type {i + 1} is not unique on the grid")

    @property
    def n_types(self) -> int:
        return len(self.types)

    def u(self, g: int, i: int) -> Fraction:
        return self.u_table[i][g]

    def space(self) -> ProfileSpace:
        return ProfileSpace(tuple(range(1, self.n_types + 1)))


@dataclass(frozen=True)
class ScreeningMechanism:
    allocation: tuple
    transfers: tuple

    def __post_init__(self):
        object.__setattr__(self, "allocation", tuple(tuple(to_rational(x) for x in r) for r in self.allocation))
        object.__setattr__(self, "transfers", tuple(to_rational(x) for x in self.transfers))

    @classmethod
    def dirac(cls, env: ScreeningEnv, qualities: Sequence, transfers: Sequence) -> "ScreeningMechanism":
        rows = []
        for q in qualities:
            q = to_rational(q)
            if q not in env.grid:
                raise ValueError(f"quality {q} is not on the grid")
            rows.append(tuple(Fraction(int(g == q)) for g in env.grid))
        return cls(tuple(rows), tuple(transfers))

    def qualities(self, env: ScreeningEnv) -> tuple | None:
        """Grid qualities when every row is a point mass, else None."""
        out = []
        for row in self.allocation:
            if sorted(row)[-1] != 1:
                return None
            out.append(env.grid[row.index(1)])
        return tuple(out)


def _eu(env, row, i):
    return sum((p * env.u_table[i][g] for g, p in enumerate(row) if p), Fraction(0))


def _ec(env, row):
    return sum((p * env.c_table[g] for g, p in enumerate(row) if p), Fraction(0))


def efficient_qualities(env: ScreeningEnv) -> tuple:
    out = []
    for i in range(env.n_types):
        surplus = [env.u_table[i][g] - env.c_table[g] for g in range(len(env.grid))]
        best = max(surplus)
        if surplus.count(best) > 1:
            raise PreconditionError(f"tied efficient quality for type {i + 1}")
        out.append(env.grid[surplus.index(best)])
    return tuple(out)


def screening_maximal_transfers(env: ScreeningEnv, allocation: Sequence) -> tuple:
    """Lowest type pays its full utility; each next type pays the adjacent rent increment."""
    prices = []
    for i, row in enumerate(allocation):
        if i == 0:
            prices.append(_eu(env, row, 0))
        else:
            prices.append(prices[-1] + _eu(env, row, i) - _eu(env, allocation[i - 1], i))
    return tuple(prices)


def screening_efficient_maximal(env: ScreeningEnv) -> ScreeningMechanism:
    q = efficient_qualities(env)
    base = ScreeningMechanism.dirac(env, q, [0] * env.n_types)
    return ScreeningMechanism(base.allocation, screening_maximal_transfers(env, base.allocation))


def screening_payoffs(env: ScreeningEnv, mech: ScreeningMechanism) -> PayoffVector:
    return PayoffVector(env.space(), [p - _ec(env, row) for row, p in zip(mech.allocation, mech.transfers)])


def screening_violations(env: ScreeningEnv, mech: ScreeningMechanism) -> list:
    """Names of violated feasibility rows (empty when feasible)."""
    bad = []
    if len(mech.allocation) != env.n_types or len(mech.transfers) != env.n_types:
        return ["shape"]
    for i, row in enumerate(mech.allocation):
        if len(row) != len(env.grid) or any(p < 0 for p in row) or sum(row) != 1:
            bad.append(f"simplex[{i + 1}]")
    if bad:
        return bad
    for i in range(env.n_types):
        own = _eu(env, mech.allocation[i], i) - mech.transfers[i]
        if own < 0:
            bad.append(f"IR[{i + 1}]")
        for j in range(env.n_types):
            if j != i and own < _eu(env, mech.allocation[j], i) - mech.transfers[j]:
                bad.append(f"IC[{i + 1}->{j + 1}]")
    return bad


def screening_polytope(env: ScreeningEnv, relaxed: bool = False) -> MechanismPolytope:
    """Allocation probabilities Q[i,g], transfers P[i]; IC, IR and simplex rows.

    With ``relaxed`` only the downward-adjacent IC rows are kept.
    """
    lp = LinearProgram()
    n, m = env.n_types, len(env.grid)
    q = [[lp.add_variable(f"Q[{i + 1},{env.grid[g]}]", 0) for g in range(m)] for i in range(n)]
    p = [lp.add_variable(f"P[{i + 1}]", None) for i in range(n)]
    for i in range(n):
        lp.add_constraint({q[i][g]: 1 for g in range(m)}, "==", 1, f"simplex[{i + 1}]")

    def surplus_row(i, j):
        # U(Q(theta_j), theta_i) - P(theta_j)
        row = {q[j][g]: env.u_table[i][g] for g in range(m) if env.u_table[i][g]}
        row[p[j]] = Fraction(-1)
        return row

    for i in range(n):
        for j in range(n):
            if i == j or (relaxed and j != i - 1):
                continue
            row = surplus_row(i, i)
            for k, a in surplus_row(i, j).items():
                row[k] = row.get(k, Fraction(0)) - a
            lp.add_constraint(row, ">=", 0, f"IC[{i + 1}->{j + 1}]")
    for i in range(n):
        lp.add_constraint(surplus_row(i, i), ">=", 0, f"IR[{i + 1}]")
    payoffs = []
    for i in range(n):
        coeffs = {q[i][g]: -env.c_table[g] for g in range(m) if env.c_table[g]}
        coeffs[p[i]] = Fraction(1)
        payoffs.append(Functional(coeffs))
    return MechanismPolytope(lp, env.space(), payoffs)


def screening_to_assignment(env: ScreeningEnv, mech: ScreeningMechanism) -> tuple:
    return tuple(x for row in mech.allocation for x in row) + tuple(mech.transfers)


def screening_from_assignment(env: ScreeningEnv, values: Sequence) -> ScreeningMechanism:
    n, m = env.n_types, len(env.grid)
    rows = tuple(tuple(values[i * m : (i + 1) * m]) for i in range(n))
    return ScreeningMechanism(rows, tuple(values[n * m : n * m + n]))


@dataclass
class RobustnessReport:
    ok: bool
    conditions: dict

    def __bool__(self):
        return self.ok


def screening_check_robust(env: ScreeningEnv, mech: ScreeningMechanism) -> RobustnessReport:
    bad = screening_violations(env, mech)
    if bad:
        raise PreconditionError(f"mechanism is infeasible: {', '.join(bad)}")
    q1 = efficient_qualities(env)[0]
    row = mech.allocation[0]
    efficient_low = row[env.grid.index(q1)] == 1
    full_surplus = mech.transfers[0] == env.u_table[0][env.grid.index(q1)]
    v = screening_payoffs(env, mech).values
    lowest = all(x >= v[0] for x in v)
    conds = {"efficient_lowest": efficient_low, "full_surplus_lowest": full_surplus, "lowest_payoff_lowest": lowest}
    return RobustnessReport(all(conds.values()), conds)


def screening_bayesian_optimal(env: ScreeningEnv, prior: Belief) -> ScreeningMechanism:
    """Best deterministic increasing allocation against a prior, priced by maximal transfers.

    Types with zero prior weight carry no objective weight; among equally good
    solutions the one with the largest surplus at those types is chosen, then
    the higher quality.
    """
    n, m = env.n_types, len(env.grid)
    if len(prior.weights) != n:
        raise PreconditionError("prior must be over the screening types")
    rho = prior.weights

    def score(i, g):
        if rho[i] == 0:
            return (Fraction(0), env.u_table[i][g] - env.c_table[g])
        value = rho[i] * (env.u_table[i][g] - env.c_table[g])
        if i + 1 < n:
            upper = sum(rho[i + 1 :], Fraction(0))
            value -= upper * (env.u_table[i + 1][g] - env.u_table[i][g])
        return (value, Fraction(0))

    def add(a, b):
        return (a[0] + b[0], a[1] + b[1])

    best = [[score(0, g) for g in range(m)]]
    for i in range(1, n):
        prev = best[-1]
        prefix, run = [], None
        for g in range(m):
            run = prev[g] if run is None or prev[g] > run else run
            prefix.append(run)
        best.append([add(score(i, g), prefix[g]) for g in range(m)])
    # Backtrack; ties go to the higher grid point.
    choice = [0] * n
    hi = m - 1
    for i in range(n - 1, -1, -1):
        row = best[i]
        top = max(row[: hi + 1])
        g = max(k for k in range(hi + 1) if row[k] == top)
        choice[i] = g
        hi = g
    qualities = [env.grid[g] for g in choice]
    base = ScreeningMechanism.dirac(env, qualities, [0] * n)
    return ScreeningMechanism(base.allocation, screening_maximal_transfers(env, base.allocation))
