"""Exact-arithmetic tools for lexicographic robust mechanism design."""
from __future__ import annotations

from .errors import (
    ConfigError,
    ConstructionFailure,
    InfeasibleError,
    LexmechError,
    MalformedProgramError,
    PreconditionError,
    SizeCapError,
    SpaceMismatchError,
    UnboundedError,
)
from .lps import (
    LPS,
    Belief,
    Ordering,
    PayoffVector,
    ProfileSpace,
    classify_lps,
    expectation,
    lex_bayes_threshold,
    lex_compare,
    lex_payoffs,
    nested_mixture,
    sorted_payoffs,
)
from .optimize import (
    MechanismPolytope,
    construct_justifying_lps,
    dominance_check,
    leximin_solve,
    maxmin_solve,
    menu_polytope,
    mu_optimality_report,
    verify_mu_optimal,
)
from .simplex import LinearProgram, LPStatus, solve_lp

__version__ = "0.1.0"

__all__ = [
    "Belief",
    "ConfigError",
    "ConstructionFailure",
    "InfeasibleError",
    "LPS",
    "LPStatus",
    "LexmechError",
    "LinearProgram",
    "MalformedProgramError",
    "MechanismPolytope",
    "Ordering",
    "PayoffVector",
    "PreconditionError",
    "ProfileSpace",
    "SizeCapError",
    "SpaceMismatchError",
    "UnboundedError",
    "classify_lps",
    "construct_justifying_lps",
    "dominance_check",
    "expectation",
    "lex_bayes_threshold",
    "lex_compare",
    "lex_payoffs",
    "leximin_solve",
    "maxmin_solve",
    "menu_polytope",
    "mu_optimality_report",
    "nested_mixture",
    "solve_lp",
    "sorted_payoffs",
    "verify_mu_optimal",
]
