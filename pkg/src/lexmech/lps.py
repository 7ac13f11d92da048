"""Lexicographic probability systems over a finite set of type profiles."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Sequence

from .errors import PreconditionError, SpaceMismatchError
from .rational import to_rational

INFINITE = math.inf


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@dataclass(frozen=True)
class ProfileSpace:
    labels: tuple
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels:
            raise ValueError("a profile space needs at least one profile")
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != len(labels):
            raise ValueError("profile labels must be distinct")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self._index

    def index(self, label: Hashable) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown profile {label!r}") from None


def _same_space(a: ProfileSpace, b: ProfileSpace):
    if a is not b and a != b:
        raise SpaceMismatchError("objects live on different profile spaces")


@dataclass(frozen=True)
class Belief:
    space: ProfileSpace
    weights: tuple

    def __post_init__(self):
        w = tuple(to_rational(x) for x in self.weights)
        if len(w) != len(self.space):
            raise ValueError("one weight per profile required")
        if any(x < 0 for x in w):
            raise ValueError("belief weights must be nonnegative")
        if sum(w) != 1:
            raise ValueError(f"belief weights sum to {sum(w)}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def point(cls, space: ProfileSpace, label) -> "Belief":
        w = [Fraction(0)] * len(space)
        w[space.index(label)] = Fraction(1)
        return cls(space, w)

    @classmethod
    def uniform(cls, space: ProfileSpace, labels: Iterable | None = None) -> "Belief":
        labels = list(space.labels if labels is None else labels)
        if not labels:
            raise ValueError("uniform belief over an empty set")
        w = [Fraction(0)] * len(space)
        share = Fraction(1, len(labels))
        for lab in labels:
            w[space.index(lab)] += share
        return cls(space, w)

    @classmethod
    def from_mapping(cls, space: ProfileSpace, mapping: dict) -> "Belief":
        w = [Fraction(0)] * len(space)
        for lab, x in mapping.items():
            w[space.index(lab)] = to_rational(x)
        return cls(space, w)

    def __getitem__(self, label):
        return self.weights[self.space.index(label)]

    def support(self) -> tuple:
        return tuple(lab for lab, x in zip(self.space.labels, self.weights) if x > 0)


@dataclass(frozen=True)
class LPS:
    beliefs: tuple

    def __post_init__(self):
        b = tuple(self.beliefs)
        if not b:
            raise ValueError("an LPS needs at least one belief")
        for other in b[1:]:
            _same_space(b[0].space, other.space)
        object.__setattr__(self, "beliefs", b)

    @property
    def space(self) -> ProfileSpace:
        return self.beliefs[0].space

    def __len__(self):
        return len(self.beliefs)

    def __iter__(self):
        return iter(self.beliefs)

    def __getitem__(self, k):
        return self.beliefs[k]

    def collapse_repeats(self) -> "LPS":
        """Drop beliefs identical to their immediate predecessor."""
        kept = [self.beliefs[0]]
        for b in self.beliefs[1:]:
            if b.weights != kept[-1].weights:
                kept.append(b)
        return LPS(tuple(kept))


@dataclass(frozen=True)
class PayoffVector:
    space: ProfileSpace
    values: tuple

    def __post_init__(self):
        v = tuple(to_rational(x) for x in self.values)
        if len(v) != len(self.space):
            raise ValueError("one payoff per profile required")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_mapping(cls, space: ProfileSpace, mapping: dict) -> "PayoffVector":
        return cls(space, [mapping[lab] for lab in space.labels])

    def __getitem__(self, label):
        return self.values[self.space.index(label)]

    def as_dict(self) -> dict:
        return dict(zip(self.space.labels, self.values))


def lex_compare(a: Sequence, b: Sequence) -> Ordering:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    for x, y in zip(a, b):
        if x != y:
            return Ordering.GREATER if x > y else Ordering.LESS
    return Ordering.EQUAL


def expectation(belief: Belief, payoffs: PayoffVector) -> Fraction:
    _same_space(belief.space, payoffs.space)
    return sum((w * v for w, v in zip(belief.weights, payoffs.values) if w), Fraction(0))


def lex_payoffs(lps: LPS, payoffs: PayoffVector) -> tuple:
    _same_space(lps.space, payoffs.space)
    return tuple(expectation(b, payoffs) for b in lps.beliefs)


def nested_mixture(lps: LPS, r: Sequence) -> Belief:
    """Collapse an LPS into a single prior: (1-r1) mu1 + r1[(1-r2) mu2 + r2[...]]."""
    return _mixture(lps, r, closed_top=False)


def _mixture(lps: LPS, r: Sequence, closed_top: bool) -> Belief:
    r = [to_rational(x) for x in r]
    if len(r) != len(lps) - 1:
        raise ValueError(f"expected {len(lps) - 1} mixing weights, got {len(r)}")
    if any(not (0 < x < 1 or (closed_top and x == 1)) for x in r):
        raise ValueError("mixing weights must lie strictly between 0 and 1")
    # Fold from the innermost belief outwards.
    acc = list(lps.beliefs[-1].weights)
    for belief, rk in zip(reversed(lps.beliefs[:-1]), reversed(r)):
        acc = [(1 - rk) * w + rk * a for w, a in zip(belief.weights, acc)]
    return Belief(lps.space, acc)


def sorted_payoffs(payoffs: PayoffVector | Sequence) -> tuple:
    values = payoffs.values if isinstance(payoffs, PayoffVector) else payoffs
    return tuple(sorted(to_rational(v) for v in values))


def likelihood_level(lps: LPS, label) -> int | float:
    i = lps.space.index(label)
    for k, b in enumerate(lps.beliefs, start=1):
        if b.weights[i] > 0:
            return k
    return INFINITE


@dataclass(frozen=True)
class LPSClassification:
    full_support: bool
    adversarial: bool
    strongly_adversarial: bool

    def as_tuple(self):
        return (self.full_support, self.adversarial, self.strongly_adversarial)


def classify_lps(lps: LPS, payoffs: PayoffVector) -> LPSClassification:
    _same_space(lps.space, payoffs.space)
    levels = [likelihood_level(lps, lab) for lab in lps.space.labels]
    v = payoffs.values
    full = all(lv != INFINITE for lv in levels)
    floor = min(v)
    adversarial = all(x == floor for x, w in zip(v, lps.beliefs[0].weights) if w > 0)
    # theta >=_mu theta' means level(theta') is not strictly below level(theta).
    strong = all(
        v[i] <= v[j]
        for i in range(len(v))
        for j in range(len(v))
        if not levels[j] < levels[i]
    )
    return LPSClassification(full, adversarial, strong)


def lex_bayes_threshold(
    lps: LPS,
    pay_opt: PayoffVector,
    pay_alt: PayoffVector,
    r_seq: Callable[[int], Sequence],
    max_iter: int,
) -> int | None:
    """Least L such that pay_opt beats pay_alt under every tested prior r_l [] mu, L <= l <= max_iter.

    ``r_seq(l)`` returns the mixing weights for index l (1-based). A weight
    of exactly 1 is tolerated so that r_l = 1/l can start at l = 1. Returns
    None when no such L exists within the budget.
    """
    if lex_compare(lex_payoffs(lps, pay_opt), lex_payoffs(lps, pay_alt)) != Ordering.GREATER:
        raise PreconditionError("pay_opt is not lexicographically better than pay_alt")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    diff = PayoffVector(lps.space, [a - b for a, b in zip(pay_opt.values, pay_alt.values)])
    found = None
    for ell in range(max_iter, 0, -1):
        if expectation(_mixture(lps, r_seq(ell), closed_top=True), diff) > 0:
            found = ell
        else:
            break
    return found


def harmonic_sequence(length: int) -> Callable[[int], tuple]:
    """r_l = (1/l, ..., 1/l)."""
    return lambda ell: tuple(Fraction(1, ell) for _ in range(length))
