"""Exact rational parsing and rendering."""
from __future__ import annotations

import re
from decimal import Decimal, localcontext
from fractions import Fraction
from numbers import Rational

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


def to_rational(value) -> Fraction:
    """Coerce ints, Fractions, "p/q" strings and [p, q] pairs to Fraction.

    Floats (and strings that look like decimals) are rejected so that no
    binary rounding can leak into exact computations.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        m = _RATIONAL_RE.match(value)
        if not m:
            raise ValueError(f"not an exact rational literal: {value!r}")
        num, den = m.group(1), m.group(2)
        if den is not None and int(den) == 0:
            raise ValueError(f"zero denominator in {value!r}")
        return Fraction(int(num), int(den) if den else 1)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        p, q = value
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (p, q)):
            raise TypeError(f"rational pair must hold two integers: {value!r}")
        if q == 0:
            raise ValueError("zero denominator")
        return Fraction(p, q)
    if isinstance(value, float):
        raise TypeError(f"float {value!r} rejected; write rationals as 'p/q'")
    raise TypeError(f"cannot interpret {value!r} as a rational")


def rationals(values) -> tuple[Fraction, ...]:
    return tuple(to_rational(v) for v in values)


def fmt(q: Fraction) -> str:
    """Render as "p/q", or "p" for integers."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def decimal_str(q: Fraction, digits: int = 12) -> str:
    """Decimal rendering to ``digits`` significant digits."""
    q = Fraction(q)
    if q == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = digits + 10
        d = Decimal(q.numerator) / Decimal(q.denominator)
    return format(d, f".{digits}g")
