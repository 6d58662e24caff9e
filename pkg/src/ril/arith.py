"""Exact rationals (as ``fractions.Fraction``) and square tests."""

from fractions import Fraction
from math import isqrt

RationalValue = Fraction


def to_rational(x) -> Fraction:
    """Coerce an int, Fraction or ``"p/q"`` string to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"cannot read {x!r} as a rational")


def parse_rational(s: str) -> Fraction:
    s = s.strip()
    if not s:
        raise ValueError("empty rational string")
    if "." in s or "e" in s.lower():
        raise ValueError(f"rational {s!r} must be an integer or p/q")
    if "/" in s:
        p, q = s.split("/", 1)
        q = int(q)
        if q <= 0:
            raise ValueError(f"denominator of {s!r} must be positive")
        return Fraction(int(p), q)
    return Fraction(int(s))


def format_rational(q) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def is_square_int(n: int) -> bool:
    if n < 0:
        return False
    r = isqrt(n)
    return r * r == n


def is_square_rational(q) -> bool:
    """True iff q = r^2 for a rational r."""
    q = Fraction(q)
    # Fraction is reduced, so q is a square iff numerator and denominator are.
    return is_square_int(q.numerator) and is_square_int(q.denominator)


def rational_sqrt(q):
    """Exact square root of a rational square, else None."""
    q = Fraction(q)
    if not is_square_rational(q):
        return None
    return Fraction(isqrt(q.numerator), isqrt(q.denominator))
