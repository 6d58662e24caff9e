"""Exact comparison of Q-linear combinations of logarithms.

A ``LogExpr`` is r + sum q_i ln(a_i) with rationals r, q_i and positive
rationals a_i. Signs are decided by a float estimate when it is clear of
zero; near ties fall back to exact integer power comparison (r = 0) or to
multiprecision evaluation, which always terminates because a nonzero
rational plus a combination of logs of rationals is never zero.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd

import mpmath

from ._zz import ZZ, int_log

FLOAT_MARGIN = 1e-12


def _ln(a: Fraction) -> float:
    return int_log(a.numerator) - int_log(a.denominator)


class LogExpr:
    __slots__ = ("const", "terms")

    def __init__(self, terms=None, const=0):
        self.const = Fraction(const)
        clean = {}
        for base, coef in (terms or {}).items():
            base = Fraction(base)
            coef = Fraction(coef)
            if base <= 0:
                raise ValueError("logarithm of a non-positive number")
            if base == 1 or coef == 0:
                continue
            clean[base] = clean.get(base, Fraction(0)) + coef
        self.terms = {b: c for b, c in clean.items() if c}

    @classmethod
    def ln(cls, a) -> "LogExpr":
        return cls({Fraction(a): 1})

    @classmethod
    def coerce(cls, x) -> "LogExpr":
        if isinstance(x, LogExpr):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(const=x)
        if isinstance(x, float):
            return cls(const=Fraction(x))
        if isinstance(x, str):
            return parse_log_value(x)
        raise TypeError(f"cannot read {x!r} as a log expression")

    def __add__(self, other):
        other = LogExpr.coerce(other)
        terms = dict(self.terms)
        for b, c in other.terms.items():
            terms[b] = terms.get(b, 0) + c
        return LogExpr(terms, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return LogExpr({b: -c for b, c in self.terms.items()}, -self.const)

    def __sub__(self, other):
        return self + (-LogExpr.coerce(other))

    def __rsub__(self, other):
        return LogExpr.coerce(other) - self

    def __mul__(self, k):
        k = Fraction(k)
        return LogExpr({b: c * k for b, c in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self * (1 / Fraction(k))

    def __float__(self):
        return float(self.const) + sum(float(c) * _ln(b) for b, c in self.terms.items())

    def scale(self) -> float:
        return abs(float(self.const)) + sum(abs(float(c) * _ln(b)) for b, c in self.terms.items()) + 1.0

    def sign(self) -> int:
        v = float(self)
        if abs(v) > FLOAT_MARGIN * self.scale():
            return 1 if v > 0 else -1
        if not self.terms:
            return (self.const > 0) - (self.const < 0)
        if self.const == 0:
            return self._exact_sign()
        return self._mp_sign()

    def _exact_sign(self) -> int:
        den = reduce(lambda a, c: a * c.denominator // gcd(a, c.denominator), self.terms.values(), 1)
        lhs = ZZ(1)
        rhs = ZZ(1)
        for b, c in self.terms.items():
            k = int(c * den)
            if k > 0:
                lhs *= ZZ(b.numerator) ** k
                rhs *= ZZ(b.denominator) ** k
            else:
                rhs *= ZZ(b.numerator) ** (-k)
                lhs *= ZZ(b.denominator) ** (-k)
        return (lhs > rhs) - (lhs < rhs)

    def _mp_sign(self) -> int:
        digits = 60
        scale = self.scale()
        while digits <= 100000:
            with mpmath.workdps(digits):
                v = mpmath.mpf(self.const.numerator) / self.const.denominator
                for b, c in self.terms.items():
                    v += (mpmath.mpf(c.numerator) / c.denominator) * (
                        mpmath.log(b.numerator) - mpmath.log(b.denominator)
                    )
                if abs(v) > mpmath.mpf(10) ** (-(digits - 15)) * scale:
                    return 1 if v > 0 else -1
            digits *= 4
        raise ArithmeticError("sign undecided at 100000 digits")

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __eq__(self, other):
        try:
            return (self - other).sign() == 0
        except TypeError:
            return NotImplemented

    __hash__ = None

    def __repr__(self):
        return f"LogExpr({format_log_value(self)})"


def parse_log_value(s: str) -> LogExpr:
    """Read ``"ln:10"``, ``"ln:5/2"``, ``"0.5"`` or sums like ``"ln:2+1/3"``."""
    total = LogExpr()
    for part in s.replace(" ", "").replace("-", "+-").split("+"):
        if not part:
            continue
        neg = part.startswith("-")
        if neg:
            part = part[1:]
        if part.startswith("ln:"):
            term = LogExpr.ln(Fraction(part[3:]))
        elif "*ln:" in part:
            k, base = part.split("*ln:")
            term = LogExpr.ln(Fraction(base)) * Fraction(k)
        else:
            term = LogExpr(const=Fraction(part))
        total = total - term if neg else total + term
    return total


def format_log_value(e: LogExpr) -> str:
    parts = []
    for b, c in sorted(e.terms.items()):
        parts.append(f"ln:{b}" if c == 1 else f"{c}*ln:{b}")
    if e.const or not parts:
        parts.append(str(e.const))
    return "+".join(parts).replace("+-", "-")


def log_of_int(m) -> LogExpr:
    m = abs(int(m))
    return LogExpr() if m <= 1 else LogExpr({Fraction(m): 1})
