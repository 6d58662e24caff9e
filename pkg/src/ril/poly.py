"""Dense univariate integer polynomials.

``IntPoly`` stores coefficients lowest degree first. The same type doubles as
a polynomial in ``t`` for the function-field tower (``PolyOverT``); only the
printed variable name differs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import NamedTuple, Sequence

from .arith import rational_sqrt
from .errors import ZeroPolynomial


def _strip(coeffs):
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


@dataclass(frozen=True)
class IntPoly:
    coeffs: tuple

    def __init__(self, coeffs: Sequence[int] = ()):
        object.__setattr__(self, "coeffs", _strip(int(c) for c in coeffs))

    @classmethod
    def monomial(cls, k: int, a: int = 1) -> "IntPoly":
        return cls([0] * k + [a])

    @classmethod
    def const(cls, a: int) -> "IntPoly":
        return cls([a])

    # basic queries

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def lead(self) -> int:
        if not self.coeffs:
            raise ZeroPolynomial("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def content(self) -> int:
        g = 0
        for c in self.coeffs:
            g = gcd(g, c)
        return g

    def primitive(self) -> "IntPoly":
        """Primitive part with positive leading coefficient."""
        if not self.coeffs:
            return self
        g = self.content()
        if self.lead < 0:
            g = -g
        return IntPoly([c // g for c in self.coeffs])

    def __getitem__(self, i: int) -> int:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else 0

    # arithmetic

    def __add__(self, other):
        other = _coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return IntPoly([self[i] + other[i] for i in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return IntPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        if not self.coeffs or not other.coeffs:
            return IntPoly()
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return IntPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = IntPoly([1])
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def scale(self, a: int) -> "IntPoly":
        return IntPoly([a * c for c in self.coeffs])

    def exact_div_int(self, a: int) -> "IntPoly":
        out = []
        for c in self.coeffs:
            q, r = divmod(c, a)
            if r:
                raise ValueError(f"{a} does not divide {self}")
            out.append(q)
        return IntPoly(out)

    def derivative(self) -> "IntPoly":
        return IntPoly([i * c for i, c in enumerate(self.coeffs)][1:])

    def __call__(self, x):
        """Horner evaluation at an int, Fraction, or another IntPoly."""
        if isinstance(x, IntPoly):
            return self.compose(x)
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def compose(self, inner: "IntPoly") -> "IntPoly":
        acc = IntPoly()
        for c in reversed(self.coeffs):
            acc = acc * inner + c
        return acc

    def mod2(self) -> "IntPoly":
        return IntPoly([c % 2 for c in self.coeffs])

    def __str__(self):
        return self.to_str("x")

    def to_str(self, var: str = "x") -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            mag = abs(c)
            if i == 0:
                body = str(mag)
            else:
                mono = var if i == 1 else f"{var}^{i}"
                body = mono if mag == 1 else f"{mag}*{mono}"
            sign = "-" if c < 0 else "+"
            if not parts:
                parts.append(body if c > 0 else "-" + body)
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)


PolyOverT = IntPoly


def _coerce(x) -> IntPoly:
    if isinstance(x, IntPoly):
        return x
    if isinstance(x, int):
        return IntPoly([x])
    raise TypeError(f"cannot combine IntPoly with {type(x).__name__}")


def _require_nonzero(*polys):
    for p in polys:
        if p.is_zero():
            raise ZeroPolynomial("operation undefined on the zero polynomial")


# division and gcd


def pseudo_remainder(f: IntPoly, g: IntPoly) -> IntPoly:
    """An integer multiple lc(g)^k * (f mod g); the power k is not normalized."""
    _require_nonzero(g)
    r = list(f.coeffs)
    dg = g.degree
    lg = g.lead
    while r and len(r) - 1 >= dg:
        top = r[-1]
        shift = len(r) - 1 - dg
        r = [lg * c for c in r]
        for j, c in enumerate(g.coeffs):
            r[shift + j] -= top * c
        while r and r[-1] == 0:
            r.pop()
    return IntPoly(r)


def divmod_rational(f: IntPoly, g: IntPoly):
    """Division over Q: returns (q, r) as lists of Fractions, lowest first."""
    _require_nonzero(g)
    r = [Fraction(c) for c in f.coeffs]
    dg = g.degree
    lg = g.lead
    q = [Fraction(0)] * max(len(r) - dg, 0)
    while len(r) - 1 >= dg and r:
        shift = len(r) - 1 - dg
        coef = r[-1] / lg
        q[shift] = coef
        for j, c in enumerate(g.coeffs):
            r[shift + j] -= coef * c
        r.pop()
        while r and r[-1] == 0:
            r.pop()
    return q, r


def exact_quotient(f: IntPoly, g: IntPoly) -> IntPoly:
    """f / g when g divides f in Q[x] with integral quotient."""
    q, r = divmod_rational(f, g)
    if r:
        raise ValueError("division is not exact")
    if any(c.denominator != 1 for c in q):
        raise ValueError("quotient is not integral")
    return IntPoly([int(c) for c in q])


def poly_gcd(f: IntPoly, g: IntPoly) -> IntPoly:
    """Monic-up-to-content gcd over Q, returned as a primitive integer polynomial.

    Primitive pseudo-remainder sequence: each remainder is divided by its
    content, which keeps coefficient growth in check. The result has positive
    leading coefficient; gcd(0, 0) is 0.
    """
    if f.is_zero():
        return g.primitive()
    if g.is_zero():
        return f.primitive()
    a, b = f.primitive(), g.primitive()
    if a.degree < b.degree:
        a, b = b, a
    while not b.is_zero():
        r = pseudo_remainder(a, b)
        a, b = b, r.primitive()
    return a.primitive()


def squarefree_part(f: IntPoly) -> IntPoly:
    _require_nonzero(f)
    g = poly_gcd(f, f.derivative())
    return exact_quotient(f.primitive(), g) if g.degree > 0 else f.primitive()


def squarefree_decomposition(f: IntPoly) -> list:
    """Squarefree factorization over Q: list of (factor, multiplicity).

    Musser's repeated-gcd scheme; every step is invariant under rescaling by
    constants, so primitive integer representatives can be used throughout.
    """
    _require_nonzero(f)
    f = f.primitive()
    if f.degree <= 0:
        return []
    out = []
    a = poly_gcd(f, f.derivative())
    b = exact_quotient_q(f, a)
    i = 1
    while b.degree > 0:
        c = poly_gcd(a, b)
        factor = exact_quotient_q(b, c)
        if factor.degree > 0:
            out.append((factor, i))
        a = exact_quotient_q(a, c)
        b = c
        i += 1
    return out


def exact_quotient_q(f: IntPoly, g: IntPoly) -> IntPoly:
    """Exact quotient over Q, rescaled to a primitive integer polynomial.

    Only the quotient's associate class matters to the callers.
    """
    if f.is_zero():
        return f
    q, r = divmod_rational(f, g)
    if r:
        raise ValueError("division is not exact")
    return _clear_denominators(q)


def _clear_denominators(fr) -> IntPoly:
    den = 1
    for c in fr:
        den = den * c.denominator // gcd(den, c.denominator)
    p = IntPoly([int(c * den) for c in fr])
    return p.primitive() if not p.is_zero() else p


def is_square_poly(f: IntPoly) -> bool:
    """True iff f = g^2 for some g in Q[t]."""
    return poly_sqrt(f) is not None


def poly_sqrt(f: IntPoly):
    """Exact square root over Q as a list of Fractions (lowest first), or None."""
    _require_nonzero(f)
    n = f.degree
    if n % 2:
        return None
    lead_root = rational_sqrt(Fraction(f.lead))
    if lead_root is None:
        return None
    m = n // 2
    # Solve for g from the top coefficient down: coefficient of t^(m+k) in g^2.
    g = [Fraction(0)] * (m + 1)
    g[m] = lead_root
    for k in range(m - 1, -1, -1):
        # coefficient of t^(m + k) in g^2 is 2 g_m g_k + sum_{i+j=m+k, k<i,j<m} g_i g_j
        acc = Fraction(f[m + k])
        for i in range(k + 1, m):
            j = m + k - i
            if k < j < m:
                acc -= g[i] * g[j]
        g[k] = acc / (2 * g[m])
    sq = [Fraction(0)] * (2 * m + 1)
    for i, a in enumerate(g):
        if a:
            for j, b in enumerate(g):
                sq[i + j] += a * b
    if any(sq[i] != f[i] for i in range(2 * m + 1)):
        return None
    return g


class GcdTools(NamedTuple):
    gcd_with_derivative: IntPoly
    mod2: IntPoly
    derivative: IntPoly


def squarefree_and_gcd_tools(f: IntPoly) -> GcdTools:
    """gcd(f, f'), f mod 2, and f'; f is squarefree iff the gcd is constant."""
    _require_nonzero(f)
    d = f.derivative()
    return GcdTools(poly_gcd(f, d), f.mod2(), d)


def is_squarefree(f: IntPoly) -> bool:
    return squarefree_and_gcd_tools(f).gcd_with_derivative.degree <= 0


# resultants


def bareiss_det(m) -> int:
    """Determinant of a square integer matrix by fraction-free elimination."""
    a = [list(row) for row in m]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        rowk = a[k]
        for i in range(k + 1, n):
            rowi = a[i]
            aik = rowi[k]
            for j in range(k + 1, n):
                rowi[j] = (akk * rowi[j] - aik * rowk[j]) // prev
            rowi[k] = 0
        prev = akk
    return sign * a[n - 1][n - 1]


def sylvester_matrix(f: Sequence[int], g: Sequence[int]):
    """Sylvester matrix of two coefficient lists given lowest degree first.

    Formal degrees are len-1; leading zeros are allowed (used for homogeneous
    resultants where a form's leading coefficient may vanish).
    """
    m = len(f) - 1
    n = len(g) - 1
    size = m + n
    fr = list(reversed(f))
    gr = list(reversed(g))
    rows = []
    for i in range(n):
        rows.append([0] * i + fr + [0] * (size - m - 1 - i))
    for i in range(m):
        rows.append([0] * i + gr + [0] * (size - n - 1 - i))
    return rows


def resultant(f: IntPoly, g: IntPoly) -> int:
    """Res(f, g) as the Sylvester determinant."""
    _require_nonzero(f, g)
    if f.degree == 0 and g.degree == 0:
        return 1
    return bareiss_det(sylvester_matrix(f.coeffs, g.coeffs))


def formal_resultant(f: Sequence[int], g: Sequence[int]) -> int:
    """Resultant of binary forms of formal degrees len(f)-1 and len(g)-1."""
    if len(f) == 1 and len(g) == 1:
        return 1
    return bareiss_det(sylvester_matrix(list(f), list(g)))


def discriminant_oracle(f: IntPoly) -> Fraction:
    """(-1)^(d(d-1)/2) Res(f, f') / lead(f)."""
    _require_nonzero(f)
    d = f.degree
    if d < 1:
        raise ValueError("discriminant needs degree >= 1")
    if d == 1:
        return Fraction(1)
    sign = -1 if (d * (d - 1) // 2) % 2 else 1
    return Fraction(sign * resultant(f, f.derivative()), f.lead)
