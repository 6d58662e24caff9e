"""Weighted lattice counts, the simplex asymptotic, and function-count sandwiches."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from ._zz import int_log
from .errors import SandwichInapplicable
from .factor import factor_partial
from .heights import _coords, family_constants
from .logexpr import LogExpr, log_of_int
from .maps import HomogMap, compose, evaluate_raw
from .random_model import MeasuredFamily, weil_height

FLOAT_MARGIN = 1e-12


def _as_weight(c):
    """A weight is a float or a LogExpr (strings like ``"ln:2"`` are parsed)."""
    if isinstance(c, str):
        return LogExpr.coerce(c)
    return c


def _int_log_base(c):
    """d when c is exactly ln(d) for an integer d >= 2, else None."""
    if isinstance(c, LogExpr) and c.const == 0 and len(c.terms) == 1:
        (base, coef), = c.terms.items()
        if coef == 1 and base.denominator == 1 and base.numerator >= 2:
            return base.numerator
    return None


def _floor_exp(B) -> int:
    """floor(e^B) for a float or LogExpr bound B >= 0."""
    if isinstance(B, LogExpr):
        if B.const == 0 and len(B.terms) == 1:
            (base, coef), = B.terms.items()
            if coef == 1:
                return base.numerator // base.denominator
        if not B.terms:
            B = B.const
    if isinstance(B, LogExpr):
        approx = float(B)
        digits = int(approx / 2.3) + 40
        while True:
            with mpmath.workdps(digits):
                v = mpmath.mpf(B.const.numerator) / B.const.denominator
                for b, c in B.terms.items():
                    v += (mpmath.mpf(c.numerator) / c.denominator) * mpmath.log(
                        mpmath.mpf(b.numerator) / b.denominator
                    )
                e = mpmath.exp(v)
                fl = int(mpmath.floor(e))
                if e - fl > mpmath.mpf(10) ** (-20) and fl + 1 - e > mpmath.mpf(10) ** (-20):
                    return fl
            digits *= 2
    q = Fraction(B)
    if q == 0:
        return 1
    digits = int(float(q) / 2.3) + 40
    while True:
        with mpmath.workdps(digits):
            e = mpmath.exp(mpmath.mpf(q.numerator) / q.denominator)
            fl = int(mpmath.floor(e))
            # e^q is transcendental for rational q != 0, so more digits separate it from integers
            if e - fl > mpmath.mpf(10) ** (-20) and fl + 1 - e > mpmath.mpf(10) ** (-20):
                return fl
        digits *= 2


def lattice_count_simplex(c, B) -> int:
    """#{e in N^s : e . c <= B}.

    Exact integer mode when every weight is ln of an integer: then the
    condition is prod d_i^(e_i) <= floor(e^B). Otherwise floats with a
    1e-12 relative margin at the boundary.
    """
    c = [_as_weight(x) for x in c]
    if not c:
        raise ValueError("need at least one weight")
    B = _as_weight(B)
    Bf = float(B)
    if Bf < 0:
        return 0
    bases = [_int_log_base(x) for x in c]
    if all(b is not None for b in bases):
        return _count_products(bases, _floor_exp(B))
    w = [float(x) for x in c]
    if any(x <= 0 for x in w):
        raise ValueError("weights must be positive")
    tol = FLOAT_MARGIN * max(1.0, abs(Bf))
    return _count_float(w, Bf + tol)


def _count_products(bases, N: int) -> int:
    """#{e : prod bases[i]^e_i <= N} by recursion on the last coordinate."""
    return _count_monotone(bases, lambda D: D <= N)


def _count_monotone(bases, ok, D: int = 1) -> int:
    """#{e : ok(D prod bases[i]^e_i)} for a predicate that fails for all large products."""
    if not ok(D):
        return 0
    d = bases[-1]
    if len(bases) == 1:
        k = 0
        while ok(D * d ** (k + 1)):
            k += 1
        return k + 1
    total = 0
    while ok(D):
        total += _count_monotone(bases[:-1], ok, D)
        D *= d
    return total


def _count_float(w, B) -> int:
    if B < 0:
        return 0
    if len(w) == 1:
        return int(math.floor(B / w[0])) + 1
    last = w[-1]
    total = 0
    e = 0
    while e * last <= B:
        total += _count_float(w[:-1], B - e * last)
        e += 1
    return total


def simplex_asymptotic(c, B) -> float:
    """B^s / (s! prod c_i)."""
    w = [float(_as_weight(x)) for x in c]
    s = len(w)
    return float(_as_weight(B)) ** s / (math.factorial(s) * math.prod(w))


def multiplicative_independence(d) -> bool:
    """True iff prod d_i^(e_i) = 1 forces e = 0 (rank of the prime-exponent matrix)."""
    d = [int(x) for x in d]
    if any(x < 1 for x in d):
        raise ValueError("entries must be positive integers")
    if any(x == 1 for x in d):
        return False
    rows = []
    primes = set()
    for x in d:
        pf = factor_partial(x)
        if not pf.complete:
            raise ValueError(f"could not factor {x} within budget")
        rows.append(dict(pf.found))
        primes.update(rows[-1])
    cols = sorted(primes)
    m = [[Fraction(r.get(p, 0)) for p in cols] for r in rows]
    return _rank(m) == len(d)


def _rank(m) -> int:
    m = [row[:] for row in m]
    rank = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / m[rank][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


# sandwich


@dataclass
class SandwichResult:
    lower: int
    middle: int | None  # None means Unknown (enumeration hit the cap)
    upper: int
    mode: str
    threshold_lower: float
    threshold_upper: float

    def to_json(self) -> dict:
        return {
            "lower": self.lower,
            "middle": self.middle if self.middle is not None else "Unknown",
            "upper": self.upper,
            "mode": self.mode,
            "threshold_lower": self.threshold_lower,
            "threshold_upper": self.threshold_upper,
        }


def _monomial_degree(f: HomogMap):
    p = f.polynomial_coeffs()
    if p is None or p[-1] != 1 or any(p[:-1]):
        return None
    return len(p) - 1


def _log_bound(B, log_bound):
    if (B is None) == (log_bound is None):
        raise ValueError("give exactly one of B and log_bound")
    if log_bound is not None:
        return float(log_bound)
    return math.log(float(B))


def _degree_within(D: int, H: LogExpr, B, LB: float) -> bool:
    """D * H <= B, exactly when B is a LogExpr."""
    if isinstance(B, LogExpr):
        return H * D <= B
    return math.log(D) + math.log(float(H)) <= LB + FLOAT_MARGIN * max(1.0, abs(LB))


def _height_at_most(coords, B, log_bound) -> bool:
    m = max(abs(x) for x in coords)
    if log_bound is not None:
        return m <= 1 or math.log(int_log(m)) <= log_bound
    if isinstance(B, LogExpr):
        return log_of_int(m) <= B
    return float(weil_height(coords)) <= float(B)


def function_count_sandwich(family: MeasuredFamily, P, B=None, length_cap: int = 12,
                            log_bound=None, mode: str = "auto") -> SandwichResult:
    """lower <= #{f in M_S : h(f(P)) <= B} <= upper.

    lower and upper count functions with ln deg(f) <= ln(B/(h(P) +- B_S)).
    In free-commutative mode (maps x^(d_i) with multiplicatively independent
    d_i) functions are lattice points and all three counts are lattice
    counts. Otherwise functions are enumerated by breadth-first composition
    up to ``length_cap`` and deduplicated by canonical form; the middle
    count is reported as None when the cap cuts the enumeration short.
    """
    constants = family_constants(family)
    start = _coords(P)
    hP = log_of_int(max(abs(x) for x in start))
    if not hP > constants.B_S:
        raise SandwichInapplicable("h(P) <= B_S: the sandwich needs h(P) > B_S")
    if isinstance(B, str):
        B = LogExpr.coerce(B)
    LB = _log_bound(B, log_bound)
    h_plus = hP + constants.B_S
    h_minus = hP - constants.B_S
    t_lower = LB - math.log(float(h_plus))
    t_upper = LB - math.log(float(h_minus))
    degs = [_monomial_degree(f) for f in family.homog]
    free = all(d is not None for d in degs) and multiplicative_independence(degs)
    if mode == "auto":
        mode = "free-commutative" if free else "explicit-bfs"
    if mode == "free-commutative":
        if not free:
            raise ValueError("free-commutative mode needs monomial maps with independent degrees")
        # lattice points e <-> functions of degree prod d_i^e_i
        def count(H):
            return _count_monotone(degs, lambda D: _degree_within(D, H, B, LB))

        # h(f(P)) = deg(f) h(P) exactly for monomial maps
        return SandwichResult(count(h_plus), count(hP), count(h_minus), mode, t_lower, t_upper)
    return _explicit_sandwich(family, start, B, log_bound, LB, length_cap, h_plus, h_minus,
                              t_lower, t_upper)


def _explicit_sandwich(family, start, B, log_bound, LB, length_cap, h_plus, h_minus,
                       t_lower, t_upper):
    maps = family.homog
    identity = HomogMap.from_poly([0, 1]) if family.dim == 1 else None
    if identity is None:
        n = family.dim
        identity = HomogMap(
            [[(tuple(1 if k == j else 0 for k in range(n + 1)), 1)] for j in range(n + 1)], n=n
        )
    seen = {identity}
    lower = upper = middle = 0
    frontier = deque([identity])
    complete = True
    length = 0

    def tally(f):
        nonlocal lower, upper, middle
        if _degree_within(f.degree, h_plus, B, LB):
            lower += 1
        if _degree_within(f.degree, h_minus, B, LB):
            upper += 1
            if _height_at_most(evaluate_raw(f, start), B, log_bound):
                middle += 1

    tally(identity)
    while frontier:
        if length >= length_cap:
            complete = False
            break
        length += 1
        nxt = deque()
        for g in frontier:
            for phi in maps:
                f = compose(phi, g)
                if not _degree_within(f.degree, h_minus, B, LB) or f in seen:
                    # degrees only grow under composition, so this branch is done
                    continue
                seen.add(f)
                tally(f)
                nxt.append(f)
        frontier = nxt
    return SandwichResult(
        lower, middle if complete else None, upper, "explicit-bfs", t_lower, t_upper
    )
