"""Towers of iterated quadratic polynomials over Q and Q(t).

For a sequence gamma = (theta_1, theta_2, ...) of maps a(x - c)^2 + b with a
common critical point c, gamma_n = theta_1 o ... o theta_n. This module
tracks leading terms, critical values gamma_n(c), discriminant magnitudes,
ramification support, and one-sided certificates for irreducibility and for
maximality of each step of the splitting-field tower.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .arith import is_square_int, is_square_rational
from .errors import ConditionViolated, InseparableTower
from .factor import factor_partial, valuation
from .maps import UnicriticalMap
from .poly import IntPoly, divmod_rational, exact_quotient_q, is_square_poly, poly_gcd, squarefree_decomposition

BASE_Q = "Q"
BASE_QT = "Q(t)"


@dataclass(frozen=True)
class QuadMap:
    """x -> a (x - c)^2 + b; a and b are ints over Q and IntPolys in t over Q(t)."""

    a: object
    b: object


@dataclass(frozen=True)
class QuadFamily:
    maps: tuple
    c: object
    base: str = BASE_Q

    def __post_init__(self):
        if self.base not in (BASE_Q, BASE_QT):
            raise ValueError(f"unknown base {self.base!r}")
        if not self.maps:
            raise ValueError("family needs at least one map")
        if self.base == BASE_QT:
            lift = lambda v: v if isinstance(v, IntPoly) else IntPoly.const(int(v))  # noqa: E731
            object.__setattr__(self, "c", lift(self.c))
            object.__setattr__(self, "maps", tuple(QuadMap(lift(m.a), lift(m.b)) for m in self.maps))
        else:
            object.__setattr__(self, "c", int(self.c))
            object.__setattr__(self, "maps", tuple(QuadMap(int(m.a), int(m.b)) for m in self.maps))
        for m in self.maps:
            if _is_zero(m.a):
                raise ValueError("quadratic map needs a != 0")

    @classmethod
    def over_q(cls, maps, c=0) -> "QuadFamily":
        """From UnicriticalMaps (d = 2, shared c) or (a, b) pairs with critical point c."""
        out = []
        for m in maps:
            if isinstance(m, UnicriticalMap):
                if m.d != 2:
                    raise ValueError("only quadratic maps form a tower here")
                if m.c != c:
                    raise ValueError("maps must share the critical point")
                if not m.is_integral():
                    raise ValueError("tower arithmetic over Q needs integral a, b, c")
                out.append(QuadMap(int(m.a), int(m.b)))
            else:
                a, b = m
                out.append(QuadMap(int(a), int(b)))
        return cls(tuple(out), int(c), BASE_Q)

    @classmethod
    def from_polys(cls, polys) -> "QuadFamily":
        """From integer coefficient lists (lowest first) A x^2 + B x + C with a shared critical point."""
        crit = None
        out = []
        for p in polys:
            p = [Fraction(v) for v in p]
            if len(p) != 3 or p[2] == 0:
                raise ValueError("each map must be quadratic")
            A, B, C = p[2], p[1], p[0]
            c = -B / (2 * A)
            if crit is None:
                crit = c
            elif c != crit:
                raise ValueError("maps must share the critical point")
            b = C - B * B / (4 * A)
            if any(v.denominator != 1 for v in (A, b, c)):
                raise ValueError("tower arithmetic over Q needs integral a, b, c")
            out.append(QuadMap(int(A), int(b)))
        return cls(tuple(out), int(crit), BASE_Q)

    @classmethod
    def from_measured(cls, family) -> "QuadFamily":
        polys = []
        for f in family.homog:
            p = f.polynomial_coeffs()
            if p is None:
                raise ValueError("tower maps must be polynomials")
            polys.append(p)
        return cls.from_polys(polys)

    @classmethod
    def over_qt(cls, cs) -> "QuadFamily":
        """The family {x^2 + c(t)} with critical point 0; c given as IntPoly or coefficient lists."""
        maps = [QuadMap(IntPoly.const(1), c if isinstance(c, IntPoly) else IntPoly(c)) for c in cs]
        return cls(tuple(maps), IntPoly(), BASE_QT)

    def apply(self, j: int, v):
        m = self.maps[j]
        return m.a * (v - self.c) ** 2 + m.b

    def lead(self, j: int):
        return self.maps[j].a


def _is_zero(v) -> bool:
    return v.is_zero() if isinstance(v, IntPoly) else v == 0


def _abs(v):
    """Magnitude over Q; over Q(t) the associate with positive leading coefficient."""
    if isinstance(v, IntPoly):
        return -v if not v.is_zero() and v.lead < 0 else v
    return abs(v)


def _is_square(fam: QuadFamily, v) -> bool:
    if fam.base == BASE_QT:
        return v.is_zero() or is_square_poly(v)
    return is_square_rational(v)


def _one(fam: QuadFamily):
    return IntPoly.const(1) if fam.base == BASE_QT else 1


def _seq(seq, n: int) -> list:
    if hasattr(seq, "prefix"):
        out = [int(j) for j in seq.prefix(n)]
    else:
        out = [int(j) for j in list(seq)[:n]]
    if len(out) < n:
        raise ValueError(f"sequence prefix shorter than {n}")
    return out


# critical orbit and discriminants


def critical_values(fam: QuadFamily, seq, n_max: int) -> list:
    """gamma_m(c) = theta_1(theta_2(...theta_m(c))) for m = 1..n_max."""
    idx = _seq(seq, n_max)
    out = []
    for m in range(1, n_max + 1):
        v = fam.c
        for j in reversed(idx[:m]):
            v = fam.apply(j, v)
        out.append(v)
    return out


def gamma_poly(fam: QuadFamily, seq, n: int) -> IntPoly:
    """gamma_n as an integer polynomial in x (base Q only)."""
    if fam.base != BASE_Q:
        raise ValueError("gamma_poly is for integer families")
    idx = _seq(seq, n)
    f = IntPoly([0, 1])
    for j in idx:
        m = fam.maps[j]
        theta = IntPoly([-fam.c, 1]) ** 2 * m.a + m.b
        f = f.compose(theta)
    return f


@dataclass(frozen=True)
class TowerState:
    level: int
    lead: object  # l_{gamma,n}, exact and signed
    degree_exp: int  # deg gamma_n = 2^degree_exp
    critical_value: object
    abs_disc: object  # |Delta_{gamma,n}|; over Q(t) up to sign; None if not computed
    separable: bool

    @property
    def degree(self) -> int:
        return 2**self.degree_exp


def discriminant_chain(fam: QuadFamily, seq, n_max: int, discriminants: bool = True) -> list:
    """TowerStates for levels 1..n_max via the discriminant recursion.

    |D_n| = 2^(d_n) |l_(n-1)| |a_n|^(d_(n-1)(d_n - 1)) |gamma_n(c)| |D_(n-1)|^2
    with D_0 = l_0 = d_0 = 1; l_n = a_n^(d_(n-1)) l_(n-1). The bit length of
    D_n grows like n 4^n; with ``discriminants=False`` abs_disc is left None.
    """
    idx = _seq(seq, n_max)
    values = critical_values(fam, idx, n_max)
    one = _one(fam)
    lead, disc, d_prev = one, one, 1
    separable = True
    out = []
    for n in range(1, n_max + 1):
        a = fam.lead(idx[n - 1])
        d_n = 2 * d_prev
        v = values[n - 1]
        if _is_zero(v):
            separable = False
        if not discriminants:
            disc = None
        elif separable:
            disc = _abs(
                (2**d_n) * _abs(lead) * _abs(a) ** (d_prev * (d_n - 1)) * _abs(v) * disc * disc
            )
        else:
            disc = 0 * one
        lead = a**d_prev * lead
        out.append(TowerState(n, lead, n, v, disc, separable))
        d_prev = d_n
    return out


def leading_term_product(fam: QuadFamily, seq, m: int):
    """l_(gamma,m) = l(theta_m)^(2^(m-1)) ... l(theta_1) as a direct product."""
    idx = _seq(seq, m)
    out = _one(fam)
    for k in range(1, m + 1):
        out = out * fam.lead(idx[k - 1]) ** (2 ** (k - 1))
    return out


@dataclass(frozen=True)
class RamificationSupport:
    primes: frozenset
    complete: bool
    unfactored: tuple = ()


def ramification_support(fam: QuadFamily, seq, n: int, **effort) -> RamificationSupport:
    """Primes dividing 2, some l(theta_m), or some gamma_m(c) with m <= n."""
    if fam.base != BASE_Q:
        raise ValueError("ramification support is computed over Q")
    idx = _seq(seq, n)
    values = critical_values(fam, idx, n)
    for m, v in enumerate(values, start=1):
        if v == 0:
            raise InseparableTower(f"critical value vanishes at level {m}")
    primes = {2}
    stuck = []
    for x in [fam.lead(j) for j in idx] + values:
        if abs(x) == 1:
            continue
        pf = factor_partial(x, **effort)
        primes.update(pf.primes())
        if not pf.complete:
            stuck.append(pf.cofactor)
    return RamificationSupport(frozenset(primes), not stuck, tuple(stuck))


# irreducibility


@dataclass(frozen=True)
class IrreducibilityVerdict:
    status: str  # "Certified" or "Inconclusive"
    chain: tuple
    failing_index: int | None = None


def irreducibility_chain(fam: QuadFamily, seq, n: int) -> list:
    """-l_1 gamma_1(c), l_1 gamma_2(c), ..., l_1 gamma_n(c)."""
    idx = _seq(seq, n)
    l1 = fam.lead(idx[0])
    values = critical_values(fam, idx, n)
    return [-l1 * values[0]] + [l1 * v for v in values[1:]]


def irreducibility_certificate(fam: QuadFamily, seq, n: int) -> IrreducibilityVerdict:
    """Certified when every chain entry is a non-square; never claims reducibility."""
    chain = irreducibility_chain(fam, seq, n)
    for m, v in enumerate(chain, start=1):
        if _is_square(fam, v):
            return IrreducibilityVerdict("Inconclusive", tuple(chain), m)
    return IrreducibilityVerdict("Certified", tuple(chain))


# maximality


MAX_CONDITIONS = ("coprime_to_2", "finite_prime", "lead_units", "coprime_earlier", "odd_valuation")


@dataclass(frozen=True)
class MaximalityVerdict:
    status: str  # "CertifiedMaximal", "Undetermined" or "Inseparable"
    level: int
    prime: object = None
    conditions: dict = field(default_factory=dict)


def _poly_valuation(f: IntPoly, q: IntPoly) -> int:
    e = 0
    while f.degree >= q.degree:
        quo, rem = divmod_rational(f, q)
        if any(rem):
            break
        f = exact_quotient_q(f, q)
        e += 1
    return e


def _conditions_q(fam, idx, values, n, p) -> dict:
    return {
        "coprime_to_2": p % 2 != 0,
        "finite_prime": True,
        "lead_units": all(fam.lead(j) % p != 0 for j in idx[:n]),
        "coprime_earlier": all(gcd(v, p) == 1 for v in values[: n - 1]),
        "odd_valuation": valuation(values[n - 1], p) % 2 == 1,
    }


def _conditions_qt(fam, idx, values, n, q) -> dict:
    return {
        # characteristic 0: 2 is a unit at every finite prime
        "coprime_to_2": True,
        # only irreducible polynomials are used, never the degree valuation
        "finite_prime": q.degree > 0,
        "lead_units": all(poly_gcd(fam.lead(j), q).degree <= 0 for j in idx[:n]),
        "coprime_earlier": all(poly_gcd(v, q).degree <= 0 for v in values[: n - 1]),
        "odd_valuation": _poly_valuation(values[n - 1], q) % 2 == 1,
    }


def maximality_certificate(fam: QuadFamily, seq, n: int, **effort) -> MaximalityVerdict:
    """Search for a prime p meeting the five valuation conditions at level n.

    Over Q the candidates are the primes found by factoring gamma_n(c); the
    smallest valid one is returned. Over Q(t) they are irreducible factors of
    the odd-multiplicity part of gamma_n(c) after removing everything shared
    with the leading coefficients and earlier critical values.
    """
    idx = _seq(seq, n)
    values = critical_values(fam, idx, n)
    if any(_is_zero(v) for v in values):
        return MaximalityVerdict("Inseparable", n)
    if fam.base == BASE_Q:
        v = values[-1]
        if abs(v) == 1:
            return MaximalityVerdict("Undetermined", n)
        pf = factor_partial(v, **effort)
        for p, e in pf.found:
            if e % 2 == 0 or p == 2:
                continue
            cond = _conditions_q(fam, idx, values, n, p)
            if all(cond.values()):
                return MaximalityVerdict("CertifiedMaximal", n, p, cond)
        return MaximalityVerdict("Undetermined", n)
    q = _qt_witness(fam, idx, values, n)
    if q is None:
        return MaximalityVerdict("Undetermined", n)
    return MaximalityVerdict("CertifiedMaximal", n, q, _conditions_qt(fam, idx, values, n, q))


def _qt_witness(fam, idx, values, n):
    v = values[n - 1]
    if v.degree <= 0:
        return None
    odd = IntPoly.const(1)
    for g, k in squarefree_decomposition(v):
        if k % 2:
            odd = odd * g
    for h in [fam.lead(j) for j in idx[:n]] + values[: n - 1]:
        while odd.degree > 0:
            g = poly_gcd(odd, h)
            if g.degree <= 0:
                break
            odd = exact_quotient_q(odd, g)
    if odd.degree <= 0:
        return None
    return _first_irreducible_factor(odd)


def _first_irreducible_factor(f: IntPoly) -> IntPoly:
    import sympy

    t = sympy.Symbol("t")
    expr = sum(int(c) * t**i for i, c in enumerate(f.coeffs))
    _, factors = sympy.factor_list(expr, t)
    polys = []
    for fac, _ in factors:
        coeffs = sympy.Poly(fac, t).all_coeffs()[::-1]
        q = IntPoly([int(c) for c in coeffs]).primitive()
        if q.degree > 0:
            polys.append(q)
    return min(polys, key=lambda q: (q.degree, [abs(c) for c in reversed(q.coeffs)], q.coeffs))


def verify_maximality_witness(fam: QuadFamily, seq, n: int, prime) -> bool:
    """Recheck all five conditions for a recorded witness from scratch."""
    idx = _seq(seq, n)
    values = critical_values(fam, idx, n)
    if any(_is_zero(v) for v in values):
        return False
    if fam.base == BASE_Q:
        from .factor import is_probable_prime

        if not is_probable_prime(int(prime)):
            return False
        cond = _conditions_q(fam, idx, values, n, int(prime))
    else:
        import sympy

        t = sympy.Symbol("t")
        if not sympy.Poly(list(reversed(prime.coeffs)), t).is_irreducible:
            return False
        cond = _conditions_qt(fam, idx, values, n, prime)
    return all(cond.values())


# hypothesis checks


def stability_hypotheses(cs, r_max: int = 6) -> dict:
    """Check both hypotheses of the positive-probability irreducibility result for {x^2 + c_i}.

    (1) some -c_i is not a square in Z; (2) 0 is an escape point, shown by the
    pairwise inequality |c_i^2 + c_j| >= 2 max|c_i| or by an escape certificate.
    """
    from .heights import NotCertified, escape_certificate, galois_escape_predicate
    from .random_model import MeasuredFamily

    cs = [int(c) for c in cs]
    if len(set(cs)) != len(cs):
        raise ValueError("constants must be distinct")
    nonsquare = [c for c in cs if not is_square_int(-c)]
    predicate = galois_escape_predicate(cs)
    cert = None
    if not predicate:
        family = MeasuredFamily.from_polys([[c, 0, 1] for c in cs])
        try:
            cert = escape_certificate(family, 0, r_max)
        except Exception as exc:  # e.g. missing constants
            cert = NotCertified(r_max)
            cert.reason = str(exc)
    escape = predicate or (cert is not None and not isinstance(cert, NotCertified))
    holds = bool(nonsquare) and escape
    return {
        "nonsquare_witnesses": nonsquare,
        "condition_1": bool(nonsquare),
        "escape_inequality": predicate,
        "escape_level": None if cert is None or isinstance(cert, NotCertified) else cert.level,
        "condition_2": escape,
        "hypotheses_hold": holds,
        "conclusion": (
            "gamma_n irreducible for all n with positive probability, for every weighting"
            if holds
            else "not established"
        ),
    }


def _as_tpoly(c) -> IntPoly:
    if isinstance(c, IntPoly):
        return c
    vals = [Fraction(v) for v in c]
    if any(v.denominator != 1 for v in vals):
        raise ValueError("coefficients must be integers")
    return IntPoly([int(v) for v in vals])


def function_field_check(cs) -> dict:
    """Per-map conditions: integer c with lead +-1; common degree d > 0; d/dt of c mod 2 equals 1."""
    cs = [_as_tpoly(c) for c in cs]
    degrees = {c.degree for c in cs}
    common = degrees.pop() if len(degrees) == 1 else None
    rows = []
    for c in cs:
        deriv = c.mod2().derivative().mod2()
        rows.append(
            {
                "c": c.to_str("t"),
                "integral_unit_lead": not c.is_zero() and abs(c.lead) == 1,
                "positive_common_degree": common is not None and c.degree > 0,
                "derivative_mod_2_is_1": deriv == IntPoly.const(1),
            }
        )
    passed = all(all(v for k, v in r.items() if k != "c") for r in rows)
    return {
        "maps": rows,
        "degree": common,
        "passed": passed,
        "conclusion": "Galois group is the full tree automorphism group for every sequence" if passed else "not established",
    }


FF_CHECKS = ("degree", "squarefree", "unit_lead", "new_factor")


def ff_tower_verify(cs, seq, n_max: int, strict: bool = False) -> list:
    """Per-level checks on gamma_n(0) in Z[t] for {x^2 + c(t)}.

    degree = 2^(n-1) d; gcd(f, f') constant; leading coefficient +-1;
    deg f > deg gcd(f, prod_(m<n) gamma_m(0)). With ``strict`` the first
    failure raises ConditionViolated.
    """
    cs = [_as_tpoly(c) for c in cs]
    d = cs[0].degree
    fam = QuadFamily.over_qt(cs)
    values = critical_values(fam, seq, n_max)
    prod = IntPoly.const(1)
    out = []
    for n, v in enumerate(values, start=1):
        row = {"level": n, "degree": v.degree, "expected_degree": 2 ** (n - 1) * d}
        row["degree_ok"] = v.degree == 2 ** (n - 1) * d
        row["squarefree"] = v.degree > 0 and poly_gcd(v, v.derivative()).degree <= 0
        row["unit_lead"] = not v.is_zero() and abs(v.lead) == 1
        shared = poly_gcd(v, prod).degree if not v.is_zero() else 0
        row["new_factor"] = v.degree > shared
        out.append(row)
        if strict:
            for key, name in (("degree_ok", "degree"), ("squarefree", "squarefree"),
                              ("unit_lead", "unit_lead"), ("new_factor", "new_factor")):
                if not row[key]:
                    raise ConditionViolated(n, name)
        prod = prod * v
    return out


# reports


def tower_report(fam: QuadFamily, seq, depth: int, **effort) -> dict:
    """Per-level discriminant, support, irreducibility and maximality verdicts."""
    idx = _seq(seq, depth)
    states = discriminant_chain(fam, idx, depth)
    levels = []
    for st in states:
        n = st.level
        row = {
            "level": n,
            "critical_value": _fmt(st.critical_value),
            "lead": _fmt(st.lead),
            "abs_disc": _fmt(st.abs_disc),
            "separable": st.separable,
        }
        if fam.base == BASE_Q and st.separable:
            ram = ramification_support(fam, idx, n, **effort)
            row["support"] = sorted(p for p in ram.primes if st.abs_disc % p == 0)
            row["support_complete"] = ram.complete
        irr = irreducibility_certificate(fam, idx, n)
        row["irreducibility"] = {"status": irr.status}
        if irr.failing_index is not None:
            row["irreducibility"]["failing_index"] = irr.failing_index
        mx = maximality_certificate(fam, idx, n, **effort)
        row["maximality"] = {"status": mx.status}
        if mx.prime is not None:
            row["maximality"]["prime"] = _fmt(mx.prime)
        levels.append(row)
    return {"base": fam.base, "sequence": idx, "levels": levels}


def _fmt(v) -> str:
    return v.to_str("t") if isinstance(v, IntPoly) else str(v)
