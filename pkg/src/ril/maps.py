"""Rational points and homogeneous self-maps of projective space over Q."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from math import comb, gcd

from ._zz import ZZ
from ._zz import gcd as zgcd
from .arith import format_rational, to_rational
from .errors import ConfigError, DimensionMismatch, IndeterminatePoint
from .poly import IntPoly, exact_quotient, formal_resultant, poly_gcd


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


# points


@dataclass(frozen=True)
class ProjPoint:
    """Point of P^N(Q) with coprime integer coordinates, first nonzero positive."""

    coords: tuple

    def __init__(self, coords):
        coords = [int(c) for c in coords]
        if len(coords) < 2:
            raise ValueError("a projective point needs at least two coordinates")
        g = reduce(gcd, coords, 0)
        if g == 0:
            raise ValueError("all coordinates are zero")
        first = next(c for c in coords if c)
        if first < 0:
            g = -g
        object.__setattr__(self, "coords", tuple(c // g for c in coords))

    @classmethod
    def from_affine(cls, x) -> "ProjPoint":
        x = to_rational(x)
        return cls((x.numerator, x.denominator))

    @classmethod
    def parse(cls, s: str) -> "ProjPoint":
        """Parse ``"3"``, ``"3/2"`` (affine, P^1) or ``"[2:3]"`` / ``"2:3"``."""
        s = s.strip()
        if s.startswith("[") and s.endswith("]"):
            s = s[1:-1]
        if ":" in s:
            return cls(int(part) for part in s.split(":"))
        return cls.from_affine(s)

    @property
    def dim(self) -> int:
        return len(self.coords) - 1

    def max_abs(self) -> int:
        return max(abs(c) for c in self.coords)

    def affine(self):
        """X/Y on P^1; None at infinity."""
        if self.dim != 1:
            raise DimensionMismatch("affine value is defined on P^1 only")
        x, y = self.coords
        return None if y == 0 else Fraction(x, y)

    def __str__(self):
        return "[" + ":".join(str(c) for c in self.coords) + "]"


def canonical_coords(coords):
    """Canonical representative of an integer vector (possibly big ints)."""
    g = 0
    for c in coords:
        g = zgcd(g, c)
    if g == 0:
        return None
    first = next(c for c in coords if c)
    if first < 0:
        g = -g
    if g == 1:
        return tuple(coords)
    return tuple(c // g for c in coords)


# maps


def _normalize_coords(coords):
    """Divide out the integer content and fix the overall sign."""
    content = 0
    for poly in coords:
        for _, c in poly:
            content = gcd(content, c)
    if content == 0:
        raise ValueError("all coordinate polynomials are zero")
    first = next(poly for poly in coords if poly)
    if first[0][1] < 0:
        content = -content
    return tuple(tuple((e, c // content) for e, c in poly) for poly in coords)


def _clean_poly(terms: dict):
    return tuple(sorted(((e, c) for e, c in terms.items() if c), reverse=True))


@dataclass(frozen=True, eq=False)
class HomogMap:
    """Self-map of P^N given by N+1 integer forms of a common degree.

    Coordinates are sparse: each is a tuple of (exponent tuple, coefficient)
    pairs sorted by descending exponent. The integer content of all
    coefficients is 1 and the first coefficient of the first nonzero
    coordinate is positive.
    """

    n: int
    degree: int
    coords: tuple

    def __init__(self, coords, n: int | None = None):
        coords = [_clean_poly(dict(_merge(p))) for p in coords]
        if n is None:
            n = len(coords) - 1
        if len(coords) != n + 1:
            raise DimensionMismatch(f"expected {n + 1} coordinates, got {len(coords)}")
        degree = None
        for poly in coords:
            for e, _ in poly:
                if len(e) != n + 1:
                    raise DimensionMismatch("monomial has wrong number of variables")
                d = sum(e)
                if degree is None:
                    degree = d
                elif d != degree:
                    raise ValueError("coordinate polynomials must share one degree")
        if degree is None:
            raise ValueError("all coordinate polynomials are zero")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "coords", _normalize_coords(coords))

    # construction helpers

    @classmethod
    def from_binary_forms(cls, f0, f1) -> "HomogMap":
        """P^1 map from dense forms: f[i] is the coefficient of X^i Y^(d-i)."""
        d = max(len(f0), len(f1)) - 1
        coords = []
        for f in (f0, f1):
            coords.append([((i, d - i), int(c)) for i, c in enumerate(f) if c])
        return cls(coords, n=1)

    @classmethod
    def from_poly(cls, coeffs) -> "HomogMap":
        """P^1 map extending the polynomial sum coeffs[i] x^i (rationals allowed)."""
        fr = [to_rational(c) for c in coeffs]
        while fr and fr[-1] == 0:
            fr.pop()
        if not fr:
            raise ValueError("zero polynomial")
        d = len(fr) - 1
        if d < 1:
            raise ValueError("a constant map is not dominant")
        den = reduce(_lcm, (c.denominator for c in fr), 1)
        f0 = [int(c * den) for c in fr]
        # second coordinate den*Y^d sits at X-exponent 0
        f1 = [den] + [0] * d
        return cls.from_binary_forms(f0, f1)

    def binary_forms(self):
        """Dense forms (f0, f1) of a P^1 map, indexed by the exponent of X."""
        if self.n != 1:
            raise DimensionMismatch("binary forms exist on P^1 only")
        out = []
        for poly in self.coords:
            f = [0] * (self.degree + 1)
            for (i, _), c in poly:
                f[i] = c
            out.append(f)
        return out[0], out[1]

    def polynomial_coeffs(self):
        """Affine polynomial coefficients (Fractions, lowest first) if the map
        is a polynomial map [F : b Y^d] on P^1, else None."""
        if self.n != 1:
            return None
        f0, f1 = self.binary_forms()
        if any(f1[1:]) or f1[0] == 0:
            return None
        b = f1[0]
        return [Fraction(c, b) for c in f0]

    # structure

    def __eq__(self, other):
        return (
            isinstance(other, HomogMap)
            and self.n == other.n
            and self.degree == other.degree
            and self.coords == other.coords
        )

    def __hash__(self):
        return hash((self.n, self.degree, self.coords))

    def __repr__(self):
        return f"HomogMap({self.describe()})"

    def describe(self) -> str:
        poly = self.polynomial_coeffs()
        if poly is not None:
            return _format_affine(poly)
        names = _var_names(self.n)
        parts = []
        for p in self.coords:
            parts.append(_format_form(p, names))
        return "[" + " : ".join(parts) + "]"

    @cached_property
    def _zz_forms(self):
        f0, f1 = self.binary_forms()
        return [ZZ(c) for c in f0], [ZZ(c) for c in f1]

    def is_morphism(self) -> bool:
        if self.n != 1:
            raise DimensionMismatch("morphism check implemented on P^1 only")
        return is_morphism_p1(self)


def _merge(poly):
    """Accept dicts or (exps, coef) iterables; sum repeated monomials."""
    items = poly.items() if isinstance(poly, dict) else poly
    out: dict = {}
    for e, c in items:
        e = tuple(int(x) for x in e)
        out[e] = out.get(e, 0) + int(c)
    return out.items()


def _var_names(n):
    if n == 1:
        return ["X", "Y"]
    if n == 2:
        return ["X", "Y", "Z"]
    return [f"X{i}" for i in range(n + 1)]


def _format_form(poly, names):
    if not poly:
        return "0"
    terms = []
    for e, c in poly:
        mono = "*".join(
            (v if k == 1 else f"{v}^{k}") for v, k in zip(names, e) if k
        )
        if not mono:
            terms.append(str(c))
        elif c == 1:
            terms.append(mono)
        elif c == -1:
            terms.append("-" + mono)
        else:
            terms.append(f"{c}*{mono}")
    return " + ".join(terms).replace("+ -", "- ")


def _format_affine(fr):
    terms = []
    for i in range(len(fr) - 1, -1, -1):
        c = fr[i]
        if c == 0:
            continue
        cs = format_rational(abs(c))
        mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
        body = cs if not mono else (mono if abs(c) == 1 else f"{cs}*{mono}")
        if not terms:
            terms.append(("-" if c < 0 else "") + body)
        else:
            terms.append((" - " if c < 0 else " + ") + body)
    return "".join(terms)


# evaluation


def eval_binary_form(f, x, y, ypow=None):
    """Horner evaluation of sum f[i] X^i Y^(d-i) at integers (x, y)."""
    d = len(f) - 1
    acc = ZZ(f[d])
    if y == 1:
        for i in range(d - 1, -1, -1):
            acc = acc * x + f[i]
        return acc
    if ypow is None:
        ypow = [ZZ(1)]
        for _ in range(d):
            ypow.append(ypow[-1] * y)
    for i in range(d - 1, -1, -1):
        acc = acc * x + f[i] * ypow[d - i]
    return acc


def evaluate_coords(f: HomogMap, coords):
    """Raw (not normalized) image coordinates of integer coords."""
    if len(coords) != f.n + 1:
        raise DimensionMismatch(f"point in P^{len(coords) - 1}, map on P^{f.n}")
    if f.n == 1:
        f0, f1 = _binary_cache(f)
        x, y = ZZ(coords[0]), ZZ(coords[1])
        ypow = None
        if y != 1:
            ypow = [ZZ(1)]
            for _ in range(f.degree):
                ypow.append(ypow[-1] * y)
        return (eval_binary_form(f0, x, y, ypow), eval_binary_form(f1, x, y, ypow))
    xs = [ZZ(c) for c in coords]
    powers = []
    for x in xs:
        p = [ZZ(1)]
        for _ in range(f.degree):
            p.append(p[-1] * x)
        powers.append(p)
    out = []
    for poly in f.coords:
        acc = ZZ(0)
        for e, c in poly:
            term = ZZ(c)
            for j, k in enumerate(e):
                if k:
                    term *= powers[j][k]
            acc += term
        out.append(acc)
    return tuple(out)


def _binary_cache(f: HomogMap):
    return f._zz_forms


def evaluate_raw(f: HomogMap, coords):
    """Canonical image coordinates as big integers; raises IndeterminatePoint."""
    image = evaluate_coords(f, coords)
    canon = canonical_coords(image)
    if canon is None:
        raise IndeterminatePoint(f"{f.describe()} is undefined at {list(map(int, coords))}")
    return canon


def evaluate(f: HomogMap, P: ProjPoint) -> ProjPoint:
    """f(P) as a canonical point."""
    return ProjPoint(int(c) for c in evaluate_raw(f, P.coords))


# composition


def _binary_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _binary_compose(f, g0, g1):
    """sum f[i] g0^i g1^(d-i) as a dense form of degree d*e."""
    d = len(f) - 1
    e = len(g0) - 1
    p0 = [[1]]
    p1 = [[1]]
    for _ in range(d):
        p0.append(_binary_mul(p0[-1], g0))
        p1.append(_binary_mul(p1[-1], g1))
    out = [0] * (d * e + 1)
    for i, c in enumerate(f):
        if c:
            term = _binary_mul(p0[i], p1[d - i])
            for k, v in enumerate(term):
                out[k] += c * v
    return out


def _cancel_binary(f0, f1):
    """Remove the common form factor of two binary forms of equal formal degree."""
    d = len(f0) - 1
    p0, p1 = IntPoly(f0), IntPoly(f1)
    # Y-multiplicity of a form = formal degree minus dehomogenized degree
    y0 = d - p0.degree if not p0.is_zero() else d + 1
    y1 = d - p1.degree if not p1.is_zero() else d + 1
    ycommon = min(y0, y1)
    g = poly_gcd(p0, p1)
    k = g.degree
    if k <= 0 and ycommon == 0:
        return f0, f1
    q0 = exact_quotient(p0, g) if not p0.is_zero() else p0
    q1 = exact_quotient(p1, g) if not p1.is_zero() else p1
    newdeg = d - k - ycommon
    out = []
    for q in (q0, q1):
        out.append([q[i] for i in range(newdeg + 1)])
    return out[0], out[1]


def compose(outer: HomogMap, inner: HomogMap) -> HomogMap:
    """outer o inner with the common factor of the coordinates divided out."""
    if outer.n != inner.n:
        raise DimensionMismatch(f"cannot compose maps on P^{outer.n} and P^{inner.n}")
    if outer.n == 1:
        f0, f1 = outer.binary_forms()
        g0, g1 = inner.binary_forms()
        h0 = _binary_compose(f0, g0, g1)
        h1 = _binary_compose(f1, g0, g1)
        h0, h1 = _cancel_binary(h0, h1)
        return HomogMap.from_binary_forms(h0, h1)
    return _compose_general(outer, inner)


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c}


def _compose_general(outer: HomogMap, inner: HomogMap) -> HomogMap:
    n = outer.n
    g = [dict(p) for p in inner.coords]
    d = outer.degree
    one = {(0,) * (n + 1): 1}
    pw = []
    for gj in g:
        p = [one]
        for _ in range(d):
            p.append(_poly_mul(p[-1], gj))
        pw.append(p)
    result = []
    for poly in outer.coords:
        acc: dict = {}
        for e, c in poly:
            term = {(0,) * (n + 1): c}
            for j, k in enumerate(e):
                if k:
                    term = _poly_mul(term, pw[j][k])
            for m, v in term.items():
                acc[m] = acc.get(m, 0) + v
        result.append({m: v for m, v in acc.items() if v})
    return HomogMap(_cancel_general(result, n), n=n)


def _cancel_general(polys, n):
    """Divide N+1 sparse forms by their common factor."""
    nonzero = [p for p in polys if p]
    # common monomial first
    mins = [min(e[j] for p in nonzero for e in p) for j in range(n + 1)]
    if any(mins):
        polys = [
            {tuple(x - m for x, m in zip(e, mins)): c for e, c in p.items()}
            for p in polys
        ]
        nonzero = [p for p in polys if p]
    if any(len(p) == 1 for p in nonzero):
        # a monomial coordinate leaves only monomial common factors
        return polys
    return _sympy_cancel(polys, n)


def _sympy_cancel(polys, n):
    # Multivariate gcd is delegated to sympy; only reached for N >= 2 maps
    # whose coordinates are all non-monomial.
    import sympy

    gens = sympy.symbols(f"x0:{n + 1}")
    sp = [sympy.Poly.from_dict(p, *gens, domain="ZZ") for p in polys]
    g = reduce(lambda a, b: a.gcd(b), [p for p in sp if not p.is_zero])
    if g.total_degree() == 0:
        return polys
    out = []
    for p in sp:
        if p.is_zero:
            out.append({})
        else:
            q = sympy.div(p, g)[0]
            out.append({tuple(e): int(c) for e, c in q.as_dict().items()})
    return out


def is_morphism_p1(f: HomogMap) -> bool:
    """True iff the two coordinate forms have no common zero on P^1."""
    if f.n != 1:
        raise DimensionMismatch("is_morphism_p1 needs a map on P^1")
    f0, f1 = f.binary_forms()
    return formal_resultant(f0, f1) != 0


# unicritical maps


@dataclass(frozen=True)
class UnicriticalMap:
    """x -> a (x - c)^d + b with rational a != 0, c, b and d >= 2."""

    a: Fraction
    c: Fraction
    b: Fraction
    d: int

    def __post_init__(self):
        for name in ("a", "c", "b"):
            object.__setattr__(self, name, to_rational(getattr(self, name)))
        if self.a == 0:
            raise ValueError("unicritical map needs a != 0")
        if int(self.d) != self.d or self.d < 2:
            raise ValueError("unicritical map needs integer d >= 2")
        object.__setattr__(self, "d", int(self.d))

    def poly_coeffs(self):
        """Affine coefficients (Fractions, lowest first) of a(x-c)^d + b."""
        d = self.d
        out = [self.a * comb(d, i) * (-self.c) ** (d - i) for i in range(d + 1)]
        out[0] += self.b
        return out

    def __call__(self, x):
        return self.a * (x - self.c) ** self.d + self.b

    def is_integral(self) -> bool:
        return all(v.denominator == 1 for v in (self.a, self.b, self.c))


def unicritical_to_map(u: UnicriticalMap) -> HomogMap:
    return HomogMap.from_poly(u.poly_coeffs())


# JSON


def map_to_json(m) -> dict:
    if isinstance(m, UnicriticalMap):
        return {
            "kind": "unicritical",
            "a": format_rational(m.a),
            "c": format_rational(m.c),
            "b": format_rational(m.b),
            "d": m.d,
        }
    coords = []
    for poly in m.coords:
        coords.append([[",".join(str(x) for x in e), str(c)] for e, c in poly])
    return {"kind": "homog", "n": m.n, "degree": m.degree, "coords": coords}


def map_from_json(obj, path: str = "map"):
    """Parse a map object; errors name the offending field path."""
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    kind = obj.get("kind")
    if kind == "unicritical":
        _check_keys(obj, {"kind", "a", "c", "b", "d"}, path)
        vals = {}
        for k in ("a", "c", "b"):
            if k not in obj:
                raise ConfigError(f"{path}.{k}: missing")
            try:
                vals[k] = to_rational(obj[k] if isinstance(obj[k], str) else int(obj[k]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}.{k}: {exc}") from None
        d = obj.get("d")
        if not isinstance(d, int) or isinstance(d, bool):
            raise ConfigError(f"{path}.d: expected an integer")
        try:
            return UnicriticalMap(vals["a"], vals["c"], vals["b"], d)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if kind == "homog":
        _check_keys(obj, {"kind", "n", "degree", "coords"}, path)
        n = obj.get("n")
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"{path}.n: expected an integer >= 1")
        coords = obj.get("coords")
        if not isinstance(coords, list) or len(coords) != n + 1:
            raise ConfigError(f"{path}.coords: expected a list of {n + 1} polynomials")
        polys = []
        for i, poly in enumerate(coords):
            terms = []
            if not isinstance(poly, list):
                raise ConfigError(f"{path}.coords[{i}]: expected a list of terms")
            for j, term in enumerate(poly):
                where = f"{path}.coords[{i}][{j}]"
                try:
                    exps, coef = term
                    e = tuple(int(x) for x in str(exps).split(","))
                    terms.append((e, int(coef)))
                except (TypeError, ValueError):
                    raise ConfigError(f"{where}: expected [\"e0,e1,...\", \"coef\"]") from None
                if len(e) != n + 1 or min(e) < 0:
                    raise ConfigError(f"{where}: exponent vector must have {n + 1} entries >= 0")
            polys.append(terms)
        try:
            m = HomogMap(polys, n=n)
        except (ValueError, DimensionMismatch) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if "degree" in obj and obj["degree"] != m.degree:
            raise ConfigError(f"{path}.degree: declared {obj['degree']}, forms have degree {m.degree}")
        return m
    raise ConfigError(f"{path}.kind: expected 'unicritical' or 'homog', got {kind!r}")


def _check_keys(obj, allowed, path):
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"{path}.{extra[0]}: unknown field")


def as_homog(m) -> HomogMap:
    return unicritical_to_map(m) if isinstance(m, UnicriticalMap) else m
