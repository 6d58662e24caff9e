"""Height-control constants, Tate bounds, escape certificates, and orbit counting."""

from __future__ import annotations

import itertools
import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._zz import ZZ
from .arith import format_rational
from .errors import (
    BudgetExceeded,
    ExactCapExceeded,
    IndeterminatePoint,
    MissingConstant,
    NotHeightControlled,
    TraceTooShort,
)
from .logexpr import LogExpr, format_log_value, log_of_int
from .maps import ProjPoint, UnicriticalMap, as_homog, compose, evaluate_raw
from .random_model import DEFAULT_EXACT_CAP, HeightTrace, MeasuredFamily, weil_height


# constants


def height_constant_unicritical(c: int, d: int) -> float:
    """C(x^d + c) = ln|2c|, and 0 for the pure power map."""
    return float(height_constant_expr(c, d))


def height_constant_expr(c: int, d: int) -> LogExpr:
    if d < 2:
        raise ValueError("degree must be at least 2")
    c = int(c)
    return LogExpr() if c == 0 else LogExpr.ln(abs(2 * c))


def power_plus_constant(m):
    """(d, c) when the map is +-x^d + c with integer c, else None.

    -x^d + c has the same heights as x^d - c, so the same constant applies.
    """
    if isinstance(m, UnicriticalMap):
        if abs(m.a) == 1 and m.c == 0 and m.b.denominator == 1:
            return m.d, int(m.b)
        return None
    p = m.polynomial_coeffs()
    if p is None or abs(p[-1]) != 1 or any(p[1:-1]) or p[0].denominator != 1:
        return None
    return len(p) - 1, int(p[0])


@dataclass(frozen=True)
class FamilyConstants:
    d_S: int
    C_S: LogExpr
    B_S: LogExpr
    per_map: tuple  # C(phi) per map
    sources: tuple  # "closed-form-unicritical" or "user-supplied"

    @property
    def B_float(self) -> float:
        return float(self.B_S)

    def to_json(self) -> dict:
        return {
            "d_S": self.d_S,
            "C_S": float(self.C_S),
            "C_S_exact": format_log_value(self.C_S),
            "B_S": float(self.B_S),
            "B_S_exact": format_log_value(self.B_S),
            "per_map": [format_log_value(c) for c in self.per_map],
            "sources": list(self.sources),
        }


def family_constants(family: MeasuredFamily, overrides=None) -> FamilyConstants:
    """d_S, C_S, B_S = C_S/(d_S - 1).

    ``overrides`` maps a map index to a constant (LogExpr, number, or
    ``"ln:q"`` string); entries of ``family.height_constants`` count as
    overrides too.
    """
    overrides = dict(overrides or {})
    if family.height_constants:
        for i, v in enumerate(family.height_constants):
            if v is not None and i not in overrides:
                overrides[i] = v
    degs = family.degrees
    if min(degs) < 2:
        raise NotHeightControlled(f"degree {min(degs)} map present; need all degrees >= 2")
    per_map = []
    sources = []
    for i, m in enumerate(family.maps):
        if i in overrides:
            per_map.append(LogExpr.coerce(overrides[i]))
            sources.append("user-supplied")
            continue
        form = power_plus_constant(m)
        if form is None:
            raise MissingConstant(
                f"map {i} ({family.homog[i].describe()}) has no closed-form constant; supply one"
            )
        per_map.append(height_constant_expr(form[1], form[0]))
        sources.append("closed-form-unicritical")
    C_S = per_map[0]
    for c in per_map[1:]:
        if c > C_S:
            C_S = c
    d_S = min(degs)
    return FamilyConstants(d_S, C_S, C_S / (d_S - 1), tuple(per_map), tuple(sources))


def estimate_height_constant(m, trials: int = 2000, max_height: int = 50, seed: int = 0) -> dict:
    """Largest |h(phi(P)) - deg(phi) h(P)| seen over random rational P.

    This is an estimate, not a certificate: the true constant may be larger.
    """
    f = as_homog(m)
    if f.n != 1:
        raise ValueError("the estimator samples points of P^1 only")
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(trials):
        q = rng.randint(1, max_height)
        p = rng.randint(-max_height, max_height)
        try:
            val = evaluate_raw(f, (p, q))
        except IndeterminatePoint:
            continue
        start = ProjPoint.from_affine(Fraction(p, q))
        gap = abs(float(weil_height(val)) - f.degree * float(weil_height(start)))
        worst = max(worst, gap)
    return {"estimate": worst, "certified": False, "trials": trials}


@dataclass(frozen=True)
class DegreeIndependence:
    holds: bool | None  # None: no counterexample up to checked_length, not a proof
    checked_length: int
    counterexample: tuple | None = None
    reason: str = ""


def degree_independence(family: MeasuredFamily, length_cap: int = 6,
                        budget: int = 10**5) -> DegreeIndependence:
    """Whether deg(f) >= 2 for every composition f of family maps.

    Degrees of P^1 morphisms multiply, so there the answer is exact. Other
    families are searched breadth-first over compositions (deduplicated by
    canonical form) up to ``length_cap``; a clean search proves nothing
    beyond the cap.
    """
    degs = family.degrees
    low = next((i for i, d in enumerate(degs) if d < 2), None)
    if low is not None:
        return DegreeIndependence(False, 1, (low,), f"map {low} has degree {degs[low]}")
    if family.all_morphisms():
        return DegreeIndependence(True, 1, None, "morphisms of P^1: degrees multiply")
    frontier = {h: (i,) for i, h in enumerate(family.homog)}
    seen = set(frontier)
    for length in range(2, length_cap + 1):
        nxt = {}
        for g, string in frontier.items():
            for i, phi in enumerate(family.homog):
                f = compose(phi, g)
                if f.degree < 2:
                    return DegreeIndependence(
                        False, length, (i,) + string, f"composite of length {length} has degree {f.degree}"
                    )
                if f not in seen:
                    seen.add(f)
                    nxt[f] = (i,) + string
                    if len(seen) > budget:
                        raise BudgetExceeded(f"more than {budget} distinct composites")
        frontier = nxt
    return DegreeIndependence(None, length_cap, None, f"no degree drop up to length {length_cap}")


# strings of maps


def apply_string(family: MeasuredFamily, string, coords):
    """rho(Q) for rho = phi_(i1) o ... o phi_(ik); phi_(ik) is applied first."""
    for i in reversed(string):
        coords = evaluate_raw(family.homog[i], coords)
    return coords


def string_degree(family: MeasuredFamily, string) -> int:
    d = 1
    for i in string:
        d *= family.degrees[i]
    return d


def _coords(P):
    if isinstance(P, ProjPoint):
        return tuple(ZZ(c) for c in P.coords)
    if isinstance(P, str):
        return tuple(ZZ(c) for c in ProjPoint.parse(P).coords)
    if isinstance(P, (int, Fraction)):
        return tuple(ZZ(c) for c in ProjPoint.from_affine(P).coords)
    return tuple(ZZ(c) for c in P)


def h_expr(coords) -> LogExpr:
    return log_of_int(max(abs(c) for c in coords))


def tate_bounds_hold(degree: int, h_start: LogExpr, h_value: LogExpr, B_S: LogExpr) -> bool:
    """deg (h(Q) - B_S) <= h(rho(Q)) <= deg (h(Q) + B_S), decided exactly."""
    lower = (h_start - B_S) * degree
    upper = (h_start + B_S) * degree
    return lower <= h_value and h_value <= upper


@dataclass(frozen=True)
class TateGap:
    gap: float
    degree: int
    height_start: float
    height_value: float
    within_bound: bool | None


def tate_gap(family, string, Q, constants: FamilyConstants | None = None,
             exact_cap: int = DEFAULT_EXACT_CAP) -> TateGap:
    """|h(rho(Q))/deg(rho) - h(Q)| with an exact check against B_S when known."""
    string = tuple(string)
    if len(string) > exact_cap:
        raise ExactCapExceeded(f"string length {len(string)} exceeds exact cap {exact_cap}")
    start = _coords(Q)
    value = apply_string(family, string, start)
    deg = string_degree(family, string)
    hq = weil_height(start)
    hv = weil_height(value)
    gap = abs(float(hv) / deg - float(hq)) if string else 0.0
    within = None
    if constants is None:
        try:
            constants = family_constants(family)
        except (MissingConstant, NotHeightControlled):
            constants = None
    if constants is not None:
        within = tate_bounds_hold(deg, h_expr(start), h_expr(value), constants.B_S)
    return TateGap(gap, deg, float(hq), float(hv), within)


# escape points


@dataclass(frozen=True)
class EscapeCertificate:
    level: int
    B_S: LogExpr
    witnesses: tuple  # (string, canonical coords, height float)
    B1: float
    B2: float
    h_P: float

    def to_json(self) -> dict:
        return {
            "kind": "escape-certificate",
            "level": self.level,
            "B_S": float(self.B_S),
            "B_S_exact": format_log_value(self.B_S),
            "B1": self.B1,
            "B2": self.B2,
            "witnesses": [
                {"string": list(s), "value": _point_str(v), "height": h}
                for s, v, h in self.witnesses
            ],
        }


@dataclass(frozen=True)
class NotCertified:
    r_max: int
    reason: str = "some string at every level up to r_max stays at height <= B_S"


def _point_str(coords) -> str:
    if len(coords) == 2 and coords[1] != 0:
        return format_rational(Fraction(int(coords[0]), int(coords[1])))
    return "[" + ":".join(str(int(c)) for c in coords) + "]"


def escape_certificate(family, P, r_max: int, budget: int = 10**6, constants=None):
    """Smallest r <= r_max with h(g(P)) > B_S for every string g of length r.

    Strings are enumerated as index tuples (s^r of them); level 0 is the
    identity alone.
    """
    constants = constants or family_constants(family)
    B = constants.B_S
    start = _coords(P)
    level = [((), start)]
    s = family.s
    for r in range(r_max + 1):
        if r > 0:
            if s**r > budget:
                raise BudgetExceeded(f"{s}^{r} strings exceed budget {budget}")
            level = [
                ((i,) + string, evaluate_raw(family.homog[i], v))
                for string, v in level
                for i in range(s)
            ]
        if all(h_expr(v) > B for _, v in level):
            witnesses = tuple((string, v, float(weil_height(v))) for string, v in level)
            max_deg = max(string_degree(family, string) for string, _ in level)
            min_excess = min(float(h_expr(v) - B) for _, v in level)
            hP = float(weil_height(start))
            return EscapeCertificate(
                level=r,
                B_S=B,
                witnesses=witnesses,
                B1=min_excess / max_deg,
                B2=hP + float(B),
                h_P=hP,
            )
    return NotCertified(r_max)


def verify_escape_certificate(family, P, cert: EscapeCertificate, constants=None) -> bool:
    """Recompute every witness of a certificate from scratch."""
    constants = constants or family_constants(family)
    start = _coords(P)
    strings = {tuple(s) for s, _, _ in cert.witnesses}
    expected = set(itertools.product(range(family.s), repeat=cert.level))
    if strings != expected:
        return False
    for string, v, _ in cert.witnesses:
        value = apply_string(family, string, start)
        if tuple(int(c) for c in value) != tuple(int(c) for c in v):
            return False
        if not h_expr(value) > constants.B_S:
            return False
    return True


def _unicritical_pairs(S):
    """Normalize {x^(d_i) + c_i} input to a list of (d_i, c_i)."""
    if isinstance(S, MeasuredFamily):
        out = []
        for m in S.maps:
            form = power_plus_constant(m)
            if form is None:
                raise ValueError("family must consist of maps x^d + c")
            out.append(form)
        return out
    out = []
    for item in S:
        if isinstance(item, tuple):
            out.append((int(item[0]), int(item[1])))
        else:
            out.append((2, int(item)))
    return out


def galois_escape_predicate(S) -> bool:
    """|c_i^(d_j) + c_j| >= 2 max|c_i| for all i, j.

    ``S`` is a family of maps x^d + c, a list of (d, c) pairs, or a list of
    integers c (meaning x^2 + c).
    """
    pairs = _unicritical_pairs(S)
    if any(c == 0 for _, c in pairs):
        raise ValueError("the predicate needs nonzero c_i")
    bound = 2 * max(abs(c) for _, c in pairs)
    return all(abs(ci**dj + cj) >= bound for _, ci in pairs for dj, cj in pairs)


# total orbits


@dataclass
class OrbitClosureResult:
    verdict: str  # "Finite", "InfiniteCertified", "Unknown"
    points: list = field(default_factory=list)
    witness_string: tuple | None = None
    witness_value: tuple | None = None
    witness_height: float | None = None
    depth: int = 0
    budget: dict | None = None

    def affine_values(self) -> set:
        """Points of a P^1 closure as rationals (None for infinity)."""
        return {Fraction(int(x), int(y)) if y else None for x, y in self.points}

    def to_json(self) -> dict:
        out = {"kind": "orbit-closure", "verdict": self.verdict, "depth": self.depth}
        if self.verdict == "Finite":
            out["set"] = sorted((_point_str(p) for p in self.points), key=_sort_key)
        elif self.verdict == "InfiniteCertified":
            out["witness"] = {
                "string": list(self.witness_string),
                "value": _point_str(self.witness_value),
                "height": self.witness_height,
            }
        else:
            out["budget"] = self.budget
        return out


def _sort_key(s: str):
    try:
        return (0, float(Fraction(s)))
    except ValueError:
        return (1, 0.0)


def total_orbit_closure(family, P, max_points: int = 10**5, max_depth: int = 64,
                        constants=None) -> OrbitClosureResult:
    """Breadth-first closure of P under all maps of the family.

    Returns InfiniteCertified as soon as a value has height strictly above
    B_S. Without height constants that shortcut is skipped and only Finite
    or Unknown can come back.
    """
    if constants is None:
        try:
            constants = family_constants(family)
        except MissingConstant:
            constants = None
    B = constants.B_S if constants is not None else None
    start = _coords(P)
    seen = {start: ()}
    frontier = deque([start])
    order = [start]
    if B is not None and h_expr(start) > B:
        return OrbitClosureResult("InfiniteCertified", [], (), start, float(weil_height(start)), 0)
    depth = 0
    while frontier:
        if depth >= max_depth:
            return OrbitClosureResult(
                "Unknown", order, depth=depth,
                budget={"max_points": max_points, "max_depth": max_depth, "reason": "depth"},
            )
        depth += 1
        nxt = deque()
        for v in frontier:
            for i, f in enumerate(family.homog):
                w = evaluate_raw(f, v)
                if w in seen:
                    continue
                string = (i,) + seen[v]
                seen[w] = string
                if B is not None and h_expr(w) > B:
                    return OrbitClosureResult(
                        "InfiniteCertified", order, string, w, float(weil_height(w)), depth
                    )
                order.append(w)
                nxt.append(w)
                if len(seen) > max_points:
                    return OrbitClosureResult(
                        "Unknown", order, depth=depth,
                        budget={"max_points": max_points, "max_depth": max_depth, "reason": "points"},
                    )
        frontier = nxt
    return OrbitClosureResult("Finite", order, depth=depth)


def verify_closure(family, result: OrbitClosureResult, P) -> bool:
    if result.verdict == "Finite":
        pts = set(result.points)
        return _coords(P) in pts and all(
            evaluate_raw(f, v) in pts for v in pts for f in family.homog
        )
    if result.verdict == "InfiniteCertified":
        constants = family_constants(family)
        value = apply_string(family, result.witness_string, _coords(P))
        return value == tuple(result.witness_value) and h_expr(value) > constants.B_S
    return True


# orbit counting


def _bound_expr(B=None, log_bound=None):
    if (B is None) == (log_bound is None):
        raise ValueError("give exactly one of B and log_bound")
    return B, log_bound


def orbit_height_count(trace: HeightTrace, B=None, log_bound=None) -> int:
    """Number of steps n with h(gamma_n(P)) <= B.

    ``B`` is a height bound (float or LogExpr); ``log_bound`` gives ln B
    instead, for bounds beyond float range. Exact steps are compared exactly
    when B is a LogExpr; float bounds are compared with a 1e-12 relative
    tolerance that counts ties as inside.
    """
    _bound_expr(B, log_bound)
    count = 0
    for st in trace.steps:
        if log_bound is not None:
            inside = st.loglog_height <= log_bound
        elif isinstance(B, LogExpr) and st.engine == "exact":
            inside = h_expr(st.point) <= B
        else:
            b = float(B)
            inside = st.log_height <= b + 1e-12 * max(abs(b), 1.0)
        if inside:
            count += 1
    last = trace.steps[-1]
    last_inside = (
        last.loglog_height <= log_bound if log_bound is not None else last.log_height <= float(B)
    )
    if last_inside:
        raise TraceTooShort(f"trace ends at n={last.n} without exceeding the bound")
    return count


def slope_estimate(trace: HeightTrace, log_bounds=None) -> float:
    """Least-squares slope of count against ln B over a geometric ladder of B."""
    lam_max = max(st.loglog_height for st in trace.steps if math.isfinite(st.loglog_height))
    if log_bounds is None:
        lo = max(lam_max / 8, 1.0)
        log_bounds = np.linspace(lo, lam_max * 0.95, 12)
    xs, ys = [], []
    for L in log_bounds:
        try:
            ys.append(orbit_height_count(trace, log_bound=float(L)))
            xs.append(float(L))
        except TraceTooShort:
            continue
    if len(xs) < 2:
        raise TraceTooShort("trace too short for a slope estimate")
    slope, _ = np.polyfit(np.array(xs), np.array(ys, dtype=float), 1)
    return float(slope)


def distinctness_property(family, P, constants=None) -> bool:
    """h(P) > 3 B_S, which makes all orbit points pairwise distinct."""
    constants = constants or family_constants(family)
    return h_expr(_coords(P)) > constants.B_S * 3


def quadratic_positivity_predicate(cs) -> dict:
    """Whether {x^2 + c_i} meets the s >= 3 hypothesis of the quadratic-family
    positivity result; the conclusion is quoted, not verified here."""
    cs = [int(c) for c in cs]
    if len(set(cs)) != len(cs):
        raise ValueError("the c_i must be distinct")
    applicable = len(cs) >= 3
    return {
        "s": len(cs),
        "applicable": applicable,
        "conclusion": (
            "limsup h(gamma_n^+(P))/deg(gamma_n^+) > 0 almost surely for every rational P"
            if applicable
            else None
        ),
        "source": "external result; quoted, not checked",
        "verified": False,
    }
