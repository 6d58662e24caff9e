import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ril.cli import load_family
from ril.errors import MissingConstant, NotHeightControlled, TraceTooShort
from ril.heights import (
    EscapeCertificate,
    NotCertified,
    apply_string,
    degree_independence,
    distinctness_property,
    escape_certificate,
    estimate_height_constant,
    family_constants,
    galois_escape_predicate,
    height_constant_unicritical,
    orbit_height_count,
    quadratic_positivity_predicate,
    slope_estimate,
    string_degree,
    tate_gap,
    total_orbit_closure,
    verify_closure,
    verify_escape_certificate,
)
from ril.logexpr import LogExpr
from ril.maps import HomogMap
from ril.random_model import FixedSequence, MeasuredFamily, left_orbit, weil_height

from oracles import naive_height

SQ35 = MeasuredFamily.from_polys([[3, 0, 1], [5, 0, 1]])
SQ1_CUBE = MeasuredFamily.from_polys([[1, 0, 1], [-1, 0, 0, 1]])
SQ1 = MeasuredFamily.from_polys([[1, 0, 1]])
SQ_MINUS1 = MeasuredFamily.from_polys([[-1, 0, 1]])


# constants


@pytest.mark.parametrize("c,d,expected", [(3, 2, math.log(6)), (0, 5, 0.0), (-1, 2, math.log(2))])
def test_height_constant_unicritical(c, d, expected):
    assert height_constant_unicritical(c, d) == pytest.approx(expected, rel=1e-15)


def test_family_constants_sq3_sq5():
    k = family_constants(SQ35)
    assert k.d_S == 2
    assert k.C_S == LogExpr.ln(10)
    assert k.B_S == LogExpr.ln(10)


def test_family_constants_sq1_cube():
    k = family_constants(SQ1_CUBE)
    assert (k.d_S, k.C_S, k.B_S) == (2, LogExpr.ln(2), LogExpr.ln(2))


def test_family_constants_rejects_degree_one():
    with pytest.raises(NotHeightControlled):
        family_constants(MeasuredFamily.from_polys([[1, 0, 1], [1, 1]]))


def test_family_constants_needs_override_for_general_map():
    fam = MeasuredFamily.from_polys([[-1, 0, 2]])
    with pytest.raises(MissingConstant):
        family_constants(fam)
    k = family_constants(fam, {0: "ln:2"})
    assert k.B_S == LogExpr.ln(2) and k.sources == ("user-supplied",)


def test_estimate_is_flagged_and_below_closed_form():
    est = estimate_height_constant(HomogMap.from_poly([3, 0, 1]), trials=500)
    assert est["certified"] is False
    assert est["estimate"] <= math.log(6) + 1e-12


# Tate telescoping


def test_tate_gap_identity():
    assert tate_gap(SQ1, (), "0").gap == 0.0


def test_tate_gap_double_square_plus_one():
    g = tate_gap(SQ1, (0, 0), "0")
    assert g.degree == 4
    assert g.gap == pytest.approx(math.log(2) / 4, rel=1e-15)
    assert g.within_bound is True


@settings(max_examples=200)
@given(
    st.lists(st.integers(0, 1), max_size=6),
    st.integers(-148, 148),
    st.integers(1, 148),
)
def test_tate_gap_bounded_on_random_strings(string, p, q):
    Q = Fraction(p, q)
    if naive_height((Q.numerator, Q.denominator)) > 5:
        return
    g = tate_gap(SQ35, string, Q)
    assert g.within_bound is True
    assert g.gap <= math.log(10) + 1e-12


# escape certificates


def test_escape_level_zero_above_B_S():
    cert = escape_certificate(SQ1, "3", 4)
    assert isinstance(cert, EscapeCertificate) and cert.level == 0


def test_escape_level_two_for_sq3_sq5():
    cert = escape_certificate(SQ35, "0", 5)
    assert cert.level == 2
    values = sorted(int(v[0]) for _, v, _ in cert.witnesses)
    assert values == [12, 14, 28, 30]
    assert verify_escape_certificate(SQ35, "0", cert)
    assert cert.B2 == pytest.approx(math.log(10))
    assert cert.B1 == pytest.approx((math.log(12) - math.log(10)) / 4)


def test_periodic_orbit_never_certified():
    assert isinstance(escape_certificate(SQ_MINUS1, "0", 12), NotCertified)


def test_escape_sandwich_on_longer_strings():
    cert = escape_certificate(SQ35, "0", 5)
    for n in range(cert.level, cert.level + 5):
        for string in itertools.product(range(2), repeat=n):
            v = apply_string(SQ35, string, (0, 1))
            ratio = float(weil_height(v)) / string_degree(SQ35, string)
            assert cert.B1 - 1e-12 <= ratio <= cert.B2 + 1e-12


def test_tampered_certificate_rejected():
    cert = escape_certificate(SQ35, "0", 5)
    bad = EscapeCertificate(cert.level, cert.B_S, cert.witnesses[:-1], cert.B1, cert.B2, cert.h_P)
    assert not verify_escape_certificate(SQ35, "0", bad)


@pytest.mark.parametrize("cs,expected", [([3, 5], True), ([1], True), ([-1], False)])
def test_galois_escape_predicate(cs, expected):
    assert galois_escape_predicate(cs) is expected


@pytest.mark.parametrize("cs", [[3, 5], [1], [2, 7], [-3, 4]])
def test_escape_predicate_agrees_with_search(cs):
    fam = MeasuredFamily.from_polys([[c, 0, 1] for c in cs])
    if galois_escape_predicate(cs):
        assert isinstance(escape_certificate(fam, "0", 6), EscapeCertificate)


# total orbits


def test_closure_five_map_family():
    fam = load_family("families/five_map.json")
    res = total_orbit_closure(fam, "0")
    assert res.verdict == "Finite"
    assert res.affine_values() == {0, 1, -1}
    assert verify_closure(fam, res, "0")


def test_closure_sq1_certified_at_depth_three():
    res = total_orbit_closure(SQ1, "0")
    assert res.verdict == "InfiniteCertified"
    assert res.depth == 3
    assert res.witness_value == (5, 1)
    assert verify_closure(SQ1, res, "0")


def test_closure_fixed_point():
    res = total_orbit_closure(MeasuredFamily.from_polys([[0, 0, 1]]), "1")
    assert res.verdict == "Finite" and res.affine_values() == {1}


def test_closure_unknown_on_budget():
    res = total_orbit_closure(MeasuredFamily.from_polys([[0, 0, 1]]), "2", max_depth=3,
                              constants=None)
    # h(2) = ln 2 > B_S = 0 certifies at once
    assert res.verdict == "InfiniteCertified"
    fam = MeasuredFamily.from_polys([[0, 0, -2, 1]])  # x^3 - 2x^2, no closed-form constant
    res = total_orbit_closure(fam, "3", max_depth=3)
    assert res.verdict == "Unknown"


@pytest.mark.parametrize("cs", [[0, -1], [-1], [0, -2]])
def test_finite_closures_are_closed(cs):
    fam = MeasuredFamily.from_polys([[c, 0, 1] for c in cs])
    for P in ("0", "1", "-1"):
        res = total_orbit_closure(fam, P)
        if res.verdict == "Finite":
            assert verify_closure(fam, res, P)


# orbit counting


def test_orbit_count_escaping_orbit_below_start():
    tr = left_orbit(SQ1, FixedSequence([], tail=0), "3", 6)
    assert orbit_height_count(tr, B=0.5) == 0
    assert orbit_height_count(tr, B=math.log(3)) == 1


def test_orbit_count_powers_of_square():
    fam = MeasuredFamily.from_polys([[0, 0, 1]])
    tr = left_orbit(fam, FixedSequence([], tail=0), "3", 14)
    assert orbit_height_count(tr, B=LogExpr.ln(3) * 1024) == 11
    assert orbit_height_count(tr, B=1024 * math.log(3)) == 11


def test_orbit_count_trace_too_short():
    tr = left_orbit(SQ1, FixedSequence([], tail=0), "3", 3)
    with pytest.raises(TraceTooShort):
        orbit_height_count(tr, log_bound=50.0)


def test_slope_estimate_single_map():
    fam = MeasuredFamily.from_polys([[0, 0, 1]])
    tr = left_orbit(fam, FixedSequence([], tail=0), "3", 200, engine="log-approx")
    assert slope_estimate(tr) == pytest.approx(1 / math.log(2), rel=0.05)


# distinctness


@pytest.mark.parametrize("P,expected", [("3", False), ("9", True), ("1", False), ("0", False)])
def test_distinctness_property(P, expected):
    assert distinctness_property(SQ1, P) is expected


def test_distinct_points_when_property_holds():
    fam = SQ1_CUBE
    for seed in range(10):
        seq = [(seed >> k) & 1 for k in range(12)]
        tr = left_orbit(fam, FixedSequence(seq), "9", 12)
        pts = [s.point for s in tr.steps]
        assert len(set(pts)) == len(pts)


def test_quadratic_positivity_predicate():
    assert quadratic_positivity_predicate([1, 2, 3])["applicable"] is True
    assert quadratic_positivity_predicate([1, 2])["applicable"] is False
    with pytest.raises(ValueError):
        quadratic_positivity_predicate([1, 1, 2])


# degree independence


def test_degree_independence_p1_morphisms_exact():
    res = degree_independence(SQ1_CUBE)
    assert res.holds is True


def test_degree_independence_degree_one_map():
    res = degree_independence(MeasuredFamily.from_polys([[0, 0, 1], [1, 1]]))
    assert res.holds is False and res.counterexample == (1,)


def test_degree_independence_cremona_drops():
    from test_maps import CREMONA

    res = degree_independence(MeasuredFamily([CREMONA]))
    assert res.holds is False and res.counterexample == (0, 0) and res.checked_length == 2


def test_degree_independence_bounded_search_reports_cap():
    square = HomogMap(
        [[((2, 0, 0), 1)], [((0, 2, 0), 1)], [((0, 0, 2), 1)]], n=2
    )
    res = degree_independence(MeasuredFamily([square]), length_cap=4)
    assert res.holds is None and res.checked_length == 4
