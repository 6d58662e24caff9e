import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from ril.errors import SandwichInapplicable
from ril.heights import orbit_height_count
from ril.logexpr import LogExpr
from ril.maps import HomogMap, compose
from ril.monoid import (
    function_count_sandwich,
    lattice_count_simplex,
    multiplicative_independence,
    simplex_asymptotic,
)
from ril.random_model import FixedSequence, MeasuredFamily, left_orbit

from oracles import naive_lattice_count

LN2, LN3 = LogExpr.ln(2), LogExpr.ln(3)


# lattice counts


def test_single_weight():
    assert lattice_count_simplex([1.0], 3) == 4


def test_ln2_ln3_at_ln100():
    assert lattice_count_simplex([LN2, LN3], LogExpr.ln(100)) == 20
    brute = sum(1 for a in range(8) for b in range(6) if 2**a * 3**b <= 100)
    assert brute == 20


def test_negative_bound():
    assert lattice_count_simplex([1.0, 2.0], -1) == 0


def test_string_weights_accepted():
    assert lattice_count_simplex(["ln:2", "ln:3"], "ln:100") == 20


@pytest.mark.parametrize("bases,N", [((2, 3), 1000), ((2, 3, 5), 5000), ((6, 10, 15), 10**6), ((7,), 7**9)])
def test_exact_mode_matches_integer_brute_force(bases, N):
    weights = [LogExpr.ln(b) for b in bases]
    tops = [int(math.log(N, b)) + 2 for b in bases]
    brute = sum(
        1 for e in itertools.product(*(range(t) for t in tops))
        if math.prod(b**k for b, k in zip(bases, e)) <= N
    )
    assert lattice_count_simplex(weights, LogExpr.ln(N)) == brute


@settings(max_examples=80)
@given(
    st.lists(st.integers(2, 40).map(lambda k: k / 4), min_size=1, max_size=3),
    st.integers(0, 120).map(lambda k: k / 4),
)
def test_matches_naive_grid_dyadic(c, B):
    # quarter-integer weights and bounds make every tie exact in floats
    assert lattice_count_simplex(c, B) == naive_lattice_count(c, B)


@settings(max_examples=60)
@given(
    st.lists(st.floats(0.3, 6.0), min_size=1, max_size=3),
    st.floats(0.0, 30.0),
)
def test_matches_naive_grid_random(c, B):
    # the oracle's 1e-9 tie margin only matters on measure-zero boundaries
    count = lattice_count_simplex(c, B)
    naive = naive_lattice_count(c, B)
    strict = naive_lattice_count(c, B - 1e-8) if B >= 1e-8 else 1
    assert strict <= count <= naive


@settings(max_examples=40)
@given(st.lists(st.floats(0.3, 4.0), min_size=1, max_size=3), st.floats(0, 20), st.floats(0, 5))
def test_monotone_in_bound(c, B, dB):
    assert lattice_count_simplex(c, B) <= lattice_count_simplex(c, B + dB)


# asymptotic


def test_asymptotic_single_weight():
    assert simplex_asymptotic([1.0], 10) == 10


def test_asymptotic_ln2_ln3():
    a = simplex_asymptotic([LN2, LN3], 50)
    assert a == pytest.approx(2500 / (2 * math.log(2) * math.log(3)), rel=1e-14)
    assert a == pytest.approx(1641.6, abs=0.2)  # 1641.497...


def test_asymptotic_ratio_at_50():
    ratio = lattice_count_simplex([LN2, LN3], 50) / simplex_asymptotic([LN2, LN3], 50)
    assert 0.9 <= ratio <= 1.1


# multiplicative independence


@pytest.mark.parametrize("d,expected", [
    ((2, 3), True), ((2, 4), False), ((6, 10, 15), True), ((4, 8), False), ((6, 12, 18), False),
    ((2, 3, 5, 7), True), ((2, 1), False),
])
def test_multiplicative_independence(d, expected):
    assert multiplicative_independence(d) is expected


@settings(max_examples=30)
@given(st.lists(st.integers(2, 60), min_size=2, max_size=3))
def test_dependence_found_by_small_search(d):
    # an integer relation with |e_i| <= 6 must make the rank check report dependence
    rel = any(
        any(e) and math.prod(x ** k for x, k in zip(d, e) if k > 0)
        == math.prod(x ** -k for x, k in zip(d, e) if k < 0)
        for e in itertools.product(range(-6, 7), repeat=len(d))
    )
    if rel:
        assert multiplicative_independence(d) is False


# sandwich


def test_sandwich_square_cube_at_five():
    fam = MeasuredFamily.from_polys([[0, 0, 1], [0, 0, 0, 1]])
    res = function_count_sandwich(fam, "5", log_bound=12)
    assert res.mode == "free-commutative"
    assert res.lower <= res.middle <= res.upper
    # h(f(5)) = deg(f) ln 5 for monomials: count 2^a 3^b ln 5 <= e^12
    brute = sum(1 for a in range(30) for b in range(20) if 2**a * 3**b * math.log(5) <= math.exp(12))
    assert res.middle == brute


def test_sandwich_square_cube_bfs_agrees():
    fam = MeasuredFamily.from_polys([[0, 0, 1], [0, 0, 0, 1]])
    free = function_count_sandwich(fam, "5", log_bound=8)
    bfs = function_count_sandwich(fam, "5", log_bound=8, mode="explicit-bfs", length_cap=40)
    assert (free.lower, free.middle, free.upper) == (bfs.lower, bfs.middle, bfs.upper)


def test_sandwich_single_generator_matches_orbit_count():
    fam = MeasuredFamily.from_polys([[0, 0, 1]])
    B = LN3 * 1024
    res = function_count_sandwich(fam, "3", B)
    tr = left_orbit(fam, FixedSequence([], tail=0), "3", 14)
    assert res.middle == orbit_height_count(tr, B=B) == 11


def test_sandwich_inapplicable_at_height_zero():
    fam = MeasuredFamily.from_polys([[0, 0, 1], [0, 0, 0, 1]])
    with pytest.raises(SandwichInapplicable):
        function_count_sandwich(fam, "1", log_bound=10)


@pytest.mark.parametrize("cs,P,L", [([3, 5], "20", 5), ([1, -1], "9", 6), ([1], "7", 8)])
def test_sandwich_ordering_explicit(cs, P, L):
    fam = MeasuredFamily.from_polys([[c, 0, 1] for c in cs])
    res = function_count_sandwich(fam, P, log_bound=L)
    assert res.mode == "explicit-bfs"
    assert res.middle is not None
    assert res.lower <= res.middle <= res.upper


def test_sandwich_cap_reports_unknown():
    fam = MeasuredFamily.from_polys([[3, 0, 1], [5, 0, 1]])
    res = function_count_sandwich(fam, "20", log_bound=5, length_cap=2)
    assert res.middle is None and res.to_json()["middle"] == "Unknown"


def test_weighted_length_is_intrinsic():
    sq, cube = HomogMap.from_poly([0, 0, 1]), HomogMap.from_poly([0, 0, 0, 1])
    for word in itertools.product([sq, cube], repeat=5):
        f = word[0]
        for g in word[1:]:
            f = compose(g, f)
        assert math.log(f.degree) == pytest.approx(sum(math.log(g.degree) for g in word), rel=1e-14)
