import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ril import _kernels_py, kernels
from ril.errors import EngineUnsupported, ExactCapExceeded, NTooSmall, ZeroVariance
from ril.maps import ProjPoint
from ril.random_model import (
    FixedSequence,
    MeasuredFamily,
    dynamical_degree,
    left_orbit,
    lil_statistic,
    monte_carlo_report,
    right_orbit,
    sample_sequence,
    weil_height,
)

SQ_CUBE = MeasuredFamily.from_polys([[0, 0, 1], [0, 0, 0, 1]])
ASYM = MeasuredFamily.from_polys([[0, -1, 1], [0, 0, 3]])  # x^2 - x, 3x^2


# weil_height


def test_height_unit_coordinates():
    assert weil_height(ProjPoint.parse("[1:1]")) == 0.0


def test_height_coprime_max():
    assert weil_height(ProjPoint.parse("[2:3]")) == pytest.approx(math.log(3), abs=0, rel=1e-15)


def test_height_affine_fraction():
    P = ProjPoint.from_affine(Fraction(3, 2))
    assert weil_height(P).max_abs == 3
    assert weil_height(P) == pytest.approx(math.log(3), rel=1e-15)


# dynamical_degree


def test_dynamical_degree_single_square():
    assert dynamical_degree(MeasuredFamily.from_polys([[0, 0, 1]])) == pytest.approx(math.log(2))


def test_dynamical_degree_uniform_square_cube():
    assert math.exp(dynamical_degree(SQ_CUBE)) == pytest.approx(math.sqrt(6), rel=1e-14)


def test_dynamical_degree_weighted():
    fam = MeasuredFamily.from_polys([[0, 0, 1], [0, 0, 0, 1]], [Fraction(1, 3), Fraction(2, 3)])
    assert math.exp(dynamical_degree(fam)) == pytest.approx(2 ** (1 / 3) * 3 ** (2 / 3), rel=1e-14)


def test_family_rejects_bad_weights():
    with pytest.raises(ValueError):
        MeasuredFamily.from_polys([[0, 0, 1], [0, 0, 0, 1]], [Fraction(1, 2), Fraction(1, 3)])
    with pytest.raises(ValueError):
        MeasuredFamily.from_polys([[0, 0, 1], [0, 0, 0, 1]], [1, 0])


# sampling


def test_degenerate_weights_give_constant_stream():
    s = sample_sequence([1, 0], seed=7, n_max=1000)
    assert set(s.prefix(1000).tolist()) == {0}


def test_seed_replay_is_identical():
    a = sample_sequence(SQ_CUBE, 42, 5000).prefix(5000)
    b = sample_sequence(SQ_CUBE, 42, 5000).prefix(5000)
    assert np.array_equal(a, b)
    c = sample_sequence(SQ_CUBE, 43, 5000).prefix(5000)
    assert not np.array_equal(a, c)


def test_lazy_extension_matches_bulk_prefix():
    s = sample_sequence(SQ_CUBE, 11, 10)
    piecewise = [s[i] for i in range(9000)]
    assert piecewise == sample_sequence(SQ_CUBE, 11, 10).prefix(9000).tolist()


@pytest.mark.parametrize("weights", [
    [Fraction(1, 2), Fraction(1, 2)],
    [Fraction(1, 3), Fraction(2, 3)],
    [Fraction(1, 10), Fraction(3, 10), Fraction(6, 10)],
])
def test_empirical_frequencies_within_three_sigma(weights):
    n = 10**6
    idx = sample_sequence(weights, 2024, n).prefix(n)
    counts = np.bincount(idx, minlength=len(weights))
    for i, w in enumerate(weights):
        p = float(w)
        sd = math.sqrt(n * p * (1 - p))
        assert abs(counts[i] - n * p) <= 3 * sd, (i, counts[i], n * p)


def test_log_degree_mean_law_of_large_numbers():
    fam = MeasuredFamily.from_polys([[0, 0, 1], [0, 0, 0, 1], [0, 0, 0, 0, 0, 1]],
                                    [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)])
    n = 10**6
    idx = sample_sequence(fam, 99, n).prefix(n)
    ld = np.array(fam.log_degrees)
    mean = float(ld[idx].mean())
    sigma = math.sqrt(fam.sigma_sq)
    assert abs(mean - fam.log_delta) <= 4 * sigma / 1000


def test_sample_sequence_rejects_zero_length():
    with pytest.raises(ValueError):
        sample_sequence(SQ_CUBE, 1, 0)


# orbits


def test_right_orbit_constant_x2_plus_1():
    fam = MeasuredFamily.from_polys([[1, 0, 1]])
    tr = right_orbit(fam, FixedSequence([], tail=0), "0", 3)
    assert [st.point for st in tr.steps] == [(0, 1), (1, 1), (2, 1), (5, 1)]
    assert [st.log_height for st in tr.steps[1:]] == [0.0, math.log(2), math.log(5)]


def test_right_orbit_collapses_when_inner_map_hits_fixed_point():
    # theta_4 = x^2 - x sends 1 to 0, which every map fixes
    tr = right_orbit(ASYM, FixedSequence([1, 1, 1, 0], tail=1), "1", 4)
    assert tr.steps[3].log_height > 0
    assert tr.steps[4].log_height == 0.0
    assert tr.steps[4].point == (0, 1)


def test_left_orbit_stays_at_zero_after_first_step():
    tr = left_orbit(ASYM, FixedSequence([0], tail=1), "1", 10)
    assert all(st.log_height == 0.0 for st in tr.steps[1:])


def test_exact_cap_enforced():
    with pytest.raises(ExactCapExceeded):
        left_orbit(SQ_CUBE, sample_sequence(SQ_CUBE, 1, 30), "3", 30, engine="exact")


def test_log_engine_rejects_rational_coefficients():
    fam = MeasuredFamily.from_polys([[Fraction(1, 2), 0, 1]])
    with pytest.raises(EngineUnsupported):
        left_orbit(fam, FixedSequence([], tail=0), "3", 5, engine="log-approx")


def test_trace_csv_columns():
    tr = left_orbit(SQ_CUBE, sample_sequence(SQ_CUBE, 5, 4), "3", 4)
    header = tr.to_csv().splitlines()[0]
    assert header == "n,log_deg,log_height,engine,error_bound"


def test_degrees_agree_between_directions():
    for seed in range(5):
        s = sample_sequence(SQ_CUBE, seed, 12)
        lt = left_orbit(SQ_CUBE, s, "2", 12)
        rt = right_orbit(SQ_CUBE, s, "2", 12)
        assert [st.degree for st in lt.steps] == [st.degree for st in rt.steps]


@settings(max_examples=30)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=12), st.integers(2, 50))
def test_monomial_heights_are_degree_times_height(seq, x):
    for fn in (left_orbit, right_orbit):
        tr = fn(SQ_CUBE, FixedSequence(seq), str(x), len(seq))
        for step in tr.steps:
            assert step.point[0] == x ** step.degree


@settings(max_examples=25)
@given(
    st.lists(st.tuples(st.sampled_from([2, 3]), st.integers(-3, 3)), min_size=1, max_size=3),
    st.integers(2, 6),
    st.integers(0, 2**32),
    st.sampled_from(["left", "right"]),
)
def test_engine_agreement(maps, x, seed, direction):
    fam = MeasuredFamily.from_polys([[c] + [0] * (d - 1) + [1] for d, c in maps])
    n = 11
    fn = left_orbit if direction == "left" else right_orbit
    s = sample_sequence(fam, seed, n)
    exact = fn(fam, s, str(x), n, engine="exact")
    approx = fn(fam, s, str(x), n, engine="log-approx")
    for a, b in zip(exact.steps, approx.steps):
        assert a.degree == b.degree
        if b.engine == "exact":
            assert a.log_height == b.log_height
        else:
            assert abs(a.log_height - b.log_height) <= b.error_bound
            assert b.error_bound <= 1e-9 * (1 + a.log_height)


# LIL statistic


def test_lil_zero_variance():
    fam = MeasuredFamily.from_polys([[0, 0, 1], [1, 0, 1]])
    with pytest.raises(ZeroVariance):
        lil_statistic(fam, 10.0, 100)


def test_lil_n_too_small():
    with pytest.raises(NTooSmall):
        lil_statistic(SQ_CUBE, 10 * math.log(3), 10)


def test_lil_extreme_path():
    n = 100
    sigma = (math.log(3) - math.log(2)) / 2
    expected = n * (math.log(3) - math.log(6) / 2) / (sigma * math.sqrt(2 * n * math.log(math.log(n))))
    up, low = lil_statistic(SQ_CUBE, n * math.log(3), n)
    assert up == pytest.approx(expected, rel=1e-12)
    assert low == -up


# monte carlo


def test_monte_carlo_single_map_degree_root():
    fam = MeasuredFamily.from_polys([[0, 0, 1]])
    rep = monte_carlo_report(fam, "3", trials=1, depth=15, engine="exact", seed=1,
                             direction="both")
    assert rep["per_trial"][0]["deg_root"] == 2.0


def test_monte_carlo_deterministic():
    fam = MeasuredFamily.from_polys([[1, 0, 1], [-1, 0, 0, 1]])
    a = monte_carlo_report(fam, "3", trials=6, depth=60, seed=42, threads=3)
    b = monte_carlo_report(fam, "3", trials=6, depth=60, seed=42, threads=1)
    assert a == b


def test_monte_carlo_ratios_within_tate_bounds():
    # x^2 + 1, x^3 - 1: C(x^d + c) = ln|2c| = ln 2, B_S = ln 2 / (2 - 1)
    fam = MeasuredFamily.from_polys([[1, 0, 1], [-1, 0, 0, 1]])
    B_S = math.log(2)
    hP = math.log(5)
    rep = monte_carlo_report(fam, "5", trials=10, depth=12, engine="exact", seed=3,
                             direction="both")
    for r in rep["per_trial"]:
        for d in ("left", "right"):
            assert hP - B_S - 1e-12 <= r[f"{d}_ratio_min"]
            assert r[f"{d}_ratio_max"] <= hP + B_S + 1e-12


def test_monte_carlo_degree_root_near_sqrt6():
    fam = MeasuredFamily.from_polys([[1, 0, 1], [-1, 0, 0, 1]])
    rep = monte_carlo_report(fam, None, trials=100, depth=2000, seed=42, direction="none")
    assert abs(rep["summary"]["deg_root"]["mean"] / math.sqrt(6) - 1) < 0.01


# kernels


@pytest.mark.skipif(kernels.IMPLEMENTATION == _kernels_py.IMPLEMENTATION,
                    reason="compiled kernels not built")
def test_compiled_kernels_match_fallback():
    th = SQ_CUBE.thresholds
    ld = SQ_CUBE.log_degrees
    a, sa = kernels.sample_indices(12345, th, 50000)
    b, sb = _kernels_py.sample_indices(12345, th, 50000)
    assert np.array_equal(a, b) and sa == sb
    ca, _ = kernels.degree_walk_final(7, th, ld, 200000)
    cb, _ = _kernels_py.degree_walk_final(7, th, ld, 200000)
    assert list(ca) == list(cb)
    ea = kernels.lil_walk_extrema(9, th, ld, 100000, SQ_CUBE.log_delta, math.sqrt(SQ_CUBE.sigma_sq))
    eb = _kernels_py.lil_walk_extrema(9, th, ld, 100000, SQ_CUBE.log_delta, math.sqrt(SQ_CUBE.sigma_sq))
    assert ea[2:4] == eb[2:4]
    assert ea[0] == pytest.approx(eb[0], rel=1e-12) and ea[1] == pytest.approx(eb[1], rel=1e-12)
    state = (math.log(math.log(1e30)), -math.inf, 1, 2.0**-50, 0.0)
    seq = np.arange(300) % 2
    args = (seq, [2, 3], [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], [0.0, 0.0], [1, 1])
    la = kernels.log_chain(state, *args)
    lb = _kernels_py.log_chain(state, *args)
    assert la[0] == pytest.approx(lb[0], rel=1e-12)
    assert la[3] == pytest.approx(lb[3], rel=1e-9)


def test_mix64_reference_values():
    # SplitMix64 output for state 0 after one increment
    assert _kernels_py.mix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF
    assert kernels.mix64(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF
