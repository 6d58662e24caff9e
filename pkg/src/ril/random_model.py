"""Measured families, seeded sampling, orbit engines, and degree/height statistics.

PRNG: SplitMix64 with 64-bit state. A sample seeded with ``seed`` starts in
state ``seed``; each draw advances the state by 0x9E3779B97F4A7C15 and mixes
it into a 64-bit word u. The map index is the number of thresholds
t_i = ceil(F_i * 2^64) that are <= u, where F_i is the exact cumulative
weight of maps 0..i (thresholds stop before the last positively weighted
map, so trailing zero weights are never drawn). Trial k of a seeded Monte
Carlo run uses seed mix64(seed + 0x9E3779B97F4A7C15 * (k + 1)).
"""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from ._zz import ZZ, int_log
from .arith import to_rational
from .errors import (
    DimensionMismatch,
    EngineUnsupported,
    ExactCapExceeded,
    IndeterminatePoint,
    NTooSmall,
    ZeroVariance,
)
from .maps import (
    HomogMap,
    ProjPoint,
    as_homog,
    compose,
    evaluate_raw,
    is_morphism_p1,
)

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
DEFAULT_EXACT_CAP = 20
LIL_MIN_N = 16


def trial_seed(seed: int, k: int) -> int:
    return kernels.mix64((seed + GOLDEN * (k + 1)) & MASK64)


def cdf_thresholds(weights: Sequence[Fraction]) -> np.ndarray:
    """uint64 thresholds for inverse-CDF sampling against exact weights."""
    weights = [Fraction(w) for w in weights]
    last = max(i for i, w in enumerate(weights) if w > 0)
    out = []
    cum = Fraction(0)
    for i in range(last):
        cum += weights[i]
        t = -((-cum.numerator << 64) // cum.denominator)  # ceil(cum * 2^64)
        out.append(min(t, MASK64))
    return np.array(out, dtype=np.uint64)


# heights


class Height(float):
    """Natural-log Weil height carrying the exact max |coordinate|."""

    max_abs: int

    def __new__(cls, max_abs):
        max_abs = abs(max_abs)
        value = 0.0 if max_abs <= 1 else int_log(max_abs)
        obj = super().__new__(cls, value)
        obj.max_abs = max_abs
        return obj


def weil_height(P) -> Height:
    """ln max|x_i| over coprime integer coordinates."""
    coords = P.coords if isinstance(P, ProjPoint) else P
    return Height(max(abs(c) for c in coords))


# families


@dataclass(frozen=True, eq=False)
class MeasuredFamily:
    """Maps with exact positive weights summing to 1.

    ``height_constants`` optionally carries user-supplied C(phi) values (as
    strings like ``"ln:2"`` or decimal floats) aligned with ``maps``.
    """

    maps: tuple
    weights: tuple
    height_constants: tuple = None
    homog: tuple = field(init=False)

    def __init__(self, maps, weights=None, height_constants=None):
        maps = tuple(maps)
        if not maps:
            raise ValueError("a family needs at least one map")
        if weights is None:
            weights = [Fraction(1, len(maps))] * len(maps)
        weights = tuple(to_rational(w) for w in weights)
        if len(weights) != len(maps):
            raise ValueError("one weight per map is required")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be strictly positive")
        if sum(weights) != 1:
            raise ValueError(f"weights sum to {sum(weights)}, not 1")
        homog = tuple(as_homog(m) for m in maps)
        dims = {h.n for h in homog}
        if len(dims) != 1:
            raise DimensionMismatch("all maps must act on the same P^N")
        if height_constants is not None:
            height_constants = tuple(height_constants)
            if len(height_constants) != len(maps):
                raise ValueError("height_constants must align with maps")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "height_constants", height_constants)
        object.__setattr__(self, "homog", homog)

    @classmethod
    def uniform(cls, maps, **kw) -> "MeasuredFamily":
        return cls(maps, None, **kw)

    @classmethod
    def from_polys(cls, polys, weights=None, **kw) -> "MeasuredFamily":
        """Family of P^1 polynomial maps given by affine coefficient lists."""
        return cls([HomogMap.from_poly(p) for p in polys], weights, **kw)

    @property
    def s(self) -> int:
        return len(self.maps)

    @property
    def dim(self) -> int:
        return self.homog[0].n

    @property
    def degrees(self) -> list:
        return [h.degree for h in self.homog]

    @property
    def log_degrees(self) -> list:
        return [math.log(d) for d in self.degrees]

    @property
    def log_delta(self) -> float:
        return sum(float(w) * ld for w, ld in zip(self.weights, self.log_degrees))

    @property
    def sigma_sq(self) -> float:
        mu = self.log_delta
        return sum(float(w) * (ld - mu) ** 2 for w, ld in zip(self.weights, self.log_degrees))

    @property
    def thresholds(self) -> np.ndarray:
        return cdf_thresholds(self.weights)

    def all_morphisms(self) -> bool:
        """P^1 morphism check by resultant; N >= 2 families are not certified."""
        if self.dim != 1:
            return False
        return all(is_morphism_p1(h) for h in self.homog)


def dynamical_degree(family: MeasuredFamily) -> float:
    """ln delta = sum nu(phi) ln deg(phi)."""
    return family.log_delta


# sampling


class IndexSampler:
    """Inverse-CDF index sampler; zero weights are allowed here."""

    def __init__(self, weights):
        weights = [to_rational(w) for w in weights]
        if any(w < 0 for w in weights) or sum(weights) != 1:
            raise ValueError("weights must be nonnegative and sum to 1")
        self.weights = weights
        self.thresholds = cdf_thresholds(weights)


class SequenceSample:
    """Lazily generated i.i.d. index stream; ``sample[i]`` is the index of theta_(i+1)."""

    BLOCK = 4096

    def __init__(self, weights_or_family, seed: int, n_max: int | None = None):
        if isinstance(weights_or_family, MeasuredFamily):
            self.thresholds = weights_or_family.thresholds
        else:
            self.thresholds = IndexSampler(weights_or_family).thresholds
        self.seed = int(seed) & MASK64
        self.n_max = n_max
        self._state = self.seed
        self._buf = np.empty(0, dtype=np.int64)

    def _extend(self, n: int):
        while len(self._buf) < n:
            k = max(self.BLOCK, n - len(self._buf))
            idx, self._state = kernels.sample_indices(self._state, self.thresholds, k)
            self._buf = np.concatenate([self._buf, idx])

    def prefix(self, n: int) -> np.ndarray:
        self._extend(n)
        return self._buf[:n]

    def __getitem__(self, i: int) -> int:
        self._extend(i + 1)
        return int(self._buf[i])


class FixedSequence:
    """A user-chosen index sequence with the SequenceSample interface."""

    def __init__(self, indices, tail: int | None = None):
        self.indices = [int(i) for i in indices]
        self.tail = tail

    def prefix(self, n: int) -> np.ndarray:
        return np.array([self[i] for i in range(n)], dtype=np.int64)

    def __getitem__(self, i: int) -> int:
        if i < len(self.indices):
            return self.indices[i]
        if self.tail is None:
            raise IndexError(f"fixed sequence has only {len(self.indices)} entries")
        return self.tail


def sample_sequence(family_or_weights, seed: int, n_max: int) -> SequenceSample:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return SequenceSample(family_or_weights, seed, n_max)


# traces


@dataclass
class HeightStep:
    n: int
    log_deg: float
    log_height: float  # h(gamma_n(P)), itself a natural log
    loglog_height: float  # ln h, -inf when h = 0
    engine: str
    error_bound: float
    degree: int | None = None
    point: tuple | None = None  # canonical coordinates, exact steps only


@dataclass
class HeightTrace:
    direction: str
    engine: str
    indices: list
    steps: list

    def heights(self) -> list:
        return [s.log_height for s in self.steps]

    def step(self, n: int) -> HeightStep:
        return self.steps[n]

    def to_csv(self) -> str:
        lines = ["n,log_deg,log_height,engine,error_bound"]
        for s in self.steps:
            lines.append(f"{s.n},{s.log_deg!r},{s.log_height!r},{s.engine},{s.error_bound!r}")
        return "\n".join(lines) + "\n"


# log-space engine


class LogEngine:
    """Hybrid exact/log-space height propagation for integer polynomial maps on P^1.

    Values are propagated exactly until |X| >= K*|Y| and |X| > K, then in
    log-log coordinates with an accumulated absolute error bound. Exactness of
    the switch-over relies on no cancellation between the coordinates, which
    holds for integer polynomial maps at integral points and for maps with
    leading coefficient +-1 at any rational point.
    """

    def __init__(self, family: MeasuredFamily):
        if family.dim != 1:
            raise EngineUnsupported("log-approx engine supports P^1 only")
        polys = []
        for h in family.homog:
            p = h.polynomial_coeffs()
            if p is None or any(c.denominator != 1 for c in p):
                raise EngineUnsupported(
                    f"log-approx engine needs integer polynomial maps, got {h.describe()}"
                )
            polys.append([int(c) for c in p])
        self.polys = polys
        self.monic = all(abs(p[-1]) == 1 for p in polys)
        dmax = max(len(p) - 1 for p in polys)
        self.degs = np.array([len(p) - 1 for p in polys], dtype=np.int32)
        self.ratio_table = np.zeros((len(polys), dmax), dtype=np.float64)
        spread = 0.0
        for j, p in enumerate(polys):
            d = len(p) - 1
            for i in range(d):
                self.ratio_table[j, i] = p[i] / p[d]
            spread = max(spread, sum(abs(p[i] / p[d]) for i in range(d)))
        self.log_leads = np.array([math.log(abs(p[-1])) for p in polys], dtype=np.float64)
        self.lead_signs = np.array([1 if p[-1] > 0 else -1 for p in polys], dtype=np.int32)
        self.K = max(2**32, int(4 * spread) + 1)
        self._memo: dict = {}

    def check_point(self, coords):
        if abs(coords[1]) != 1 and not self.monic:
            raise EngineUnsupported(
                "log-approx engine needs an integral point when a map is not monic"
            )

    def ready(self, coords) -> bool:
        x, y = coords
        return y != 0 and abs(x) > self.K and abs(x) >= self.K * abs(y)

    def exact_step(self, map_homog, j, coords):
        if max(abs(coords[0]), abs(coords[1])).bit_length() > 256:
            return evaluate_raw(map_homog, coords)
        key = (int(coords[0]), int(coords[1]), j)
        hit = self._memo.get(key)
        if hit is None:
            hit = evaluate_raw(map_homog, coords)
            self._memo[key] = hit
        return hit

    @staticmethod
    def to_log_state(coords):
        x, y = coords
        lx = int_log(x)
        ly = int_log(y) if abs(y) > 1 else 0.0
        lam_y = math.log(ly) if ly > 0 else -math.inf
        sgn = 1 if (x > 0) == (y > 0) else -1
        return (math.log(lx), lam_y, sgn, 2.0**-50, 2.0**-50 if ly > 0 else 0.0)

    def chain(self, state, seq, record=False):
        return kernels.log_chain(
            state, np.asarray(seq, dtype=np.int64), self.degs, self.ratio_table,
            self.log_leads, self.lead_signs, record,
        )


def _log_state_height(state):
    lam = state[0]
    if lam > 700.0:
        return math.inf, lam, math.inf
    h = math.exp(lam)
    return h, lam, h * math.expm1(state[3])


def _exact_step_record(n, log_deg, degree, coords):
    h = weil_height(coords)
    return HeightStep(
        n=n,
        log_deg=log_deg,
        log_height=float(h),
        loglog_height=math.log(h) if h > 0 else -math.inf,
        engine="exact",
        error_bound=0.0,
        degree=degree,
        point=tuple(coords),
    )


def _log_step_record(n, log_deg, degree, state):
    h, lam, err = _log_state_height(state)
    return HeightStep(n, log_deg, h, lam, "log-approx", err, degree, None)


def _degree_data(family, idx):
    """Exact degrees and log-degree partial sums (from integer counts) of the prefix."""
    degs = family.degrees
    logd = family.log_degrees
    counts = [0] * family.s
    out_deg = [1]
    out_log = [0.0]
    d = 1
    for j in idx:
        counts[j] += 1
        d *= degs[j]
        out_deg.append(d)
        out_log.append(math.fsum(c * l for c, l in zip(counts, logd)))
    return out_deg, out_log


def _composite_degrees(family, idx, direction):
    """Degrees of the actual composites, for families that are not morphisms."""
    maps = family.homog
    out = [1]
    if direction == "left":
        g = None
        for j in idx:
            g = maps[j] if g is None else compose(maps[j], g)
            out.append(g.degree)
    else:
        for n in range(1, len(idx) + 1):
            g = maps[idx[n - 1]]
            for j in reversed(idx[: n - 1]):
                g = compose(maps[j], g)
            out.append(g.degree)
    return out


def _orbit(family, sample, P, n_max, engine, direction, exact_cap):
    if engine not in ("exact", "log-approx"):
        raise ValueError(f"unknown engine {engine!r}")
    if not isinstance(P, ProjPoint):
        P = ProjPoint.parse(P) if isinstance(P, str) else ProjPoint.from_affine(P)
    if P.dim != family.dim:
        raise DimensionMismatch(f"point in P^{P.dim}, family on P^{family.dim}")
    if engine == "exact" and n_max > exact_cap:
        raise ExactCapExceeded(f"exact engine capped at n={exact_cap}, asked for {n_max}")
    idx = [int(j) for j in sample.prefix(n_max)]
    if family.all_morphisms():
        degrees, log_degs = _degree_data(family, idx)
    else:
        degrees = _composite_degrees(family, idx, direction)
        log_degs = [math.log(d) for d in degrees]
    maps = family.homog
    start = tuple(ZZ(c) for c in P.coords)
    trace = HeightTrace(direction, engine, idx, [_exact_step_record(0, 0.0, 1, start)])
    eng = None
    if engine == "log-approx":
        eng = LogEngine(family)
        eng.check_point(P.coords)

    def step_exact(j, coords, n):
        try:
            if eng is not None:
                return eng.exact_step(maps[j], j, coords)
            return evaluate_raw(maps[j], coords)
        except IndeterminatePoint as exc:
            raise IndeterminatePoint(
                f"orbit undefined at step {n}: {exc}", step=n, partial=trace
            ) from None

    if direction == "left":
        coords = start
        for n in range(1, n_max + 1):
            j = idx[n - 1]
            if eng is not None and eng.ready(coords):
                state = eng.to_log_state(coords)
                states = eng.chain(state, idx[n - 1 :], record=True)
                for k, st in enumerate(states):
                    m = n + k
                    trace.steps.append(_log_step_record(m, log_degs[m], degrees[m], st))
                return trace
            coords = step_exact(j, coords, n)
            trace.steps.append(_exact_step_record(n, log_degs[n], degrees[n], coords))
        return trace

    for n in range(1, n_max + 1):
        # gamma_n^+ = theta_1 o ... o theta_n: apply theta_n first
        coords = start
        record = None
        for pos in range(n, 0, -1):
            if eng is not None and eng.ready(coords):
                state = eng.to_log_state(coords)
                state = eng.chain(state, idx[pos - 1 :: -1])
                record = _log_step_record(n, log_degs[n], degrees[n], state)
                break
            coords = step_exact(idx[pos - 1], coords, n)
        if record is None:
            record = _exact_step_record(n, log_degs[n], degrees[n], coords)
        trace.steps.append(record)
    return trace


def left_orbit(family, sample, P, n_max, engine="exact", exact_cap=DEFAULT_EXACT_CAP) -> HeightTrace:
    """Heights of gamma_n^-(P) = theta_n o ... o theta_1 (P), computed incrementally."""
    return _orbit(family, sample, P, n_max, engine, "left", exact_cap)


def right_orbit(family, sample, P, n_max, engine="exact", exact_cap=DEFAULT_EXACT_CAP) -> HeightTrace:
    """Heights of gamma_n^+(P) = theta_1 o ... o theta_n (P).

    Each n is recomputed from P inward-out, so the cost is O(n_max^2) map
    applications; there is no incremental structure to exploit.
    """
    return _orbit(family, sample, P, n_max, engine, "right", exact_cap)


# statistics


def lil_statistic(family: MeasuredFamily, source, n: int):
    """(X_n, -X_n) for a degree walk value or a height trace.

    ``source`` is either the log-degree ln deg(gamma_n) (a number) or a
    HeightTrace, in which case ln h(gamma_n(P)) replaces the log-degree.
    """
    sigma_sq = family.sigma_sq
    if sigma_sq <= 0.0:
        raise ZeroVariance("log-degree variance is zero")
    if n < LIL_MIN_N:
        raise NTooSmall(f"n={n} < {LIL_MIN_N}: ln ln n must be positive")
    if isinstance(source, HeightTrace):
        value = source.steps[n].loglog_height
    else:
        value = float(source)
    x = (value - n * family.log_delta) / (math.sqrt(sigma_sq) * math.sqrt(2 * n * math.log(math.log(n))))
    return x, -x


def lil_degree_extrema(family: MeasuredFamily, seed: int, n_max: int, n_min: int = LIL_MIN_N):
    """max and min of the degree-walk statistic over n_min <= n <= n_max.

    Returns a dict with the extremes and where they occur.
    """
    sigma_sq = family.sigma_sq
    if sigma_sq <= 0.0:
        raise ZeroVariance("log-degree variance is zero")
    if n_min < LIL_MIN_N:
        raise NTooSmall(f"n_min={n_min} < {LIL_MIN_N}")
    hi, lo, arg_hi, arg_lo, _ = kernels.lil_walk_extrema(
        int(seed) & MASK64, family.thresholds, family.log_degrees, int(n_max),
        family.log_delta, math.sqrt(sigma_sq), int(n_min),
    )
    return {"max": hi, "min": lo, "argmax": arg_hi, "argmin": arg_lo, "max_abs": max(hi, -lo)}


def degree_walk(family: MeasuredFamily, seed: int, n: int) -> float:
    """ln deg(gamma_n) along the sampled sequence (from exact integer counts)."""
    counts, _ = kernels.degree_walk_final(
        int(seed) & MASK64, family.thresholds, family.log_degrees, int(n)
    )
    return math.fsum(int(c) * ld for c, ld in zip(counts, family.log_degrees))


def thread_count() -> int:
    v = os.environ.get("RIL_THREADS")
    if v:
        return max(1, int(v))
    return min(8, os.cpu_count() or 1)


def _summary(values):
    vals = [v for v in values if v is not None and math.isfinite(v)]
    if not vals:
        return None
    q = np.quantile(np.array(vals), [0.05, 0.25, 0.5, 0.75, 0.95]).tolist()
    return {
        "mean": statistics.fmean(vals),
        "median": statistics.median(vals),
        "min": min(vals),
        "max": max(vals),
        "q05": q[0], "q25": q[1], "q75": q[3], "q95": q[4],
    }


def _run_trial(family, P, depth, engine, direction, seed, k, exact_cap):
    s = trial_seed(seed, k)
    out = {"trial": k, "seed": s}
    if direction == "none" and not family.all_morphisms():
        idx = [int(j) for j in SequenceSample(family, s).prefix(depth)]
        out["deg_root"] = _composite_degrees(family, idx, "left")[-1] ** (1.0 / depth)
        return out
    if direction == "none":
        w = degree_walk(family, s, depth)
        out["deg_root"] = math.exp(w / depth)
        if family.sigma_sq > 0 and depth >= LIL_MIN_N:
            ext = lil_degree_extrema(family, s, depth)
            out["lil_max"] = ext["max"]
            out["lil_min"] = ext["min"]
        return out
    sample = SequenceSample(family, s)
    dirs = ["left", "right"] if direction == "both" else [direction]
    for dname in dirs:
        fn = left_orbit if dname == "left" else right_orbit
        tr = fn(family, sample, P, depth, engine, exact_cap)
        last = tr.steps[-1]
        out["deg_root"] = math.exp(last.log_deg / depth)
        out[f"{dname}_height_root"] = (
            math.exp(last.loglog_height / depth) if last.log_height > 0 else 0.0
        )
        ratios = [
            st.log_height / math.exp(st.log_deg) for st in tr.steps[1:] if st.log_deg < 700
        ]
        if ratios:
            out[f"{dname}_ratio_min"] = min(ratios)
            out[f"{dname}_ratio_max"] = max(ratios)
            out[f"{dname}_ratio_last"] = ratios[-1]
        out[f"{dname}_max_error_bound"] = max(st.error_bound for st in tr.steps)
        if family.sigma_sq > 0:
            xs = [
                lil_statistic(family, st.log_deg, st.n)[0]
                for st in tr.steps if st.n >= LIL_MIN_N
            ]
            if xs:
                out["lil_max"] = max(xs)
                out["lil_min"] = min(xs)
    return out


def monte_carlo_report(
    family: MeasuredFamily,
    P,
    trials: int,
    depth: int,
    engine: str = "log-approx",
    seed: int = 0,
    direction: str = "right",
    exact_cap: int = DEFAULT_EXACT_CAP,
    threads: int | None = None,
) -> dict:
    """Independent seeded trials merged in trial order.

    ``direction`` is one of left, right, both, or none (degree walk only).
    Ratios h(gamma_n(P))/deg(gamma_n) are reported as running min/max over
    the trace; finite traces only estimate the liminf/limsup.
    """
    if direction not in ("left", "right", "both", "none"):
        raise ValueError(f"unknown direction {direction!r}")
    if P is not None and not isinstance(P, ProjPoint):
        P = ProjPoint.parse(P) if isinstance(P, str) else ProjPoint.from_affine(P)
    threads = threads or thread_count()
    results = [None] * trials

    def job(k):
        results[k] = _run_trial(family, P, depth, engine, direction, seed, k, exact_cap)

    if threads > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(job, range(trials)))
    else:
        for k in range(trials):
            job(k)
    keys = sorted({key for r in results for key in r if key not in ("trial", "seed")})
    summary = {key: _summary([r.get(key) for r in results]) for key in keys}
    return {
        "trials": trials,
        "depth": depth,
        "engine": engine,
        "direction": direction,
        "seed": seed,
        "log_delta": family.log_delta,
        "sigma_sq": family.sigma_sq,
        "per_trial": results,
        "summary": summary,
    }
