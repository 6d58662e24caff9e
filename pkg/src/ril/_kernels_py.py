"""Pure-Python/numpy implementations of the hot loops.

Mirrors ``_kernels.pyx`` function for function; results agree bit for bit on
the random streams and to rounding on the float kernels.
"""

import math

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_U = np.uint64
_GOLDEN_U = _U(GOLDEN)
_M1 = _U(0xBF58476D1CE4E5B9)
_M2 = _U(0x94D049BB133111EB)

IMPLEMENTATION = "python"


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix_block(state: int, count: int):
    """Next ``count`` SplitMix64 outputs as a uint64 array, plus the new state."""
    steps = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _U(state) + steps * _GOLDEN_U
        z = (z ^ (z >> _U(30))) * _M1
        z = (z ^ (z >> _U(27))) * _M2
        z = z ^ (z >> _U(31))
    return z, (state + count * GOLDEN) & MASK64


def sample_indices(state: int, thresholds, count: int):
    """Inverse-CDF draws: index = number of thresholds <= the 64-bit word."""
    words, state = splitmix_block(state, count)
    th = np.asarray(thresholds, dtype=np.uint64)
    idx = np.searchsorted(th, words, side="right").astype(np.int64)
    return idx, state


def degree_walk_final(state: int, thresholds, logdegs, n: int, chunk: int = 1 << 16):
    """Per-map draw counts after n steps; returns (counts array, new state)."""
    s = len(logdegs)
    counts = np.zeros(s, dtype=np.int64)
    done = 0
    while done < n:
        k = min(chunk, n - done)
        idx, state = sample_indices(state, thresholds, k)
        counts += np.bincount(idx, minlength=s)
        done += k
    return counts, state


def lil_walk_extrema(state, thresholds, logdegs, n_max, log_delta, sigma, n_min=16, chunk=1 << 16):
    """Extremes of X_n = (W_n - n log_delta) / (sigma sqrt(2 n ln ln n)), n_min <= n <= n_max.

    W_n is rebuilt from integer draw counts at each n as sum(count_i * ln d_i).
    Returns (max X_n, min X_n, argmax n, argmin n, new state).
    """
    s = len(logdegs)
    ld = np.asarray(logdegs, dtype=np.float64)
    counts = np.zeros(s, dtype=np.int64)
    best_hi, best_lo = -math.inf, math.inf
    arg_hi = arg_lo = 0
    done = 0
    while done < n_max:
        k = min(chunk, n_max - done)
        idx, state = sample_indices(state, thresholds, k)
        onehot = np.zeros((k, s), dtype=np.int64)
        onehot[np.arange(k), idx] = 1
        c = np.cumsum(onehot, axis=0) + counts
        counts = c[-1].copy()
        n = np.arange(done + 1, done + k + 1, dtype=np.float64)
        keep = n >= n_min
        if keep.any():
            w = c[keep] @ ld
            nn = n[keep]
            x = (w - nn * log_delta) / (sigma * np.sqrt(2.0 * nn * np.log(np.log(nn))))
            i_hi = int(np.argmax(x))
            i_lo = int(np.argmin(x))
            if x[i_hi] > best_hi:
                best_hi, arg_hi = float(x[i_hi]), int(nn[i_hi])
            if x[i_lo] < best_lo:
                best_lo, arg_lo = float(x[i_lo]), int(nn[i_lo])
        done += k
    return best_hi, best_lo, arg_hi, arg_lo, state


# log-space polynomial iteration

TWO_M50 = 2.0**-50
TWO_M53 = 2.0**-53


def log_step(lam_x, lam_y, sgn, eta, eta_y, d, ratios, log_lead, lead_sign):
    """One application of x -> a_d x^d (1 + sum_{i<d} (a_i/a_d) x^(i-d)) in log-log space.

    State: lam_x = ln ln|X|, lam_y = ln ln|Y| (-inf when |Y| = 1), sgn = sign
    of X/Y; eta and eta_y bound the absolute errors of lam_x and lam_y.
    ``ratios[i]`` holds a_i/a_d for i < d.
    """
    lx = math.exp(lam_x)
    u = -lx * (-math.expm1(lam_y - lam_x))
    eps = 0.0
    eps_abs = 0.0
    for i in range(d):
        r = ratios[i]
        if r != 0.0:
            k = d - i
            t = r * math.exp(k * u)
            if sgn < 0 and (k & 1):
                t = -t
            eps += t
            eps_abs += abs(t)
    corr = (log_lead + math.log1p(eps)) / (d * lx)
    new_lam = math.log(d) + lam_x + math.log1p(corr)
    new_lam_y = math.log(d) + lam_y
    if sgn < 0 and (d & 1):
        new_sgn = -lead_sign
    else:
        new_sgn = lead_sign
    new_eta = (
        eta * (1.0 + 2.0 * abs(corr) + 4.0 * eps_abs)
        + 4.0 * eps_abs * eta_y
        + TWO_M50 * (abs(corr) + eps_abs)
        + 8.0 * TWO_M53 * (abs(new_lam) + 1.0)
    )
    if lam_y == -math.inf:
        new_eta_y = 0.0
    else:
        new_eta_y = eta_y + 4.0 * TWO_M53 * (abs(new_lam_y) + 1.0)
    return new_lam, new_lam_y, new_sgn, new_eta, new_eta_y


def log_chain(state, seq, degs, ratio_table, log_leads, lead_signs, record=False):
    """Apply maps seq[0], seq[1], ... in order to a log-space state.

    Returns the final state, or with ``record`` the list of states after each
    map application.
    """
    lam_x, lam_y, sgn, eta, eta_y = (float(v) for v in state)
    sgn = int(sgn)
    ratio_table = [[float(r) for r in row] for row in ratio_table]
    log_leads = [float(v) for v in log_leads]
    lead_signs = [int(v) for v in lead_signs]
    out = []
    for j in seq:
        j = int(j)
        lam_x, lam_y, sgn, eta, eta_y = log_step(
            lam_x, lam_y, sgn, eta, eta_y, int(degs[j]), ratio_table[j], log_leads[j], lead_signs[j]
        )
        if record:
            out.append((lam_x, lam_y, sgn, eta, eta_y))
    if record:
        return out
    return (lam_x, lam_y, sgn, eta, eta_y)
