"""Bounded integer factorization: trial division, then Pollard rho (Brent)."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isqrt

from ._zz import ZZ
from ._zz import gcd as zgcd
from .errors import ZeroInput

# Fixed bases first, then a deterministic pseudo-random stream; 40 rounds of
# Miller-Rabin bound the error for a composite by 4^-40 = 2^-80.
_FIXED_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
MR_ROUNDS = 40


def _small_primes(limit: int) -> list:
    sieve = bytearray([1]) * (limit + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(range(p * p, limit + 1, p)))
    return [i for i, v in enumerate(sieve) if v]


_PRIME_CACHE: dict = {}


def primes_up_to(limit: int) -> list:
    if limit not in _PRIME_CACHE:
        _PRIME_CACHE[limit] = _small_primes(limit)
    return _PRIME_CACHE[limit]


def _mr_bases(n: int, rounds: int):
    for b in _FIXED_BASES[:rounds]:
        yield b
    # splitmix-style deterministic stream keyed on n
    state = (n * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    for _ in range(rounds - len(_FIXED_BASES)):
        state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        z ^= z >> 31
        yield 2 + z % (n - 3)


def is_probable_prime(n: int, rounds: int = MR_ROUNDS) -> bool:
    """Miller-Rabin; composites pass with probability below 4^-rounds."""
    if n < 2:
        return False
    for p in _FIXED_BASES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _mr_bases(n, rounds):
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def pollard_brent(n: int, c: int, max_iter: int = 1 << 16):
    """One Brent-variant rho attempt with polynomial x^2 + c; a factor or None."""
    n = ZZ(n)
    y, m, g, r, q = ZZ(2), 128, 1, 1, ZZ(1)
    x = ys = y
    steps = 0
    while g == 1:
        x = y
        for _ in range(r):
            y = (y * y + c) % n
        k = 0
        while k < r and g == 1:
            ys = y
            for _ in range(min(m, r - k)):
                y = (y * y + c) % n
                q = q * abs(x - y) % n
            g = zgcd(q, n)
            k += m
        r <<= 1
        steps += r
        if steps > max_iter and g == 1:
            return None
    if g == n:
        g = 1
        while g == 1:
            ys = (ys * ys + c) % n
            g = zgcd(abs(x - ys), n)
    return int(g) if 1 < g < n else None


@dataclass(frozen=True)
class PartialFactorization:
    """sign * prod(p^e) * cofactor == n; complete iff cofactor == 1."""

    n: int
    sign: int
    found: tuple
    cofactor: int
    complete: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "complete", self.cofactor == 1)

    def primes(self) -> list:
        return [p for p, _ in self.found]

    def value(self) -> int:
        v = self.sign * self.cofactor
        for p, e in self.found:
            v *= p**e
        return v


def factor_partial(
    n: int,
    trial_bound: int = 10**5,
    rho_rounds: int = 64,
    rho_iter: int = 1 << 16,
) -> PartialFactorization:
    """Factor n as far as the budget allows.

    Trial division by primes up to ``trial_bound``, then up to ``rho_rounds``
    Pollard-rho attempts (each capped at ``rho_iter`` steps) on the remaining
    composite parts. Listed primes pass 40 rounds of Miller-Rabin.
    """
    n = int(n)
    if n == 0:
        raise ZeroInput("cannot factor 0")
    sign = -1 if n < 0 else 1
    m = abs(n)
    found: dict = {}
    for p in primes_up_to(trial_bound):
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            found[p] = e
    if 1 < m and (m <= trial_bound * trial_bound or is_probable_prime(m)):
        # m has no factor <= trial_bound, so it is prime when below bound^2
        found[m] = found.get(m, 0) + 1
        m = 1

    pending = [m] if m > 1 else []
    stuck = []
    rounds = 0
    while pending:
        x = pending.pop()
        if is_probable_prime(x):
            found[x] = found.get(x, 0) + 1
            continue
        r = isqrt(x)
        if r * r == x:
            pending.extend([r, r])
            continue
        d = None
        while d is None and rounds < rho_rounds:
            rounds += 1
            d = pollard_brent(x, rounds, rho_iter)
        if d is None:
            stuck.append(x)
        else:
            pending.extend([d, x // d])
    cofactor = 1
    for x in stuck:
        cofactor *= x
    return PartialFactorization(
        n=n,
        sign=sign,
        found=tuple(sorted(found.items())),
        cofactor=cofactor,
    )


def valuation(n: int, p: int) -> int:
    n = abs(n)
    if n == 0:
        raise ZeroInput("valuation of 0 is infinite")
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e
