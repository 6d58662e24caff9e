"""Big-integer backend: GMP via gmpy2 when importable, else builtin int."""

import math

try:
    import gmpy2

    ZZ = gmpy2.mpz
    HAVE_GMP = True

    def gcd(a, b):
        return gmpy2.gcd(a, b)

    def isqrt(n):
        return gmpy2.isqrt(n)

except ImportError:  # pragma: no cover - exercised only without gmpy2
    ZZ = int
    HAVE_GMP = False
    gcd = math.gcd
    isqrt = math.isqrt

LN2 = math.log(2.0)


def int_log(n):
    """Natural log of |n| for arbitrarily large integers (relative error ~1e-16)."""
    n = abs(n)
    if n == 0:
        raise ValueError("log of zero")
    b = n.bit_length()
    if b <= 1000:
        return math.log(int(n))
    shift = b - 64
    return math.log(int(n >> shift)) + shift * LN2
