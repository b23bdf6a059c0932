"""Small exact number-theory helpers shared across the package.

Everything here is integer-exact (Python bignums or int64 numpy where safe).
"""

from __future__ import annotations

import math
from functools import lru_cache


def mobius_sieve(n: int) -> list[int]:
    """mu(0..n) by a linear sieve; mu[0] = 0 by convention."""
    mu = [0] * (n + 1)
    if n >= 1:
        mu[1] = 1
    primes: list[int] = []
    is_comp = [False] * (n + 1)
    for i in range(2, n + 1):
        if not is_comp[i]:
            primes.append(i)
            mu[i] = -1
        for p in primes:
            if i * p > n:
                break
            is_comp[i * p] = True
            if i % p == 0:
                mu[i * p] = 0
                break
            mu[i * p] = -mu[i]
    return mu


def primes_upto(n: int) -> list[int]:
    """All primes <= n (simple sieve)."""
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = b"\x00" * len(sieve[p * p :: p])
    return [i for i in range(2, n + 1) if sieve[i]]


def valuation(n: int, p: int) -> int:
    """Largest v with p^v | n; n must be nonzero."""
    if n == 0:
        raise ValueError("valuation of 0 is undefined here")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@lru_cache(maxsize=None)
def divisors(n: int) -> tuple[int, ...]:
    """Sorted positive divisors of n >= 1."""
    if n < 1:
        raise ValueError("n must be positive")
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d != n // d:
                large.append(n // d)
        d += 1
    return tuple(small + large[::-1])


def ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """(g, u, v) with u*a + v*b = g = gcd(a, b), g >= 0."""
    old_r, r = a, b
    old_u, u = 1, 0
    old_v, v = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_u, u = u, old_u - q * u
        old_v, v = v, old_v - q * v
    if old_r < 0:
        old_r, old_u, old_v = -old_r, -old_u, -old_v
    return old_r, old_u, old_v


def integer_root_floor(x: float | int, r: int) -> int:
    """floor(x^(1/r)) computed safely for x >= 0 (exact at integer inputs)."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    if r == 1:
        return int(math.floor(x))
    if float(x) == 0.0:
        return 0
    n = int(round(float(x) ** (1.0 / r)))
    n = max(n, 0)
    # correct float drift with exact integer comparisons against floor(x)
    xi = int(math.floor(x))
    while n > 0 and n**r > xi:
        n -= 1
    while (n + 1) ** r <= xi:
        n += 1
    return n


def zeta(s: float) -> float:
    """Riemann zeta for real s > 1."""
    from scipy.special import zeta as _zeta

    if s <= 1:
        raise ValueError("zeta pole/divergence at s <= 1")
    return float(_zeta(s, 1))
