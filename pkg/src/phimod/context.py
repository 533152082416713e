"""Modular integer utilities underlying every other module.

Residues are plain Python ints reduced into ``[0, p**gamma)``; the ambient
data (prime ``p``, exponent ``gamma``, exponent denominator ``scale_d``)
travels in an immutable :class:`Context`.  All arithmetic is exact big-integer
arithmetic: exponents of the order of ``3**30`` occur in coefficient
extraction and must never be forced through machine words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "Context",
    "is_prime",
    "vp",
    "digit_sum",
    "vp_factorial",
    "multinomial_mod",
]

# Deterministic Miller-Rabin witnesses for n < 2**64 (Sorenson & Webster).
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic primality test for ``n < 2**64``; larger inputs rejected."""
    if n < 2:
        return False
    for q in _MR_WITNESSES:
        if n % q == 0:
            return n == q
    if n >= 1 << 64:
        raise ValueError("primality check limited to n < 2**64")
    d = n - 1
    r = (d & -d).bit_length() - 1
    d >>= r
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def vp(n: int, p: int) -> int:
    """p-adic valuation: the largest e with p**e | n.  Undefined for n = 0."""
    if n == 0:
        raise ValueError("valuation of zero undefined")
    n = abs(n)
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def digit_sum(d: int, p: int) -> int:
    """Sum of the base-p digits of d >= 0."""
    if d < 0:
        raise ValueError("digit_sum requires d >= 0")
    s = 0
    while d:
        d, r = divmod(d, p)
        s += r
    return s


def vp_factorial(d: int, p: int) -> int:
    """v_p(d!) by Legendre's formula (d - digit_sum(d)) / (p - 1)."""
    if d < 0:
        raise ValueError("vp_factorial requires d >= 0")
    return (d - digit_sum(d, p)) // (p - 1)


def multinomial_mod(k: int, parts, modulus: int) -> int:
    """K!/(b_1! ... b_r!) reduced mod ``modulus``.

    Computed as a product of binomials over big integers, never forming K!
    over the rationals.
    """
    parts = tuple(parts)
    if sum(parts) != k:
        raise ValueError(f"parts {parts} do not sum to {k}")
    out = 1
    rem = k
    for b in parts:
        out = out * math.comb(rem, b) % modulus
        rem -= b
    return out


@dataclass(frozen=True)
class Context:
    """Ambient ring data: work modulo p**gamma in the variable w = z**(1/scale_d).

    ``step`` selects the Phi-series flavour: the series has support on powers
    of ``phi_base = p**step`` (step 1 everywhere except the Fuss-Catalan
    variant, which substitutes z -> z**(p**h - 1) and uses step h).
    """

    p: int
    gamma: int
    scale_d: int = 1
    step: int = 1
    modulus: int = field(init=False, repr=False, compare=False)
    phi_base: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")
        if self.scale_d < 1 or self.step < 1:
            raise ValueError("scale_d and step must be >= 1")
        object.__setattr__(self, "modulus", self.p ** self.gamma)
        object.__setattr__(self, "phi_base", self.p ** self.step)

    def with_gamma(self, gamma: int) -> "Context":
        return Context(self.p, gamma, self.scale_d, self.step)

    def reduce(self, n: int) -> int:
        return n % self.modulus
