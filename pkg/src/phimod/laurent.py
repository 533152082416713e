"""Sparse Laurent polynomials over Z/p^gamma Z and truncated series.

A :class:`LaurentPoly` lives in the scaled variable w = z**(1/scale_d); the
integer exponent e stands for z**(e/scale_d).  Storage is canonical: no zero
coefficient is ever kept, so structural equality is semantic equality.

A :class:`TruncSeries` knows its coefficients for all w-exponents below
``order``; coefficients at or beyond ``order`` are unknown, and equality is
defined only up to the common order.  ``modulus=None`` means exact integers
(oracle mode).
"""

from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np

from .context import Context

__all__ = ["LaurentPoly", "TruncSeries", "frobenius_sum", "phi_arg_frobenius_sum", "to_series"]


class LaurentPoly:
    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: Context, terms=None):
        self.ctx = ctx
        m = ctx.modulus
        out: dict[int, int] = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for e, c in items:
                c = (out.get(e, 0) + c) % m
                if c:
                    out[e] = c
                elif e in out:
                    del out[e]
        self.terms = out

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, ctx: Context) -> "LaurentPoly":
        return cls(ctx)

    @classmethod
    def const(cls, ctx: Context, c: int) -> "LaurentPoly":
        return cls(ctx, {0: c})

    @classmethod
    def monomial(cls, ctx: Context, e: int, c: int = 1) -> "LaurentPoly":
        return cls(ctx, {e: c})

    # -- queries -------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, e: int) -> int:
        return self.terms.get(e, 0)

    def support(self) -> list[int]:
        return sorted(self.terms)

    def min_exp(self) -> int:
        return min(self.terms)

    def max_exp(self) -> int:
        return max(self.terms)

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LaurentPoly)
            and self.ctx == other.ctx
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.ctx, tuple(sorted(self.terms.items()))))

    # -- arithmetic ----------------------------------------------------------

    def _check(self, other: "LaurentPoly") -> None:
        if self.ctx != other.ctx:
            raise ValueError("mismatched contexts")

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        self._check(other)
        m = self.ctx.modulus
        out = dict(self.terms)
        for e, c in other.terms.items():
            c = (out.get(e, 0) + c) % m
            if c:
                out[e] = c
            elif e in out:
                del out[e]
        r = LaurentPoly.__new__(LaurentPoly)
        r.ctx, r.terms = self.ctx, out
        return r

    def __neg__(self) -> "LaurentPoly":
        m = self.ctx.modulus
        r = LaurentPoly.__new__(LaurentPoly)
        r.ctx = self.ctx
        r.terms = {e: m - c for e, c in self.terms.items()}
        return r

    def __sub__(self, other: "LaurentPoly") -> "LaurentPoly":
        return self + (-other)

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        self._check(other)
        m = self.ctx.modulus
        out: dict[int, int] = {}
        a, b = self.terms, other.terms
        if len(a) > len(b):
            a, b = b, a
        for e1, c1 in a.items():
            for e2, c2 in b.items():
                e = e1 + e2
                c = (out.get(e, 0) + c1 * c2) % m
                if c:
                    out[e] = c
                elif e in out:
                    del out[e]
        r = LaurentPoly.__new__(LaurentPoly)
        r.ctx, r.terms = self.ctx, out
        return r

    def scale(self, c: int) -> "LaurentPoly":
        m = self.ctx.modulus
        c %= m
        out = {}
        for e, v in self.terms.items():
            v = v * c % m
            if v:
                out[e] = v
        r = LaurentPoly.__new__(LaurentPoly)
        r.ctx, r.terms = self.ctx, out
        return r

    def shift(self, e0: int) -> "LaurentPoly":
        """Multiply by the monomial w**e0."""
        r = LaurentPoly.__new__(LaurentPoly)
        r.ctx = self.ctx
        r.terms = {e + e0: c for e, c in self.terms.items()}
        return r

    def __pow__(self, n: int) -> "LaurentPoly":
        if n < 0:
            raise ValueError("negative powers only for monomials; use shift")
        result = LaurentPoly.const(self.ctx, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def change_ring(self, ctx: Context) -> "LaurentPoly":
        """Reinterpret coefficients in a new modulus (representatives in [0, m))."""
        return LaurentPoly(ctx, self.terms)

    # -- rendering -----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "scaleD": self.ctx.scale_d,
            "terms": [[e, c] for e, c in sorted(self.terms.items())],
        }

    @classmethod
    def from_json(cls, ctx: Context, obj: dict) -> "LaurentPoly":
        if obj.get("scaleD", ctx.scale_d) != ctx.scale_d:
            raise ValueError("scaleD mismatch in LaurentPoly JSON")
        return cls(ctx, [(int(e), int(c)) for e, c in obj["terms"]])

    def pretty(self, var: str = "z") -> str:
        """Render in z-units when exponents allow it, else as fractional powers."""
        if not self.terms:
            return "0"
        d = self.ctx.scale_d
        bits = []
        for e, c in sorted(self.terms.items(), reverse=True):
            if e == 0:
                bits.append(str(c))
                continue
            if e % d == 0:
                q = e // d
                name = var if q == 1 else f"{var}^{q}"
            else:
                name = f"{var}^({e}/{d})"
            bits.append(name if c == 1 else f"{c} {name}")
        return " + ".join(bits)

    def __repr__(self) -> str:
        return f"LaurentPoly({self.pretty()!s})"


def frobenius_sum(ctx: Context, alpha: int) -> LaurentPoly:
    """s_alpha(z) = sum_{k<alpha} z**(p**k), expressed in w-units."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return LaurentPoly(ctx, [(ctx.scale_d * ctx.p**k, 1) for k in range(alpha)])


def phi_arg_frobenius_sum(ctx: Context, alpha: int) -> LaurentPoly:
    """sum_{k<alpha} w**(P**k) with P = ctx.phi_base: the Frobenius sum in the
    Phi-argument variable itself (what the lifting base solutions use)."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return LaurentPoly(ctx, [(ctx.phi_base**k, 1) for k in range(alpha)])


# ---------------------------------------------------------------------------
# Truncated series
# ---------------------------------------------------------------------------

# numpy convolution is safe while m**2 * length stays under int64 range
_NP_LIMIT = 1 << 62


class TruncSeries:
    __slots__ = ("modulus", "order", "lo", "coeffs")

    def __init__(self, modulus: int | None, order: int, lo: int = 0, coeffs=None):
        self.modulus = modulus
        self.order = order
        self.lo = lo
        if coeffs is None:
            coeffs = []
        coeffs = list(coeffs)
        if modulus is not None:
            coeffs = [c % modulus for c in coeffs]
        # trim leading zeros to keep lo canonical, and anything >= order
        coeffs = coeffs[: max(0, order - lo)]
        while coeffs and coeffs[0] == 0:
            coeffs.pop(0)
            lo += 1
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.lo = lo if coeffs else 0
        self.coeffs = coeffs

    @classmethod
    def zero(cls, modulus: int | None, order: int) -> "TruncSeries":
        return cls(modulus, order)

    @classmethod
    def from_dict(cls, modulus: int | None, order: int, d: dict) -> "TruncSeries":
        if not d:
            return cls(modulus, order)
        lo = min(d)
        hi = min(max(d), order - 1)
        coeffs = [0] * (hi - lo + 1)
        for e, c in d.items():
            if e < order:
                coeffs[e - lo] = c
        return cls(modulus, order, lo, coeffs)

    def coeff(self, e: int) -> int:
        if e >= self.order:
            raise IndexError(f"coefficient at {e} beyond truncation order {self.order}")
        if e < self.lo or e >= self.lo + len(self.coeffs):
            return 0
        return self.coeffs[e - self.lo]

    def to_dict(self) -> dict[int, int]:
        return {self.lo + i: c for i, c in enumerate(self.coeffs) if c}

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other) -> bool:
        """Agreement on the common known range (spec: equality up to common order)."""
        if not isinstance(other, TruncSeries):
            return NotImplemented
        t = min(self.order, other.order)
        lo = min(self.lo, other.lo)
        for e in range(lo, t):
            a = self.coeff(e) if e < self.order else 0
            b = other.coeff(e) if e < other.order else 0
            if self.modulus is not None and other.modulus is not None:
                if self.modulus != other.modulus:
                    return False
            if a != b:
                return False
        return True

    __hash__ = None  # type: ignore[assignment]

    def first_difference(self, other: "TruncSeries") -> int | None:
        t = min(self.order, other.order)
        for e in range(min(self.lo, other.lo), t):
            if self.coeff(e) != other.coeff(e):
                return e
        return None

    # -- arithmetic ----------------------------------------------------------

    def _binop(self, other: "TruncSeries", sign: int) -> "TruncSeries":
        m = self.modulus
        order = min(self.order, other.order)
        lo = min(self.lo, other.lo) if (self.coeffs or other.coeffs) else 0
        hi = max(self.lo + len(self.coeffs), other.lo + len(other.coeffs))
        out = [0] * max(0, hi - lo)
        for i, c in enumerate(self.coeffs):
            out[self.lo + i - lo] += c
        for i, c in enumerate(other.coeffs):
            out[other.lo + i - lo] += sign * c
        return TruncSeries(m, order, lo, out)

    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        return self._binop(other, 1)

    def __sub__(self, other: "TruncSeries") -> "TruncSeries":
        return self._binop(other, -1)

    def __mul__(self, other: "TruncSeries") -> "TruncSeries":
        m = self.modulus
        # truncation order of the product: unknowns at self.order interact with
        # other's lowest term, and vice versa
        if self.is_zero() or other.is_zero():
            return TruncSeries(m, min(self.order + other.lo, other.order + self.lo)
                               if (self.coeffs or other.coeffs) else min(self.order, other.order))
        order = min(self.order + other.lo, other.order + self.lo)
        lo = self.lo + other.lo
        n = order - lo
        if n <= 0:
            return TruncSeries(m, order)
        a = self.coeffs[:n]
        b = other.coeffs[:n]
        if m is not None and m * m * min(len(a), len(b)) < _NP_LIMIT:
            conv = np.convolve(np.array(a, dtype=np.int64), np.array(b, dtype=np.int64))
            out = (conv[:n] % m).tolist()
        else:
            out = [0] * min(len(a) + len(b) - 1, n)
            for i, x in enumerate(a):
                if x:
                    top = min(len(b), n - i)
                    for j in range(top):
                        if b[j]:
                            out[i + j] += x * b[j]
            if m is not None:
                out = [c % m for c in out]
        return TruncSeries(m, order, lo, out)

    def mul_laurent(self, q: LaurentPoly) -> "TruncSeries":
        m = self.modulus
        if q.is_zero():
            return TruncSeries(m, self.order + min(q.terms) if q.terms else self.order)
        acc: dict[int, int] = {}
        order = min(self.order + e for e in q.terms)
        for e, c in q.terms.items():
            for i, x in enumerate(self.coeffs):
                if x:
                    k = self.lo + i + e
                    if k < order:
                        acc[k] = acc.get(k, 0) + c * x
        return TruncSeries.from_dict(m, order, acc)

    def scalar(self, c: int) -> "TruncSeries":
        return TruncSeries(self.modulus, self.order, self.lo, [c * x for x in self.coeffs])

    def truncate(self, order: int) -> "TruncSeries":
        return TruncSeries(self.modulus, min(order, self.order), self.lo, self.coeffs)

    def reduce_mod(self, m: int) -> "TruncSeries":
        return TruncSeries(m, self.order, self.lo, self.coeffs)

    def __repr__(self) -> str:
        head = {self.lo + i: c for i, c in enumerate(self.coeffs) if c}
        items = sorted(head.items())[:8]
        tail = " + ..." if len(head) > 8 else ""
        body = " + ".join(f"{c}*w^{e}" for e, c in items) or "0"
        return f"TruncSeries({body}{tail}; O(w^{self.order}))"


def to_series(a: LaurentPoly, order: int) -> TruncSeries:
    """Truncation of a Laurent polynomial (finite principal part permitted)."""
    return TruncSeries.from_dict(a.ctx.modulus, order, dict(a.terms))
