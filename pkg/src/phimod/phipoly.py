"""Polynomials in Phi with Laurent-polynomial coefficients.

A :class:`PhiPoly` represents sum_i a_i(w) * Phi^i(w) where Phi(w) =
sum_n w**(P**n), P = ctx.phi_base.  The Ansatz level ``alpha`` fixes the
degree bound P**(alpha+1) - 1 after reduction by the relation

    (Phi**P - Phi + w)**(P**alpha) = 0   modulo p**(P**alpha),

so the context's gamma must satisfy gamma <= P**alpha before reducing.
Coefficients are stored sparsely by degree; arithmetic never auto-reduces.
"""

from __future__ import annotations

import functools

from .context import Context, multinomial_mod
from .hseries import HCombo, phi_power_combo
from .laurent import LaurentPoly, TruncSeries

__all__ = ["PhiPoly", "phi_relation_poly", "phi_series", "phi_derivative_series"]


class PhiPoly:
    __slots__ = ("ctx", "alpha", "coeffs", "_hcombo")

    def __init__(self, ctx: Context, alpha: int, coeffs=None):
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        self.ctx = ctx
        self.alpha = alpha
        out: dict[int, LaurentPoly] = {}
        if coeffs:
            items = coeffs.items() if isinstance(coeffs, dict) else enumerate(coeffs)
            for i, q in items:
                if isinstance(q, int):
                    q = LaurentPoly.const(ctx, q)
                if not q.is_zero():
                    out[i] = q
        self.coeffs = out
        self._hcombo = None

    # -- basics ----------------------------------------------------------------

    @classmethod
    def zero(cls, ctx: Context, alpha: int = 0) -> "PhiPoly":
        return cls(ctx, alpha)

    @classmethod
    def const(cls, ctx: Context, c: int, alpha: int = 0) -> "PhiPoly":
        return cls(ctx, alpha, {0: LaurentPoly.const(ctx, c)})

    @classmethod
    def phi(cls, ctx: Context, alpha: int = 0) -> "PhiPoly":
        return cls(ctx, alpha, {1: LaurentPoly.const(ctx, 1)})

    def degree(self) -> int:
        return max(self.coeffs, default=-1)

    def coeff(self, i: int) -> LaurentPoly:
        return self.coeffs.get(i, LaurentPoly.zero(self.ctx))

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree_bound(self) -> int:
        return self.ctx.phi_base ** (self.alpha + 1) - 1

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PhiPoly)
            and self.ctx == other.ctx
            and self.coeffs == other.coeffs
        )

    __hash__ = None  # type: ignore[assignment]

    # -- arithmetic ---------------------------------------------------------------

    def _check(self, other: "PhiPoly") -> None:
        if self.ctx != other.ctx or self.alpha != other.alpha:
            raise ValueError("mismatched contexts or Ansatz levels")

    def __add__(self, other: "PhiPoly") -> "PhiPoly":
        self._check(other)
        out = dict(self.coeffs)
        for i, q in other.coeffs.items():
            cur = out.get(i)
            q2 = q if cur is None else cur + q
            if q2.is_zero():
                out.pop(i, None)
            else:
                out[i] = q2
        return PhiPoly(self.ctx, self.alpha, out)

    def __sub__(self, other: "PhiPoly") -> "PhiPoly":
        return self + other.scale_int(-1)

    def __mul__(self, other: "PhiPoly") -> "PhiPoly":
        self._check(other)
        out: dict[int, LaurentPoly] = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                q = a * b
                if q.is_zero():
                    continue
                cur = out.get(i + j)
                q = q if cur is None else cur + q
                if q.is_zero():
                    out.pop(i + j, None)
                else:
                    out[i + j] = q
        return PhiPoly(self.ctx, self.alpha, out)

    def __pow__(self, n: int) -> "PhiPoly":
        if n < 0:
            raise ValueError("negative PhiPoly powers undefined")
        result = PhiPoly.const(self.ctx, 1, self.alpha)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def scale(self, q: LaurentPoly) -> "PhiPoly":
        out = {}
        for i, a in self.coeffs.items():
            a2 = a * q
            if not a2.is_zero():
                out[i] = a2
        return PhiPoly(self.ctx, self.alpha, out)

    def scale_int(self, c: int) -> "PhiPoly":
        out = {}
        for i, a in self.coeffs.items():
            a2 = a.scale(c)
            if not a2.is_zero():
                out[i] = a2
        return PhiPoly(self.ctx, self.alpha, out)

    def change_ring(self, ctx: Context, alpha: int | None = None) -> "PhiPoly":
        """Reinterpret coefficients in a new modulus (representatives in [0, m))."""
        return PhiPoly(
            ctx,
            self.alpha if alpha is None else alpha,
            {i: q.change_ring(ctx) for i, q in self.coeffs.items()},
        )

    def with_alpha(self, alpha: int) -> "PhiPoly":
        return PhiPoly(self.ctx, alpha, self.coeffs)

    # -- reduction -------------------------------------------------------------------

    def reduce(self) -> "PhiPoly":
        """Divide by (t**P - t + w)**(P**alpha); degree drops below P**(alpha+1).

        Valid modulo p**(P**alpha) only: gamma beyond that raises.
        """
        ctx, alpha = self.ctx, self.alpha
        cap = ctx.phi_base ** alpha
        if ctx.gamma > cap:
            raise ValueError(
                f"relation only valid modulo p^{cap} (gamma={ctx.gamma} too large; raise alpha)"
            )
        deg_r = ctx.phi_base ** (alpha + 1)
        if self.degree() < deg_r:
            return self
        rel = phi_relation_poly(ctx, alpha)
        out = dict(self.coeffs)
        for d in range(self.degree(), deg_r - 1, -1):
            lead = out.pop(d, None)
            if lead is None or lead.is_zero():
                continue
            for j, q in rel:
                if j == deg_r:
                    continue
                k = d - deg_r + j
                add = (lead * q).scale(-1)
                cur = out.get(k)
                add = add if cur is None else cur + add
                if add.is_zero():
                    out.pop(k, None)
                else:
                    out[k] = add
        return PhiPoly(ctx, alpha, out)

    def reduce_by_bivar(self, rel_in_t: dict[tuple[int, int], int]) -> "PhiPoly":
        """Optional post-hoc reduction by a verified minimal polynomial
        A(z, t) (monic in t); monomials given as {(z_exp, t_exp): c}."""
        ctx = self.ctx
        deg_r = max(b for (_, b) in rel_in_t)
        lead = [c for (a, b), c in rel_in_t.items() if b == deg_r]
        if len(lead) != 1 or lead[0] % ctx.modulus != 1:
            raise ValueError("relation must be monic in t")
        tail = [
            (b, LaurentPoly.monomial(ctx, a * ctx.scale_d, c))
            for (a, b), c in rel_in_t.items()
            if b != deg_r
        ]
        out = dict(self.coeffs)
        for d in range(self.degree(), deg_r - 1, -1):
            leadq = out.pop(d, None)
            if leadq is None or leadq.is_zero():
                continue
            for j, q in tail:
                k = d - deg_r + j
                add = (leadq * q).scale(-1)
                cur = out.get(k)
                add = add if cur is None else cur + add
                if add.is_zero():
                    out.pop(k, None)
                else:
                    out[k] = add
        return PhiPoly(ctx, self.alpha, out)

    # -- conversions ------------------------------------------------------------------

    def to_hcombo(self) -> HCombo:
        """sum_i a_i(w) * (normalized combo of Phi^i); Phi^0 feeds the free part."""
        if self._hcombo is not None:
            return self._hcombo
        ctx = self.ctx
        total = HCombo.zero(ctx)
        for i in sorted(self.coeffs):
            total = total + phi_power_combo(ctx, i).scale(self.coeffs[i])
        self._hcombo = total
        return total

    def to_series(self, order: int) -> TruncSeries:
        """Substitute the truncated Phi series and expand (w-units)."""
        ctx = self.ctx
        # negative coefficient exponents shift orders down; pad to compensate
        pad = max(
            (0, *(-q.min_exp() for q in self.coeffs.values() if q.terms and q.min_exp() < 0))
        )
        work = order + pad
        phi = phi_series(ctx, work)
        total = TruncSeries.zero(ctx.modulus, work)
        power = TruncSeries.from_dict(ctx.modulus, work, {0: 1})
        prev = 0
        for i in sorted(self.coeffs):
            for _ in range(i - prev):
                power = power * phi
            prev = i
            total = total + power.mul_laurent(self.coeffs[i])
        return total.truncate(order)

    def coefficient_w(self, m: int) -> int:
        """Coefficient of w**m, via the cached normalized H-combo."""
        return self.to_hcombo().coeff(m)

    def coefficient(self, n: int) -> int:
        """Coefficient of z**n (n in z-units, converted by scale_d)."""
        if n < 0:
            raise ValueError("n must be >= 0")
        return self.coefficient_w(n * self.ctx.scale_d)

    # -- rendering -----------------------------------------------------------------------

    def to_json(self) -> dict:
        d = self.degree()
        return {
            "p": self.ctx.p,
            "gamma": self.ctx.gamma,
            "scaleD": self.ctx.scale_d,
            "step": self.ctx.step,
            "alpha": self.alpha,
            "coeffs": [self.coeff(i).to_json() for i in range(d + 1)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PhiPoly":
        ctx = Context(
            int(obj["p"]), int(obj["gamma"]), int(obj.get("scaleD", 1)), int(obj.get("step", 1))
        )
        coeffs = [LaurentPoly.from_json(ctx, c) for c in obj["coeffs"]]
        return cls(ctx, int(obj["alpha"]), coeffs)

    def pretty(self) -> str:
        if not self.coeffs:
            return "0"
        bits = []
        for i in sorted(self.coeffs):
            q = self.coeffs[i]
            if i == 0:
                bits.append(q.pretty())
                continue
            phi = "Phi(z)" if i == 1 else f"Phi^{i}(z)"
            if q.is_monomial() and q.coeff(0) == 1:
                bits.append(phi)
            elif q.is_monomial():
                bits.append(f"{q.pretty()} {phi}" if q.coeff(0) else f"({q.pretty()}) {phi}")
            else:
                bits.append(f"({q.pretty()}) {phi}")
        return " + ".join(bits)

    def __repr__(self) -> str:
        return f"PhiPoly({self.pretty()})"


@functools.lru_cache(maxsize=None)
def phi_relation_poly(ctx: Context, alpha: int) -> tuple[tuple[int, LaurentPoly], ...]:
    """(t**P - t + w)**(P**alpha) expanded: list of (t-degree, Laurent coeff).

    Monic of degree P**(alpha+1); when gamma = 1 the multinomials collapse to
    t**(P**(alpha+1)) - t**(P**alpha) + w**(P**alpha) automatically.
    """
    P = ctx.phi_base
    n = P ** alpha
    m = ctx.modulus
    acc: dict[int, LaurentPoly] = {}
    # trinomial expansion: sum over i+j+k = n of n!/(i!j!k!) t^(Pi) (-t)^j w^k
    for i in range(n + 1):
        for j in range(n + 1 - i):
            k = n - i - j
            c = multinomial_mod(n, (i, j, k), m) * ((-1) ** (j % 2))
            c %= m
            if not c:
                continue
            d = P * i + j
            q = LaurentPoly.monomial(ctx, k, c)
            cur = acc.get(d)
            q = q if cur is None else cur + q
            if q.is_zero():
                acc.pop(d, None)
            else:
                acc[d] = q
    return tuple(sorted(acc.items()))


def phi_series(ctx: Context, order: int) -> TruncSeries:
    """The Phi series sum_n w**(P**n) truncated at the given w-order."""
    d = {}
    e = 1
    while e < order:
        d[e] = 1
        e *= ctx.phi_base
    return TruncSeries.from_dict(ctx.modulus, order, d)


def phi_derivative_series(ctx: Context, beta: int, order: int) -> TruncSeries:
    """Phi'(z) = sum_{n=0..beta} p^n z^(p^n - 1) modulo p^(beta+1), truncated.

    Needs beta + 1 <= gamma so the stated precision is representable.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if beta + 1 > ctx.gamma:
        raise ValueError("beta + 1 exceeds the context's gamma capacity")
    m = ctx.p ** (beta + 1)
    d: dict[int, int] = {}
    for n in range(beta + 1):
        e = (ctx.p**n - 1) * ctx.scale_d
        if e < order:
            d[e] = d.get(e, 0) + ctx.p**n
    return TruncSeries.from_dict(m, order, d)
