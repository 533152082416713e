"""The H-series calculus: expansion of Phi powers, Hou reduction to the
coprime-index normal form, and greedy coefficient extraction.

H_{b_1,...,b_r}(w) = sum over n_1 > ... > n_r >= 0 of w**(b_1 P^{n_1} + ... +
b_r P^{n_r}) with P = ctx.phi_base.  Compositions are plain tuples; order is
significant.  An :class:`HCombo` is a Laurent-polynomial linear combination of
H-series plus a free Laurent term.  Once every part of every composition is
coprime to p (step 1: P = p), the normal form is unique, zero-testing is
exact, and the coefficient of w**M is computable in O(log M) operations.
"""

from __future__ import annotations

import functools
from typing import Iterable

from .context import Context, multinomial_mod, vp
from .laurent import LaurentPoly, TruncSeries

__all__ = [
    "HCombo",
    "comp_key",
    "compositions_of",
    "expand_phi_power",
    "phi_power_combo",
    "hterm_coeff",
    "quasi_shuffle",
]

# Guard against runaway rewrite loops; Prop 3 guarantees termination but the
# implementation asserts it with an explicit step budget.
_MAX_REWRITE_STEPS = 10_000_000

PHI_POWER_CAP = 64  # compositions of K number 2**(K-1); refuse accidental monsters


def comp_key(c: tuple[int, ...]):
    """Canonical ordering of compositions: weight, then length, then lex."""
    return (sum(c), len(c), c)


def compositions_of(k: int) -> Iterable[tuple[int, ...]]:
    """All 2**(k-1) compositions of k, in a deterministic order."""
    if k == 0:
        yield ()
        return
    stack = [((), k)]
    while stack:
        prefix, rem = stack.pop()
        for first in range(rem, 0, -1):
            if first == rem:
                yield prefix + (first,)
            else:
                stack.append((prefix + (first,), rem - first))


@functools.lru_cache(maxsize=None)
def quasi_shuffle(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Multiplicities of H_a * H_b as a sum of H_c over quasi-shuffles c.

    Interleave the two decreasing exponent chains; coinciding exponents merge
    their parts additively.
    """
    if not a:
        return ((b, 1),)
    if not b:
        return ((a, 1),)
    acc: dict[tuple[int, ...], int] = {}
    for head, rest in (
        ((a[0],), (a[1:], b)),
        ((b[0],), (a, b[1:])),
        ((a[0] + b[0],), (a[1:], b[1:])),
    ):
        for comp, mult in quasi_shuffle(*rest):
            key = head + comp
            acc[key] = acc.get(key, 0) + mult
    return tuple(sorted(acc.items()))


class HCombo:
    """free + sum over compositions t of coeff_t(w) * H_t(w)."""

    __slots__ = ("ctx", "free", "hterms")

    def __init__(self, ctx: Context, free: LaurentPoly | None = None, hterms=None):
        self.ctx = ctx
        self.free = free if free is not None else LaurentPoly.zero(ctx)
        out: dict[tuple[int, ...], LaurentPoly] = {}
        if hterms:
            items = hterms.items() if isinstance(hterms, dict) else hterms
            for comp, q in items:
                comp = tuple(comp)
                cur = out.get(comp)
                q = q if cur is None else cur + q
                if q.is_zero():
                    out.pop(comp, None)
                else:
                    out[comp] = q
        self.hterms = out

    # -- basics ---------------------------------------------------------------

    @classmethod
    def zero(cls, ctx: Context) -> "HCombo":
        return cls(ctx)

    @classmethod
    def from_free(cls, free: LaurentPoly) -> "HCombo":
        return cls(free.ctx, free)

    @classmethod
    def single(cls, ctx: Context, comp, coeff: int = 1) -> "HCombo":
        return cls(ctx, None, {tuple(comp): LaurentPoly.const(ctx, coeff)})

    @property
    def normalized(self) -> bool:
        base = self.ctx.phi_base
        return all(b % base for comp in self.hterms for b in comp)

    def is_zero(self) -> bool:
        return self.free.is_zero() and not self.hterms

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HCombo)
            and self.ctx == other.ctx
            and self.free == other.free
            and self.hterms == other.hterms
        )

    __hash__ = None  # type: ignore[assignment]

    def sorted_terms(self) -> list[tuple[tuple[int, ...], LaurentPoly]]:
        return sorted(self.hterms.items(), key=lambda kv: comp_key(kv[0]))

    def max_weight(self) -> int:
        return max((sum(c) for c in self.hterms), default=0)

    # -- linear structure ------------------------------------------------------

    def __add__(self, other: "HCombo") -> "HCombo":
        if self.ctx != other.ctx:
            raise ValueError("mismatched contexts")
        out = dict(self.hterms)
        for comp, q in other.hterms.items():
            cur = out.get(comp)
            q2 = q if cur is None else cur + q
            if q2.is_zero():
                out.pop(comp, None)
            else:
                out[comp] = q2
        r = HCombo.__new__(HCombo)
        r.ctx, r.free, r.hterms = self.ctx, self.free + other.free, out
        return r

    def __sub__(self, other: "HCombo") -> "HCombo":
        return self + other.scale_int(-1)

    def scale(self, q: LaurentPoly) -> "HCombo":
        """Multiply by a Laurent polynomial (no H-products involved)."""
        out = {}
        for comp, c in self.hterms.items():
            c2 = c * q
            if not c2.is_zero():
                out[comp] = c2
        r = HCombo.__new__(HCombo)
        r.ctx, r.free, r.hterms = self.ctx, self.free * q, out
        return r

    def scale_int(self, c: int) -> "HCombo":
        out = {}
        for comp, q in self.hterms.items():
            q2 = q.scale(c)
            if not q2.is_zero():
                out[comp] = q2
        r = HCombo.__new__(HCombo)
        r.ctx, r.free, r.hterms = self.ctx, self.free.scale(c), out
        return r

    def change_ring(self, ctx: Context) -> "HCombo":
        return HCombo(
            ctx,
            self.free.change_ring(ctx),
            {c: q.change_ring(ctx) for c, q in self.hterms.items()},
        )

    # -- Hou reduction ----------------------------------------------------------

    def reduce(self) -> "HCombo":
        """Rewrite to the normal form in which no part is divisible by P.

        Repeatedly picks h maximal with P | b_h and applies the four-case
        identity; each output composition has length <= input length and
        weight <= input weight, which is asserted on every step.
        """
        ctx = self.ctx
        base = ctx.phi_base
        free = self.free
        done: dict[tuple[int, ...], LaurentPoly] = {}
        work: dict[tuple[int, ...], LaurentPoly] = dict(self.hterms)
        steps = 0
        while work:
            comp, q = work.popitem()
            if q.is_zero():
                continue
            h = None
            for i in range(len(comp) - 1, -1, -1):
                if comp[i] % base == 0:
                    h = i
                    break
            if h is None:
                cur = done.get(comp)
                q2 = q if cur is None else cur + q
                if q2.is_zero():
                    done.pop(comp, None)
                else:
                    done[comp] = q2
                continue
            steps += 1
            if steps > _MAX_REWRITE_STEPS:
                raise AssertionError("Hou reduction exceeded step budget")
            bh = comp[h] // base
            last = len(comp) - 1
            emitted: list[tuple[tuple[int, ...], LaurentPoly]] = []
            if 0 < h < last:
                emitted.append((comp[:h] + (bh,) + comp[h + 1:], q))
                emitted.append((comp[: h - 1] + (comp[h - 1] + bh,) + comp[h + 1:], q))
                emitted.append(
                    (comp[:h] + (comp[h] + comp[h + 1],) + comp[h + 2:], q.scale(-1))
                )
            elif h == 0 and h < last:
                emitted.append(((bh,) + comp[1:], q))
                emitted.append(((comp[0] + comp[1],) + comp[2:], q.scale(-1)))
            elif 0 < h == last:
                emitted.append((comp[:h] + (bh,), q))
                emitted.append((comp[: h - 1] + (comp[h - 1] + bh,), q))
                emitted.append((comp[:h], (q.shift(bh)).scale(-1)))
            else:  # single part divisible by P
                emitted.append(((bh,), q))
                free = free - q.shift(bh)
            for newcomp, newq in emitted:
                assert sum(newcomp) <= sum(comp) and len(newcomp) <= len(comp)
                cur = work.get(newcomp)
                newq = newq if cur is None else cur + newq
                if newq.is_zero():
                    work.pop(newcomp, None)
                else:
                    work[newcomp] = newq
        out = HCombo.__new__(HCombo)
        out.ctx, out.free, out.hterms = ctx, free, done
        return out

    # -- products and Frobenius --------------------------------------------------

    def __mul__(self, other: "HCombo") -> "HCombo":
        """Quasi-shuffle product followed by Hou reduction (merges may create
        P-divisible parts)."""
        if self.ctx != other.ctx:
            raise ValueError("mismatched contexts")
        ctx = self.ctx
        acc: dict[tuple[int, ...], LaurentPoly] = {}
        for ca, qa in self.hterms.items():
            for cb, qb in other.hterms.items():
                q = qa * qb
                if q.is_zero():
                    continue
                for comp, mult in quasi_shuffle(ca, cb):
                    q2 = q.scale(mult)
                    if q2.is_zero():
                        continue
                    cur = acc.get(comp)
                    q2 = q2 if cur is None else cur + q2
                    if q2.is_zero():
                        acc.pop(comp, None)
                    else:
                        acc[comp] = q2
        out = HCombo(ctx, self.free * other.free, acc)
        if not self.free.is_zero():
            out = out + other.scale(self.free)._hterms_only()
        if not other.free.is_zero():
            out = out + self.scale(other.free)._hterms_only()
        return out.reduce()

    def _hterms_only(self) -> "HCombo":
        r = HCombo.__new__(HCombo)
        r.ctx, r.free, r.hterms = self.ctx, LaurentPoly.zero(self.ctx), dict(self.hterms)
        return r

    def __pow__(self, n: int) -> "HCombo":
        if n < 0:
            raise ValueError("negative combo powers undefined")
        ctx = self.ctx
        # mod p a p-th power is a Frobenius substitution (w -> w^p = w^P only
        # when step = 1); exploit it for bulk powers
        if ctx.gamma == 1 and ctx.step == 1 and n >= ctx.p:
            q, r = divmod(n, ctx.p)
            out = (self ** q).frobenius()
            return out * (self ** r) if r else out
        result = HCombo.from_free(LaurentPoly.const(ctx, 1))
        base = self
        bits = bin(n)[2:]
        for i, bit in enumerate(bits):
            if i:
                result = result * result
            if bit == "1":
                result = result * base
        return result if n else HCombo.from_free(LaurentPoly.const(ctx, 1))

    def frobenius(self) -> "HCombo":
        """Substitute w -> w**P exactly: H_t(w**P) expands recursively into
        H-series of shorter prefixes."""
        ctx = self.ctx
        out = HCombo.from_free(
            LaurentPoly(ctx, {e * ctx.phi_base: c for e, c in self.free.terms.items()})
        )
        for comp, q in self.hterms.items():
            q2 = LaurentPoly(ctx, {e * ctx.phi_base: c for e, c in q.terms.items()})
            out = out + _frob_h(ctx, comp).scale(q2)
        return out.reduce()

    # -- series and extraction ----------------------------------------------------

    def to_series(self, order: int) -> TruncSeries:
        """Direct enumeration of exponent tuples below the truncation order."""
        ctx = self.ctx
        acc: dict[int, int] = {}
        for e, c in self.free.terms.items():
            if e < order:
                acc[e] = acc.get(e, 0) + c
        for comp, q in self.hterms.items():
            lo = min(q.terms) if q.terms else 0
            for expo in _h_exponents(ctx.phi_base, comp, order - lo):
                for e, c in q.terms.items():
                    k = expo + e
                    if k < order:
                        acc[k] = acc.get(k, 0) + c
        return TruncSeries.from_dict(ctx.modulus, order, acc)

    def coeff(self, m: int) -> int:
        """Coefficient of w**M, via the greedy valuation algorithm.

        Requires the normal form; O(log M) big-integer operations per H-term.
        """
        if not self.normalized:
            raise ValueError("combo not normalized; call reduce() first")
        ctx = self.ctx
        total = self.free.coeff(m)
        for comp, q in self.hterms.items():
            for e, c in q.terms.items():
                rem = m - e
                if rem >= 1 and hterm_coeff(comp, rem, ctx.p, ctx.step):
                    total += c
        return total % ctx.modulus

    # -- rendering -------------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "free": self.free.to_json(),
            "terms": [
                {"comp": list(comp), "coeff": q.to_json()}
                for comp, q in self.sorted_terms()
            ],
        }

    @classmethod
    def from_json(cls, ctx: Context, obj: dict) -> "HCombo":
        free = LaurentPoly.from_json(ctx, obj["free"])
        terms = {
            tuple(t["comp"]): LaurentPoly.from_json(ctx, t["coeff"])
            for t in obj["terms"]
        }
        return cls(ctx, free, terms)

    def pretty(self) -> str:
        bits = []
        for comp, q in self.sorted_terms():
            name = "H_{" + ",".join(map(str, comp)) + "}"
            if q.is_monomial() and q.coeff(0):
                c = q.coeff(0)
                bits.append(name if c == 1 else f"{c} {name}")
            else:
                bits.append(f"({q.pretty()}) {name}")
        if not self.free.is_zero() or not bits:
            bits.append(self.free.pretty())
        return " + ".join(bits)

    def __repr__(self) -> str:
        return f"HCombo({self.pretty()})"


@functools.lru_cache(maxsize=None)
def _frob_h_cached(ctx: Context, comp: tuple[int, ...]) -> HCombo:
    if not comp:
        return HCombo.from_free(LaurentPoly.const(ctx, 1))
    prefix = _frob_h_cached(ctx, comp[:-1])
    out = HCombo.single(ctx, comp) - prefix.scale(
        LaurentPoly.monomial(ctx, comp[-1])
    )
    return out


def _frob_h(ctx: Context, comp: tuple[int, ...]) -> HCombo:
    """H_comp(w**P) as a combination of H-series in w (exact identity)."""
    return _frob_h_cached(ctx, comp)


def _h_exponents(base: int, comp: tuple[int, ...], bound: int):
    """All exponents b_1 P^{n_1} + ... + b_r P^{n_r} < bound, n_1 > ... > n_r >= 0."""
    r = len(comp)
    if r == 0:
        return

    def rec(i: int, high: int | None, partial: int):
        # choose n_i, below `high` (None = only the truncation bounds it);
        # positions i+1..r-1 still need r-1-i strictly smaller exponents
        b = comp[i]
        n = r - 1 - i
        p_pow = base ** n
        while (high is None or n < high) and partial + b * p_pow < bound:
            val = partial + b * p_pow
            if i == r - 1:
                yield val
            else:
                yield from rec(i + 1, n, val)
            p_pow *= base
            n += 1

    yield from rec(0, None, 0)


def hterm_coeff(comp, m: int, p: int, step: int = 1) -> int:
    """1 iff w**M appears in H_comp, else 0, by the greedy valuation walk.

    Parts must be coprime to p when step = 1 (divisible parts raise).  The
    walk determines n_r = v_p(M), strips a_r p^{n_r}, and repeats; it fails
    fast when an intermediate difference is <= 0 or a valuation step cannot
    be matched.
    """
    comp = tuple(comp)
    if not comp:
        raise ValueError("empty composition")
    base = p ** step
    for b in comp:
        if b <= 0:
            raise ValueError("composition parts must be positive")
        if b % base == 0:
            raise ValueError("composition not normalized")
    if m < 1:
        return 0
    rem = m
    prev_n = -1
    for i in range(len(comp) - 1, 0, -1):
        b = comp[i]
        v = vp(rem, p)
        vb = vp(b, p) if b % p == 0 else 0
        d = v - vb
        if d < 0 or d % step:
            return 0
        n = d // step
        if n <= prev_n:
            return 0
        rem -= b * base ** n
        if rem <= 0:
            return 0
        prev_n = n
    b = comp[0]
    v = vp(rem, p)
    vb = vp(b, p) if b % p == 0 else 0
    d = v - vb
    if d < 0 or d % step:
        return 0
    n = d // step
    if n <= prev_n:
        return 0
    return 1 if rem == b * base ** n else 0


def expand_phi_power(ctx: Context, k: int, cap: int = PHI_POWER_CAP) -> HCombo:
    """Phi**K = sum over compositions (b_1..b_r) of K of K!/(b_1!...b_r!) H_b.

    Unnormalized; enumerates all 2**(K-1) compositions directly, hence the cap.
    """
    if k < 1:
        raise ValueError("K must be >= 1")
    if k > cap:
        raise ValueError(f"K = {k} exceeds expansion cap {cap} (2**(K-1) compositions)")
    m = ctx.modulus
    terms = {}
    for comp in compositions_of(k):
        c = multinomial_mod(k, comp, m)
        if c:
            terms[comp] = LaurentPoly.const(ctx, c)
    return HCombo(ctx, None, terms)


@functools.lru_cache(maxsize=None)
def phi_power_combo(ctx: Context, k: int) -> HCombo:
    """Normalized combo of Phi**K, memoized per context.

    Computed incrementally (multiply by H_1, reduce) so that coefficients that
    vanish mod p**gamma are pruned along the way; agrees with
    ``expand_phi_power(ctx, k).reduce()``.
    """
    if k == 0:
        return HCombo.from_free(LaurentPoly.const(ctx, 1))
    if k == 1:
        return HCombo.single(ctx, (1,))
    prev = phi_power_combo(ctx, k - 1)
    return prev * HCombo.single(ctx, (1,))
