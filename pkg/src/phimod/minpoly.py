"""Minimal polynomials of Phi modulo prime powers.

A polynomial A(z, t), monic in t with integer coefficients, is minimal for
the modulus p**gamma if A(z, Phi(z)) = 0 modulo p**gamma and no monic
polynomial of smaller t-degree vanishes.  Verification here is EXACT: the
substituted polynomial is expanded into the normalized H-basis, whose linear
independence makes the zero test conclusive (no truncation involved).

The expansion is organised A1-adically, A1 = t**p - t + z: writing
A = sum_j C_j * A1**j with deg_t C_j < p and using A1(Phi) = p*G exactly,
the j-th digit only matters modulo p**(gamma - j), which keeps the H-basis
expansions small even at t-degree p**2.
"""

from __future__ import annotations

import functools
import logging
import math

from .context import Context, vp, vp_factorial
from .hseries import HCombo, phi_power_combo
from .laurent import LaurentPoly
from .phipoly import phi_series

__all__ = [
    "BivarPoly",
    "verify_vanishing",
    "verify_vanishing_truncated",
    "phi_substitute",
    "degree_lower_bound",
    "compose_min_poly",
    "search_min_poly",
    "prop2_power",
    "prop2_top_corrected",
    "prop2_top_displayed",
]

log = logging.getLogger(__name__)


class BivarPoly:
    """Integer polynomial in z and t, stored as {(z_exp, t_exp): coeff}."""

    __slots__ = ("monomials",)

    def __init__(self, monomials=None):
        out: dict[tuple[int, int], int] = {}
        if monomials:
            items = monomials.items() if isinstance(monomials, dict) else monomials
            for (a, b), c in items:
                if a < 0 or b < 0:
                    raise ValueError("BivarPoly exponents must be >= 0")
                c = out.get((a, b), 0) + c
                if c:
                    out[(a, b)] = c
                else:
                    out.pop((a, b), None)
        self.monomials = out

    # -- construction ----------------------------------------------------------

    @classmethod
    def t_minus_phi_relation(cls, p: int) -> "BivarPoly":
        """t**p - t + z, the minimal polynomial for the modulus p."""
        return cls({(0, p): 1, (0, 1): -1, (1, 0): 1})

    @classmethod
    def parse(cls, text: str) -> "BivarPoly":
        return _parse_bivar(text)

    # -- queries ----------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.monomials

    def t_degree(self) -> int:
        return max((b for (_, b) in self.monomials), default=-1)

    def z_degree(self) -> int:
        return max((a for (a, _) in self.monomials), default=-1)

    def is_monic_in_t(self) -> bool:
        d = self.t_degree()
        lead = [( a, c) for (a, b), c in self.monomials.items() if b == d]
        return lead == [(0, 1)]

    def __eq__(self, other) -> bool:
        return isinstance(other, BivarPoly) and self.monomials == other.monomials

    __hash__ = None  # type: ignore[assignment]

    # -- arithmetic ----------------------------------------------------------------

    def __add__(self, other: "BivarPoly") -> "BivarPoly":
        out = dict(self.monomials)
        for k, c in other.monomials.items():
            c2 = out.get(k, 0) + c
            if c2:
                out[k] = c2
            else:
                out.pop(k, None)
        return BivarPoly(out)

    def __sub__(self, other: "BivarPoly") -> "BivarPoly":
        return self + other.scale(-1)

    def scale(self, c: int) -> "BivarPoly":
        return BivarPoly({k: c * v for k, v in self.monomials.items()})

    def __mul__(self, other: "BivarPoly") -> "BivarPoly":
        out: dict[tuple[int, int], int] = {}
        for (a1, b1), c1 in self.monomials.items():
            for (a2, b2), c2 in other.monomials.items():
                k = (a1 + a2, b1 + b2)
                c = out.get(k, 0) + c1 * c2
                if c:
                    out[k] = c
                else:
                    out.pop(k, None)
        return BivarPoly(out)

    def __pow__(self, n: int) -> "BivarPoly":
        result = BivarPoly({(0, 0): 1})
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def divmod_t(self, other: "BivarPoly"):
        """Exact division in t by a polynomial monic in t, over Z[z]."""
        if not other.is_monic_in_t():
            raise ValueError("divisor must be monic in t")
        d = other.t_degree()
        rem = dict(self.monomials)
        quo: dict[tuple[int, int], int] = {}

        def t_deg() -> int:
            return max((b for (_, b) in rem), default=-1)

        while t_deg() >= d:
            top = t_deg()
            leads = [(a, c) for (a, b), c in rem.items() if b == top]
            for a0, c0 in leads:
                quo[(a0, top - d)] = quo.get((a0, top - d), 0) + c0
                for (a, b), c in other.monomials.items():
                    k = (a0 + a, top - d + b)
                    c2 = rem.get(k, 0) - c0 * c
                    if c2:
                        rem[k] = c2
                    else:
                        rem.pop(k, None)
        return BivarPoly(quo), BivarPoly(rem)

    # -- rendering -------------------------------------------------------------------

    def to_json(self) -> dict:
        return {"monomials": [[c, a, b] for (a, b), c in sorted(self.monomials.items())]}

    @classmethod
    def from_json(cls, obj: dict) -> "BivarPoly":
        return cls({(int(a), int(b)): int(c) for c, a, b in obj["monomials"]})

    def pretty(self) -> str:
        if not self.monomials:
            return "0"
        bits = []
        for (a, b), c in sorted(self.monomials.items(), key=lambda kv: (-kv[0][1], -kv[0][0])):
            parts = []
            if abs(c) != 1 or (a == 0 and b == 0):
                parts.append(str(abs(c)))
            if a:
                parts.append("z" if a == 1 else f"z^{a}")
            if b:
                parts.append("t" if b == 1 else f"t^{b}")
            term = "*".join(parts)
            bits.append(("- " if c < 0 else "+ ") + term)
        s = " ".join(bits)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    def __repr__(self) -> str:
        return f"BivarPoly({self.pretty()})"


# ---------------------------------------------------------------------------
# Parsing (parenthesised integer polynomials in z and t)
# ---------------------------------------------------------------------------


def _parse_bivar(text: str) -> BivarPoly:
    tokens: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "+-*^()":
            tokens.append(ch)
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(text[i:j])
            i = j
        elif ch in ("z", "t"):
            tokens.append(ch)
            i += 1
        else:
            raise ValueError(f"unexpected character {ch!r} in polynomial")
    pos = 0

    def expr() -> BivarPoly:
        nonlocal pos
        out = term()
        while pos < len(tokens) and tokens[pos] in "+-":
            op = tokens[pos]
            pos += 1
            nxt = term()
            out = out + nxt if op == "+" else out - nxt
        return out

    def term() -> BivarPoly:
        nonlocal pos
        out = factor()
        while pos < len(tokens) and (tokens[pos] == "*" or tokens[pos] in "(zt" or tokens[pos].isdigit()):
            if tokens[pos] == "*":
                pos += 1
            out = out * factor()
        return out

    def factor() -> BivarPoly:
        nonlocal pos
        if pos < len(tokens) and tokens[pos] == "-":
            pos += 1
            return factor().scale(-1)
        if pos < len(tokens) and tokens[pos] == "+":
            pos += 1
            return factor()
        base = primary()
        if pos < len(tokens) and tokens[pos] == "^":
            pos += 1
            if pos >= len(tokens) or not tokens[pos].isdigit():
                raise ValueError("expected integer exponent after ^")
            e = int(tokens[pos])
            pos += 1
            return base**e
        return base

    def primary() -> BivarPoly:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of polynomial")
        tok = tokens[pos]
        if tok == "(":
            pos += 1
            out = expr()
            if pos >= len(tokens) or tokens[pos] != ")":
                raise ValueError("unbalanced parentheses")
            pos += 1
            return out
        pos += 1
        if tok.isdigit():
            return BivarPoly({(0, 0): int(tok)})
        if tok == "z":
            return BivarPoly({(1, 0): 1})
        if tok == "t":
            return BivarPoly({(0, 1): 1})
        raise ValueError(f"unexpected token {tok!r}")

    out = expr()
    if pos != len(tokens):
        raise ValueError("trailing tokens in polynomial")
    return out


# ---------------------------------------------------------------------------
# Exact substitution of Phi via the A1-adic expansion
# ---------------------------------------------------------------------------


def _phi_relation_combo(ctx: Context) -> HCombo:
    """G = (Phi^p - Phi + z)/p = sum over compositions of p of length >= 2 of
    (p-1)!/(b_1!...b_r!) H_b; an exact identity, already normalized."""
    from .hseries import compositions_of

    p = ctx.p
    terms = {}
    for comp in compositions_of(p):
        if len(comp) < 2:
            continue
        num = math.factorial(p - 1)
        den = math.prod(math.factorial(b) for b in comp)
        assert num % den == 0
        c = (num // den) % ctx.modulus
        if c:
            terms[comp] = LaurentPoly.const(ctx, c)
    return HCombo(ctx, None, terms)


def _bivar_digit_combo(digit: BivarPoly, ctx: Context) -> HCombo:
    """C_j(z, Phi) as a normalized combo; deg_t C_j < p keeps this tiny."""
    out = HCombo.zero(ctx)
    by_t: dict[int, dict[int, int]] = {}
    for (a, b), c in digit.monomials.items():
        by_t.setdefault(b, {})[a * ctx.scale_d] = c
    for b, zpoly in by_t.items():
        q = LaurentPoly(ctx, zpoly)
        out = out + phi_power_combo(ctx, b).scale(q)
    return out


def phi_substitute(a: BivarPoly, p: int, gamma: int) -> HCombo:
    """The normalized H-basis expansion of A(z, Phi) modulo p**gamma.

    Exact: organised along the A1-adic digits of A so that the j-th digit is
    expanded only modulo p**(gamma - j).
    """
    ctx = Context(p, gamma)
    a1 = BivarPoly.t_minus_phi_relation(p)
    digits: list[BivarPoly] = []
    rest = a
    while not rest.is_zero():
        rest, rem = rest.divmod_t(a1)
        digits.append(rem)
    total = HCombo.zero(ctx)
    for j, digit in enumerate(digits):
        if j >= gamma or digit.is_zero():
            continue
        # a digit divisible by p^v only needs precision gamma - j - v
        v = min(vp(c, p) for c in digit.monomials.values())
        v = min(v, gamma - j)
        if j + v >= gamma:
            continue
        prec = gamma - j - v
        ctx_j = Context(p, prec)
        scaled = BivarPoly({k: c // p**v for k, c in digit.monomials.items()})
        term = _bivar_digit_combo(scaled, ctx_j)
        if j:
            g = _phi_relation_combo(ctx_j)
            term = term * (g**j)
        # scale by p^(j+v) and map into the full modulus
        pj = p ** (j + v)
        lifted = HCombo(
            ctx,
            LaurentPoly(ctx, {e: val * pj for e, val in term.free.terms.items()}),
            {
                comp: LaurentPoly(ctx, {e: val * pj for e, val in q.terms.items()})
                for comp, q in term.hterms.items()
            },
        )
        total = total + lifted
    return total


def verify_vanishing(a: BivarPoly, p: int, gamma: int) -> bool:
    """True iff A(z, Phi(z)) = 0 modulo p**gamma, decided exactly in the
    normalized H-basis (Cor-style linear independence, no truncation)."""
    return phi_substitute(a, p, gamma).is_zero()


def verify_vanishing_truncated(a: BivarPoly, p: int, gamma: int, order: int) -> bool:
    """Cross-validation path: substitute the truncated Phi series."""
    ctx = Context(p, gamma)
    phi = phi_series(ctx, order)
    m = ctx.modulus
    by_t: dict[int, dict[int, int]] = {}
    for (az, bt), c in a.monomials.items():
        by_t.setdefault(bt, {})[az] = c
    power = {0: 1}
    from .laurent import TruncSeries

    total = TruncSeries.zero(m, order)
    cur = TruncSeries.from_dict(m, order, {0: 1})
    prev = 0
    for bt in sorted(by_t):
        for _ in range(bt - prev):
            cur = cur * phi
        prev = bt
        total = total + cur.mul_laurent(LaurentPoly(ctx, by_t[bt]))
    return total.is_zero()


# ---------------------------------------------------------------------------
# Degree bounds, composition, and the level search
# ---------------------------------------------------------------------------


def degree_lower_bound(p: int, gamma: int) -> int:
    """Least d with v_p(d!) >= gamma; always divisible by p."""
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    d = 1
    while vp_factorial(d, p) < gamma:
        d += 1
    assert d % p == 0
    return d


def level_modulus_exponent(p: int, delta: int) -> int:
    """gamma covered by the level-delta polynomial: (p**delta - 1)/(p - 1)."""
    return (p**delta - 1) // (p - 1)


def compose_min_poly(family, p: int, gamma: int, trust_family: bool = False) -> BivarPoly:
    """Minimal-degree candidate for p**gamma from a level family A_1..A_m.

    A_delta must vanish modulo p**((p**delta - 1)/(p - 1)); the returned
    product uses the p-ary digits of the degree lower bound and is verified
    before being returned.
    """
    family = list(family)
    if not trust_family:
        for delta, a in enumerate(family, start=1):
            if a.t_degree() != p**delta:
                raise ValueError(f"family member {delta} must have degree p^{delta}")
            if not verify_vanishing(a, p, level_modulus_exponent(p, delta)):
                raise ValueError(f"family member {delta} fails its level verification")
    d = degree_lower_bound(p, gamma)
    digits = []
    q = d
    while q:
        q, r = divmod(q, p)
        digits.append(r)
    # digits[0] corresponds to p^0 and is always 0 (d divisible by p)
    if digits[0]:
        raise AssertionError("degree lower bound not divisible by p")
    if len(digits) - 1 > len(family):
        raise ValueError(
            f"gamma={gamma} needs a family member at level delta={len(digits) - 1}"
        )
    out = BivarPoly({(0, 0): 1})
    for delta, mult in enumerate(digits[1:], start=1):
        if mult:
            out = out * family[delta - 1] ** mult
    if not verify_vanishing(out, p, gamma):
        raise AssertionError("composed candidate fails verification")
    return out


def prop2_power(p: int, k: int) -> BivarPoly:
    """(t**p - t + z)**k, vanishing modulo p**k for 1 <= k <= p."""
    return BivarPoly.t_minus_phi_relation(p) ** k


def prop2_top_displayed(p: int) -> BivarPoly:
    """(t**p - t + z)**p - p**(p-1) (t**2 - t + z), the gamma = p+1 candidate
    as displayed in the source; see prop2_top_corrected."""
    corr = BivarPoly({(0, 2): 1, (0, 1): -1, (1, 0): 1})
    return prop2_power(p, p) - corr.scale(p ** (p - 1))


def prop2_top_corrected(p: int) -> BivarPoly:
    """(t**p - t + z)**p - p**(p-1) ((t - z)**p - t + z + z**p): vanishes
    modulo p**(p+1) (the displayed form does not; its correction term is an
    extraction artifact)."""
    tz = BivarPoly({(0, 1): 1, (1, 0): -1}) ** p
    corr = tz + BivarPoly({(0, 1): -1, (1, 0): 1, (p, 0): 1})
    return prop2_power(p, p) - corr.scale(p ** (p - 1))


def search_min_poly(a_prev: BivarPoly, p: int, z_slack: int = 2):
    """Search for a level-(delta) polynomial from the level-(delta-1) one.

    Perturbs A_prev**p by p**sigma * x_{a,b} z^a t^b over the support
    rectangle of A_prev**p (plus z-slack) and solves the linear system that
    makes the H-basis expansion vanish modulo p**Gamma, Gamma =
    (p**delta - 1)/(p - 1).  The nominal scale sigma = (p**delta - p)/(p - 1)
    is tried first; if that system is inconsistent the scale is lowered (the
    gamma = p+1 member of the Prop-2 family genuinely requires scale p-1).
    Returns a verified BivarPoly, or None -- which would be evidence against
    the minimal-degree conjecture and is logged prominently.
    """
    deg_prev = a_prev.t_degree()
    delta_prev = round(math.log(deg_prev, p))
    if p**delta_prev != deg_prev:
        raise ValueError("previous polynomial must have degree p^(delta-1)")
    if not verify_vanishing(a_prev, p, level_modulus_exponent(p, delta_prev)):
        raise ValueError("previous polynomial fails its level verification")
    delta = delta_prev + 1
    gamma = level_modulus_exponent(p, delta)
    sigma0 = (p**delta - p) // (p - 1)
    bpow = a_prev**p
    residual = phi_substitute(bpow, p, gamma)
    max_a = bpow.z_degree() + z_slack
    # widen the t-support gradually: structured corrections (low t-degree)
    # verify far more cheaply than ones smeared over the full rectangle
    t_caps = sorted({p + 1, 2 * p + 1, p**delta})
    for t_cap in t_caps:
        support = [(a, b) for a in range(max_a + 1) for b in range(t_cap)]
        for sigma in range(sigma0, 0, -1):
            k = gamma - sigma
            ps = p**sigma
            ok = all(
                v % ps == 0
                for q in [residual.free, *residual.hterms.values()]
                for v in q.terms.values()
            )
            if not ok:
                continue
            sol = _solve_perturbation(residual, support, p, sigma, k)
            if sol is None:
                continue
            x = BivarPoly({k2: v for k2, v in sol.items() if v})
            cand = bpow + x.scale(ps)
            if verify_vanishing(cand, p, gamma):
                if sigma != sigma0:
                    log.info(
                        "level-%d search succeeded at scale p^%d (nominal p^%d)",
                        delta, sigma, sigma0,
                    )
                return cand
    log.warning(
        "search_min_poly found no degree-%d polynomial for p=%d gamma=%d: "
        "evidence against the minimal-degree conjecture", p**delta, p, gamma,
    )
    return None


def _phi_power_reduced_combo(ctx: Context, b: int) -> HCombo:
    """Phi^b as a normalized combo mod p**gamma, degree-reduced first by the
    verified relation (t^p - t + z)**gamma so the expansion stays small."""
    p, k = ctx.p, ctx.gamma
    if b < k * p:
        return phi_power_combo(ctx, b)
    from .phipoly import PhiPoly

    rel = prop2_power(p, k)
    reduced = PhiPoly(ctx, 0, {b: LaurentPoly.const(ctx, 1)}).reduce_by_bivar(rel.monomials)
    out = HCombo.zero(ctx)
    for c, q in reduced.coeffs.items():
        out = out + phi_power_combo(ctx, c).scale(q)
    return out


def _solve_perturbation(residual: HCombo, support, p: int, sigma: int, k: int):
    """Solve residual/p^sigma + sum x_{a,b} (z^a Phi^b) = 0 mod p**k."""
    ctx_k = Context(p, k)
    ps = p**sigma
    pk = p**k
    cols = []
    for (a, b) in support:
        combo = _phi_power_reduced_combo(ctx_k, b).scale(LaurentPoly.monomial(ctx_k, a))
        cols.append(combo)
    rhs_combo = HCombo(
        ctx_k,
        LaurentPoly(ctx_k, {e: -(v // ps) for e, v in residual.free.terms.items()}),
        {
            comp: LaurentPoly(ctx_k, {e: -(v // ps) for e, v in q.terms.items()})
            for comp, q in residual.hterms.items()
        },
    )
    # rows: every (composition | free, w-exponent) with a nonzero entry
    keys: set[tuple] = set()
    for combo in [rhs_combo, *cols]:
        for e in combo.free.terms:
            keys.add((None, e))
        for comp, q in combo.hterms.items():
            for e in q.terms:
                keys.add((comp, e))
    keys = sorted(keys, key=lambda t: (t[0] is not None, t[0] or (), t[1]))
    rows = []
    rhs = []
    for comp, e in keys:
        row = []
        for combo in cols:
            q = combo.free if comp is None else combo.hterms.get(comp)
            row.append(0 if q is None else q.coeff(e))
        rows.append(row)
        q = rhs_combo.free if comp is None else rhs_combo.hterms.get(comp)
        rhs.append(0 if q is None else q.coeff(e))
    sol = _solve_mod_pk(rows, rhs, p, k)
    if sol is None:
        return None
    return {support[i]: v % pk for i, v in enumerate(sol)}


def _solve_mod_pk(rows, rhs, p: int, k: int):
    """Particular solution of an integer system modulo p**k, or None.

    Eliminates with unit pivots (vectorised); when no unit entry remains the
    residual block is uniformly divisible by p and recurses one level down.
    """
    import numpy as np

    pk = p**k
    m = len(rows)
    n = len(rows[0]) if rows else 0
    if m == 0:
        return [0] * n
    a = np.empty((m, n + 1), dtype=np.int64)
    for r in range(m):
        a[r, :n] = [v % pk for v in rows[r]]
        a[r, n] = rhs[r] % pk
    piv_rows: list[tuple[int, int]] = []
    used = np.zeros(m, dtype=bool)
    used_cols: set[int] = set()
    for col in range(n):
        cand = np.nonzero((a[:, col] % p != 0) & ~used)[0]
        if cand.size == 0:
            continue
        piv = int(cand[0])
        inv = pow(int(a[piv, col]), -1, pk)
        a[piv] = a[piv] * inv % pk
        hits = np.nonzero(a[:, col])[0]
        for r in hits:
            if r != piv:
                a[r] = (a[r] - int(a[r, col]) * a[piv]) % pk
        piv_rows.append((piv, col))
        used[piv] = True
        used_cols.add(col)
    free_rows = [r for r in range(m) if not used[r]]
    free_cols = [c for c in range(n) if c not in used_cols]
    sol = [0] * n
    if free_rows:
        if any(int(a[r, n]) % p for r in free_rows):
            return None
        if k == 1:
            if any(int(a[r, n]) % pk for r in free_rows):
                return None
        else:
            # no unit entries remain, so the residual block is uniformly
            # divisible by p; peel one factor and recurse
            for r in free_rows:
                if any(int(a[r, c]) % p for c in free_cols):
                    raise AssertionError("non-unit pivot sweep left a unit entry")
            sub = _solve_mod_pk(
                [[int(a[r, c]) // p for c in free_cols] for r in free_rows],
                [int(a[r, n]) // p for r in free_rows], p, k - 1,
            )
            if sub is None:
                return None
            for c, v in zip(free_cols, sub):
                sol[c] = v % pk
    for r, col in piv_rows:
        acc = int(a[r, n])
        for c in free_cols:
            if sol[c]:
                acc -= int(a[r, c]) * sol[c]
        sol[col] = acc % pk
    return sol
