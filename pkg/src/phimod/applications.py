"""Built-in equation instances, exact closed-form oracles, residue
classifiers, and the appendix verification for blossom trees.

Equations cover: connected non-crossing graphs (cubic over Z, p = 3),
Kreweras walks (cubic, substitution z -> z^(1/2)), Fuss-Catalan numbers
(z f^(p^h) - f + 1 = 0, substitution z -> z^(1/(p^h - 1))), blossom trees
(degree-k equation, substitution z -> z^(1/(p-1))), and the five Gessel
binomial-sum series.  Every oracle is exact big-integer arithmetic with
integrality asserted on each evaluation.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .context import Context
from .laurent import LaurentPoly, phi_arg_frobenius_sum
from .phipoly import PhiPoly
from .solver import FunctionalEquation, solve_series_z

__all__ = [
    "SequenceOracle",
    "ResidueTable",
    "builtin",
    "builtin_names",
    "oracle",
    "oracle_terms",
    "classify",
    "verify_against_oracle",
    "verify_appendix",
    "noncrossing_mod27_phipoly",
    "kreweras_mod27_phipoly",
    "fusscatalan_mod_p2_phipoly",
    "blossom_mod_p2_phipoly",
    "fusscatalan_expected_mod_p2",
    "blossom_expected_mod_p2",
    "blossom_expected_mod_p",
    "gessel_sum",
]


# ---------------------------------------------------------------------------
# Exact oracles
# ---------------------------------------------------------------------------


@dataclass
class SequenceOracle:
    name: str
    fn: object  # n -> exact integer
    provenance: str

    def __call__(self, n: int) -> int:
        return self.fn(n)


def _exact_div(num: int, den: int, what: str) -> int:
    if num % den:
        raise AssertionError(f"{what}: non-integral value {num}/{den}")
    return num // den


def noncrossing_number(n: int) -> int:
    """N_n via the integer series recursion from the cubic equation."""
    if n < 0:
        raise ValueError("n must be >= 0")
    _extend_noncrossing(n)
    return _NONCROSSING_CACHE[n]


_NONCROSSING_CACHE = [0, 1]


def _extend_noncrossing(n: int) -> None:
    if n < len(_NONCROSSING_CACHE):
        return
    eq = builtin("noncrossing").equation
    vals = solve_series_z(eq, n + 1, None)
    _NONCROSSING_CACHE[:] = vals


def noncrossing_number_sum(n: int) -> int:
    """Independent cross-check: N_n = 1/(n-1) sum C(3n-3, n+i+1) C(i, n-2)."""
    if n == 0:
        return 0
    if n == 1:
        return 1
    s = sum(math.comb(3 * n - 3, n + i + 1) * math.comb(i, n - 2) for i in range(n - 2, 2 * n - 3))
    return _exact_div(s, n - 1, "noncrossing sum formula")


def kreweras_number(n: int) -> int:
    """K_n = 4^n / ((n+1)(2n+1)) * C(3n, n); K_0 = 1."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return _exact_div(4**n * math.comb(3 * n, n), (n + 1) * (2 * n + 1), "Kreweras numbers")


def fuss_catalan(n: int, k: int) -> int:
    """F(n;k) = C(kn, n-1)/n for n >= 1; the generating function starts at 1."""
    if n == 0:
        return 1
    return _exact_div(math.comb(k * n, n - 1), n, "Fuss-Catalan numbers")


def blossom_number(n: int, k: int) -> int:
    """B(n;k) = (k+1)/(n((k-1)n+2)) C(kn, n-1); the constant term is (k+1)/2."""
    if k % 2 == 0:
        raise ValueError("k must be odd")
    if n == 0:
        return (k + 1) // 2
    return _exact_div((k + 1) * math.comb(k * n, n - 1), n * ((k - 1) * n + 2), "blossom numbers")


def gessel_sum(which: int, n: int) -> int:
    """The binomial sums f_1..f_5 = h_{j,k,l} for (j,k,l) in the fixed list."""
    j, k, l = _GESSEL_PARAMS[which]
    if n == 0:
        # the n = 0 values follow the generating-function conventions
        return {1: 1, 2: 0, 3: 1, 4: 0, 5: 1}[which]
    total = 0
    for i in range(n - l, 2 * n + j - k + 1):
        if i < 0:
            continue
        total += math.comb(3 * n + j, n + i + k) * math.comb(i, n - l)
    return total


_GESSEL_PARAMS = {1: (1, 1, 0), 2: (0, 1, 0), 3: (0, 0, 0), 4: (-1, 1, 1), 5: (0, 1, 1)}


def oracle(name: str, **params) -> SequenceOracle:
    if name == "noncrossing":
        return SequenceOracle("noncrossing", noncrossing_number, "series recursion")
    if name == "kreweras":
        return SequenceOracle("kreweras", kreweras_number, "closed form")
    if name == "fusscatalan":
        k = params.get("k", params["p"] ** params.get("h", 1))
        return SequenceOracle(f"fusscatalan(k={k})", lambda n: fuss_catalan(n, k), "closed form")
    if name == "blossom":
        k = params.get("k", params.get("p"))
        return SequenceOracle(f"blossom(k={k})", lambda n: blossom_number(n, k), "closed form")
    if name.startswith("gessel_f"):
        which = int(name[-1])
        return SequenceOracle(name, lambda n: gessel_sum(which, n), "binomial sum")
    raise ValueError(f"unknown oracle {name!r}")


def oracle_terms(name: str, n_max: int, **params) -> list[int]:
    orc = oracle(name, **params)
    return [orc(n) for n in range(n_max + 1)]


# ---------------------------------------------------------------------------
# Built-in equations and base solutions
# ---------------------------------------------------------------------------


@dataclass
class Builtin:
    name: str
    equation: FunctionalEquation
    base: object  # alpha -> PhiPoly mod p, or None when no base is known
    oracle: SequenceOracle


def builtin_names() -> list[str]:
    return ["noncrossing", "kreweras", "fusscatalan", "blossom",
            "gessel_f1", "gessel_f2", "gessel_f3", "gessel_f4", "gessel_f5"]


def builtin(name: str, p: int | None = None, h: int = 1, k: int | None = None) -> Builtin:
    if name == "noncrossing":
        eq = FunctionalEquation(
            "noncrossing", 3,
            {(3, 0): 1, (2, 0): 1, (1, 1): -3, (0, 2): 2},
            [0, 1],
        )
        return Builtin(name, eq, _noncrossing_base, oracle("noncrossing"))
    if name == "kreweras":
        eq = FunctionalEquation(
            "kreweras", 3,
            {(3, 4): 64, (2, 2): 16, (1, 2): -72, (1, 0): 1, (0, 2): 54, (0, 0): -1},
            [1, 2],
            scale_d=2,
        )
        return Builtin(name, eq, _kreweras_base, oracle("kreweras"))
    if name == "fusscatalan":
        if p is None:
            raise ValueError("fusscatalan requires p")
        P = p**h
        eq = FunctionalEquation(
            f"fusscatalan(p={p},h={h})", p,
            {(P, P - 1): 1, (1, 0): -1, (0, 0): 1},
            [1, 1],
            scale_d=P - 1,
            step=h,
        )
        return Builtin(name, eq, lambda alpha: _fusscatalan_base(p, h, alpha),
                       oracle("fusscatalan", p=p, h=h))
    if name == "blossom":
        if p is None:
            raise ValueError("blossom requires p")
        if k is None:
            k = p
        eq = _blossom_equation(k, p)
        base = (lambda alpha: _blossom_base(p, alpha)) if k == p else None
        return Builtin(name, eq, base, oracle("blossom", k=k))
    if name.startswith("gessel_f") and name[-1] in "12345":
        which = int(name[-1])
        eq = _gessel_equation(which)
        return Builtin(name, eq, lambda alpha: _gessel_base(which, alpha),
                       oracle(name))
    raise ValueError(f"unknown builtin {name!r}")


def _noncrossing_base(alpha: int) -> PhiPoly:
    ctx = Context(3, 1)
    s = phi_arg_frobenius_sum(ctx, alpha)
    one = LaurentPoly.const(ctx, 1)
    return PhiPoly(ctx, alpha, {
        0: s * s + s,
        3**alpha: one - s,
        2 * 3**alpha: one,
    })


def _kreweras_base(alpha: int) -> PhiPoly:
    ctx = Context(3, 1, scale_d=2)
    s = phi_arg_frobenius_sum(ctx, alpha)
    wm2 = LaurentPoly.monomial(ctx, -2)
    return PhiPoly(ctx, alpha, {
        0: s * s * wm2,
        3**alpha: (s * wm2).scale(-1),
        2 * 3**alpha: wm2,
    })


def _fusscatalan_base(p: int, h: int, alpha: int) -> PhiPoly:
    P = p**h
    ctx = Context(p, 1, scale_d=P - 1, step=h)
    a0 = LaurentPoly(ctx, [(P**j - 1, 1) for j in range(alpha)])
    return PhiPoly(ctx, alpha, {0: a0, P**alpha: LaurentPoly.monomial(ctx, -1)})


def _blossom_base(p: int, alpha: int) -> PhiPoly:
    ctx = Context(p, 1, scale_d=p - 1)
    s = phi_arg_frobenius_sum(ctx, alpha)
    inv2 = (p + 1) // 2  # inverse of 2 mod p
    wm2 = LaurentPoly.monomial(ctx, -2)
    return PhiPoly(ctx, alpha, {
        0: (s * s * wm2).scale(inv2),
        p**alpha: s * wm2,
        2 * p**alpha: wm2.scale(inv2),
    })


def _blossom_equation(k: int, p: int) -> FunctionalEquation:
    if k % 2 == 0:
        raise ValueError("blossom trees require odd k")
    if (k - 1) % p == 0:
        raise ValueError("k = 1 (mod p): the equation does not determine the series")
    half = (k - 1) // 2
    monos: dict[tuple[int, int], int] = {}
    d = p - 1  # scale
    monos[(k, 2 * d)] = 1
    for s in range(0, (k + 1) // 2 + 1):
        c = (
            Fraction((-1) ** s * (k + 1), (k - s + 1) * (k - s))
            * math.comb(k - s + 1, s)
            * k ** (k - 2 * s + 1)
            * Fraction(half) ** s
        )
        if c.denominator != 1:
            raise AssertionError("blossom equation coefficient not integral")
        monos[(s, d)] = monos.get((s, d), 0) + int(c)
    sign = (-1) ** k
    monos[(1, 0)] = monos.get((1, 0), 0) - sign * half ** (k - 1)
    monos[(0, 0)] = monos.get((0, 0), 0) + sign * (k + 1) // 2 * half ** (k - 1)
    return FunctionalEquation(
        f"blossom(k={k},p={p})", p, monos,
        [(k + 1) // 2, blossom_number(1, k)],
        scale_d=d,
    )


def _gessel_equation(which: int) -> FunctionalEquation:
    base = {(3, 0): 1, (3, 2): -108}
    extra = {
        1: {(1, 0): -3, (0, 0): 2},
        2: {(1, 0): -1, (1, 1): -9, (0, 1): 1},
        3: {(1, 0): -1, (1, 1): -9, (0, 1): -1},
        4: {(2, 0): 1, (2, 2): -108, (1, 1): 3, (1, 2): -36, (0, 2): -4},
        5: {(1, 0): -1, (0, 1): -8},
    }[which]
    monos = dict(base)
    for key, c in extra.items():
        monos[key] = monos.get(key, 0) + c
    init = [gessel_sum(which, 0), gessel_sum(which, 1)]
    return FunctionalEquation(f"gessel_f{which}", 3, monos, init)


def _gessel_base(which: int, alpha: int) -> PhiPoly:
    ctx = Context(3, 1)
    s = phi_arg_frobenius_sum(ctx, alpha)
    one = LaurentPoly.const(ctx, 1)
    if which == 1:
        return PhiPoly(ctx, alpha, {0: one})
    if which == 2:
        return PhiPoly(ctx, alpha, {0: s, 3**alpha: one})
    if which == 3:
        return PhiPoly(ctx, alpha, {0: one - s, 3**alpha: one.scale(-1)})
    if which == 4:
        return _noncrossing_base(alpha)
    if which == 5:
        return PhiPoly(ctx, alpha, {0: one + s, 3**alpha: one})
    raise ValueError(which)


# ---------------------------------------------------------------------------
# The displayed mod-27 / mod-p^2 solutions (golden data from the applications)
# ---------------------------------------------------------------------------


def noncrossing_mod27_phipoly() -> PhiPoly:
    ctx = Context(3, 3)
    data = {
        0: {3: 18, 2: 1, 1: 1},
        1: {3: 18, 2: 12},
        2: {2: 3, 1: 15},
        3: {2: 9, 1: 5, 0: 13},
        4: {2: 9, 1: 6, 0: 24},
        5: {1: 15, 0: 6},
        6: {1: 18, 0: 4},
        7: {1: 18, 0: 21},
        8: {0: 12},
    }
    return PhiPoly(ctx, 1, {i: LaurentPoly(ctx, d) for i, d in data.items()})


def kreweras_mod27_phipoly() -> PhiPoly:
    ctx = Context(3, 3, scale_d=2)
    data = {
        0: {0: 1},
        2: {0: 12},
        3: {-1: 11},
        4: {-2: 6},
        5: {-1: 15},
        6: {-2: 1},
        8: {-2: 3},
    }
    return PhiPoly(ctx, 1, {i: LaurentPoly(ctx, d) for i, d in data.items()})


def fusscatalan_mod_p2_phipoly(p: int) -> PhiPoly:
    """z^(-1/(p-1)) Phi^p(z^(1/(p-1))) modulo p^2."""
    ctx = Context(p, 2, scale_d=p - 1)
    return PhiPoly(ctx, 1, {p: LaurentPoly.monomial(ctx, -1)})


def blossom_mod_p2_phipoly(p: int) -> PhiPoly:
    """(p+1) z^(-1/(p-1)) Phi - (p+1)/2 z^(-2/(p-1)) Phi^2 + z^(-2/(p-1)) Phi^(p+1)."""
    ctx = Context(p, 2, scale_d=p - 1)
    return PhiPoly(ctx, 1, {
        1: LaurentPoly.monomial(ctx, -1, p + 1),
        2: LaurentPoly.monomial(ctx, -2, -(p + 1) // 2),
        p + 1: LaurentPoly.monomial(ctx, -2),
    })


# ---------------------------------------------------------------------------
# Closed-form residue classifications (the p-parametric corollaries)
# ---------------------------------------------------------------------------


def _weighted_reps(m: int, p: int, max_weight: int):
    """All (a_1..a_r) with m = sum a_j p^(i_j), i_1 > ... > i_r >= 0, parts
    coprime to p, total weight sum a_j <= max_weight."""
    out = []

    def rec(rem, weight_left, max_exp, parts):
        if rem == 0:
            if parts:
                out.append(tuple(parts))
            return
        if weight_left <= 0 or rem < 0 or max_exp < 0:
            return
        e = max_exp
        while p**e > rem:
            e -= 1
        for i in range(e, -1, -1):
            if p**i * weight_left < rem:
                break  # even the full remaining weight at this exponent falls short
            top = min(weight_left, rem // p**i)
            for a in range(1, top + 1):
                if a % p == 0:
                    continue
                parts.append(a)
                rec(rem - a * p**i, weight_left - a, i - 1, parts)
                parts.pop()

    rec(m, max_weight, m.bit_length() * 4, [])
    return out


def fusscatalan_expected_mod_p2(n: int, p: int) -> int:
    """Expected F(n;p) mod p^2: 1 on n = (p^i - 1)/(p-1), the multinomial
    p!/(a_1!...a_r!) on weight-p representations, else 0."""
    m = (p - 1) * n + 1
    if n == 0:
        return 1
    # single power of p?
    q = m
    while q % p == 0:
        q //= p
    if q == 1:
        return 1
    total = 0
    for parts in _weighted_reps(m, p, p):
        if len(parts) >= 2 and sum(parts) == p:
            total += math.factorial(p) // math.prod(math.factorial(a) for a in parts)
    return total % p**2


def blossom_expected_mod_p2(n: int, p: int) -> int:
    """Expected B(n;p) mod p^2, mirroring the normalized H-expansion of the
    mod-p^2 solution: (p+1)/2 H_2 + (p+1) H_{1,1} - p H_{p+1} + the weight
    (p+1) multinomial sum (r >= 2, parts coprime to p)."""
    m = (p - 1) * n + 2
    total = 0
    for parts in _weighted_reps(m, p, p + 1):
        if parts == (2,):
            total += (p + 1) // 2
        elif parts == (p + 1,):
            total -= p
        elif parts == (1, 1):
            total += p + 1
        if len(parts) >= 2 and sum(parts) == p + 1:
            total += math.factorial(p + 1) // math.prod(math.factorial(a) for a in parts)
    return total % p**2


def blossom_expected_mod_p(n: int, p: int) -> int:
    """Mod-p corollary: 1 on n = (p^{i1}+p^{i2}-2)/(p-1), (p+1)/2 on
    n = (2 p^i - 2)/(p-1), else 0."""
    return blossom_expected_mod_p2(n, p) % p


# ---------------------------------------------------------------------------
# Residue tables
# ---------------------------------------------------------------------------


@dataclass
class ResidueTable:
    modulus: int
    values: list[int]  # index n -> residue
    source: str

    def __getitem__(self, n: int) -> int:
        return self.values[n]

    def __len__(self) -> int:
        return len(self.values)

    def where(self, residue: int) -> list[int]:
        return [n for n, v in enumerate(self.values) if v == residue]

    def to_csv(self, residue: int | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["n", "residue"])
        for n, v in enumerate(self.values):
            if residue is None or v == residue:
                w.writerow([n, v])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"modulus": self.modulus, "source": self.source, "values": self.values}


def classify(solution: PhiPoly, n_max: int, modulus: int | None = None) -> ResidueTable:
    """Residues of the coefficient sequence for n = 0..n_max via extraction."""
    m = solution.ctx.modulus if modulus is None else modulus
    if modulus is not None and solution.ctx.modulus % modulus:
        raise ValueError("modulus must divide the solution's modulus")
    vals = [solution.coefficient(n) % m for n in range(n_max + 1)]
    return ResidueTable(m, vals, "phipoly extraction")


def oracle_table(orc: SequenceOracle, n_max: int, modulus: int) -> ResidueTable:
    return ResidueTable(modulus, [orc(n) % modulus for n in range(n_max + 1)], f"oracle {orc.name}")


def verify_against_oracle(solution: PhiPoly, orc: SequenceOracle, n_max: int,
                          modulus: int | None = None, n_start: int = 0):
    """(ok, first_mismatch): extraction == oracle mod modulus for n <= n_max."""
    m = solution.ctx.modulus if modulus is None else modulus
    for n in range(n_start, n_max + 1):
        if solution.coefficient(n) % m != orc(n) % m:
            return False, n
    return True, None


# ---------------------------------------------------------------------------
# Appendix verification: blossom trees from the Fuss-Catalan tree series
# ---------------------------------------------------------------------------


def verify_appendix(k: int, order: int) -> bool:
    """Exact check that B_k = (1+T_k)(k - (k-1)/2 (1+T_k)) matches the closed
    form and satisfies the degree-k equation identically to the given order.

    T_k is built by iterating T = z (1+T)^k over exact integers.
    """
    if k % 2 == 0 or k < 3:
        raise ValueError("k must be odd and >= 3")
    t = [0] * order
    for _ in range(order):
        # one fixed-point iteration of T = z (1+T)^k gains one order
        base = list(t)
        base[0] += 1
        cur = [1] + [0] * (order - 1)
        for _ in range(k):
            cur = _mul_exact(cur, base, order)
        new = [0] * order
        for i in range(order - 1):
            new[i + 1] = cur[i]
        if new == t:
            break
        t = new
    # T_k coefficients are the Fuss-Catalan numbers
    for n in range(1, order):
        if t[n] != fuss_catalan(n, k):
            return False
    base = list(t)
    base[0] += 1
    half = (k - 1) // 2
    second = [k - half * base[0]] + [-half * v for v in base[1:]]
    bk = _mul_exact(base, second, order)
    # closed form agreement
    for n in range(order):
        if bk[n] != blossom_number(n, k):
            return False
    # equation residual identically zero over the integers
    eq = _blossom_equation_exact(k)
    powers = {0: [1] + [0] * (order - 1)}
    cur = [1] + [0] * (order - 1)
    for m in range(1, k + 1):
        cur = _mul_exact(cur, bk, order)
        powers[m] = cur
    resid = [0] * order
    for (m, ez), c in eq:
        for i, v in enumerate(powers[m]):
            if v and i + ez < order:
                resid[i + ez] += c * v
    return all(v == 0 for v in resid)


def _blossom_equation_exact(k: int):
    """The degree-k blossom equation in plain z-units (no substitution)."""
    half = (k - 1) // 2
    monos: list[tuple[tuple[int, int], int]] = [((k, 2), 1)]
    for s in range(0, (k + 1) // 2 + 1):
        c = (
            Fraction((-1) ** s * (k + 1), (k - s + 1) * (k - s))
            * math.comb(k - s + 1, s)
            * k ** (k - 2 * s + 1)
            * Fraction(half) ** s
        )
        assert c.denominator == 1
        monos.append(((s, 1), int(c)))
    sign = (-1) ** k
    monos.append(((1, 0), -sign * half ** (k - 1)))
    monos.append(((0, 0), sign * (k + 1) // 2 * half ** (k - 1)))
    return monos


def _mul_exact(a, b, order):
    out = [0] * order
    for i, x in enumerate(a):
        if x:
            top = min(len(b), order - i)
            for j in range(top):
                if b[j]:
                    out[i + j] += x * b[j]
    return out
