"""Lifting solver for derivative-free polynomial functional equations.

Given P(z, F) = 0 with integer coefficients determining a unique power-series
solution, verify a proposed base solution modulo p as a polynomial in Phi,
then lift it one p-power at a time up to p**(P**alpha) by solving linear
systems over F_p with Laurent-polynomial entries.  Every solve is certified
against the independent undetermined-coefficient series solution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .context import Context
from .laurent import LaurentPoly, TruncSeries
from .phipoly import PhiPoly

__all__ = [
    "FunctionalEquation",
    "LiftReport",
    "SolverError",
    "series_solution",
    "verify_base",
    "lift",
    "solve",
    "find_base",
    "linear_solve",
    "matrix_determinant",
    "lift_matrix",
]


class SolverError(Exception):
    """Raised when lifting fails or an equation violates its contract."""


# ---------------------------------------------------------------------------
# Functional equations
# ---------------------------------------------------------------------------


class FunctionalEquation:
    """P(z, F) as a set of monomials c * w**e * F**m with exact integer c.

    ``scale_d`` records the substitution z -> z**(1/scale_d) already applied
    (w-exponents e are integers); ``step`` selects the Phi flavour for the
    Ansatz (h = 1 everywhere except the Fuss-Catalan family).
    ``initial_terms`` are the leading z-unit coefficients pinning the unique
    solution.
    """

    __slots__ = ("name", "p", "scale_d", "step", "monomials", "initial_terms")

    def __init__(self, name, p, monomials, initial_terms, scale_d=1, step=1):
        self.name = name
        self.p = p
        self.scale_d = scale_d
        self.step = step
        out: dict[tuple[int, int], int] = {}
        for (m, e), c in (monomials.items() if isinstance(monomials, dict) else monomials):
            if m < 0:
                raise ValueError("negative powers of F are not supported")
            if e % scale_d:
                raise ValueError("equation exponents must be integral in z-units")
            c = int(c)
            if c:
                out[(m, e)] = out.get((m, e), 0) + c
        self.monomials = {k: v for k, v in out.items() if v}
        self.initial_terms = list(initial_terms)
        if not self.initial_terms:
            raise ValueError("at least one initial term is required")

    @classmethod
    def from_dsl(cls, text, p, initial_terms, name="equation", scale_d=1, step=1):
        """Parse a polynomial in tokens z, F with ^, *, + and - (no parens).

        W-exponents are scaled by ``scale_d``; derivative tokens are rejected.
        """
        monos = _parse_dsl(text, scale_d)
        return cls(name, p, monos, initial_terms, scale_d, step)

    def fdegree(self) -> int:
        return max(m for (m, _) in self.monomials)

    def context(self, gamma: int) -> Context:
        return Context(self.p, gamma, self.scale_d, self.step)

    def laurent_coeffs(self, ctx: Context) -> dict[int, LaurentPoly]:
        """F-degree -> Laurent coefficient, reduced into ctx's modulus."""
        acc: dict[int, dict[int, int]] = {}
        for (m, e), c in self.monomials.items():
            acc.setdefault(m, {})
            acc[m][e] = acc[m].get(e, 0) + c
        return {m: LaurentPoly(ctx, d) for m, d in acc.items()}

    def eval_phipoly(self, f: PhiPoly) -> PhiPoly:
        coeffs = self.laurent_coeffs(f.ctx)
        out = PhiPoly.zero(f.ctx, f.alpha)
        power = PhiPoly.const(f.ctx, 1, f.alpha)
        prev = 0
        for m in sorted(coeffs):
            for _ in range(m - prev):
                power = power * f
            prev = m
            out = out + power.scale(coeffs[m])
        return out

    def derivative_phipoly(self, f: PhiPoly) -> PhiPoly:
        """dP/dF evaluated at f."""
        coeffs = self.laurent_coeffs(f.ctx)
        out = PhiPoly.zero(f.ctx, f.alpha)
        power = PhiPoly.const(f.ctx, 1, f.alpha)
        prev = 1
        for m in sorted(coeffs):
            if m == 0:
                continue
            for _ in range(m - prev):
                power = power * f
            prev = m
            out = out + power.scale(coeffs[m].scale(m))
        return out

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "p": self.p,
            "scaleD": self.scale_d,
            "stepH": self.step,
            "monomials": [[m, e, c] for (m, e), c in sorted(self.monomials.items())],
            "initial_terms": [str(v) for v in self.initial_terms],
        }

    def __repr__(self) -> str:
        return f"FunctionalEquation({self.name}, p={self.p})"


def _parse_dsl(text: str, scale_d: int) -> dict[tuple[int, int], int]:
    if "'" in text or "diff" in text or "D(" in text:
        raise ValueError("derivative terms are not supported (derivative-free equations only)")
    # tokenize
    tokens: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "+-*^":
            tokens.append(ch)
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(text[i:j])
            i = j
        elif ch in ("z", "F"):
            tokens.append(ch)
            i += 1
        else:
            raise ValueError(f"unexpected character {ch!r} in equation (tokens: z F ^ * + - digits)")
    monos: dict[tuple[int, int], int] = {}
    pos = 0

    def take_factor():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        expo = 1
        base: tuple[str, int]
        if tok.isdigit():
            base = ("int", int(tok))
        elif tok in ("z", "F"):
            base = (tok, 0)
        else:
            raise ValueError(f"unexpected token {tok!r}")
        if pos < len(tokens) and tokens[pos] == "^":
            pos += 1
            if pos >= len(tokens) or not tokens[pos].isdigit():
                raise ValueError("expected integer exponent after ^")
            expo = int(tokens[pos])
            pos += 1
        return base, expo

    while pos < len(tokens):
        sign = 1
        while pos < len(tokens) and tokens[pos] in "+-":
            if tokens[pos] == "-":
                sign = -sign
            pos += 1
        if pos >= len(tokens):
            raise ValueError("dangling sign in equation")
        coeff, fdeg, zdeg = sign, 0, 0
        while True:
            (kind, val), expo = take_factor()
            if kind == "int":
                coeff *= val**expo
            elif kind == "z":
                zdeg += expo
            else:
                fdeg += expo
            if pos < len(tokens) and tokens[pos] == "*":
                pos += 1
                continue
            break
        key = (fdeg, zdeg * scale_d)
        monos[key] = monos.get(key, 0) + coeff
    return monos


# ---------------------------------------------------------------------------
# Undetermined-coefficient series solution (the independent oracle)
# ---------------------------------------------------------------------------


def _zunit_monomials(eq: FunctionalEquation) -> dict[tuple[int, int], int]:
    return {(m, e // eq.scale_d): c for (m, e), c in eq.monomials.items()}


def series_solution(eq: FunctionalEquation, order: int, modulus=None) -> TruncSeries:
    """Coefficients of the unique solution up to w-order ``order``.

    ``modulus=None`` (or the string "exact") runs over unbounded integers;
    otherwise coefficients are reduced modulo the given integer.
    """
    if modulus == "exact":
        modulus = None
    t_z = -(-order // eq.scale_d)
    coeffs = solve_series_z(eq, t_z, modulus)
    return TruncSeries.from_dict(
        modulus, order, {n * eq.scale_d: c for n, c in enumerate(coeffs) if c}
    )


def solve_series_z(eq: FunctionalEquation, t_z: int, modulus=None) -> list:
    """z-unit coefficient list of the unique solution, length t_z."""
    if modulus == "exact":
        modulus = None
    monos = _zunit_monomials(eq)
    init = list(eq.initial_terms)
    if modulus is not None:
        init = [v % modulus for v in init]
    if t_z <= len(init):
        return init[:t_z]
    deg = max(m for (m, _) in monos)
    p = eq.p

    # locate the linear step: first coefficient of dP/dF at the solution that
    # is a unit (mod p) resp. nonzero (exact)
    probe = len(init)
    pf = _series_eval(
        {(m - 1, e): c * m for (m, e), c in monos.items() if m >= 1}, init, probe, modulus
    )
    e_lin, c_lin = None, None
    for i, c in enumerate(pf):
        if modulus is None:
            if c:
                e_lin, c_lin = i, c
                break
        elif c % modulus:
            if math.gcd(c, p) == 1:
                e_lin, c_lin = i, c
                break
            raise SolverError(
                "equation does not determine series uniquely at this modulus"
            )
    if e_lin is None:
        raise SolverError("cannot locate invertible linear step; supply more initial terms")
    if len(init) <= e_lin:
        raise SolverError("insufficient initial terms for the linear recursion")

    n0 = len(init)
    tt = t_z + e_lin + 1
    res0 = _series_eval(monos, init, min(n0 + e_lin, tt), modulus)
    if any(c % modulus if modulus else c for c in res0[: n0 + e_lin]):
        raise SolverError("initial terms are inconsistent with the equation")

    use_np = modulus is not None and modulus * modulus * tt < (1 << 62)
    if use_np:
        f = np.zeros(tt, dtype=np.int64)
        f[:n0] = init
        powers = [None, f]
        for m in range(2, deg + 1):
            conv = np.convolve(powers[m - 1], f)[:tt] % modulus
            powers.append(conv)
        inv_c = pow(c_lin, -1, modulus)
        binom = [[math.comb(m, j) for j in range(m + 1)] for m in range(deg + 1)]
        for n in range(n0, t_z):
            k = n + e_lin
            r = 0
            for (m, ez), c in monos.items():
                idx = k - ez
                if idx < 0:
                    continue
                if m == 0:
                    if idx == 0:
                        r += c
                elif idx < tt:
                    r += c * int(powers[m][idx])
            fn = (-r * inv_c) % modulus
            if fn:
                for m in range(deg, 1, -1):
                    fnj = 1
                    for j in range(1, m + 1):
                        fnj = fnj * fn % modulus
                        if j * n >= tt:
                            break
                        lo = j * n
                        coef = binom[m][j] * fnj % modulus
                        if m == j:
                            powers[m][lo] = (powers[m][lo] + coef) % modulus
                        else:
                            seg = tt - lo
                            powers[m][lo:] = (
                                powers[m][lo:] + coef * powers[m - j][:seg]
                            ) % modulus
            f[n] = fn
        out = [int(v) for v in f[:t_z]]
    else:
        f = list(init) + [0] * (tt - n0)
        powers = [None, f]
        for m in range(2, deg + 1):
            powers.append(_conv_trunc(powers[m - 1], f, tt, modulus))
        for n in range(n0, t_z):
            k = n + e_lin
            r = 0
            for (m, ez), c in monos.items():
                idx = k - ez
                if idx < 0:
                    continue
                if m == 0:
                    if idx == 0:
                        r += c
                elif idx < tt:
                    r += c * powers[m][idx]
            if modulus is None:
                if r % c_lin:
                    raise SolverError(f"non-exact division at order {n} (coefficient not integral)")
                fn = -r // c_lin
            else:
                fn = (-r * pow(c_lin, -1, modulus)) % modulus
            if fn:
                for m in range(deg, 1, -1):
                    fnj = 1
                    for j in range(1, m + 1):
                        fnj = fnj * fn if modulus is None else fnj * fn % modulus
                        lo = j * n
                        if lo >= tt:
                            break
                        coef = math.comb(m, j) * fnj
                        if m == j:
                            powers[m][lo] += coef
                            if modulus is not None:
                                powers[m][lo] %= modulus
                        else:
                            src = powers[m - j]
                            dst = powers[m]
                            for idx in range(min(tt - lo, tt)):
                                v = src[idx]
                                if v:
                                    dst[lo + idx] += coef * v
                            if modulus is not None:
                                for idx in range(lo, tt):
                                    dst[idx] %= modulus
            f[n] = fn
        out = f[:t_z]
    # independent residual check of the finished prefix
    res = _series_eval(monos, out, t_z, modulus)
    if any(c % modulus if modulus else c for c in res):
        raise SolverError("internal error: solved series does not satisfy the equation")
    return out


def _conv_trunc(a, b, t, modulus):
    out = [0] * t
    for i, x in enumerate(a):
        if x and i < t:
            top = min(len(b), t - i)
            for j in range(top):
                y = b[j]
                if y:
                    out[i + j] += x * y
    if modulus is not None:
        out = [c % modulus for c in out]
    return out


def _series_eval(monos, f, t, modulus):
    """[z^k] sum c z^ez F^m for k < t, F given by the coefficient list f."""
    if t <= 0:
        return []
    deg = max((m for (m, _) in monos), default=0)
    powers = [[1] + [0] * (t - 1)]
    cur = [v for v in f[:t]] + [0] * max(0, t - len(f))
    for m in range(1, deg + 1):
        powers.append(cur if m == 1 else _conv_trunc(powers[m - 1], cur, t, modulus))
    out = [0] * t
    for (m, ez), c in monos.items():
        for i in range(max(0, -ez), t - ez if ez >= 0 else t):
            k = i + ez
            if 0 <= k < t and powers[m][i]:
                out[k] += c * powers[m][i]
    if modulus is not None:
        out = [v % modulus for v in out]
    return out


# ---------------------------------------------------------------------------
# Base verification and lifting
# ---------------------------------------------------------------------------


def verify_base(eq: FunctionalEquation, base: PhiPoly) -> bool:
    """True iff P(base) reduces to the structurally zero PhiPoly mod p and the
    base's series prefix matches the equation's initial terms."""
    if base.ctx.gamma != 1:
        raise ValueError("base solutions live modulo p (gamma = 1)")
    if base.ctx.p != eq.p or base.ctx.scale_d != eq.scale_d or base.ctx.step != eq.step:
        raise ValueError("base context does not match the equation")
    residual = eq.eval_phipoly(base).reduce()
    if not residual.is_zero():
        return False
    d = eq.scale_d
    order = d * len(eq.initial_terms)
    s = base.to_series(order)
    lo = min(s.lo, 0)
    for e in range(lo, order):
        want = eq.initial_terms[e // d] % eq.p if (e >= 0 and e % d == 0) else 0
        if s.coeff(e) != want:
            return False
    return True


def _lift_system(eq: FunctionalEquation, base1: PhiPoly):
    """The beta-independent data of the lift: J = dP/dF(base) mod p reduced,
    and, unless J is a unit scalar, the full comparison matrix."""
    j1 = eq.derivative_phipoly(base1).reduce()
    d = base1.ctx.phi_base ** (base1.alpha + 1)
    if j1.degree() == 0:
        lam = j1.coeff(0)
        if lam.is_monomial():
            e, c = next(iter(lam.terms.items()))
            if math.gcd(c, eq.p) == 1:
                inv = LaurentPoly.monomial(base1.ctx, -e, pow(c, -1, eq.p))
                return ("diagonal", inv)
    cols = []
    phi_i = PhiPoly.const(base1.ctx, 1, base1.alpha)
    for i in range(d):
        if i:
            phi_i = phi_i * PhiPoly.phi(base1.ctx, base1.alpha)
        cols.append((j1 * phi_i).reduce())
    matrix = [[cols[i].coeff(k) for i in range(d)] for k in range(d)]
    return ("matrix", matrix)


def lift_matrix(eq: FunctionalEquation, base1: PhiPoly):
    """The mod-p comparison matrix M of the lift step (rows: Phi powers)."""
    kind, data = _lift_system(eq, base1)
    if kind == "diagonal":
        d = base1.ctx.phi_base ** (base1.alpha + 1)
        lam_inv = data
        e, c = next(iter(lam_inv.terms.items()))
        lam = LaurentPoly.monomial(base1.ctx, -e, pow(c, -1, eq.p))
        zero = LaurentPoly.zero(base1.ctx)
        return [[lam if i == k else zero for i in range(d)] for k in range(d)]
    return data


def _residual_over(eq, f, beta):
    """Reduced residual with every coefficient divided by p**beta, mod p.

    Raises if the residual is not divisible by p**beta (precondition of the
    lift; Remark-4-style failures surface in the linear solve instead).
    """
    ctx = f.ctx
    pb = eq.p**beta
    residual = eq.eval_phipoly(f).reduce()
    ctx1 = Context(eq.p, 1, eq.scale_d, eq.step)
    out = {}
    for k, q in residual.coeffs.items():
        terms = {}
        for e, v in q.terms.items():
            if v % pb:
                raise SolverError(
                    f"current solution does not satisfy the equation mod p^{beta}"
                )
            terms[e] = v // pb
        out[k] = LaurentPoly(ctx1, terms)
    return out


def lift(eq: FunctionalEquation, current: PhiPoly, beta: int, _system=None) -> PhiPoly:
    """One lifting step: from a solution mod p**beta to one mod p**(beta+1)."""
    ctx = current.ctx
    if beta < 1:
        raise ValueError("beta must be >= 1")
    rhs = _residual_over(eq, current, beta)
    ctx1 = Context(eq.p, 1, eq.scale_d, eq.step)
    d = ctx.phi_base ** (current.alpha + 1)
    if _system is None:
        base1 = current.change_ring(ctx1)
        _system = _lift_system(eq, base1)
    kind, data = _system
    zero = LaurentPoly.zero(ctx1)
    c_vec = [rhs.get(k, zero).scale(-1) for k in range(d)]
    if kind == "diagonal":
        b_vec = [c * data for c in c_vec]
    else:
        b_vec = linear_solve(data, c_vec)
    pb = eq.p**beta
    new_coeffs = dict(current.coeffs)
    for i, b in enumerate(b_vec):
        if b.is_zero():
            continue
        add = LaurentPoly(ctx, {e: v * pb for e, v in b.terms.items()})
        cur = new_coeffs.get(i)
        add = add if cur is None else cur + add
        if add.is_zero():
            new_coeffs.pop(i, None)
        else:
            new_coeffs[i] = add
    return PhiPoly(ctx, current.alpha, new_coeffs)


@dataclass
class LiftReport:
    solution: PhiPoly
    reached_beta: int
    target_beta: int
    steps: list = field(default_factory=list)
    certified: bool = False
    cert_order: int = 0
    failure: str | None = None

    def to_json(self) -> dict:
        return {
            "modulus": str(self.solution.ctx.modulus),
            "reached_beta": self.reached_beta,
            "target_beta": self.target_beta,
            "steps": self.steps,
            "certified": self.certified,
            "cert_order": self.cert_order,
            "failure": self.failure,
            "solution": self.solution.to_json(),
        }


def solve(eq: FunctionalEquation, base: PhiPoly, alpha: int, cert_order=None) -> LiftReport:
    """Run the full lift: base mod p -> solution mod p**(P**alpha), certified
    against the series oracle at ``cert_order`` (default p**(alpha+4), w-units)."""
    if base.alpha != alpha:
        base = base.with_alpha(alpha)
    if not verify_base(eq, base):
        raise SolverError("base solution fails verification mod p")
    P = base.ctx.phi_base
    target = P**alpha
    ctx = Context(eq.p, target, eq.scale_d, eq.step)
    f = base.change_ring(ctx)
    ctx1 = Context(eq.p, 1, eq.scale_d, eq.step)
    system = _lift_system(eq, base.change_ring(ctx1))
    report = LiftReport(f, 1, target)
    if system[0] == "matrix":
        det = matrix_determinant(system[1])
        report.steps.append({"matrix": f"{len(system[1])}x{len(system[1])}",
                             "det_mod_p": det.pretty() if det is not None else "0"})
    else:
        report.steps.append({"matrix": "diagonal"})
    for beta in range(1, target):
        try:
            f = lift(eq, f, beta, _system=system)
        except SolverError as exc:
            report.solution = f
            report.failure = f"lift failed at beta={beta}: {exc}"
            return report
        report.reached_beta = beta + 1
        report.steps.append({"beta": beta + 1})
    # final self-check: residual structurally zero at full precision
    resid = eq.eval_phipoly(f).reduce()
    if not resid.is_zero():
        report.solution = f
        report.failure = "final residual not structurally zero"
        return report
    t_cert = cert_order if cert_order is not None else eq.p ** (alpha + 4)
    oracle = series_solution(eq, t_cert, ctx.modulus)
    mine = f.to_series(t_cert)
    report.solution = f
    report.cert_order = t_cert
    if mine == oracle:
        report.certified = True
    else:
        report.failure = f"certification mismatch at w-exponent {mine.first_difference(oracle)}"
    return report


# ---------------------------------------------------------------------------
# Fraction-field linear algebra over F_p(w)
# ---------------------------------------------------------------------------


def _pnorm(a: list[int], p: int) -> tuple[int, ...]:
    a = [c % p for c in a]
    while a and a[-1] == 0:
        a.pop()
    return tuple(a)


def _pmul(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _pnorm(out, p)


def _padd(a, b, p):
    out = [0] * max(len(a), len(b))
    for i, x in enumerate(a):
        out[i] = x
    for i, y in enumerate(b):
        out[i] = (out[i] + y) % p
    return _pnorm(out, p)


def _pdivmod(a, b, p):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    inv = pow(b[-1], -1, p)
    q = [0] * max(0, len(a) - len(b) + 1)
    for i in range(len(a) - len(b), -1, -1):
        c = a[i + len(b) - 1] % p
        if c:
            c = c * inv % p
            q[i] = c
            for j, y in enumerate(b):
                a[i + j] = (a[i + j] - c * y) % p
    return _pnorm(q, p), _pnorm(a, p)


def _pgcd(a, b, p):
    while b:
        a, b = b, _pdivmod(a, b, p)[1]
    if a:
        inv = pow(a[-1], -1, p)
        a = tuple(c * inv % p for c in a)
    return a


class _Frac:
    __slots__ = ("num", "den", "p")

    def __init__(self, num, den, p, reduce=True):
        if not den:
            raise ZeroDivisionError("zero denominator")
        if reduce and num:
            g = _pgcd(num, den, p)
            if len(g) > 1:
                num = _pdivmod(num, g, p)[0]
                den = _pdivmod(den, g, p)[0]
        if not num:
            den = (1,)
        inv = pow(den[-1], -1, p)
        self.num = tuple(c * inv % p for c in num)
        self.den = tuple(c * inv % p for c in den)
        self.p = p

    def is_zero(self):
        return not self.num

    def __add__(self, o):
        p = self.p
        return _Frac(
            _padd(_pmul(self.num, o.den, p), _pmul(o.num, self.den, p), p),
            _pmul(self.den, o.den, p),
            p,
        )

    def __sub__(self, o):
        return self + o.neg()

    def neg(self):
        return _Frac(tuple((-c) % self.p for c in self.num), self.den, self.p, reduce=False)

    def __mul__(self, o):
        p = self.p
        return _Frac(_pmul(self.num, o.num, p), _pmul(self.den, o.den, p), p)

    def inv(self):
        if not self.num:
            raise ZeroDivisionError("inverting zero")
        return _Frac(self.den, self.num, self.p)


def _laurent_to_frac(q: LaurentPoly, p: int) -> tuple[_Frac, int]:
    """Entry as a fraction times w^shift folded into num/den."""
    if q.is_zero():
        return _Frac((), (1,), p), 0
    lo = min(q.terms)
    coeffs = [0] * (max(q.terms) - lo + 1)
    for e, c in q.terms.items():
        coeffs[e - lo] = c % p
    num = _pnorm(coeffs, p)
    if lo >= 0:
        num = _pnorm([0] * lo + list(num), p)
        return _Frac(num, (1,), p, reduce=False), 0
    den = tuple([0] * (-lo) + [1])
    return _Frac(num, den, p), 0


def _frac_to_laurent(fr: _Frac, ctx: Context) -> LaurentPoly:
    """Accept only monomial denominators c*w^k; absorb them as shifts."""
    nz = [i for i, c in enumerate(fr.den) if c]
    if len(nz) != 1:
        raise SolverError("non-Laurent solution (denominator is not a monomial)")
    k = nz[0]
    inv = pow(fr.den[k], -1, ctx.p)
    return LaurentPoly(ctx, {i - k: c * inv for i, c in enumerate(fr.num) if c})


def linear_solve(matrix, rhs):
    """Solve M b = c over the rational function field F_p(w); entries are
    LaurentPolys with gamma = 1.  Solutions must come out Laurent (monomial
    denominators only); singular systems raise."""
    if not matrix:
        return []
    ctx = None
    for row in matrix:
        for q in row:
            ctx = q.ctx
            break
        if ctx:
            break
    p = ctx.p
    n = len(matrix)
    if any(len(row) != n for row in matrix) or len(rhs) != n:
        raise ValueError("linear_solve expects a square system")
    a = [[_laurent_to_frac(q, p)[0] for q in row] for row in matrix]
    b = [_laurent_to_frac(q, p)[0] for q in rhs]
    perm = list(range(n))
    for col in range(n):
        piv = next((r for r in range(col, n) if not a[r][col].is_zero()), None)
        if piv is None:
            raise SolverError("inconsistent or underdetermined lift system")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            b[col], b[piv] = b[piv], b[col]
        inv = a[col][col].inv()
        for r in range(col + 1, n):
            if a[r][col].is_zero():
                continue
            factor = a[r][col] * inv
            for cc in range(col, n):
                a[r][cc] = a[r][cc] - factor * a[col][cc]
            b[r] = b[r] - factor * b[col]
    xs: list[_Frac] = [None] * n
    for r in range(n - 1, -1, -1):
        acc = b[r]
        for cc in range(r + 1, n):
            acc = acc - a[r][cc] * xs[cc]
        xs[r] = acc * a[r][r].inv()
    return [_frac_to_laurent(x, ctx) for x in xs]


def matrix_determinant(matrix):
    """Determinant of a matrix of gamma = 1 LaurentPolys, as a LaurentPoly
    when the result has a monomial denominator (None for zero)."""
    if not matrix:
        return None
    ctx = matrix[0][0].ctx
    p = ctx.p
    n = len(matrix)
    a = [[_laurent_to_frac(q, p)[0] for q in row] for row in matrix]
    det = _Frac((1,), (1,), p)
    sign = 1
    for col in range(n):
        piv = next((r for r in range(col, n) if not a[r][col].is_zero()), None)
        if piv is None:
            return None
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            sign = -sign
        det = det * a[col][col]
        inv = a[col][col].inv()
        for r in range(col + 1, n):
            if a[r][col].is_zero():
                continue
            factor = a[r][col] * inv
            for cc in range(col, n):
                a[r][cc] = a[r][cc] - factor * a[col][cc]
    if sign < 0:
        det = det.neg()
    return _frac_to_laurent(det, ctx)


# ---------------------------------------------------------------------------
# Generic base finder
# ---------------------------------------------------------------------------


def find_base(eq: FunctionalEquation, alpha: int, window=None, fit_order=None):
    """Fit a mod-p PhiPoly base to the series solution and certify it exactly.

    Returns a verified PhiPoly or None.  The fit is linear over F_p on the
    truncated series; verify_base supplies the exact (H-basis) certification.
    """
    ctx1 = Context(eq.p, 1, eq.scale_d, eq.step)
    d_bound = ctx1.phi_base ** (alpha + 1)
    if window is None:
        window = range(-2 * eq.scale_d, d_bound * eq.scale_d + 1)
    window = list(window)
    unknowns = [(i, e) for i in range(d_bound) for e in window]
    t_w = fit_order if fit_order is not None else 2 * len(unknowns) + 4 * eq.scale_d + 32
    target = series_solution(eq, t_w, eq.p)
    from .phipoly import phi_series

    phi = phi_series(ctx1, t_w)
    pow_series = [TruncSeries.from_dict(eq.p, t_w, {0: 1})]
    for i in range(1, d_bound):
        pow_series.append(pow_series[-1] * phi)
    lo = min(window)
    rows = []
    rhs = []
    for k in range(lo, t_w):
        row = []
        for (i, e) in unknowns:
            idx = k - e
            row.append(pow_series[i].coeff(idx) if 0 <= idx < pow_series[i].order else 0)
        rows.append(row)
        rhs.append(target.coeff(k) if 0 <= k < target.order else 0)
    sol = _solve_fp(rows, rhs, eq.p)
    if sol is None:
        return None
    coeffs: dict[int, dict[int, int]] = {}
    for (i, e), v in zip(unknowns, sol):
        if v % eq.p:
            coeffs.setdefault(i, {})[e] = v
    cand = PhiPoly(ctx1, alpha, {i: LaurentPoly(ctx1, d) for i, d in coeffs.items()})
    return cand if verify_base(eq, cand) else None


def _solve_fp(rows, rhs, p):
    """Particular solution of an overdetermined F_p system, or None."""
    m = len(rows)
    n = len(rows[0]) if rows else 0
    a = [[rows[r][c] % p for c in range(n)] + [rhs[r] % p] for r in range(m)]
    pivots = []
    r0 = 0
    for col in range(n):
        piv = next((r for r in range(r0, m) if a[r][col]), None)
        if piv is None:
            continue
        a[r0], a[piv] = a[piv], a[r0]
        inv = pow(a[r0][col], -1, p)
        a[r0] = [v * inv % p for v in a[r0]]
        for r in range(m):
            if r != r0 and a[r][col]:
                f = a[r][col]
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[r0])]
        pivots.append(col)
        r0 += 1
        if r0 == m:
            break
    for r in range(r0, m):
        if a[r][n]:
            return None
    sol = [0] * n
    for r, col in enumerate(pivots):
        sol[col] = a[r][n]
    return sol
