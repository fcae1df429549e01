"""Compiler from singular vectors to differential operators.

Substituting first-order vector fields for the lowering generators turns an
element of the enveloping algebra into a linear differential operator.  Two
substitutions are provided:

* a bulk-point representation in polar-derived coordinates (r, s) whose
  radial part is separated off, leaving a single-variable Fuchsian operator
  acting on functions of s alone (the watermelon ODE);
* the boundary multi-point representation with spectator variables z_k used
  to produce higher-order null-vector PDE operators and to verify the
  explicit power-product solution of the first-order system.

All operator algebra is exact: normal form keeps derivatives to the right of
coefficients, composition uses the Leibniz rule, coefficients are rational
functions over Q(kappa) or Q(tau).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Mapping, Sequence

from .rational import MultiPoly, RationalFunction, align, poly_divexact, poly_gcd
from .virasoro import KacLabel, UEAElement, singular_vector

__all__ = [
    "LinearDiffOp",
    "OdeOperator",
    "PowerProduct",
    "chebyshev",
    "chebyshev_at",
    "ell0_rs",
    "compile_D",
    "fuchsian_check",
    "indicial_data",
    "transform_flip",
    "transform_inverse",
    "build_bpz_system",
    "z0_build",
    "zbar0_build",
    "apply_to_powerproduct",
    "compile_D_multi",
    "ell0_boundary",
    "compile_D_via_t",
]


# ---------------------------------------------------------------------------
# generic normal-form linear differential operators
# ---------------------------------------------------------------------------


class LinearDiffOp:
    """sum_beta c_beta(vars) d^beta with all derivatives right of coefficients."""

    __slots__ = ("dvars", "terms")

    def __init__(self, dvars: tuple[str, ...],
                 terms: Mapping[tuple, RationalFunction] | None = None):
        self.dvars = tuple(dvars)
        clean: dict[tuple, RationalFunction] = {}
        if terms:
            for b, c in terms.items():
                if c:
                    clean[tuple(b)] = c
        self.terms = clean

    @classmethod
    def zero(cls, dvars: tuple[str, ...]) -> "LinearDiffOp":
        return cls(dvars, {})

    @classmethod
    def identity(cls, dvars: tuple[str, ...], coeff: RationalFunction) -> "LinearDiffOp":
        return cls(dvars, {(0,) * len(dvars): coeff})

    @classmethod
    def partial(cls, dvars: tuple[str, ...], name: str,
                coeff: RationalFunction) -> "LinearDiffOp":
        b = [0] * len(dvars)
        b[dvars.index(name)] = 1
        return cls(dvars, {tuple(b): coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "LinearDiffOp") -> "LinearDiffOp":
        out = dict(self.terms)
        for b, c in other.terms.items():
            s = out.get(b)
            s = c if s is None else s + c
            if s:
                out[b] = s
            else:
                out.pop(b, None)
        return LinearDiffOp(self.dvars, out)

    def __sub__(self, other: "LinearDiffOp") -> "LinearDiffOp":
        return self + other.scale(RationalFunction.const(-1))

    def scale(self, c: RationalFunction) -> "LinearDiffOp":
        if not c:
            return LinearDiffOp(self.dvars)
        return LinearDiffOp(self.dvars, {b: v * c for b, v in self.terms.items()})

    def __mul__(self, other: "LinearDiffOp") -> "LinearDiffOp":
        """Operator composition self o other, renormalized via Leibniz."""
        out: dict[tuple, RationalFunction] = {}
        for b1, c1 in self.terms.items():
            for b2, c2 in other.terms.items():
                self._compose_term(out, b1, c1, b2, c2)
        return LinearDiffOp(self.dvars, {b: c for b, c in out.items() if c})

    def _compose_term(self, out, b1, c1, b2, c2):
        # distribute each derivative of b1 over (c2 d^b2)
        def rec(i: int, partial: tuple, coeff: RationalFunction, mult: int):
            if not coeff:
                return
            if i == len(self.dvars):
                b = tuple(p + q for p, q in zip(partial, b2))
                s = out.get(b)
                add = c1 * coeff * mult
                s = add if s is None else s + add
                if s:
                    out[b] = s
                else:
                    out.pop(b, None)
                return
            name = self.dvars[i]
            d = coeff
            for m in range(0, b1[i] + 1):
                rec(i + 1, partial + (b1[i] - m,), d, mult * comb(b1[i], m))
                if m < b1[i]:
                    d = d.derivative(name)
                    if not d:
                        # higher coefficient derivatives all vanish
                        break
        rec(0, (), c2, 1)

    def apply(self, f: RationalFunction) -> RationalFunction:
        """Act on an explicit rational function of the derivation variables."""
        total = RationalFunction.const(0, f.vars)
        for b, c in self.terms.items():
            g = f
            for name, k in zip(self.dvars, b):
                for _ in range(k):
                    g = g.derivative(name) if name in g.vars else RationalFunction.const(0, g.vars)
            if g:
                total = total + c * g
        return total

    def order(self) -> int:
        return max((sum(b) for b in self.terms), default=0)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0]))

    def __eq__(self, other):
        if not isinstance(other, LinearDiffOp):
            return NotImplemented
        return self.dvars == other.dvars and self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for b, c in self.sorted_terms():
            ds = "".join(f"d{v}^{k}" if k > 1 else f"d{v}" for v, k in zip(self.dvars, b) if k)
            bits.append(f"({c!r}){ds or '1'}")
        return " + ".join(bits)


# ---------------------------------------------------------------------------
# Chebyshev polynomials and the radial substitution
# ---------------------------------------------------------------------------


def chebyshev(kind: str, p: int) -> list[Fraction]:
    """Coefficient list (low to high) of T_p or U_p by the three-term recurrence."""
    if p < 0:
        if kind == "U" and p == -1:
            return []
        raise ValueError("degree must be nonnegative")
    if kind not in ("T", "U"):
        raise ValueError("kind must be 'T' or 'U'")
    prev = [Fraction(1)]
    cur = [Fraction(0), Fraction(1 if kind == "T" else 2)]
    if p == 0:
        return prev
    for _ in range(p - 1):
        nxt = [Fraction(0)] + [2 * c for c in cur]
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return cur


def chebyshev_at(kind: str, p: int, x: RationalFunction) -> RationalFunction:
    """Evaluate the Chebyshev polynomial at a rational-function argument."""
    coeffs = chebyshev(kind, p)
    total = RationalFunction.const(0, x.vars)
    for c in reversed(coeffs):
        total = total * x + RationalFunction.const(c, x.vars)
    return total


RS_VARS = ("kappa", "r", "s")


def _rs_var(name: str) -> RationalFunction:
    return RationalFunction.var(name, RS_VARS)


def ell0_rs(m: int) -> LinearDiffOp:
    """Bulk substitution for L_m, m <= -1, in the rationalized coordinates.

    -r^(m+1) T_|m|((s+1)/(s-1)) d_r  -  r^m U_(|m|-1)((s+1)/(s-1)) 2 s d_s
    """
    if m >= 0:
        raise ValueError("only lowering modes are compiled")
    a = -m
    r = _rs_var("r")
    s = _rs_var("s")
    x = (s + 1) / (s - 1)
    c_r = -(r ** (m + 1)) * chebyshev_at("T", a, x)
    c_s = -(r ** m) * chebyshev_at("U", a - 1, x) * 2 * s
    return LinearDiffOp(("r", "s"), {(1, 0): c_r, (0, 1): c_s})


@dataclass
class OdeOperator:
    """sum_i p_i(s) d_s^i with polynomial coefficients and p_N != 0.

    Coefficients live in Q[kappa, s] (or Q[s] with kappa specialized) after the
    canonical denominator clearing: multiply by the least common denominator,
    divide by the integer content, fix the sign so p_N has a positive leading
    rational.
    """

    var: str
    coeffs: list[MultiPoly]  # index = derivative order

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def apply(self, f: RationalFunction) -> RationalFunction:
        total = RationalFunction.const(0, f.vars)
        for i, p in enumerate(self.coeffs):
            if p.is_zero():
                continue
            g = f
            for _ in range(i):
                g = g.derivative(self.var) if self.var in g.vars else RationalFunction.const(0, g.vars)
            total = total + RationalFunction(p) * g
        return total

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "var": self.var,
            "coeffs": [RationalFunction(p).to_json() for p in self.coeffs],
        }

    def to_latex(self) -> str:
        from .virasoro import _rf_latex
        bits = []
        for i, p in enumerate(self.coeffs):
            if p.is_zero():
                continue
            d = f"\\partial_{self.var}^{{{i}}}" if i > 1 else (f"\\partial_{self.var}" if i else "")
            bits.append(f"\\left({_rf_latex(RationalFunction(p))}\\right){d}")
        return " + ".join(bits) or "0"


def _clear_denominators(var_coeffs: list[RationalFunction]) -> list[MultiPoly]:
    """Canonical clearing: LCD, integer content, positive leading coefficient."""
    nonzero = [c for c in var_coeffs if c]
    if not nonzero:
        raise ValueError("zero operator")
    lcd = MultiPoly.const(nonzero[0].den.vars, 1)
    for c in nonzero:
        lcd, d = align(lcd, c.den)
        g = poly_gcd(lcd, d)
        lcd = lcd * poly_divexact(d, g)
    cleared = []
    for c in var_coeffs:
        if not c:
            cleared.append(None)
            continue
        num, l2 = align(c.num, lcd)
        cleared.append(num * poly_divexact(l2, c.den.with_vars(l2.vars)))
    # collective integer content
    content = Fraction(0)
    for p in cleared:
        if p is None:
            continue
        ic = p.int_content()
        content = ic if not content else Fraction(
            _gcd_int(content.numerator, ic.numerator),
            _lcm_int(content.denominator, ic.denominator),
        )
    lead = cleared[-1]
    _, lc = lead.leading()
    if lc < 0:
        content = -content
    vars0 = lead.vars
    out = []
    for p in cleared:
        out.append(MultiPoly.zero(vars0) if p is None else p.with_vars(vars0).scale(1 / content))
    return out


def _gcd_int(a: int, b: int) -> int:
    from math import gcd
    return gcd(a, b)


def _lcm_int(a: int, b: int) -> int:
    from math import gcd
    return a * b // gcd(a, b) if a and b else 0


def compile_D(n: int, kappa: Fraction | None = None) -> OdeOperator:
    """Compile the order-(n+1) watermelon operator in the variable s.

    Substitutes the bulk vector fields into the level-(n+1) singular vector
    with tau = 4/kappa, restricts to inputs of radial degree zero, verifies
    that the surviving part is exactly r^-(n+1) times an operator in s alone,
    and returns that operator with cleared denominators.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    delta = singular_vector(KacLabel(n + 1, 1))
    if kappa is None:
        tau_val = RationalFunction.const(4, RS_VARS) / _rs_var("kappa")
        uni = RS_VARS
    else:
        kappa = Fraction(kappa)
        if kappa == 0:
            raise ValueError("kappa must be nonzero")
        tau_val = RationalFunction.const(Fraction(4, 1) / kappa, ("r", "s"))
        uni = ("r", "s")

    ops: dict[int, LinearDiffOp] = {}

    def gen_op(idx: int) -> LinearDiffOp:
        op = ops.get(idx)
        if op is None:
            op = ell0_rs(-idx)
            if kappa is not None:
                op = LinearDiffOp(op.dvars, {
                    b: c.substitute({"kappa": RationalFunction.const(kappa, ("kappa",))}).with_vars(uni)
                    for b, c in op.terms.items()
                })
            ops[idx] = op
        return op

    total = LinearDiffOp.zero(("r", "s"))
    for word, coeff in delta.sorted_terms():
        c = coeff.substitute({"tau": tau_val})
        acc = None
        for idx in word:
            acc = gen_op(idx) if acc is None else acc * gen_op(idx)
        total = total + acc.scale(c)

    # restrict to radial degree 0: only pure d_s terms act; each coefficient
    # must be exactly r^-(n+1) times an r-free rational function
    r_pow = _rs_var("r").with_vars(uni) ** (n + 1)
    coeffs: list[RationalFunction] = [RationalFunction.const(0, uni)] * (n + 2)
    for b, c in total.terms.items():
        if b[0] != 0:
            continue  # the (...) d_r residue, unconstrained
        q = c.with_vars(uni) * r_pow
        if q.num.degree_in("r") or q.den.degree_in("r"):
            raise ArithmeticError("radial residue check failed: stray r-power in a d_s coefficient")
        coeffs[b[1]] = q
    if not coeffs[n + 1]:
        raise ArithmeticError("compiled operator lost its top-order term")
    small = tuple(v for v in uni if v != "r")
    cleared = _clear_denominators([c.with_vars(small) for c in coeffs])
    return OdeOperator("s", cleared)


# ---------------------------------------------------------------------------
# Fuchsian structure
# ---------------------------------------------------------------------------


def _as_univariate(p: MultiPoly, var: str) -> dict[int, MultiPoly]:
    i = p.vars.index(var)
    rest = p.vars[:i] + p.vars[i + 1:]
    out: dict[int, dict] = {}
    for e, c in p.terms.items():
        out.setdefault(e[i], {})[e[:i] + e[i + 1:]] = c
    return {d: MultiPoly(rest, t) for d, t in out.items()}


def _shift_poly(p: MultiPoly, var: str, a: Fraction) -> MultiPoly:
    """p(var + a) by binomial expansion."""
    if a == 0:
        return p
    uni = _as_univariate(p, var)
    i = p.vars.index(var)
    out = MultiPoly.zero(p.vars)
    for d, coeff in uni.items():
        for k in range(d + 1):
            term = coeff.scale(Fraction(comb(d, k)) * a ** (d - k))
            out = out + MultiPoly(p.vars, {
                e[:i] + (k,) + e[i:]: c for e, c in term.terms.items()
            })
    return out


def _root_multiplicity(p: MultiPoly, var: str, a: Fraction) -> int:
    """Multiplicity of (var - a) in p (0 if p(a) != 0, large if p = 0)."""
    if p.is_zero():
        return 1 << 30
    factor = MultiPoly(p.vars, {
        tuple(1 if v == var else 0 for v in p.vars): Fraction(1),
        (0,) * len(p.vars): Fraction(-a),
    })
    mult = 0
    while True:
        try:
            q = poly_divexact(p, factor)
        except ValueError:
            return mult
        p = q
        mult += 1


def _rational_roots(p: MultiPoly, var: str) -> list[Fraction]:
    """All rational a with p(a) identically zero in the remaining symbols."""
    uni = _as_univariate(p, var)
    deg = max(uni)
    roots = []
    if 0 not in uni:
        roots.append(Fraction(0))
        while 0 not in uni and deg > 0:
            uni = {d - 1: c for d, c in uni.items() if d > 0}
            deg -= 1
    if deg == 0:
        return roots
    # specialize the remaining symbols generically, then verify candidates
    rest = next(iter(uni.values())).vars
    dense = None
    for trial in range(5):
        point = {v: Fraction(17 + 13 * i + trial, 7) for i, v in enumerate(rest)}
        dense = [Fraction(0)] * (deg + 1)
        for d, c in uni.items():
            dense[d] = c.evaluate(point)
        if dense[deg]:
            break
    if not dense[deg]:
        raise ArithmeticError("could not find a nondegenerate specialization for root search")
    scale = Fraction(0)
    for c in dense:
        if c:
            scale = c if not scale else Fraction(
                _gcd_int(scale.numerator, c.numerator),
                _lcm_int(scale.denominator, c.denominator))
    ints = [int(c / scale) for c in dense]
    while ints and ints[-1] == 0:
        ints.pop()
    lead, trail = ints[-1], next((c for c in ints if c), 0)
    for pnum in _divisors(abs(trail)):
        for qden in _divisors(abs(lead)):
            for cand in (Fraction(pnum, qden), Fraction(-pnum, qden)):
                if cand in roots:
                    continue
                total = MultiPoly.zero(rest)
                for d, c in uni.items():
                    total = total + c.scale(cand ** d)
                if total.is_zero():
                    roots.append(cand)
    return sorted(set(roots))


def _divisors(n: int) -> list[int]:
    if n == 0:
        return [1]
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return sorted(out)


def transform_flip(ode: OdeOperator) -> OdeOperator:
    """Variable flip x = -s (d_s = -d_x)."""
    out = []
    for i, p in enumerate(ode.coeffs):
        q = MultiPoly(p.vars, {
            e: c * (Fraction(-1) ** (e[p.vars.index(ode.var)] + i))
            for e, c in p.terms.items()
        })
        out.append(q)
    return OdeOperator(ode.var, out)


def transform_inverse(ode: OdeOperator) -> OdeOperator:
    """Inversion u = 1/s: conjugate so the point at infinity moves to 0."""
    var = ode.var
    N = ode.order
    uni = (ode.coeffs[-1].vars)
    u = RationalFunction.var(var, uni)
    # d_s = -u^2 d_u; build (-u^2 d_u)^i in normal form
    du = LinearDiffOp((var,), {(1,): -(u * u)})
    powers = [LinearDiffOp.identity((var,), RationalFunction.const(1, uni))]
    for _ in range(N):
        powers.append(du * powers[-1])
    coeffs = [RationalFunction.const(0, uni) for _ in range(N + 1)]
    for i, p in enumerate(ode.coeffs):
        if p.is_zero():
            continue
        # p(1/u) as a rational function
        pu = RationalFunction(p).substitute({var: RationalFunction.const(1, uni) / u})
        for b, c in powers[i].terms.items():
            coeffs[b[0]] = coeffs[b[0]] + pu * c
    return OdeOperator(var, _clear_denominators(coeffs))


def indicial_data(ode: OdeOperator, point) -> tuple[bool, MultiPoly | None]:
    """(regular-singular-or-ordinary?, indicial polynomial in nu).

    ``point`` is a Fraction or the string "inf".  The indicial polynomial is
    returned over the symbols (kappa?, nu); at an ordinary point it reduces to
    nu (nu-1) ... (nu-N+1) scaled by p_N(point).
    """
    if point == "inf":
        return indicial_data(transform_inverse(ode), Fraction(0))
    a = Fraction(point)
    var = ode.var
    N = ode.order
    shifted = [_shift_poly(p, var, a) for p in ode.coeffs]
    v_N = _root_multiplicity(shifted[N], var, Fraction(0))
    regular = True
    mu = None
    for i, p in enumerate(shifted):
        if p.is_zero():
            continue
        v_i = _root_multiplicity(p, var, Fraction(0))
        if v_i - v_N < i - N:
            regular = False
        m = v_i - i
        mu = m if mu is None else min(mu, m)
    if not regular:
        return False, None
    # indicial polynomial from the extremal terms
    rest = shifted[N].vars
    nu_vars = tuple(sorted(set(v for v in rest if v != var) | {"nu"}))
    indicial = MultiPoly.zero(nu_vars)
    for i, p in enumerate(shifted):
        if p.is_zero():
            continue
        v_i = _root_multiplicity(p, var, Fraction(0))
        if v_i - i != mu:
            continue
        uni = _as_univariate(p, var)
        lead = uni[v_i].with_vars(tuple(v for v in nu_vars if v != "nu"))
        # falling factorial nu (nu-1) ... (nu-i+1)
        fall = MultiPoly.const(nu_vars, 1)
        nu = MultiPoly.var("nu", nu_vars)
        for k in range(i):
            fall = fall * (nu - MultiPoly.const(nu_vars, k))
        indicial = indicial + fall * lead.with_vars(nu_vars)
    return True, indicial


def fuchsian_check(ode: OdeOperator) -> dict:
    """Locate the poles of p_i/p_N, test regularity, compute indicial polynomials."""
    var = ode.var
    p_N = ode.coeffs[-1]
    roots = _rational_roots(p_N, var)
    # is anything left after deflating all rational roots?
    residual = p_N
    for a in roots:
        m = _root_multiplicity(residual, var, a)
        factor = MultiPoly(residual.vars, {
            tuple(1 if v == var else 0 for v in residual.vars): Fraction(1),
            (0,) * len(residual.vars): Fraction(-a),
        })
        for _ in range(m):
            residual = poly_divexact(residual, factor)
    unresolved = residual.degree_in(var) > 0

    points: list = list(roots) + ["inf"]
    report = {
        "isFuchsian": not unresolved,
        "singularPoints": [],
        "indicialPolynomials": {},
        "unresolvedFactorDegree": residual.degree_in(var) if unresolved else 0,
    }
    for a in points:
        regular, indicial = indicial_data(ode, a)
        # ordinary finite points are not singular: all ratios regular there
        if a != "inf":
            singular = any(
                _root_multiplicity(p, var, a) < _root_multiplicity(p_N, var, a)
                for p in ode.coeffs[:-1] if not p.is_zero()
            ) or _root_multiplicity(p_N, var, a) > 0
        else:
            inv = transform_inverse(ode)
            q_N = inv.coeffs[-1]
            singular = any(
                _root_multiplicity(p, var, Fraction(0)) < _root_multiplicity(q_N, var, Fraction(0))
                for p in inv.coeffs[:-1] if not p.is_zero()
            ) or _root_multiplicity(q_N, var, Fraction(0)) > 0
        if not regular:
            report["isFuchsian"] = False
        if singular:
            report["singularPoints"].append(str(a))
            if indicial is not None:
                report["indicialPolynomials"][str(a)] = RationalFunction(indicial).to_json()
    return report


# ---------------------------------------------------------------------------
# boundary multi-point operators and the explicit power-product solution
# ---------------------------------------------------------------------------


def _point_names(r: int, s: int, n: int) -> tuple[list[str], list[str], list[str]]:
    xs = [f"x{i+1}" for i in range(r)]
    ys = [f"y{j+1}" for j in range(s)]
    zs = [f"z{k+1}" for k in range(n)]
    return xs, ys, zs


def build_bpz_system(r: int, s: int, n: int,
                     weights: Sequence[RationalFunction] | None = None
                     ) -> tuple[list[LinearDiffOp], list[LinearDiffOp]]:
    """The level-2 null operators at each seed and each dual seed.

    Returns (D21 list over the x seeds, D12 list over the y seeds); spectator
    weights default to zero.
    """
    xs, ys, zs = _point_names(r, s, n)
    allv = xs + ys + zs
    uni = tuple(sorted(allv + ["tau"]))
    tau = RationalFunction.var("tau", uni)
    one = RationalFunction.const(1, uni)
    h21 = tau * Fraction(3, 4) - Fraction(1, 2)
    h12 = (one / tau) * Fraction(3, 4) - Fraction(1, 2)
    if weights is None:
        weights = [RationalFunction.const(0, uni)] * n
    weights = [w.with_vars(uni) if set(w.vars) <= set(uni) else w for w in weights]
    dvars = tuple(allv)

    def v(name: str) -> RationalFunction:
        return RationalFunction.var(name, uni)

    def seed_op(base: str, prefactor: RationalFunction) -> LinearDiffOp:
        op = LinearDiffOp.partial(dvars, base, one)
        op = op * LinearDiffOp.partial(dvars, base, one)
        marked = (
            [(x, h21) for x in xs if x != base]
            + [(y, h12) for y in ys if y != base]
            + [(z, w) for z, w in zip(zs, weights)]
        )
        for name, h in marked:
            gap = v(name) - v(base)
            op = op + LinearDiffOp.partial(dvars, name, prefactor / gap)
            op = op + LinearDiffOp.identity(dvars, -prefactor * h / (gap * gap))
        return op

    d21 = [seed_op(x, tau) for x in xs]
    d12 = [seed_op(y, one / tau) for y in ys]
    return d21, d12


@dataclass
class PowerProduct:
    """Product of affine forms raised to rational-function exponents."""

    vars: tuple[str, ...]           # geometric variables plus "tau"
    factors: list[tuple[MultiPoly, RationalFunction]]

    def log_derivative(self, name: str) -> list[tuple[MultiPoly, RationalFunction, MultiPoly]]:
        """Triples (affine, exponent, d affine/d name) with nonzero derivative."""
        out = []
        for base, expo in self.factors:
            d = base.derivative(name)
            if not d.is_zero():
                out.append((base, expo, d))
        return out


class ZeroExponentError(ValueError):
    """Exponent constraint violated when assembling the power product."""


def z0_build(r: int, s: int, n: int,
             weights: Sequence[RationalFunction] | None = None,
             a: Sequence[RationalFunction] | None = None,
             b: Sequence[RationalFunction] | None = None) -> PowerProduct:
    """The elementary positive solution of the level-2 system.

    Exponents: tau/2 on x pairs, 1/(2 tau) on y pairs, -1/2 on xy pairs, a_k
    on x-spectator pairs, b_k on y-spectator pairs, 2 tau b_k b_k' between
    spectators.  The triples (a_k, b_k, h_k) must satisfy
        a_k (a_k - 1) + tau (a_k - h_k) = 0
        b_k (b_k - 1) + (1/tau) (b_k - h_k) = 0
        a_k + tau b_k = 0
    checked exactly; all-zero data is always admissible.
    """
    xs, ys, zs = _point_names(r, s, n)
    uni = tuple(sorted(xs + ys + zs + ["tau"]))
    tau = RationalFunction.var("tau", uni)
    zero = RationalFunction.const(0, uni)
    one = RationalFunction.const(1, uni)
    if weights is None:
        weights = [zero] * n
    if a is None:
        a = [zero] * n
    if b is None:
        b = [zero] * n
    weights = [w.with_vars(uni) for w in weights]
    a = [q.with_vars(uni) for q in a]
    b = [q.with_vars(uni) for q in b]
    for k in range(n):
        if a[k] * (a[k] - 1) + tau * (a[k] - weights[k]):
            raise ZeroExponentError(f"x-side exponent equation fails for spectator {k+1}")
        if b[k] * (b[k] - 1) + (one / tau) * (b[k] - weights[k]):
            raise ZeroExponentError(f"y-side exponent equation fails for spectator {k+1}")
        if a[k] + tau * b[k]:
            raise ZeroExponentError(f"coupling equation a_k + tau b_k = 0 fails for spectator {k+1}")

    def diff(hi: str, lo: str) -> MultiPoly:
        return MultiPoly.var(hi, uni) - MultiPoly.var(lo, uni)

    factors: list[tuple[MultiPoly, RationalFunction]] = []
    half_tau = tau * Fraction(1, 2)
    inv_2tau = (one / tau) * Fraction(1, 2)
    minus_half = RationalFunction.const(Fraction(-1, 2), uni)
    for i in range(r):
        for j in range(i + 1, r):
            factors.append((diff(xs[j], xs[i]), half_tau))
    for i in range(s):
        for j in range(i + 1, s):
            factors.append((diff(ys[j], ys[i]), inv_2tau))
    for i in range(r):
        for j in range(s):
            factors.append((diff(ys[j], xs[i]), minus_half))
    for i in range(r):
        for k in range(n):
            if a[k]:
                factors.append((diff(zs[k], xs[i]), a[k]))
    for j in range(s):
        for k in range(n):
            if b[k]:
                factors.append((diff(zs[k], ys[j]), b[k]))
    for k in range(n):
        for k2 in range(k + 1, n):
            expo = tau * 2 * b[k] * b[k2]
            if expo:
                factors.append((diff(zs[k2], zs[k]), expo))
    return PowerProduct(uni, factors)


def zbar0_build(n: int, r: int, s: int,
                b: Sequence[RationalFunction]) -> PowerProduct:
    """Leading spectator prefactor after full coalescence.

    prod_k z_k^((s - r tau) b_k)  prod_{k<k'} (z_k' - z_k)^(2 tau b_k b_k').
    """
    zs = [f"z{k+1}" for k in range(n)]
    uni = tuple(sorted(zs + ["tau"]))
    tau = RationalFunction.var("tau", uni)
    b = [q.with_vars(uni) for q in b]
    factors: list[tuple[MultiPoly, RationalFunction]] = []
    for k in range(n):
        expo = (RationalFunction.const(s, uni) - tau * r) * b[k]
        if expo:
            factors.append((MultiPoly.var(zs[k], uni), expo))
    for k in range(n):
        for k2 in range(k + 1, n):
            expo = tau * 2 * b[k] * b[k2]
            if expo:
                factors.append((
                    MultiPoly.var(zs[k2], uni) - MultiPoly.var(zs[k], uni), expo))
    return PowerProduct(uni, factors)


# -- factored-denominator accumulator (avoids large gcds in the null checks) --


def _canon_key(p: MultiPoly) -> tuple[MultiPoly, Fraction]:
    """Monic representative and the scalar with p = scalar * representative."""
    _, lc = p.leading()
    if lc == 1:
        return p, Fraction(1)
    return p.scale(1 / lc), lc


class _Factored:
    """num / prod key^power with monic affine (or small) polynomial keys."""

    __slots__ = ("num", "den")

    def __init__(self, num: MultiPoly, den: dict[MultiPoly, int] | None = None):
        self.num = num
        self.den = {k: p for k, p in (den or {}).items() if p}

    @classmethod
    def zero(cls, uni: tuple[str, ...]) -> "_Factored":
        return cls(MultiPoly.zero(uni))

    @classmethod
    def one(cls, uni: tuple[str, ...]) -> "_Factored":
        return cls(MultiPoly.const(uni, 1))

    def mul_poly(self, p: MultiPoly) -> "_Factored":
        return _Factored(self.num * p, self.den)

    def div_key(self, key: MultiPoly, power: int = 1) -> "_Factored":
        key, unit = _canon_key(key)
        den = dict(self.den)
        den[key] = den.get(key, 0) + power
        num = self.num if unit == 1 else self.num.scale(Fraction(1) / unit ** power)
        return _Factored(num, den)

    def mul(self, other: "_Factored") -> "_Factored":
        den = dict(self.den)
        for k, p in other.den.items():
            den[k] = den.get(k, 0) + p
        return _Factored(self.num * other.num, den)

    def add(self, other: "_Factored") -> "_Factored":
        if self.num.is_zero():
            return other
        if other.num.is_zero():
            return self
        keys = set(self.den) | set(other.den)
        den = {k: max(self.den.get(k, 0), other.den.get(k, 0)) for k in keys}
        num1, num2 = self.num, other.num
        for k, p in den.items():
            d1 = p - self.den.get(k, 0)
            d2 = p - other.den.get(k, 0)
            for _ in range(d1):
                num1 = num1 * k
            for _ in range(d2):
                num2 = num2 * k
        total = num1 + num2
        if total.is_zero():
            return _Factored(total)
        out = _Factored(total, den)
        return out._strip()

    def _strip(self) -> "_Factored":
        num = self.num
        den = dict(self.den)
        for k in list(den):
            while den[k] > 0:
                try:
                    num = poly_divexact(num, k)
                except ValueError:
                    break
                den[k] -= 1
            if not den[k]:
                del den[k]
        return _Factored(num, den)

    def derivative(self, name: str) -> "_Factored":
        total = _Factored(self.num.derivative(name), self.den)
        for k, p in self.den.items():
            dk = k.derivative(name)
            if dk.is_zero():
                continue
            total = total.add(_Factored(self.num.scale(Fraction(-p)) * dk,
                                        {**self.den, k: self.den[k] + 1}))
        return total

    def to_rf(self) -> RationalFunction:
        if self.num.is_zero():
            return RationalFunction.const(0, self.num.vars)
        den = MultiPoly.const(self.num.vars, 1)
        for k, p in self.den.items():
            for _ in range(p):
                den = den * k
        return RationalFunction(self.num, den)


def _split_rf(c: RationalFunction, keys: list[MultiPoly]) -> _Factored:
    """Write an RF with a product-of-known-affine-forms denominator in factored form."""
    num = c.num
    den = c.den
    out: dict[MultiPoly, int] = {}
    for k in keys:
        monic, _ = _canon_key(k.with_vars(den.vars))
        while True:
            try:
                q = poly_divexact(den, monic)
            except ValueError:
                break
            den = q
            out[monic] = out.get(monic, 0) + 1
    if not den.is_const():
        monic, unit = _canon_key(den)
        out[monic] = out.get(monic, 0) + 1
        num = num.scale(Fraction(1) / unit)
    elif den.const_value() != 1:
        num = num.scale(1 / den.const_value())
    return _Factored(num, out)


def apply_to_powerproduct(op: LinearDiffOp, F: PowerProduct) -> RationalFunction:
    """Exact (op F)/F via logarithmic derivatives; zero certifies op F = 0."""
    uni = F.vars
    # logarithmic derivatives per variable, in factored form
    logs: dict[str, _Factored] = {}
    for name in op.dvars:
        acc = _Factored.zero(uni)
        for base, expo, dbase in F.log_derivative(name):
            piece = _Factored(expo.num * dbase, {expo.den: 1} if not expo.den.is_const() else {})
            piece = piece.div_key(base)
            acc = acc.add(piece)
        logs[name] = acc

    # candidate affine keys: the product's own factors plus every pairwise
    # difference of the operator variables (coefficient denominators)
    pair_keys = [base for base, _ in F.factors]
    geo = [v for v in op.dvars]
    for i in range(len(geo)):
        for j in range(len(geo)):
            if i != j:
                pair_keys.append(MultiPoly.var(geo[j], uni) - MultiPoly.var(geo[i], uni))
        pair_keys.append(MultiPoly.var(geo[i], uni))
    cache: dict[tuple, _Factored] = {(0,) * len(op.dvars): _Factored.one(uni)}

    def gauge(beta: tuple) -> _Factored:
        got = cache.get(beta)
        if got is not None:
            return got
        i = next(j for j, k in enumerate(beta) if k)
        prev = list(beta)
        prev[i] -= 1
        g = gauge(tuple(prev))
        name = op.dvars[i]
        out = g.derivative(name).add(g.mul(logs[name]))
        cache[beta] = out
        return out

    total = _Factored.zero(uni)
    for beta, c in op.sorted_terms():
        piece = _split_rf(c.with_vars(uni), pair_keys).mul(gauge(beta))
        total = total.add(piece)
    return total.to_rf()


# ---------------------------------------------------------------------------
# spectator-variable compilation (higher-order boundary operators)
# ---------------------------------------------------------------------------


def ell0_boundary(m: int, zs: Sequence[str],
                  weights: Sequence[RationalFunction], uni: tuple[str, ...]) -> LinearDiffOp:
    """sum_k ( -z_k^(m+1) d_{z_k} - h_k (m+1) z_k^m ) for a lowering mode m."""
    if m >= 0:
        raise ValueError("only lowering modes are compiled")
    dvars = tuple(zs)
    op = LinearDiffOp.zero(dvars)
    for k, name in enumerate(zs):
        z = RationalFunction.var(name, uni)
        op = op + LinearDiffOp.partial(dvars, name, -(z ** (m + 1)))
        w = weights[k]
        if w:
            op = op + LinearDiffOp.identity(dvars, -w * (m + 1) * z ** m)
    return op


def compile_D_multi(r: int, s: int, n: int,
                    weights: Sequence[RationalFunction] | None = None) -> LinearDiffOp:
    """Substitute the spectator vector fields into the (r+1, s+1) singular vector."""
    zs = [f"z{k+1}" for k in range(n)]
    uni = tuple(sorted(zs + ["tau"]))
    if weights is None:
        weights = [RationalFunction.const(0, uni)] * n
    weights = [w.with_vars(uni) for w in weights]
    delta = singular_vector(KacLabel(r + 1, s + 1))
    gens: dict[int, LinearDiffOp] = {}

    def gen(idx: int) -> LinearDiffOp:
        if idx not in gens:
            gens[idx] = ell0_boundary(-idx, zs, weights, uni)
        return gens[idx]

    total = LinearDiffOp.zero(tuple(zs))
    for word, coeff in delta.sorted_terms():
        c = coeff.with_vars(uni)
        acc = None
        for idx in word:
            acc = gen(idx) if acc is None else acc * gen(idx)
        total = total + acc.scale(c)
    return total


# ---------------------------------------------------------------------------
# independent compilation through the unrationalized angular coordinate
# ---------------------------------------------------------------------------


def compile_D_via_t(n: int) -> OdeOperator:
    """Oracle pipeline: compose in (r, t), then map t^2 -> -s.

    The angular derivative satisfies d_t = -2 t d_s, so operators are kept as
    sums c(r, t) d_r^i d_s^k where coefficient differentiation in s acts as
    -(1/(2t)) d_t.  Parity in t must cancel in the final radial part.
    """
    uni = ("kappa", "r", "t")
    r = RationalFunction.var("r", uni)
    t = RationalFunction.var("t", uni)
    x = (t * t - 1) / (t * t + 1)

    def gen(idx: int) -> dict[tuple, RationalFunction]:
        m = -idx
        c_r = -(r ** (m + 1)) * chebyshev_at("T", idx, x)
        c_s = -(r ** m) * chebyshev_at("U", idx - 1, x) * t * (t * (-2))
        return {(1, 0): c_r, (0, 1): c_s}

    def compose(A: dict, B: dict) -> dict:
        out: dict[tuple, RationalFunction] = {}
        for (i1, k1), cA in A.items():
            for (i2, k2), cB in B.items():
                for ar in range(i1 + 1):
                    d = cB
                    for _ in range(ar):
                        d = d.derivative("r")
                    for bs in range(k1 + 1):
                        if bs:
                            d = d.derivative("t") * (RationalFunction.const(Fraction(-1, 2), uni) / t)
                        key = (i1 - ar + i2, k1 - bs + k2)
                        add = cA * d * (comb(i1, ar) * comb(k1, bs))
                        if add:
                            out[key] = out.get(key, RationalFunction.const(0, uni)) + add
        return {k: c for k, c in out.items() if c}

    delta = singular_vector(KacLabel(n + 1, 1))
    tau_val = RationalFunction.const(4, uni) / RationalFunction.var("kappa", uni)
    total: dict[tuple, RationalFunction] = {}
    for word, coeff in delta.sorted_terms():
        c = coeff.substitute({"tau": tau_val}).with_vars(uni)
        acc = None
        for idx in word:
            acc = gen(idx) if acc is None else compose(acc, gen(idx))
        for k, v in acc.items():
            total[k] = total.get(k, RationalFunction.const(0, uni)) + v * c
    total = {k: c for k, c in total.items() if c}

    r_pow = r ** (n + 1)
    coeffs = [RationalFunction.const(0, ("kappa", "s"))] * (n + 2)
    for (i, k), c in total.items():
        if i != 0:
            continue
        q = c * r_pow
        if q.num.degree_in("r") or q.den.degree_in("r"):
            raise ArithmeticError("radial residue check failed in the t pipeline")
        coeffs[k] = _even_t_to_s(q)
    return OdeOperator("s", _clear_denominators(coeffs))


def _even_t_to_s(q: RationalFunction) -> RationalFunction:
    """Rewrite an even rational function of t with t^2 = -s."""

    def convert(p: MultiPoly) -> MultiPoly:
        it = p.vars.index("t")
        out: dict[tuple, Fraction] = {}
        for e, c in p.terms.items():
            if e[it] % 2:
                raise ArithmeticError("odd power of t survived the composition")
            new = list(e)
            new[it] = e[it] // 2
            key = tuple(new)
            out[key] = out.get(key, Fraction(0)) + c * Fraction(-1) ** new[it]
        renamed = tuple("s" if v == "t" else v for v in p.vars)
        return MultiPoly(renamed, out).with_vars(("kappa", "s"))

    num = convert(q.num)
    den = convert(q.den)
    return RationalFunction(num, den)
