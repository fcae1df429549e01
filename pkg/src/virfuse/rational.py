"""Exact scalar arithmetic: sparse multivariate polynomials and rational functions.

Coefficients are arbitrary-precision rationals (``fractions.Fraction``).  A
polynomial is a dictionary mapping exponent tuples to nonzero coefficients,
together with an ordered tuple of indeterminate names:

    MultiPoly(("tau",), {(2,): Fraction(1), (0,): Fraction(-1)})   # tau^2 - 1

Monomials are ordered graded-lexicographically over the indeterminate order
(total degree first, then lexicographic on the exponent tuple).  All iteration
and serialization respects that order, so equal values have identical
representations and identical JSON.

A rational function is a reduced fraction of two such polynomials.  The
canonical form divides out the polynomial gcd and scales so the denominator's
leading coefficient is one; the denominator is never zero.  Laurent-type
coefficients (negative powers) are represented by monomial denominators.

The gcd is a content/primitive-part recursion over a chosen main variable with
a primitive pseudo-remainder sequence at each level, which is plenty at the
sizes this engine meets (few variables, modest degrees).
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as _int_gcd
from typing import Iterable, Mapping

__all__ = [
    "MultiPoly",
    "RationalFunction",
    "rf_arith",
    "rf_substitute",
    "rf_derivative",
    "DivisionByZeroError",
    "UnknownSymbolError",
]


class DivisionByZeroError(ZeroDivisionError):
    """Division by an identically-zero polynomial or rational function."""


class UnknownSymbolError(KeyError):
    """An operation referenced an indeterminate outside the universe."""


Exponents = tuple  # tuple[int, ...], one entry per indeterminate


def _grlex_key(exps: Exponents):
    return (sum(exps), exps)


class MultiPoly:
    """Sparse multivariate polynomial over the rationals.

    Immutable by convention: no method mutates ``terms`` after construction.
    """

    __slots__ = ("vars", "terms", "_hash")

    def __init__(self, vars: tuple[str, ...], terms: Mapping[Exponents, Fraction] | None = None):
        self.vars = tuple(vars)
        clean: dict[Exponents, Fraction] = {}
        if terms:
            for e, c in terms.items():
                if c:
                    clean[tuple(e)] = c if isinstance(c, Fraction) else Fraction(c)
        self.terms = clean
        self._hash = None

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, vars: tuple[str, ...]) -> "MultiPoly":
        return cls(vars, {})

    @classmethod
    def const(cls, vars: tuple[str, ...], value) -> "MultiPoly":
        value = Fraction(value)
        if not value:
            return cls(vars, {})
        return cls(vars, {(0,) * len(vars): value})

    @classmethod
    def var(cls, name: str, vars: tuple[str, ...]) -> "MultiPoly":
        if name not in vars:
            raise UnknownSymbolError(name)
        e = [0] * len(vars)
        e[vars.index(name)] = 1
        return cls(vars, {tuple(e): Fraction(1)})

    # -- basic queries ---------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(not any(e) for e in self.terms)

    def const_value(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if not self.is_const():
            raise ValueError("not a constant polynomial")
        return next(iter(self.terms.values()))

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def degree_in(self, name: str) -> int:
        i = self._index(name)
        return max((e[i] for e in self.terms), default=0)

    def _index(self, name: str) -> int:
        try:
            return self.vars.index(name)
        except ValueError:
            raise UnknownSymbolError(name) from None

    def sorted_terms(self) -> list[tuple[Exponents, Fraction]]:
        """Terms in canonical (descending graded-lexicographic) order."""
        return sorted(self.terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True)

    def leading(self) -> tuple[Exponents, Fraction]:
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        e = max(self.terms, key=_grlex_key)
        return e, self.terms[e]

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            return NotImplemented
        if self.vars == other.vars:
            return self.terms == other.terms
        a, b = align(self, other)
        return a.terms == b.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.vars, tuple(self.sorted_terms())))
        return self._hash

    # -- arithmetic -------------------------------------------------------

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.vars, {e: -c for e, c in self.terms.items()})

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        a, b = align(self, other)
        out = dict(a.terms)
        for e, c in b.terms.items():
            s = out.get(e, Fraction(0)) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return MultiPoly(a.vars, out)

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + (-other)

    def __mul__(self, other: "MultiPoly") -> "MultiPoly":
        a, b = align(self, other)
        if not a.terms or not b.terms:
            return MultiPoly(a.vars, {})
        out: dict[Exponents, Fraction] = {}
        for e1, c1 in a.terms.items():
            for e2, c2 in b.terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                s = out.get(e, Fraction(0)) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return MultiPoly(a.vars, out)

    def scale(self, q: Fraction) -> "MultiPoly":
        q = Fraction(q)
        if not q:
            return MultiPoly(self.vars, {})
        return MultiPoly(self.vars, {e: c * q for e, c in self.terms.items()})

    def __pow__(self, n: int) -> "MultiPoly":
        if n < 0:
            raise ValueError("negative power of a polynomial; use RationalFunction")
        result = MultiPoly.const(self.vars, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def derivative(self, name: str) -> "MultiPoly":
        i = self._index(name)
        out: dict[Exponents, Fraction] = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                out[tuple(e2)] = c * e[i]
        return MultiPoly(self.vars, out)

    def evaluate(self, point: Mapping[str, Fraction]) -> Fraction:
        """Evaluate with every indeterminate bound to a rational."""
        for v in self.vars:
            if v not in point:
                raise UnknownSymbolError(v)
        total = Fraction(0)
        vals = [Fraction(point[v]) for v in self.vars]
        for e, c in self.terms.items():
            term = c
            for x, k in zip(vals, e):
                if k:
                    term *= x ** k
            total += term
        return total

    # -- structure helpers -------------------------------------------------

    def with_vars(self, vars: tuple[str, ...]) -> "MultiPoly":
        """Reinterpret in a larger/reordered universe (must contain all used vars)."""
        if vars == self.vars:
            return self
        idx = []
        for j, v in enumerate(self.vars):
            if v in vars:
                idx.append((j, vars.index(v)))
            elif any(e[j] for e in self.terms):
                raise UnknownSymbolError(v)
            else:
                idx.append((j, None))
        out: dict[Exponents, Fraction] = {}
        for e, c in self.terms.items():
            e2 = [0] * len(vars)
            for j, tgt in idx:
                if tgt is not None:
                    e2[tgt] = e[j]
            out[tuple(e2)] = out.get(tuple(e2), Fraction(0)) + c
        return MultiPoly(vars, {e: c for e, c in out.items() if c})

    def int_content(self) -> Fraction:
        """Positive rational c such that self/c has coprime integer coefficients."""
        if not self.terms:
            return Fraction(1)
        num = 0
        den = 1
        for c in self.terms.values():
            num = _int_gcd(num, abs(c.numerator))
            den = den * c.denominator // _int_gcd(den, c.denominator)
        return Fraction(num, den)

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                f"{v}^{k}" if k > 1 else v for v, k in zip(self.vars, e) if k
            )
            if mono:
                bits.append(f"({c})*{mono}" if c != 1 else mono)
            else:
                bits.append(str(c))
        return " + ".join(bits)


def align(a: MultiPoly, b: MultiPoly) -> tuple[MultiPoly, MultiPoly]:
    """Bring two polynomials into a common (sorted, merged) universe."""
    if a.vars == b.vars:
        return a, b
    merged = tuple(sorted(set(a.vars) | set(b.vars)))
    return a.with_vars(merged), b.with_vars(merged)


# ---------------------------------------------------------------------------
# gcd machinery: content/primitive-part recursion, univariate base case
# ---------------------------------------------------------------------------


def _univariate_dense(p: MultiPoly, i: int) -> list[int]:
    """Integer coefficient list (low to high) of a primitive univariate image."""
    scale = p.int_content()
    deg = max(e[i] for e in p.terms)
    out = [0] * (deg + 1)
    for e, c in p.terms.items():
        q = c / scale
        out[e[i]] = int(q)
    return out


def _int_list_gcd(xs: Iterable[int]) -> int:
    g = 0
    for x in xs:
        g = _int_gcd(g, x)
        if g == 1:
            return 1
    return g


def _uni_gcd_int(a: list[int], b: list[int]) -> list[int]:
    """Primitive PRS gcd for integer coefficient lists (low to high)."""

    def norm(p):
        while p and p[-1] == 0:
            p.pop()
        return p

    def prim(p):
        g = _int_list_gcd(p)
        if g > 1:
            p = [x // g for x in p]
        if p and p[-1] < 0:
            p = [-x for x in p]
        return p

    a, b = prim(norm(list(a))), prim(norm(list(b)))
    if not a:
        return b
    if not b:
        return a
    if len(a) < len(b):
        a, b = b, a
    while b:
        # pseudo-remainder of a by b
        r = list(a)
        lb = b[-1]
        k = len(r) - len(b)
        while len(r) >= len(b) and r:
            if r[-1] == 0:
                r.pop()
                continue
            shift = len(r) - len(b)
            coef = r[-1]
            r = [x * lb for x in r]
            for j, bj in enumerate(b):
                r[shift + j] -= coef * bj
            r = norm(r)
        a, b = b, prim(r)
        _ = k
    if len(a) == 1:
        return [1]
    return a


def _coeffs_in_var(p: MultiPoly, i: int) -> dict[int, MultiPoly]:
    """View as univariate in vars[i] with polynomial coefficients (var i removed)."""
    rest = p.vars[:i] + p.vars[i + 1:]
    out: dict[int, dict[Exponents, Fraction]] = {}
    for e, c in p.terms.items():
        d = e[i]
        e2 = e[:i] + e[i + 1:]
        out.setdefault(d, {})[e2] = c
    return {d: MultiPoly(rest, t) for d, t in out.items()}


def _from_coeffs(coeffs: dict[int, MultiPoly], vars: tuple[str, ...], i: int) -> MultiPoly:
    terms: dict[Exponents, Fraction] = {}
    for d, p in coeffs.items():
        for e, c in p.terms.items():
            terms[e[:i] + (d,) + e[i:]] = c
    return MultiPoly(vars, terms)


def poly_divexact(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    """Exact polynomial division; raises if b does not divide a."""
    a, b = align(a, b)
    if b.is_zero():
        raise DivisionByZeroError("polynomial division by zero")
    if a.is_zero():
        return a
    if b.is_const():
        return a.scale(1 / b.const_value())
    quot: dict[Exponents, Fraction] = {}
    rem = a
    be, bc = b.leading()
    while rem.terms:
        re, rc = rem.leading()
        qe = tuple(x - y for x, y in zip(re, be))
        if any(k < 0 for k in qe):
            raise ValueError("inexact polynomial division")
        qc = rc / bc
        quot[qe] = quot.get(qe, Fraction(0)) + qc
        rem = rem - MultiPoly(a.vars, {qe: qc}) * b
    return MultiPoly(a.vars, quot)


def _poly_gcd_list(ps: list[MultiPoly]) -> MultiPoly:
    g = ps[0]
    for p in ps[1:]:
        g = poly_gcd(g, p)
        if g.is_const() and not g.is_zero():
            return MultiPoly.const(g.vars, 1)
    return g


def poly_gcd(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    """Canonical gcd: integer-primitive with positive leading coefficient."""
    a, b = align(a, b)

    def canonical(p: MultiPoly) -> MultiPoly:
        if p.is_zero():
            return p
        c = p.int_content()
        _, lc = p.leading()
        if lc < 0:
            c = -c
        return p.scale(1 / c)

    if a.is_zero():
        return canonical(b)
    if b.is_zero():
        return canonical(a)
    if a.is_const() or b.is_const():
        return MultiPoly.const(a.vars, 1)

    present = [i for i in range(len(a.vars))
               if any(e[i] for e in a.terms) or any(e[i] for e in b.terms)]
    live = [i for i in present
            if any(e[i] for e in a.terms) and any(e[i] for e in b.terms)]
    if len(live) < len(present):
        # some variable occurs in only one argument: gcd divides the content
        i = next(i for i in present if i not in live)
        wide = a if any(e[i] for e in a.terms) else b
        other = b if wide is a else a
        cont = _poly_gcd_list(list(_coeffs_in_var(wide, i).values()))
        return poly_gcd(cont.with_vars(a.vars), other)

    if len(present) == 1:
        i = present[0]
        g = _uni_gcd_int(_univariate_dense(a, i), _univariate_dense(b, i))
        if len(g) == 1:
            return MultiPoly.const(a.vars, 1)
        return MultiPoly(a.vars, {
            tuple(d if j == i else 0 for j in range(len(a.vars))): Fraction(c)
            for d, c in enumerate(g) if c
        })

    # choose the main variable with the smallest maximal degree
    i = min(present, key=lambda j: (max(a.degree_in(a.vars[j]), b.degree_in(b.vars[j])), j))
    ca = _coeffs_in_var(a, i)
    cb = _coeffs_in_var(b, i)
    cont_a = _poly_gcd_list(list(ca.values()))
    cont_b = _poly_gcd_list(list(cb.values()))
    prim_a = {d: poly_divexact(p, cont_a) for d, p in ca.items()}
    prim_b = {d: poly_divexact(p, cont_b) for d, p in cb.items()}
    g = _prs_gcd(prim_a, prim_b)
    cont = poly_gcd(cont_a, cont_b)
    out = _from_coeffs(g, a.vars, i) * cont.with_vars(a.vars)
    return canonical(out)


def _prs_gcd(a: dict[int, MultiPoly], b: dict[int, MultiPoly]) -> dict[int, MultiPoly]:
    """Primitive pseudo-remainder sequence on univariate-with-poly-coeff views."""

    def deg(p):
        return max(p) if p else -1

    def prim(p: dict[int, MultiPoly]) -> dict[int, MultiPoly]:
        p = {d: q for d, q in p.items() if not q.is_zero()}
        if not p:
            return p
        cont = _poly_gcd_list(list(p.values()))
        if not cont.is_const():
            p = {d: poly_divexact(q, cont) for d, q in p.items()}
        # normalize sign/content through the leading coefficient
        lead = p[deg(p)]
        c = lead.int_content()
        _, lc = lead.leading()
        if lc < 0:
            c = -c
        if c != 1:
            p = {d: q.scale(1 / c) for d, q in p.items()}
        return p

    a, b = prim(a), prim(b)
    if not a:
        return b
    if not b:
        return a
    if deg(a) < deg(b):
        a, b = b, a
    while b:
        da, db = deg(a), deg(b)
        lb = b[db]
        r = dict(a)
        while r and deg(r) >= db:
            dr = deg(r)
            lr = r[dr]
            r = {d: q * lb for d, q in r.items()}
            for d, q in b.items():
                d2 = d + dr - db
                s = r.get(d2, MultiPoly.zero(q.vars)) - q * lr
                if s.is_zero():
                    r.pop(d2, None)
                else:
                    r[d2] = s
            r = {d: q for d, q in r.items() if not q.is_zero()}
        a, b = b, prim(r)
    if deg(a) == 0:
        one = MultiPoly.const(next(iter(a.values())).vars, 1)
        return {0: one}
    return a


# ---------------------------------------------------------------------------
# rational functions
# ---------------------------------------------------------------------------


class RationalFunction:
    """Reduced fraction of MultiPolys with a monic-denominator canonical form."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: MultiPoly, den: MultiPoly | None = None, *, _reduced: bool = False):
        if den is None:
            den = MultiPoly.const(num.vars, 1)
        num, den = align(num, den)
        if den.is_zero():
            raise DivisionByZeroError("zero denominator")
        if num.is_zero():
            den = MultiPoly.const(num.vars, 1)
        elif not _reduced:
            g = poly_gcd(num, den)
            if not (g.is_const() and g.const_value() == 1):
                num = poly_divexact(num, g)
                den = poly_divexact(den, g)
        if not num.is_zero():
            _, lc = den.leading()
            if lc != 1:
                num = num.scale(1 / lc)
                den = den.scale(1 / lc)
        self.num = num
        self.den = den
        self._hash = None

    # -- constructors ----------------------------------------------------

    @classmethod
    def const(cls, value, vars: tuple[str, ...] = ()) -> "RationalFunction":
        return cls(MultiPoly.const(vars, value))

    @classmethod
    def var(cls, name: str, vars: tuple[str, ...] | None = None) -> "RationalFunction":
        vars = vars if vars is not None else (name,)
        return cls(MultiPoly.var(name, vars))

    @property
    def vars(self) -> tuple[str, ...]:
        return self.num.vars

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_const(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def const_value(self) -> Fraction:
        return self.num.const_value() / self.den.const_value()

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = RationalFunction.const(other, self.vars)
        if not isinstance(other, RationalFunction):
            return NotImplemented
        a, c = align(self.num, other.num)
        b, d = align(self.den, other.den)
        return a.terms == c.terms and b.terms == d.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((tuple(self.num.sorted_terms()), tuple(self.den.sorted_terms())))
        return self._hash

    # -- arithmetic --------------------------------------------------------

    def __neg__(self):
        r = RationalFunction.__new__(RationalFunction)
        r.num, r.den, r._hash = -self.num, self.den, None
        return r

    def _coerce(self, other) -> "RationalFunction":
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, (int, Fraction)):
            return RationalFunction.const(other, self.vars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        # gcd trick: reduce cross terms before the final normalization
        g = poly_gcd(self.den, other.den)
        if g.is_const():
            num = self.num * other.den + other.num * self.den
            den = self.den * other.den
            return RationalFunction(num, den, _reduced=False) if not num.is_zero() else RationalFunction.const(0, self.vars)
        db = poly_divexact(self.den, g)
        dd = poly_divexact(other.den, g)
        t = self.num * dd + other.num * db
        if t.is_zero():
            return RationalFunction.const(0, self.vars)
        g2 = poly_gcd(t, g)
        if not g2.is_const():
            t = poly_divexact(t, g2)
            g = poly_divexact(g, g2)
        return RationalFunction(t, db * dd * g, _reduced=True)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return RationalFunction.const(0, self.vars)
        g1 = poly_gcd(self.num, other.den)
        g2 = poly_gcd(other.num, self.den)
        a = self.num if g1.is_const() else poly_divexact(self.num, g1)
        d = other.den if g1.is_const() else poly_divexact(other.den, g1)
        c = other.num if g2.is_const() else poly_divexact(other.num, g2)
        b = self.den if g2.is_const() else poly_divexact(self.den, g2)
        return RationalFunction(a * c, b * d, _reduced=True)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero():
            raise DivisionByZeroError("division by zero rational function")
        inv = RationalFunction.__new__(RationalFunction)
        inv.num, inv.den, inv._hash = other.den, other.num, None
        return self * inv

    def __rtruediv__(self, other):
        other = self._coerce(other)
        return other / self

    def __pow__(self, n: int):
        if n == 0:
            return RationalFunction.const(1, self.vars)
        if n < 0:
            if self.is_zero():
                raise DivisionByZeroError("negative power of zero")
            base = RationalFunction(self.den, self.num, _reduced=True)
            n = -n
        else:
            base = self
        return RationalFunction(base.num ** n, base.den ** n, _reduced=True)

    # -- calculus ------------------------------------------------------------

    def derivative(self, name: str) -> "RationalFunction":
        if name not in self.vars:
            raise UnknownSymbolError(name)
        dn = self.num.derivative(name)
        dd = self.den.derivative(name)
        num = dn * self.den - self.num * dd
        if num.is_zero():
            return RationalFunction.const(0, self.vars)
        return RationalFunction(num, self.den * self.den)

    def substitute(self, bindings: Mapping[str, "RationalFunction"]) -> "RationalFunction":
        """Compose with rational bindings for a subset of the indeterminates.

        Symbols absent from ``bindings`` are kept.  Raises if the substituted
        denominator vanishes identically.
        """
        if not bindings:
            return self
        universe = set(self.vars)
        for name, val in bindings.items():
            if name not in universe:
                raise UnknownSymbolError(name)
            universe |= set(val.vars)
        universe -= set(bindings)
        out_vars = tuple(sorted(universe))

        def sub_poly(p: MultiPoly) -> RationalFunction:
            total = RationalFunction.const(0, out_vars)
            kept = [v for v in p.vars if v not in bindings]
            for e, c in p.sorted_terms():
                term = RationalFunction.const(c, out_vars)
                for v, k in zip(p.vars, e):
                    if not k:
                        continue
                    if v in bindings:
                        term = term * bindings[v] ** k
                    else:
                        term = term * RationalFunction.var(v, out_vars) ** k
                total = total + term
            _ = kept
            return total

        new_num = sub_poly(self.num)
        new_den = sub_poly(self.den)
        if new_den.is_zero():
            raise DivisionByZeroError("substitution produced an identically-zero denominator")
        return new_num / new_den

    def evaluate(self, point: Mapping[str, Fraction]) -> Fraction:
        den = self.den.evaluate(point)
        if den == 0:
            raise DivisionByZeroError("evaluation at a pole")
        return self.num.evaluate(point) / den

    def with_vars(self, vars: tuple[str, ...]) -> "RationalFunction":
        r = RationalFunction.__new__(RationalFunction)
        r.num, r.den, r._hash = self.num.with_vars(vars), self.den.with_vars(vars), None
        return r

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        return {"num": _poly_json(self.num), "den": _poly_json(self.den)}

    @classmethod
    def from_json(cls, data: dict, vars: tuple[str, ...] | None = None) -> "RationalFunction":
        num = _poly_from_json(data["num"], vars)
        den = _poly_from_json(data["den"], vars if vars is not None else num.vars)
        num, den = align(num, den)
        return cls(num, den)

    def __repr__(self):
        if self.den.is_const() and self.den.const_value() == 1:
            return repr(self.num)
        return f"({self.num!r})/({self.den!r})"


def _poly_json(p: MultiPoly) -> list:
    out = []
    for e, c in p.sorted_terms():
        mono = {v: k for v, k in zip(p.vars, e) if k}
        out.append([str(c), mono])
    if not out:
        out.append(["0", {}])
    return out


def _poly_from_json(data: list, vars: tuple[str, ...] | None) -> MultiPoly:
    names = set()
    for _, mono in data:
        names |= set(mono)
    if vars is None:
        vars = tuple(sorted(names))
    terms: dict[Exponents, Fraction] = {}
    for coeff, mono in data:
        c = Fraction(coeff)
        if not c:
            continue
        e = [0] * len(vars)
        for v, k in mono.items():
            e[vars.index(v)] = int(k)
        terms[tuple(e)] = terms.get(tuple(e), Fraction(0)) + c
    return MultiPoly(vars, terms)


# ---------------------------------------------------------------------------
# spec-level operation wrappers
# ---------------------------------------------------------------------------


def rf_arith(a: RationalFunction, b: RationalFunction, op: str) -> RationalFunction:
    """Dispatch add/sub/mul/div; exists so the four ops share one audited entry."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def rf_substitute(a: RationalFunction, bindings: Mapping[str, RationalFunction]) -> RationalFunction:
    return a.substitute(bindings)


def rf_derivative(a: RationalFunction, name: str) -> RationalFunction:
    return a.derivative(name)
