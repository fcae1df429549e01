"""Universal enveloping algebra of the lowering half of the Virasoro algebra.

Generators L_n obey [L_m, L_n] = (m-n) L_{m+n} + delta_{m,-n} (m^3-m)/12 c.
Products of lowering generators are rewritten into the standard basis of
ordered words L_{-i_k} ... L_{-i_1} with 0 < i_1 <= ... <= i_k; a word is
stored as the tuple of its indices in writing order, largest first, so
L_{-2} L_{-1} is ``(2, 1)`` and the identity is ``()``.

Scalars are exact rational functions in the parameter ``tau``; the central
charge c = 13 - 6(tau + 1/tau) and the degenerate weights h_{r,s}(tau) follow
the Kac parameterization.  Highest-weight module actions substitute c and h,
so coefficients of algebra elements themselves never contain c.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping

from .rational import MultiPoly, RationalFunction

__all__ = [
    "TAU",
    "Monomial",
    "UEAElement",
    "KacLabel",
    "VermaModule",
    "VermaVector",
    "ResonanceError",
    "central_charge",
    "kac_weight",
    "commutator",
    "uea_multiply",
    "verma_action",
    "singular_vector",
    "bsa_vector",
    "dual_vector",
    "level_basis",
    "rf",
    "tau_rf",
]

TAU_VARS = ("tau",)
TAU = RationalFunction.var("tau", TAU_VARS)

Monomial = tuple  # tuple[int, ...]; writing order, non-increasing, all > 0


class ResonanceError(ArithmeticError):
    """The singular-vector system degenerated at a specialized parameter."""


def rf(value) -> RationalFunction:
    """Constant rational function in the tau universe."""
    return RationalFunction.const(value, TAU_VARS)


def tau_rf() -> RationalFunction:
    return TAU


def level(mono: Monomial) -> int:
    return sum(mono)


def level_basis(n: int) -> list[Monomial]:
    """Standard-basis words of level n, in canonical (sorted tuple) order."""
    if n < 0:
        return []
    out: list[Monomial] = []

    def gen(remaining: int, max_part: int, acc: list[int]):
        if remaining == 0:
            out.append(tuple(acc))
            return
        for p in range(min(remaining, max_part), 0, -1):
            acc.append(p)
            gen(remaining - p, p, acc)
            acc.pop()

    gen(n, n, [])
    return sorted(out)


# ---------------------------------------------------------------------------
# normal ordering
# ---------------------------------------------------------------------------

_NORMAL_CACHE: dict[Monomial, dict[Monomial, int]] = {}


def _normal_order_word(word: Monomial) -> dict[Monomial, int]:
    """Rewrite an arbitrary word of lowering indices into the standard basis.

    Returns integer multiplicities: commutators among lowering generators
    produce only integer multiples of single generators, never central terms.
    """
    cached = _NORMAL_CACHE.get(word)
    if cached is not None:
        return cached
    for p in range(len(word) - 1):
        a, b = word[p], word[p + 1]
        if a < b:
            swapped = word[:p] + (b, a) + word[p + 2:]
            merged = word[:p] + (a + b,) + word[p + 2:]
            out: dict[Monomial, int] = {}
            for m, c in _normal_order_word(swapped).items():
                out[m] = out.get(m, 0) + c
            for m, c in _normal_order_word(merged).items():
                out[m] = out.get(m, 0) + (b - a) * c
            out = {m: c for m, c in out.items() if c}
            _NORMAL_CACHE[word] = out
            return out
    _NORMAL_CACHE[word] = {word: 1}
    return {word: 1}


class UEAElement:
    """Finite rational-function combination of standard-basis words."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, RationalFunction] | None = None):
        clean: dict[Monomial, RationalFunction] = {}
        if terms:
            for m, c in terms.items():
                if c:
                    clean[tuple(m)] = c
        self.terms = clean

    @classmethod
    def zero(cls) -> "UEAElement":
        return cls()

    @classmethod
    def one(cls) -> "UEAElement":
        return cls({(): rf(1)})

    @classmethod
    def generator(cls, index: int) -> "UEAElement":
        """L_{-index} for index >= 1."""
        if index < 1:
            raise ValueError("lowering generator index must be positive")
        return cls({(index,): rf(1)})

    @classmethod
    def from_word(cls, word: Monomial, coeff: RationalFunction | None = None) -> "UEAElement":
        c = coeff if coeff is not None else rf(1)
        out: dict[Monomial, RationalFunction] = {}
        for m, k in _normal_order_word(tuple(word)).items():
            out[m] = out.get(m, rf(0)) + c * k
        return cls(out)

    def is_zero(self) -> bool:
        return not self.terms

    def levels(self) -> set[int]:
        return {level(m) for m in self.terms}

    def coefficient(self, word: Monomial) -> RationalFunction:
        return self.terms.get(tuple(word), rf(0))

    def homogeneous_part(self, n: int) -> "UEAElement":
        return UEAElement({m: c for m, c in self.terms.items() if level(m) == n})

    def __add__(self, other: "UEAElement") -> "UEAElement":
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            s = c if s is None else s + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return UEAElement(out)

    def __sub__(self, other: "UEAElement") -> "UEAElement":
        return self + other.scale(rf(-1))

    def __neg__(self) -> "UEAElement":
        return self.scale(rf(-1))

    def scale(self, c: RationalFunction) -> "UEAElement":
        if not c:
            return UEAElement()
        return UEAElement({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other: "UEAElement") -> "UEAElement":
        out: dict[Monomial, RationalFunction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                c = c1 * c2
                for m, k in _normal_order_word(m1 + m2).items():
                    s = out.get(m)
                    s = c * k if s is None else s + c * k
                    if s:
                        out[m] = s
                    else:
                        out.pop(m, None)
        return UEAElement(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, UEAElement):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items(), key=lambda t: (level(t[0]), t[0]))))

    def map_coeffs(self, fn) -> "UEAElement":
        return UEAElement({m: fn(c) for m, c in self.terms.items()})

    def sorted_terms(self) -> list[tuple[Monomial, RationalFunction]]:
        return sorted(self.terms.items(), key=lambda t: (level(t[0]), t[0]))

    def to_json(self) -> list:
        return [[list(m), c.to_json()] for m, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, data: list) -> "UEAElement":
        return cls({tuple(m): RationalFunction.from_json(c, TAU_VARS) for m, c in data})

    def to_latex(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for m, c in self.sorted_terms():
            word = "".join(f"L_{{-{i}}}" for i in m) or "1"
            bits.append(f"\\left({_rf_latex(c)}\\right){word}")
        return " + ".join(bits)

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for m, c in self.sorted_terms():
            word = "".join(f"L[-{i}]" for i in m) or "1"
            bits.append(f"({c!r})*{word}")
        return " + ".join(bits)


def _rf_latex(c: RationalFunction) -> str:
    def poly(p: MultiPoly) -> str:
        if not p.terms:
            return "0"
        bits = []
        for e, q in p.sorted_terms():
            mono = " ".join(
                (f"\\{v} " if v in ("tau", "kappa", "nu") else v) + (f"^{{{k}}}" if k > 1 else "")
                for v, k in zip(p.vars, e) if k
            )
            if mono:
                bits.append((f"{q} " if q != 1 else "") + mono)
            else:
                bits.append(str(q))
        return " + ".join(bits)

    if c.den.is_const() and c.den.const_value() == 1:
        return poly(c.num)
    return f"\\frac{{{poly(c.num)}}}{{{poly(c.den)}}}"


def uea_multiply(a: UEAElement, b: UEAElement) -> UEAElement:
    return a * b


# ---------------------------------------------------------------------------
# Kac data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KacLabel:
    r: int
    s: int

    def __post_init__(self):
        if self.r < 1 or self.s < 1:
            raise ValueError("Kac labels require r >= 1 and s >= 1")

    @property
    def level(self) -> int:
        return self.r * self.s

    def transpose(self) -> "KacLabel":
        return KacLabel(self.s, self.r)


def central_charge(tau: RationalFunction) -> RationalFunction:
    """c = 13 - 6 (tau + 1/tau)."""
    if tau.is_zero():
        raise ZeroDivisionError("central charge undefined at tau = 0")
    one = RationalFunction.const(1, tau.vars)
    return RationalFunction.const(13, tau.vars) - (tau + one / tau) * 6


def kac_weight(label: KacLabel, tau: RationalFunction) -> RationalFunction:
    """h_{r,s} = (r^2-1)/4 tau + (1-rs)/2 + (s^2-1)/4 / tau."""
    if tau.is_zero():
        raise ZeroDivisionError("Kac weight undefined at tau = 0")
    r, s = label.r, label.s
    one = RationalFunction.const(1, tau.vars)
    return (
        tau * Fraction(r * r - 1, 4)
        + RationalFunction.const(Fraction(1 - r * s, 2), tau.vars)
        + (one / tau) * Fraction(s * s - 1, 4)
    )


def commutator(m: int, n: int) -> tuple[int, int, Fraction]:
    """[L_m, L_n] as ((m-n), index m+n, central coefficient of c).

    The central coefficient m(m^2-1)/12 appears only when m = -n.
    """
    central = Fraction(m * (m * m - 1), 12) if m == -n else Fraction(0)
    return (m - n, m + n, central)


# ---------------------------------------------------------------------------
# Verma modules
# ---------------------------------------------------------------------------


class VermaModule:
    """Highest-weight module data (c, h) with a cached L_m action table."""

    def __init__(self, c: RationalFunction, h: RationalFunction):
        self.c = c
        self.h = h
        self._cache: dict[tuple[int, Monomial], dict[Monomial, RationalFunction]] = {}

    @classmethod
    def kac(cls, label: KacLabel, tau: RationalFunction | None = None) -> "VermaModule":
        t = tau if tau is not None else TAU
        return cls(central_charge(t), kac_weight(label, t))

    def highest_weight_vector(self) -> "VermaVector":
        return VermaVector(self, {(): rf(1).with_vars(self.h.vars)})

    def vector(self, element: UEAElement) -> "VermaVector":
        return VermaVector(self, dict(element.terms))

    def _act_word(self, m: int, word: Monomial) -> dict[Monomial, RationalFunction]:
        """L_m applied to (word . v), result on the standard basis."""
        key = (m, word)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        zero = RationalFunction.const(0, self.h.vars)
        one = RationalFunction.const(1, self.h.vars)
        if not word:
            if m > 0:
                out: dict[Monomial, RationalFunction] = {}
            elif m == 0:
                out = {(): self.h}
            else:
                out = {(-m,): one}
        elif m < 0:
            out = {}
            for w, k in _normal_order_word((-m,) + word).items():
                out[w] = out.get(w, zero) + one * k
        elif m == 0:
            out = {word: self.h + level(word)}
        else:
            i, rest = word[0], word[1:]
            out = {}
            # L_m L_{-i} = L_{-i} L_m + (m+i) L_{m-i} + delta_{m,i} (m^3-m)/12 c
            for w, c in self._act_word(m, rest).items():
                for w2, k in _normal_order_word((i,) + w).items():
                    out[w2] = out.get(w2, zero) + c * k
            k2 = m - i
            if k2 < 0:
                for w2, k in _normal_order_word((-k2,) + rest).items():
                    out[w2] = out.get(w2, zero) + one * ((m + i) * k)
            elif k2 == 0:
                out[rest] = out.get(rest, zero) + (self.h + level(rest)) * (m + i)
            else:
                for w2, c in self._act_word(k2, rest).items():
                    out[w2] = out.get(w2, zero) + c * (m + i)
            if m == i:
                central = self.c * Fraction(m * (m * m - 1), 12)
                out[rest] = out.get(rest, zero) + central
        out = {w: c for w, c in out.items() if c}
        self._cache[key] = out
        return out


class VermaVector:
    """Element of a Verma module as a combination of standard words applied to v."""

    __slots__ = ("module", "terms")

    def __init__(self, module: VermaModule, terms: Mapping[Monomial, RationalFunction]):
        self.module = module
        self.terms = {tuple(m): c for m, c in terms.items() if c}

    def is_zero(self) -> bool:
        return not self.terms

    def act(self, m: int) -> "VermaVector":
        zero = RationalFunction.const(0, self.module.h.vars)
        out: dict[Monomial, RationalFunction] = {}
        for w, c in self.terms.items():
            for w2, c2 in self.module._act_word(m, w).items():
                s = out.get(w2, zero) + c * c2
                if s:
                    out[w2] = s
                else:
                    out.pop(w2, None)
        return VermaVector(self.module, out)

    def __add__(self, other: "VermaVector") -> "VermaVector":
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            s = c if s is None else s + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return VermaVector(self.module, out)

    def scale(self, c: RationalFunction) -> "VermaVector":
        return VermaVector(self.module, {m: v * c for m, v in self.terms.items()})

    def coefficient(self, word: Monomial) -> RationalFunction:
        return self.terms.get(tuple(word), RationalFunction.const(0, self.module.h.vars))

    def __repr__(self):
        return f"VermaVector({dict(self.terms)!r})"


def verma_action(m: int, w: VermaVector) -> VermaVector:
    return w.act(m)


# ---------------------------------------------------------------------------
# singular vectors
# ---------------------------------------------------------------------------

_SINGULAR_CACHE: dict[tuple[int, int], UEAElement] = {}


def singular_vector(label: KacLabel | tuple[int, int], tau: RationalFunction | None = None) -> UEAElement:
    """The unique normalized level-rs singular vector annihilated by L_1, L_2.

    Keeps tau symbolic by default.  With a specialized rational tau the linear
    system can degenerate (colliding submodules); that raises ResonanceError
    instead of silently picking a representative.
    """
    if isinstance(label, tuple):
        label = KacLabel(*label)
    symbolic = tau is None or tau == TAU
    if symbolic and (label.r, label.s) in _SINGULAR_CACHE:
        return _SINGULAR_CACHE[(label.r, label.s)]
    t = TAU if symbolic else tau
    module = VermaModule.kac(label, t)
    n = label.level
    basis = level_basis(n)
    unit = (1,) * n
    zero = RationalFunction.const(0, t.vars)

    # columns: action of L_1 and L_2 on each basis word applied to v
    rows: dict[tuple[int, Monomial], dict[Monomial, RationalFunction]] = {}
    for w in basis:
        vec = VermaVector(module, {w: RationalFunction.const(1, t.vars)})
        for m in (1, 2):
            img = vec.act(m)
            for w2, c in img.terms.items():
                rows.setdefault((m, w2), {})[w] = c

    # eliminate: unknowns x_w for w != unit, x_unit = 1
    eqs: list[dict[Monomial, RationalFunction]] = []
    rhs: list[RationalFunction] = []
    for _, row in sorted(rows.items()):
        r = dict(row)
        b = -r.pop(unit, zero)
        eqs.append(r)
        rhs.append(b)

    unknowns = [w for w in basis if w != unit]
    solution = _solve_sparse(eqs, rhs, unknowns, zero)

    terms = {unit: RationalFunction.const(1, t.vars)}
    for w, c in solution.items():
        if c:
            terms[w] = c
    result = UEAElement(terms)

    # certify: the defining conditions hold exactly
    vec = module.vector(result)
    for m in (1, 2):
        if not vec.act(m).is_zero():
            raise ResonanceError(f"candidate singular vector not annihilated by L_{m}")
    if symbolic:
        _SINGULAR_CACHE[(label.r, label.s)] = result
    return result


def _solve_sparse(
    eqs: list[dict[Monomial, RationalFunction]],
    rhs: list[RationalFunction],
    unknowns: list[Monomial],
    zero: RationalFunction,
) -> dict[Monomial, RationalFunction]:
    """Exact Gaussian elimination on a sparse inhomogeneous system.

    Raises ResonanceError when the system is under-determined (some unknown
    never pinned) or inconsistent at a specialized parameter.
    """
    eqs = [dict(e) for e in eqs]
    rhs = list(rhs)
    solved: dict[Monomial, RationalFunction] = {}
    active = set(range(len(eqs)))
    remaining = set(unknowns)

    while remaining:
        # pick the pivot among the sparsest usable row
        pivot_row = None
        pivot_col = None
        best = None
        for i in active:
            row = eqs[i]
            if not row:
                continue
            size = len(row)
            if best is None or size < best:
                col = min(row)  # deterministic tie-break
                best = size
                pivot_row, pivot_col = i, col
        if pivot_row is None:
            raise ResonanceError(
                f"singular system: {len(remaining)} unknown coefficient(s) left free"
            )
        row = eqs[pivot_row]
        piv = row.pop(pivot_col)
        b = rhs[pivot_row]
        inv = RationalFunction.const(1, piv.vars) / piv
        row = {w: c * inv for w, c in row.items()}
        b = b * inv
        active.discard(pivot_row)
        # substitute into the other rows
        for i in list(active):
            other = eqs[i]
            coef = other.pop(pivot_col, None)
            if coef is None:
                continue
            for w, c in row.items():
                s = other.get(w, zero) - coef * c
                if s:
                    other[w] = s
                else:
                    other.pop(w, None)
            rhs[i] = rhs[i] - coef * b
            if not other and rhs[i]:
                raise ResonanceError("inconsistent singular-vector system")
        solved[pivot_col] = (b, row)
        remaining.discard(pivot_col)

    # back-substitution
    result: dict[Monomial, RationalFunction] = {}

    def value(w: Monomial) -> RationalFunction:
        if w in result:
            return result[w]
        b, row = solved[w]
        acc = b
        for w2, c in row.items():
            acc = acc - c * value(w2)
        result[w] = acc
        return acc

    for w in unknowns:
        value(w)
    # consistency of the leftover rows
    for i in active:
        acc = rhs[i]
        for w, c in eqs[i].items():
            acc = acc - c * result[w]
        if acc:
            raise ResonanceError("inconsistent singular-vector system")
    return result


def bsa_vector(r: int) -> UEAElement:
    """Level-r singular vector for s = 1 assembled from the composition sum.

    Sum over compositions (n_1, ..., n_k) of r of
    ((r-1)!)^2 (-tau)^(r-k) / prod_{i<k} (n_1+...+n_i)(r-n_1-...-n_i)
    times L_{-n_1} ... L_{-n_k}, then normal ordered.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    fact2 = Fraction(1)
    for i in range(1, r):
        fact2 *= i * i
    total = UEAElement.zero()
    for comp in _compositions(r):
        k = len(comp)
        denom = Fraction(1)
        partial = 0
        for i in range(k - 1):
            partial += comp[i]
            denom *= partial * (r - partial)
        coeff = (-TAU) ** (r - k) * rf(fact2 / denom)
        total = total + UEAElement.from_word(tuple(comp), coeff)
    return total


def _compositions(n: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in _compositions(n - first):
            yield (first,) + rest


def dual_vector(a: UEAElement) -> UEAElement:
    """Swap tau for 1/tau in every coefficient (r,s label transposition)."""
    inv = {"tau": rf(1) / TAU}
    return a.map_coeffs(lambda c: c.substitute(inv))


def is_singular_in(element: UEAElement, label: KacLabel, tau: RationalFunction | None = None,
                   max_positive_mode: int = 2) -> bool:
    """Check L_1 ... L_n annihilation of (element . v) in the (c, h_label) module."""
    module = VermaModule.kac(label, tau if tau is not None else TAU)
    vec = module.vector(element)
    return all(vec.act(m).is_zero() for m in range(1, max_positive_mode + 1))


_ = itertools  # reserved for callers iterating bases
