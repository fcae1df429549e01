"""Algebraic elimination that collapses a level-2 insertion onto a singular vector.

A formal series w = t^alpha sum_k t^k R_k v0 carries two compatible null
conditions: the level-2 condition at the nearby point determines the
descendant coefficients R_k by a first-order recursion, and expanding the
level-rs condition against that series produces elements P_k of the lowering
algebra that must kill v0.  The first nonzero P_k is a singular vector for the
adjacent weight h_{r+-1,s}; at the expected level it is an exact scalar
multiple of the corresponding normalized singular vector.

Everything here is exact over Q(tau).  At a specialized rational tau the
recursion denominators r(alpha+k) can vanish; that raises ResonanceError
naming the offending order instead of guessing a continuation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .rational import RationalFunction
from .virasoro import (
    TAU,
    TAU_VARS,
    KacLabel,
    ResonanceError,
    UEAElement,
    VermaModule,
    dual_vector,
    kac_weight,
    rf,
    singular_vector,
)

__all__ = [
    "FusionContext",
    "FusionSeries",
    "EliminationResult",
    "indicial_roots",
    "descendants",
    "hat_apply",
    "fuse",
    "fuse_dual",
    "CertificateError",
]


class CertificateError(ArithmeticError):
    """An extracted element failed the singularity certificate."""


@dataclass(frozen=True)
class FusionContext:
    """Indicial data for fusing a (2,1)-type insertion onto the (r,s) vector."""

    label: KacLabel
    sign: str  # "+" or "-"
    alpha: RationalFunction
    h: RationalFunction       # weight of the formal local factor (= h_{2,1})
    h_tilde: RationalFunction  # weight entering the indicial quadratic (= h_{r,s})

    def __post_init__(self):
        if self.sign not in ("+", "-"):
            raise ValueError("sign must be '+' or '-'")
        if self.indicial_quadratic(self.alpha):
            raise ValueError("alpha is not a root of the indicial quadratic")

    @classmethod
    def for_label(cls, label: KacLabel | tuple[int, int], sign: str,
                  tau: RationalFunction | None = None) -> "FusionContext":
        if isinstance(label, tuple):
            label = KacLabel(*label)
        t = tau if tau is not None else TAU
        plus, minus = indicial_roots(label, t)
        alpha = plus if sign == "+" else minus
        return cls(
            label=label,
            sign=sign,
            alpha=alpha,
            h=kac_weight(KacLabel(2, 1), t),
            h_tilde=kac_weight(label, t),
        )

    @property
    def tau(self) -> RationalFunction:
        # h_{2,1} = 3 tau / 4 - 1/2  =>  tau = (4 h + 2) / 3
        return (self.h * 4 + 2) / 3

    def indicial_quadratic(self, nu: RationalFunction) -> RationalFunction:
        """r(nu) = nu (nu - 1) + tau nu - tau h_tilde."""
        t = self.tau
        return nu * (nu - 1) + t * nu - t * self.h_tilde

    def target(self) -> KacLabel:
        r = self.label.r + (1 if self.sign == "+" else -1)
        if r < 1:
            raise ValueError("fusion target label leaves the Kac table")
        return KacLabel(r, self.label.s)


@dataclass
class FusionSeries:
    context: FusionContext
    coefficients: list[UEAElement]  # R_0 .. R_K

    def order(self) -> int:
        return len(self.coefficients) - 1

    def check_recursion(self) -> bool:
        """Re-verify r(alpha+k) R_k = tau (L_{-1} R_{k-1} + sum_j L_{-j} R_{k-j})."""
        ctx = self.context
        t = ctx.tau
        for k in range(1, len(self.coefficients)):
            lhs = self.coefficients[k].scale(ctx.indicial_quadratic(ctx.alpha + k))
            rhs = UEAElement.generator(1) * self.coefficients[k - 1]
            for j in range(2, k + 1):
                rhs = rhs + UEAElement.generator(j) * self.coefficients[k - j]
            if lhs != rhs.scale(t):
                return False
        return True


@dataclass
class EliminationResult:
    context: FusionContext
    first_nonzero_level: int
    Pk: UEAElement
    proportionality_constant: RationalFunction | None
    target: KacLabel
    all_P: list[UEAElement] = field(default_factory=list)
    certificate: bool = False

    def to_json(self) -> dict:
        return {
            "context": {
                "r": self.context.label.r,
                "s": self.context.label.s,
                "sign": self.context.sign,
                "alpha": self.context.alpha.to_json(),
            },
            "Pk": [p.to_json() for p in self.all_P],
            "kStar": self.first_nonzero_level,
            "constant": (self.proportionality_constant.to_json()
                         if self.proportionality_constant is not None else None),
            "target": {"r": self.target.r, "s": self.target.s},
            "certificate": self.certificate,
        }


def indicial_roots(label: KacLabel | tuple[int, int],
                   tau: RationalFunction | None = None
                   ) -> tuple[RationalFunction, RationalFunction]:
    """Roots (alpha_+, alpha_-) = (1 - tau)/2 +- (r tau - s)/2 of the quadratic."""
    if isinstance(label, tuple):
        label = KacLabel(*label)
    t = tau if tau is not None else TAU
    half = Fraction(1, 2)
    base = (RationalFunction.const(1, t.vars) - t) * half
    offset = (t * label.r - label.s) * half
    plus, minus = base + offset, base - offset
    h_tilde = kac_weight(label, t)
    for root in (plus, minus):
        if root * (root - 1) + t * root - t * h_tilde:
            raise AssertionError("indicial root verification failed")
    return plus, minus


def descendants(context: FusionContext, K: int) -> FusionSeries:
    """R_0 .. R_K from the first-order recursion; exact, resonance-checked."""
    t = context.tau
    coeffs = [UEAElement.one()]
    for k in range(1, K + 1):
        denom = context.indicial_quadratic(context.alpha + k)
        if not denom:
            raise ResonanceError(f"recursion denominator vanishes at order k={k}")
        acc = UEAElement.generator(1) * coeffs[k - 1]
        for j in range(2, k + 1):
            acc = acc + UEAElement.generator(j) * coeffs[k - j]
        coeffs.append(acc.scale(t / denom))
    return FusionSeries(context, coeffs)


def hat_apply(element: UEAElement, series: FusionSeries) -> list[UEAElement]:
    """Expand the lifted element against the series and collect the outputs.

    The lift of L_{-j} acts on a term R t^(alpha+k) as
    (L_{-j} R) t^(alpha+k) - (alpha + k + (1-j) h) R t^(alpha+k-j).
    Returns [P_0, P_1, ...] where P_m is the coefficient of t^(alpha - N + m),
    N being the level of ``element`` (assumed homogeneous, all modes lowering).
    """
    levels = element.levels()
    if not levels:
        return []
    N = max(levels)
    ctx = series.context
    K = series.order()
    base: dict[int, UEAElement] = {k: series.coefficients[k] for k in range(K + 1)}

    total: dict[int, UEAElement] = {}
    for word, coeff in element.sorted_terms():
        cur = base
        for j in reversed(word):
            cur = _hat_generator(j, cur, ctx, K)
        for k, val in cur.items():
            scaled = val.scale(coeff)
            if scaled.is_zero():
                continue
            prev = total.get(k)
            total[k] = scaled if prev is None else prev + scaled

    out: list[UEAElement] = []
    for m in range(0, K + 1):
        val = total.get(m - N, UEAElement.zero())
        out.append(val)
    return out


def _hat_generator(j: int, series: dict[int, UEAElement], ctx: FusionContext,
                   K: int) -> dict[int, UEAElement]:
    gen = UEAElement.generator(j)
    lo = min(series) if series else 0
    out: dict[int, UEAElement] = {}
    shift_weight = ctx.h * (1 - j)
    for k in range(lo - j, K + 1):
        acc = UEAElement.zero()
        cur = series.get(k)
        if cur is not None:
            acc = gen * cur
        nxt = series.get(k + j)
        if nxt is not None:
            scalar = ctx.alpha + (k + j) + shift_weight
            acc = acc - nxt.scale(scalar)
        if not acc.is_zero():
            out[k] = acc
    return out


def fuse(label: KacLabel | tuple[int, int], sign: str, Kmax: int | None = None,
         tau: RationalFunction | None = None) -> EliminationResult:
    """Run the full elimination and certify the first nonzero output.

    The lifted condition uses the label's own normalized singular vector; the
    descendant recursion always carries the level-2 insertion data.  Returns
    the first nonzero P_k with its singularity certificate in the target
    module; when k* equals the target level, also the exact proportionality
    constant to the normalized target singular vector.
    """
    if isinstance(label, tuple):
        label = KacLabel(*label)
    ctx = FusionContext.for_label(label, sign, tau)
    target = ctx.target()
    if Kmax is None:
        Kmax = target.level + 2
    if Kmax < target.level:
        raise ValueError("Kmax below the target level cannot exhibit the output")

    delta = singular_vector(label, tau)
    series = descendants(ctx, Kmax)
    P = hat_apply(delta, series)

    k_star = next((k for k, p in enumerate(P) if not p.is_zero()), None)
    if k_star is None:
        raise CertificateError(f"no nonzero elimination output up to order {Kmax}")

    Pk = P[k_star]
    t = ctx.tau
    module = VermaModule.kac(target, t if tau is not None else None)
    vec = module.vector(Pk)
    certificate = vec.act(1).is_zero() and vec.act(2).is_zero()
    if not certificate:
        raise CertificateError(
            f"P_{k_star} fails the singularity certificate in the target module"
        )

    constant = None
    if k_star == target.level:
        unit = (1,) * k_star
        constant = Pk.coefficient(unit)
        if Pk != singular_vector(target, tau).scale(constant):
            raise CertificateError(
                "output is singular but not proportional to the target vector"
            )
    return EliminationResult(
        context=ctx,
        first_nonzero_level=k_star,
        Pk=Pk,
        proportionality_constant=constant,
        target=target,
        all_P=P[: k_star + 1],
        certificate=certificate,
    )


def fuse_dual(label: KacLabel | tuple[int, int], sign: str,
              Kmax: int | None = None) -> EliminationResult:
    """Fusion with the transposed (1,2)-type insertion: target (r, s +- 1).

    Runs the standard elimination on the transposed label and transports the
    result through tau -> 1/tau, using h_{r,s}(tau) = h_{s,r}(1/tau).
    """
    if isinstance(label, tuple):
        label = KacLabel(*label)
    base = fuse(label.transpose(), sign, Kmax)
    inv = {"tau": rf(1) / TAU}
    ctx = base.context
    new_target = base.target.transpose()
    new_ctx = FusionContext(
        label=label,
        sign=sign,
        alpha=ctx.alpha.substitute(inv),
        h=ctx.h.substitute(inv),
        h_tilde=ctx.h_tilde.substitute(inv),
    )
    constant = (base.proportionality_constant.substitute(inv)
                if base.proportionality_constant is not None else None)
    return EliminationResult(
        context=new_ctx,
        first_nonzero_level=base.first_nonzero_level,
        Pk=dual_vector(base.Pk),
        proportionality_constant=constant,
        target=new_target,
        all_P=[dual_vector(p) for p in base.all_P],
        certificate=base.certificate,
    )


_ = TAU_VARS
