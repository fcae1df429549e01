"""Frobenius expansions and numerical transport for the compiled operators.

The watermelon operator lives on s in (-inf, 0); numerics run in the positive
coordinate x = -s (and u = 1/x near infinity), where series in a local
variable stay real.  Regular singular endpoints are handled by exact-indexed
Frobenius series, the interior by an adaptive embedded Runge-Kutta integrator
(scipy's DOP853) on the companion first-order system.

Boundary data: the two-sector curve is pinned by its endpoint limits; for
three or more sectors the kernel basis is returned as a fundamental system
seeded at the symmetric interior point, and Monte-Carlo data can be fitted
onto it by least squares (the probability components are some kernel elements,
but nothing here assumes they exhaust it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .bpz import OdeOperator, compile_D, indicial_data, transform_flip, transform_inverse
from .rational import MultiPoly

__all__ = [
    "FrobeniusSolution",
    "SolutionCurve",
    "IntegrationNearSingularityError",
    "ResonantExponentError",
    "indicial_polynomial",
    "indicial_exponents",
    "frobenius_series",
    "integrate",
    "solve_watermelon",
    "curve_to_csv",
    "curve_to_svg",
]


class IntegrationNearSingularityError(RuntimeError):
    """The integrator stalled approaching a singular point; use a series there."""


class ResonantExponentError(ArithmeticError):
    """Another indicial root sits a positive integer above the requested one."""


# ---------------------------------------------------------------------------
# indicial data
# ---------------------------------------------------------------------------


def indicial_polynomial(ode: OdeOperator, point) -> list[Fraction]:
    """Exact coefficient list (low to high in nu) of the indicial polynomial.

    Requires the operator to be fully specialized (no symbolic kappa) and the
    point to be ordinary or regular singular; irregular points raise.
    """
    regular, poly = indicial_data(ode, point)
    if not regular:
        raise ValueError(f"irregular singular point {point!r}")
    extra = [v for v in poly.vars if v != "nu"]
    for v in extra:
        if poly.degree_in(v):
            raise ValueError("indicial polynomial requires a specialized operator")
    deg = poly.degree_in("nu")
    i = poly.vars.index("nu")
    out = [Fraction(0)] * (deg + 1)
    for e, c in poly.terms.items():
        out[e[i]] += c
    return out


def indicial_exponents(ode: OdeOperator, point) -> list[float]:
    """Roots of the indicial polynomial, exact rationals first, then floats."""
    coeffs = indicial_polynomial(ode, point)
    roots: list[float] = []
    # deflate rational roots exactly
    work = [Fraction(c) for c in coeffs]
    while len(work) > 1 and not work[0]:
        roots.append(0.0)
        work.pop(0)
    changed = True
    while changed and len(work) > 2:
        changed = False
        scale = _content(work)
        ints = [int(c / scale) for c in work]
        for p in _divs(abs(ints[0])) if ints[0] else []:
            for q in _divs(abs(ints[-1])):
                for cand in (Fraction(p, q), Fraction(-p, q)):
                    if not _poly_at(work, cand):
                        work = _deflate(work, cand)
                        roots.append(float(cand))
                        changed = True
                        break
                if changed:
                    break
            if changed:
                break
    if len(work) == 2:
        roots.append(float(-work[0] / work[1]))
    elif len(work) > 2:
        roots.extend(float(r.real) for r in np.roots([float(c) for c in reversed(work)]))
    return sorted(roots)


def _content(cs: list[Fraction]) -> Fraction:
    num, den = 0, 1
    for c in cs:
        num = math.gcd(num, abs(c.numerator))
        den = den * c.denominator // math.gcd(den, c.denominator)
    return Fraction(num, den) if num else Fraction(1)


def _divs(n: int) -> list[int]:
    if not n:
        return [1]
    return [d for d in range(1, n + 1) if n % d == 0]


def _poly_at(cs: list[Fraction], x: Fraction) -> Fraction:
    total = Fraction(0)
    for c in reversed(cs):
        total = total * x + c
    return total


def _deflate(cs: list[Fraction], root: Fraction) -> list[Fraction]:
    out = [Fraction(0)] * (len(cs) - 1)
    acc = Fraction(0)
    for i in range(len(cs) - 1, 0, -1):
        acc = cs[i] + acc * root
        out[i - 1] = acc
    return out


# ---------------------------------------------------------------------------
# Frobenius series
# ---------------------------------------------------------------------------


@dataclass
class FrobeniusSolution:
    expansion_point: object          # Fraction or "inf" in the operator's variable
    exponent: object                 # Fraction (exact mode) or float
    coefficients: list               # c_0 = 1, Fractions or floats
    truncation_order: int
    _fjs: list[list] = field(default_factory=list, repr=False)

    def evaluate(self, w: float) -> float:
        """Series value at local coordinate w = var - point (w > 0)."""
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * w + float(c)
        return acc * w ** float(self.exponent)

    def evaluate_deriv(self, w: float) -> float:
        lam = float(self.exponent)
        acc = 0.0
        for k in range(len(self.coefficients) - 1, -1, -1):
            acc = acc * w + float(self.coefficients[k]) * (lam + k)
        return acc * w ** (lam - 1.0)

    def residuals(self) -> list:
        """Recursion residual at each computed order (zero in exact mode)."""
        out = []
        lam = self.exponent
        for ell in range(len(self.coefficients)):
            acc = 0
            for k in range(0, ell + 1):
                j = ell - k
                if j < len(self._fjs):
                    acc += self.coefficients[k] * _eval_poly(self._fjs[j], lam + k)
            out.append(acc)
        return out


def _eval_poly(cs: Sequence, x):
    total = 0
    for c in reversed(cs):
        total = total * x + c
    return total


def _local_fjs(ode: OdeOperator, point: Fraction, count: int) -> list[list[Fraction]]:
    """f_j(nu) with L x^nu = sum_j f_j(nu) x^(nu + mu + j), x = var - point."""
    var = ode.var
    from .bpz import _shift_poly  # shared exact helper

    shifted = [_shift_poly(p, var, Fraction(point)) for p in ode.coeffs]
    # pi[i][m]: coefficient of x^m in p_i, as plain Fractions
    pis: list[dict[int, Fraction]] = []
    for p in shifted:
        d: dict[int, Fraction] = {}
        iv = p.vars.index(var)
        for e, c in p.terms.items():
            if any(e[j] for j in range(len(e)) if j != iv):
                raise ValueError("operator must be specialized before series expansion")
            d[e[iv]] = d.get(e[iv], Fraction(0)) + c
        pis.append(d)
    mu = min((m - i for i, d in enumerate(pis) for m in d), default=0)
    fjs: list[list[Fraction]] = []
    for j in range(count):
        # f_j(nu) = sum_i pi[i][mu + j + i] * nu (nu-1) ... (nu-i+1)
        poly = [Fraction(0)]
        for i, d in enumerate(pis):
            c = d.get(mu + j + i)
            if not c:
                continue
            fall = [Fraction(1)]
            for k in range(i):
                # multiply by (nu - k)
                fall = [Fraction(0)] + fall
                for t in range(len(fall) - 1):
                    fall[t] -= Fraction(k) * fall[t + 1]
            fall = [q * c for q in fall]
            if len(fall) > len(poly):
                poly += [Fraction(0)] * (len(fall) - len(poly))
            for t, q in enumerate(fall):
                poly[t] += q
        fjs.append(poly)
    return fjs


def frobenius_series(ode: OdeOperator, point, exponent, order: int) -> FrobeniusSolution:
    """Solve the coefficient recursion at a regular singular (or ordinary) point.

    ``exponent`` must be a root of the indicial polynomial; if another root
    exceeds it by one of the first ``order`` positive integers the recursion
    denominator vanishes and ResonantExponentError names the gap.
    """
    regular, _ = indicial_data(ode, point)
    if not regular:
        raise ValueError(f"irregular singular point {point!r}")
    fjs = _local_fjs(ode, Fraction(point), order + 1)
    exact = isinstance(exponent, (int, Fraction))
    lam = Fraction(exponent) if exact else float(exponent)
    ind0 = _eval_poly(fjs[0], lam)
    if (exact and ind0) or (not exact and abs(ind0) > 1e-10 * max(1.0, max(abs(float(c)) for c in fjs[0]))):
        raise ValueError("exponent is not an indicial root")
    coeffs = [Fraction(1) if exact else 1.0]
    for ell in range(1, order + 1):
        denom = _eval_poly(fjs[0], lam + ell)
        if (exact and not denom) or (not exact and abs(denom) < 1e-300):
            raise ResonantExponentError(f"indicial root collision at integer gap {ell}")
        acc = coeffs[0] * 0
        for k in range(0, ell):
            j = ell - k
            if j < len(fjs):
                acc += coeffs[k] * _eval_poly(fjs[j], lam + k)
        coeffs.append(-acc / denom)
    return FrobeniusSolution(point, lam, coeffs, order, _fjs=fjs)


# ---------------------------------------------------------------------------
# numerical transport
# ---------------------------------------------------------------------------


def _float_coeff_funcs(ode: OdeOperator):
    var = ode.var
    dense = []
    for p in ode.coeffs:
        d: dict[int, float] = {}
        iv = p.vars.index(var)
        for e, c in p.terms.items():
            if any(e[j] for j in range(len(e)) if j != iv):
                raise ValueError("operator must be specialized for numerics")
            d[e[iv]] = d.get(e[iv], 0.0) + float(c)
        deg = max(d) if d else 0
        dense.append(np.array([d.get(k, 0.0) for k in range(deg + 1)]))
    return dense


def _companion_rhs(dense):
    N = len(dense) - 1

    def rhs(t, y):
        ps = [float(np.polyval(c[::-1], t)) for c in dense]
        top = ps[N]
        out = np.empty(N)
        out[:-1] = y[1:]
        out[-1] = -sum(ps[i] * y[i] for i in range(N)) / top
        return out

    return rhs


def integrate(ode: OdeOperator, initial: Sequence[float], target: float,
              tol: float = 1e-10, dense: bool = False):
    """Transport (f, f', ..., f^(N-1)) from initial[0] to target.

    ``initial`` is (s0, f(s0), ..., f^(N-1)(s0)).  The span must avoid zeros
    of the leading coefficient; a stalled step near one raises
    IntegrationNearSingularityError.
    """
    s0 = float(initial[0])
    y0 = np.array([float(v) for v in initial[1:]], dtype=float)
    dense_coeffs = _float_coeff_funcs(ode)
    N = ode.order
    if len(y0) != N:
        raise ValueError(f"expected {N} initial derivatives, got {len(y0)}")
    lead = dense_coeffs[-1]
    for pt in np.linspace(s0, target, 33):
        if abs(np.polyval(lead[::-1], pt)) < 1e-300:
            raise IntegrationNearSingularityError(
                f"leading coefficient vanishes near {pt}; seed a Frobenius series instead")
    sol = solve_ivp(_companion_rhs(dense_coeffs), (s0, target), y0,
                    method="DOP853", rtol=tol, atol=tol * 1e-2,
                    dense_output=dense)
    if not sol.success:
        raise IntegrationNearSingularityError(sol.message)
    if dense:
        return sol
    return sol.y[:, -1]


# ---------------------------------------------------------------------------
# watermelon curves
# ---------------------------------------------------------------------------


@dataclass
class SolutionCurve:
    theta_grid: list[float]
    values: list[list[float]]        # per grid point, (f_0 ... f_n)
    kappa: float
    n: int
    method: str
    fit_residual: float | None = None
    fit_condition: float | None = None
    basis: list[list[float]] | None = None

    def check_invariants(self, eps: float = 1e-6) -> None:
        for row in self.values:
            if abs(sum(row) - 1.0) > eps:
                raise AssertionError("sector probabilities do not sum to 1")
            for v in row:
                if v < -eps or v > 1 + eps:
                    raise AssertionError("sector probability outside [0, 1]")


def default_theta_grid(m: int = 63) -> list[float]:
    """Chebyshev-spaced interior angles on (0, pi)."""
    return [math.pi * 0.5 * (1.0 - math.cos(math.pi * (k + 0.5) / m)) for k in range(m)]


def _theta_to_x(theta: float) -> float:
    t = math.cos(theta / 2.0) / math.sin(theta / 2.0)
    return t * t


class _TwoSectorSolver:
    """Endpoint-pinned solve of the order-2 operator in x = -s > 0."""

    SERIES_EDGE = 0.55
    FAR_EDGE = 2.2
    ORDER = 80

    def __init__(self, ode_s: OdeOperator, tol: float = 1e-11):
        self.Dx = transform_flip(ode_s)
        self.Du = transform_inverse(self.Dx)
        self.tol = tol
        e0 = [e for e in indicial_exponents(self.Dx, Fraction(0)) if abs(e) > 1e-12]
        einf = [e for e in indicial_exponents(self.Du, Fraction(0)) if abs(e) > 1e-12]
        if len(e0) != 1 or len(einf) != 1 or e0[0] <= 0 or einf[0] <= 0:
            raise ValueError("unexpected exponent structure for the two-sector operator")
        self.e0, self.einf = e0[0], einf[0]
        lam0 = _as_fraction_if_close(self.e0)
        laminf = _as_fraction_if_close(self.einf)
        self.series0 = frobenius_series(self.Dx, Fraction(0), lam0, self.ORDER)
        self.seriesinf = frobenius_series(self.Du, Fraction(0), laminf, self.ORDER)
        # transport the vanishing-at-0 branch outward and match at the far edge
        xa, xb = self.SERIES_EDGE, self.FAR_EDGE
        ya = [self.series0.evaluate(xa), self.series0.evaluate_deriv(xa)]
        self._mid = integrate(self.Dx, (xa, *ya), xb, tol=self.tol, dense=True)
        yb = self._mid.sol(xb)
        u = 1.0 / xb
        g = self.seriesinf.evaluate(u)
        gp_u = self.seriesinf.evaluate_deriv(u)
        gp_x = -u * u * gp_u
        # yb = a * (1, 0) + b * (g, gp_x)
        b = yb[1] / gp_x
        a = yb[0] - b * g
        if abs(a) < 1e-12:
            raise ArithmeticError("degenerate endpoint matching")
        self.a, self.b = a, b

    def value(self, x: float) -> float:
        """The solution with value 0 at x=0+ and 1 at x=+inf."""
        if x <= self.SERIES_EDGE:
            return self.series0.evaluate(x) / self.a
        if x >= self.FAR_EDGE:
            u = 1.0 / x
            return 1.0 + (self.b / self.a) * self.seriesinf.evaluate(u)
        return float(self._mid.sol(x)[0]) / self.a


def _as_fraction_if_close(e: float, tol: float = 1e-9) -> object:
    fr = Fraction(e).limit_denominator(1000)
    if abs(float(fr) - e) < tol:
        return fr
    return e


def solve_watermelon(n: int, kappa, grid: Sequence[float] | None = None,
                     mc: dict | None = None, tol: float = 1e-11) -> SolutionCurve:
    """Sector-probability curves for n strands at the given kappa.

    n = 1: the two components are pinned by the endpoint limits (the sector
    adjacent to the boundary ray reached as theta -> pi fills up there).
    n >= 2: returns a fundamental system seeded at theta = pi/2; with ``mc``
    data ({"theta": [...], "fhat": [[...], ...]}) also the least-squares fit
    of the sector estimates onto the kernel, with residual and conditioning.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    kq = kappa if isinstance(kappa, Fraction) else Fraction(kappa).limit_denominator(10**12)
    if not (0 < float(kq) <= 4):
        raise ValueError("kappa must lie in (0, 4]")
    ode = compile_D(n, kq)
    thetas = list(grid) if grid is not None else default_theta_grid()

    if n == 1:
        solver = _TwoSectorSolver(ode, tol=tol)
        values = []
        for th in thetas:
            f1 = solver.value(_theta_to_x(th))
            f1 = min(max(f1, 0.0), 1.0)
            values.append([1.0 - f1, f1])
        curve = SolutionCurve(thetas, values, float(kq), n, "endpoint-pinned")
        curve.check_invariants()
        return curve

    # fundamental system seeded at the symmetric point x = 1
    basis = _fundamental_on_grid(ode, thetas, tol)
    curve = SolutionCurve(thetas, [[0.0] * (n + 1) for _ in thetas], float(kq), n,
                          "fundamental-system", basis=basis)
    if mc is None:
        return curve

    mc_thetas = [float(t) for t in mc["theta"]]
    fhat = np.array(mc["fhat"], dtype=float)  # shape (len(mc_thetas), n+1)
    B = np.array(_fundamental_on_grid(ode, mc_thetas, tol))  # (points, N)
    svals = np.linalg.svd(B, compute_uv=False)
    cond = float(svals[0] / svals[-1]) if svals[-1] > 0 else float("inf")
    if cond > 1e8:
        raise ArithmeticError(f"ill-conditioned kernel fit (condition number {cond:.3e})")
    coef, *_ = np.linalg.lstsq(B, fhat, rcond=None)  # (N, n+1)
    resid = float(np.max(np.abs(B @ coef - fhat)))
    Bg = np.array(basis)
    fitted = Bg @ coef  # (grid, n+1)
    row_sums = fitted.sum(axis=1, keepdims=True)
    fitted = fitted / np.where(np.abs(row_sums) < 1e-12, 1.0, row_sums)
    curve.values = fitted.tolist()
    curve.fit_residual = resid
    curve.fit_condition = cond
    return curve


def _fundamental_on_grid(ode: OdeOperator, thetas: Sequence[float], tol: float
                         ) -> list[list[float]]:
    """Identity-seeded kernel basis at x=1, evaluated on the theta grid."""
    Dx = transform_flip(ode)
    N = ode.order
    xs = [_theta_to_x(th) for th in thetas]
    order = np.argsort(xs)
    out = [[0.0] * N for _ in xs]
    # march outward from 1 in both directions, reusing dense segments
    for direction in (-1, 1):
        idxs = [i for i in order if (xs[i] < 1.0) == (direction == -1)]
        if direction == -1:
            idxs = sorted(idxs, key=lambda i: -xs[i])
        else:
            idxs = sorted(idxs, key=lambda i: xs[i])
        for j in range(N):
            y = np.zeros(N)
            y[j] = 1.0
            cur = 1.0
            for i in idxs:
                x = xs[i]
                if abs(x - cur) > 1e-14:
                    sol = solve_ivp(_companion_rhs(_float_coeff_funcs(Dx)), (cur, x), y,
                                    method="DOP853", rtol=tol, atol=tol * 1e-2)
                    if not sol.success:
                        raise IntegrationNearSingularityError(sol.message)
                    y = sol.y[:, -1]
                    cur = x
                out[i][j] = float(y[0])
    return out


# ---------------------------------------------------------------------------
# output formats
# ---------------------------------------------------------------------------


def curve_to_csv(curve: SolutionCurve) -> str:
    header = "theta," + ",".join(f"f{k}" for k in range(len(curve.values[0])))
    lines = [header]
    for th, row in zip(curve.theta_grid, curve.values):
        lines.append(",".join(f"{v:.12g}" for v in [th, *row]))
    return "\n".join(lines) + "\n"


def curve_to_svg(curve: SolutionCurve, width: int = 640, height: int = 420) -> str:
    pad = 40
    w, h = width - 2 * pad, height - 2 * pad
    t0, t1 = 0.0, math.pi

    def px(th):
        return pad + w * (th - t0) / (t1 - t0)

    def py(v):
        return pad + h * (1.0 - v)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{pad + h}" x2="{pad + w}" y2="{pad + h}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{pad + h}" stroke="black"/>',
        f'<text x="{pad + w / 2}" y="{height - 8}" font-size="12" text-anchor="middle">theta</text>',
    ]
    ncomp = len(curve.values[0])
    for k in range(ncomp):
        pts = " ".join(
            f"{px(th):.2f},{py(row[k]):.2f}"
            for th, row in zip(curve.theta_grid, curve.values)
        )
        c = colors[k % len(colors)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{pad + 6 + 40 * k}" y="{pad - 8}" font-size="12" fill="{c}">f{k}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


_ = MultiPoly
