"""Sequential Monte-Carlo sampling of watermelon sector probabilities.

One strand at a time: the leftmost of j remaining strands is a chordal
SLE_kappa(rho) from a fused seed with rho = 2(j-1).  Its gap process
V - W is sqrt(kappa) times a Bessel flow, simulated in squared form
(dY = kappa*delta dt - 2 sqrt(kappa Y) dB, delta = 1 + 2(rho+2)/kappa) so
positivity holds by construction; the driving value is reconstructed as
W = V - sqrt(Y) with dV = 2 dt / (V - W).  The marked bulk point's image w
follows dw = 2 dt / (w - W).  A strand run classifies the point as "left"
(angle pi) or returns the conformal angle of the point in the remaining
domain, read off as arg(w - V) once the flow has escaped far past the point;
that angle seeds the next strand.  The first strand the point sits left of
determines its sector.

Per-sample RNG substreams are derived from seed XOR sampleIndex
(splitmix64-expanded xoshiro256++), so results are bit-identical for a fixed
seed regardless of thread count; sector tallies are integers.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, asdict, field

import numpy as np

try:
    import numba
    from numba import njit, prange
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return deco

    prange = range

__all__ = [
    "McConfig",
    "McEstimate",
    "bessel_dimension",
    "sample_strand_angle",
    "watermelon_mc",
    "partition_function_H",
    "estimate_to_json",
]


@dataclass(frozen=True)
class McConfig:
    n: int
    kappa: float
    theta: float
    samples: int
    dt: float = 0.005
    rng_seed: int = 1
    stop_radius_factor: float = 100.0
    left_threshold: float = math.pi - 1e-3
    gap_seed_factor: float = 1e-6
    max_steps: int = 2_000_000
    retries: int = 3

    def __post_init__(self):
        if self.n < 1 or self.samples < 1:
            raise ValueError("n and samples must be positive")
        if not (0.0 < self.kappa <= 4.0):
            raise ValueError("kappa must lie in (0, 4]")
        if not (0.0 < self.theta < math.pi):
            raise ValueError("theta must be strictly inside (0, pi)")
        if self.dt <= 0 or self.stop_radius_factor <= 1:
            raise ValueError("dt and stop_radius_factor must be positive (radius > 1)")


@dataclass
class McEstimate:
    fhat: list[float]
    stderr: list[float]
    counts: list[int]
    samples_used: int
    flagged_undecided: int
    im_violations: int
    config: McConfig | None = field(default=None, repr=False)


def bessel_dimension(kappa: float, rho: float) -> float:
    """delta = 1 + 2 (rho + 2) / kappa for the gap of an SLE_kappa(rho)."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if rho < 0:
        raise ValueError("rho must be nonnegative here (repulsive force points)")
    return 1.0 + 2.0 * (rho + 2.0) / kappa


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True)
def _splitmix64(x):
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & _MASK
    z = x
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK
    z = z ^ (z >> np.uint64(31))
    return x, z


@njit(cache=True)
def _init_state(seed):
    s = np.empty(4, dtype=np.uint64)
    x = seed
    allzero = True
    for i in range(4):
        x, z = _splitmix64(x)
        s[i] = z
        if z != np.uint64(0):
            allzero = False
    if allzero:
        s[0] = np.uint64(1)
    return s


@njit(cache=True)
def _next_u64(s):
    r = s[0] + s[3]
    result = (((r << np.uint64(23)) | (r >> np.uint64(41))) + s[0]) & _MASK
    t = (s[1] << np.uint64(17)) & _MASK
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = ((s[3] << np.uint64(45)) | (s[3] >> np.uint64(19))) & _MASK
    return result


@njit(cache=True)
def _next_unit(s):
    # uniform in (0, 1]
    return (np.float64(_next_u64(s) >> np.uint64(11)) + 1.0) * (0.5 ** 53)


@njit(cache=True)
def _strand(s, kappa, rho, theta_in, dt, stop_r2, left_thr, gap_seed, max_steps):
    """One SLE_kappa(rho) run from a fused seed, bulk point at e^{i theta_in}.

    Returns (theta_out, status): status 0 normal, 1 undecided (budget), 2
    imaginary-part violation; theta_out == pi flags a left passage.

    The output angle arg(w - V) is integrated incrementally: the gap flow
    gives d(w - V) = -2 dt (w - V) / ((V - W)(w - W)), hence
    d arg(w - V) = 2 Im(w) dt / ((V - W) |w - W|^2), a positive increment
    immune to the cancellation that kills a direct atan2 once the image
    collapses onto the force-point track.
    """
    delta = 1.0 + 2.0 * (rho + 2.0) / kappa
    kd = kappa * delta
    y_floor = 1e-6

    wx = math.cos(theta_in)
    wy = math.sin(theta_in)
    z0 = gap_seed
    Y = z0 * z0
    V = z0
    W = 0.0
    theta_v = math.atan2(wy, wx - V)
    r2_limit = stop_r2
    half_pi = 0.5 * math.pi

    g_cached = 0.0
    has_cached = False

    steps = 0
    while steps < max_steps:
        steps += 1
        dx = wx - W
        d2 = dx * dx + wy * wy
        # early left exit: image swallowed into the left boundary arc
        if dx < 0.0 and wy < -dx * 2e-3:
            if math.atan2(wy, dx) >= left_thr:
                return math.pi, 0
        if d2 >= r2_limit or wy < 1e-14 or theta_v >= math.pi:
            # the side is decided by the tip-relative angle; the remaining-domain
            # angle theta_v seeds the next strand on a right passage
            tip = math.atan2(wy, dx)
            if wy < 1e-14 or theta_v >= math.pi or r2_limit > 25.0 * stop_r2 \
                    or tip <= 0.1 or tip >= math.pi - 0.1:
                if tip >= half_pi:
                    return math.pi, 0
                if theta_v >= math.pi:
                    theta_v = math.pi - 1e-12
                return theta_v, 0
            # tip angle not yet settled: push the stop radius out and continue
            r2_limit *= 16.0

        yy = Y if Y > y_floor else y_floor
        scale = yy / kd
        dteff = dt * (d2 if d2 < scale else scale)

        # one Gaussian increment (Box-Muller pair, cached)
        if has_cached:
            xi = g_cached
            has_cached = False
        else:
            u1 = _next_unit(s)
            u2 = _next_unit(s)
            r = math.sqrt(-2.0 * math.log(u1))
            a = 2.0 * math.pi * u2
            xi = r * math.cos(a)
            g_cached = r * math.sin(a)
            has_cached = True

        sq = math.sqrt(dteff)
        Z = math.sqrt(Y)
        Ynew = Y + kd * dteff - 2.0 * math.sqrt(kappa * Y) * xi * sq
        if Ynew < 0.0:
            Ynew = 0.0
        zeff = Z
        zmin = 0.5 * math.sqrt(kd * dteff)
        if zeff < zmin:
            zeff = zmin
        theta_v += 2.0 * dteff * wy / (zeff * d2)
        V += 2.0 * dteff / zeff
        Y = Ynew
        W = V - math.sqrt(Y)

        inv = 2.0 * dteff / d2
        wx += inv * dx
        wy -= inv * wy
        if wy <= 0.0:
            return theta_v, 2

    return theta_v, 1


@njit(cache=True)
def _one_sample(seed, n, kappa, theta, dt, stop_r2, left_thr, gap_factor,
                max_steps, retries):
    """Full sector draw for one sample: returns (sector, undecided, imviol)."""
    s = _init_state(seed)
    undecided = 0
    imviol = 0
    th = theta
    for k in range(1, n + 1):
        rho = 2.0 * (n - k)
        ok = False
        ang = 0.0
        for _attempt in range(retries + 1):
            ang, status = _strand(s, kappa, rho, th, dt, stop_r2, left_thr,
                                  gap_factor, max_steps)
            if status == 0:
                ok = True
                break
            if status == 1:
                undecided += 1
            else:
                imviol += 1
        if not ok:
            # forced classification with the last available angle
            if ang >= left_thr:
                ang = math.pi
        if ang >= math.pi:
            return k - 1, undecided, imviol
        if ang <= 1e-12:
            ang = 1e-12
        th = ang
    return n, undecided, imviol


@njit(cache=True, parallel=True)
def _run_batch(seed, n, kappa, theta, samples, dt, stop_r2, left_thr,
               gap_factor, max_steps, retries):
    sectors = np.empty(samples, dtype=np.int64)
    undecided = np.zeros(samples, dtype=np.int64)
    imviol = np.zeros(samples, dtype=np.int64)
    for i in prange(samples):
        sub = seed ^ np.uint64(i)
        sec, und, imv = _one_sample(sub, n, kappa, theta, dt, stop_r2,
                                    left_thr, gap_factor, max_steps, retries)
        sectors[i] = sec
        undecided[i] = und
        imviol[i] = imv
    return sectors, undecided, imviol


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def _apply_thread_cap():
    cap = os.environ.get("VIRFUSE_THREADS")
    if cap and _HAVE_NUMBA:
        numba.set_num_threads(max(1, int(cap)))


def sample_strand_angle(kappa: float, rho: float, theta_in: float,
                        config: McConfig | None = None,
                        rng_seed: int = 1) -> float:
    """Single strand draw; returns the angle in (0, pi], pi meaning left passage."""
    if not (0.0 < theta_in < math.pi):
        raise ValueError("theta_in must lie in (0, pi)")
    cfg = config or McConfig(n=1, kappa=kappa, theta=theta_in, samples=1)
    s = _init_state(np.uint64(rng_seed & 0xFFFFFFFFFFFFFFFF))
    for _ in range(cfg.retries + 1):
        ang, status = _strand(s, float(kappa), float(rho), float(theta_in),
                              cfg.dt, cfg.stop_radius_factor ** 2,
                              cfg.left_threshold, cfg.gap_seed_factor,
                              cfg.max_steps)
        if status == 0:
            return ang
    return math.pi if ang >= cfg.left_threshold else ang


def watermelon_mc(config: McConfig) -> McEstimate:
    """Sequential sector sampling; deterministic for a fixed seed."""
    _apply_thread_cap()
    seed = np.uint64(config.rng_seed & 0xFFFFFFFFFFFFFFFF)
    sectors, undecided, imviol = _run_batch(
        seed, config.n, float(config.kappa), float(config.theta),
        config.samples, float(config.dt), float(config.stop_radius_factor) ** 2,
        float(config.left_threshold), float(config.gap_seed_factor),
        config.max_steps, config.retries,
    )
    counts = np.bincount(sectors, minlength=config.n + 1)
    samples = config.samples
    fhat = [c / samples for c in counts.tolist()]
    stderr = [math.sqrt(f * (1.0 - f) / samples) for f in fhat]
    return McEstimate(
        fhat=fhat,
        stderr=stderr,
        counts=[int(c) for c in counts],
        samples_used=samples,
        flagged_undecided=int(undecided.sum()),
        im_violations=int(imviol.sum()),
        config=config,
    )


def partition_function_H(n: int, kappa: float, xs: list[float]) -> float:
    """Product of pair powers for seeds on the line aiming at infinity.

    With the boundary kernel (y - x)^-2 on the half-plane and the target at
    infinity in the standard coordinate, the value is
    prod_{i<j} (x_j - x_i)^(2/kappa).
    """
    if len(xs) != n:
        raise ValueError("expected n seed coordinates")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    for a, b in zip(xs, xs[1:]):
        if not a < b:
            raise ValueError("seed coordinates must be strictly increasing")
    total = 1.0
    for i in range(n):
        for j in range(i + 1, n):
            total *= (xs[j] - xs[i]) ** (2.0 / kappa)
    return total


def estimate_to_json(est: McEstimate) -> str:
    payload = {
        "config": asdict(est.config) if est.config else None,
        "fHat": est.fhat,
        "stdErr": est.stderr,
        "counts": est.counts,
        "samplesUsed": est.samples_used,
        "flaggedUndecided": est.flagged_undecided,
        "imViolations": est.im_violations,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
