import sys, math
sys.path.insert(0, "src")
import numpy as np
from numba import njit
from virfuse.sle import _init_state, _next_unit

@njit(cache=False)
def probe_bm(seed, kappa, theta, dt, stopr2, leftthr, nsamp):
    """rho=0 reference: W = sqrt(kappa) BM directly; V by its own flow."""
    out = np.zeros((nsamp, 3))
    for i in range(nsamp):
        s = _init_state(np.uint64(seed) ^ np.uint64(i))
        wx = math.cos(theta); wy = math.sin(theta)
        W = 0.0
        V = 1e-6
        theta_v = math.atan2(wy, wx - V)
        g_cached = 0.0; cached = False
        code = -1.0
        steps = 0
        while steps < 3000000:
            steps += 1
            dx = wx - W
            d2 = dx * dx + wy * wy
            Z = V - W
            if dx < 0.0 and wy < -dx * 2e-3 and math.atan2(wy, dx) >= leftthr:
                code = 0.0; break
            if d2 >= stopr2 or wy < 1e-14 or theta_v >= math.pi:
                code = 1.0; break
            scale = Z * Z / kappa
            dteff = dt * (d2 if d2 < scale else scale)
            if dteff < dt * 1e-7:
                dteff = dt * 1e-7
            if cached:
                xi = g_cached; cached = False
            else:
                u1 = _next_unit(s); u2 = _next_unit(s)
                r = math.sqrt(-2.0 * math.log(u1)); a = 2.0 * math.pi * u2
                xi = r * math.cos(a); g_cached = r * math.sin(a); cached = True
            zeff = Z
            zmin = math.sqrt(dteff)
            if zeff < zmin:
                zeff = zmin
            theta_v += 2.0 * dteff * wy / (zeff * d2)
            V += 2.0 * dteff / zeff
            W += math.sqrt(kappa * dteff) * xi
            if V < W:
                V = W + 1e-12
            inv = 2.0 * dteff / d2
            wx += inv * dx
            wy -= inv * wy
            if wy <= 0.0:
                code = 4.0; break
        out[i, 0] = code; out[i, 1] = theta_v; out[i, 2] = math.atan2(wy, wx - W)
    return out

for dt in (0.005, 0.00125):
    res = probe_bm(5, 8/3, math.pi/2, dt, 100.0**2, math.pi - 1e-3, 4000)
    codes = res[:, 0]; thetaV = res[:, 1]
    left = (codes == 0.0) | (thetaV >= math.pi - 1e-3)
    import collections
    print(f"dt={dt} BM-direct: P(left)={left.mean():.4f} codes={dict(collections.Counter(codes.tolist()))}")
    m = ~left
    print("  right thetaV quantiles:", np.quantile(thetaV[m], [0, .25, .5, .75, .9, 1.]))
