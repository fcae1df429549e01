import sys, math
sys.path.insert(0, "src")
import numpy as np
from numba import njit
from virfuse.sle import _init_state, _next_unit

@njit(cache=False)
def probe(seed, kappa, rho, theta, dt, stopr2, leftthr, nsamp, y_floor, zmin_fac):
    # per-sample: [exit(0 earlyleft,1 radius,2 wy-small,3 thetaV>=pi), thetaV, argwW, wy, Z, |w-W|, steps]
    out = np.zeros((nsamp, 7))
    for i in range(nsamp):
        s = _init_state(np.uint64(seed) ^ np.uint64(i))
        delta = 1.0 + 2.0 * (rho + 2.0) / kappa
        kd = kappa * delta
        wx = math.cos(theta); wy = math.sin(theta)
        z0 = 1e-6; Y = z0 * z0; V = z0; W = 0.0
        theta_v = math.atan2(wy, wx - V)
        g_cached = 0.0; cached = False
        code = -1.0
        steps = 0
        dx = 0.0; d2 = 0.0
        while steps < 3000000:
            steps += 1
            dx = wx - W
            d2 = dx * dx + wy * wy
            if dx < 0.0 and wy < -dx * 2e-3 and math.atan2(wy, dx) >= leftthr:
                code = 0.0; break
            if d2 >= stopr2:
                code = 1.0; break
            if wy < 1e-14:
                code = 2.0; break
            if theta_v >= math.pi:
                code = 3.0; break
            yy = Y if Y > y_floor else y_floor
            scale = yy / kd
            dteff = dt * (d2 if d2 < scale else scale)
            if cached:
                xi = g_cached; cached = False
            else:
                u1 = _next_unit(s); u2 = _next_unit(s)
                r = math.sqrt(-2.0 * math.log(u1)); a = 2.0 * math.pi * u2
                xi = r * math.cos(a); g_cached = r * math.sin(a); cached = True
            sq = math.sqrt(dteff)
            Z = math.sqrt(Y)
            Ynew = Y + kd * dteff - 2.0 * math.sqrt(kappa * Y) * xi * sq
            if Ynew < 0.0:
                Ynew = 0.0
            zmin = zmin_fac * math.sqrt(kd * dteff)
            zeff = Z if Z > zmin else zmin
            theta_v += 2.0 * dteff * wy / (zeff * d2)
            V += 2.0 * dteff / zeff
            Y = Ynew
            W = V - math.sqrt(Y)
            inv = 2.0 * dteff / d2
            wx += inv * dx
            wy -= inv * wy
            if wy <= 0.0:
                code = 4.0; break
        out[i, 0] = code; out[i, 1] = theta_v; out[i, 2] = math.atan2(wy, dx)
        out[i, 3] = wy; out[i, 4] = V - W; out[i, 5] = math.sqrt(d2); out[i, 6] = steps
    return out

res = probe(5, 8/3, 0.0, math.pi/2, 0.005, 100.0**2, math.pi - 1e-3, 8000, 1e-6, 0.5)
codes = res[:, 0]
import collections
print("exit codes:", collections.Counter(codes.tolist()))
thetaV = res[:, 1]
left = (codes == 0) | (thetaV >= math.pi - 1e-3)
print("P(left):", left.mean())
m = ~left
print("thetaV right-events quantiles:", np.quantile(thetaV[m], [0, .1, .25, .5, .75, .9, 1.]))
print("mean steps:", res[:,6].mean())
# how many right events with thetaV in (pi-0.1, pi-1e-3)?
print("near-pi right mass:", ((thetaV[m] > math.pi - 0.1)).mean())
# early-left vs thetaV value at early exit
m0 = codes == 0
print("early-left thetaV quantiles:", np.quantile(thetaV[m0], [0, .1, .5, .9, 1.]))
EOF = None
