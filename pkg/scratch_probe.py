import sys, math
sys.path.insert(0, "src")
import numpy as np
from numba import njit
from virfuse.sle import _init_state, _next_unit

@njit(cache=False)
def probe(seed, kappa, rho, theta, dt, stopr2, leftthr, nsamp):
    # per-sample: [exitcode, argwW, argwV, Z, |w-W|, wy]
    out = np.zeros((nsamp, 6))
    for i in range(nsamp):
        s = _init_state(np.uint64(seed) ^ np.uint64(i))
        delta = 1.0 + 2.0 * (rho + 2.0) / kappa
        kd = kappa * delta
        wx = math.cos(theta); wy = math.sin(theta)
        z0 = 1e-6; Y = z0 * z0; V = z0; W = 0.0
        g_cached = 0.0; cached = False
        code = -1.0; argwW = 0.0; argwV = 0.0; dx = 0.0; d2 = 0.0
        for step in range(2000000):
            dx = wx - W
            d2 = dx * dx + wy * wy
            if dx < 0.0 and wy < -dx * 0.002 and math.atan2(wy, dx) >= leftthr:
                code = 0.0
                argwW = math.atan2(wy, dx); argwV = math.atan2(wy, wx - V)
                break
            if d2 >= stopr2:
                argwW = math.atan2(wy, dx); argwV = math.atan2(wy, wx - V)
                code = 1.0 if argwV >= leftthr else 2.0
                break
            yy = Y if Y > 1e-6 else 1e-6
            scale = yy / kd
            dteff = dt * (d2 if d2 < scale else scale)
            if cached:
                xi = g_cached; cached = False
            else:
                u1 = _next_unit(s); u2 = _next_unit(s)
                r = math.sqrt(-2.0 * math.log(u1)); a = 2.0 * math.pi * u2
                xi = r * math.cos(a); g_cached = r * math.sin(a); cached = True
            sq = math.sqrt(dteff)
            Ynew = Y + kd * dteff - 2.0 * math.sqrt(kappa * Y) * xi * sq
            if Ynew < 0.0:
                Ynew = 0.0
            Z = math.sqrt(Y)
            zmin = 0.5 * math.sqrt(kd * dteff)
            zeff = Z if Z > zmin else zmin
            V += 2.0 * dteff / zeff
            Y = Ynew
            W = V - math.sqrt(Y)
            inv = 2.0 * dteff / d2
            wx += inv * dx
            wy -= inv * wy
            if wy <= 0.0:
                code = 3.0
                break
        out[i, 0] = code; out[i, 1] = argwW; out[i, 2] = argwV
        out[i, 3] = V - W; out[i, 4] = math.sqrt(d2); out[i, 5] = wy
    return out

res = probe(5, 8/3, 0.0, math.pi/2, 0.005, 100.0**2, math.pi - 1e-3, 8000)
codes = res[:, 0]
import collections
print("exit codes:", collections.Counter(codes.tolist()))
left = (codes == 0) | (codes == 1)
print("P(left):", left.mean())
m = codes == 2
print("right-stop: argwW mean", res[m,1].mean(), " argwV mean", res[m,2].mean())
print("argwV quantiles (right):", np.quantile(res[m,2], [0, .1, .5, .9, 1.]))
print("argwW quantiles (right):", np.quantile(res[m,1], [0, .1, .5, .9, 1.]))
m1 = codes == 1
if m1.sum():
    print("radius-left: argwW quantiles:", np.quantile(res[m1,1], [0, .25, .5, .75, 1.]))
    print("radius-left: wy quantiles:", np.quantile(res[m1,5], [0, .25, .5, .75, 1.]))
    print("radius-left: Z mean", res[m1,3].mean(), "|w-W| mean", res[m1,4].mean())
print("early-left count:", (codes==0).sum(), " radius-left:", (codes==1).sum())
