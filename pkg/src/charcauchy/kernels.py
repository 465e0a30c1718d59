"""Hot inner loops: characteristic (Goursat) marching and the RK4 line integrator.

Every kernel exists twice: an explicit loop compiled with numba, and a numpy
implementation (anti-diagonal wavefront for the march). ``march`` and
``rk4_line`` point at whichever backend :mod:`charcauchy._accel` selected;
both variants stay importable so the benchmark can compare them.
"""
import numpy as np

from . import _accel

try:
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None


def _march_loop(phi, src_c, a_c, b_c, q_c, h, i0, j0):
    nu, nv = phi.shape
    c = 0.25 * h * h
    inv2h = 0.5 / h
    for i in range(i0, nu - 1):
        for j in range(j0, nv - 1):
            sw = phi[i, j]
            se = phi[i + 1, j]
            nw = phi[i, j + 1]
            a = a_c[i, j]
            b = b_c[i, j]
            q = q_c[i, j]
            r0 = (src_c[i, j]
                  - a * (se - sw - nw) * inv2h
                  - b * (nw - sw - se) * inv2h
                  - q * (sw + se + nw) * 0.25)
            denom = 1.0 + c * ((a + b) * inv2h + 0.25 * q)
            phi[i + 1, j + 1] = (se + nw - sw + c * r0) / denom
    return phi


def march_numpy(phi, src_c, a_c, b_c, q_c, h, i0, j0):
    """Wavefront version of the march: cells with equal ``i + j`` are independent."""
    nu, nv = phi.shape
    c = 0.25 * h * h
    inv2h = 0.5 / h
    ni = nu - 1 - i0
    nj = nv - 1 - j0
    for k in range(ni + nj - 1):
        lo = max(0, k - (nj - 1))
        hi = min(ni - 1, k)
        i = np.arange(lo, hi + 1) + i0
        j = (k - (i - i0)) + j0
        sw = phi[i, j]
        se = phi[i + 1, j]
        nw = phi[i, j + 1]
        a = a_c[i, j]
        b = b_c[i, j]
        q = q_c[i, j]
        r0 = (src_c[i, j]
              - a * (se - sw - nw) * inv2h
              - b * (nw - sw - se) * inv2h
              - q * (sw + se + nw) * 0.25)
        denom = 1.0 + c * ((a + b) * inv2h + 0.25 * q)
        phi[i + 1, j + 1] = (se + nw - sw + c * r0) / denom
    return phi


def _rk4_loop(a_node, a_mid, g_node, g_mid, h, start, forward):
    n = a_node.shape[0]
    y = np.zeros(n)
    if forward:
        for j in range(start, n - 1):
            yj = y[j]
            k1 = 0.25 * (g_node[j] - a_node[j] * yj)
            k2 = 0.25 * (g_mid[j] - a_mid[j] * (yj + 0.5 * h * k1))
            k3 = 0.25 * (g_mid[j] - a_mid[j] * (yj + 0.5 * h * k2))
            k4 = 0.25 * (g_node[j + 1] - a_node[j + 1] * (yj + h * k3))
            y[j + 1] = yj + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    else:
        s = -h
        for j in range(start, 0, -1):
            yj = y[j]
            k1 = 0.25 * (g_node[j] - a_node[j] * yj)
            k2 = 0.25 * (g_mid[j - 1] - a_mid[j - 1] * (yj + 0.5 * s * k1))
            k3 = 0.25 * (g_mid[j - 1] - a_mid[j - 1] * (yj + 0.5 * s * k2))
            k4 = 0.25 * (g_node[j - 1] - a_node[j - 1] * (yj + s * k3))
            y[j - 1] = yj + s * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return y


march_python = _march_loop
rk4_python = _rk4_loop

if _numba is not None:
    march_numba = _numba.njit(cache=True)(_march_loop)
    rk4_numba = _numba.njit(cache=True)(_rk4_loop)
else:  # pragma: no cover
    march_numba = None
    rk4_numba = None

if _accel.USE_NUMBA:
    march = march_numba
    rk4_line = rk4_numba
else:
    march = march_numpy
    rk4_line = _rk4_loop

BACKEND = "numba" if _accel.USE_NUMBA else "numpy"


def cubic_midpoints(g):
    """Values at ``j + 1/2`` from 4-point Lagrange interpolation of node samples.

    Returns ``len(g) - 1`` values; one-sided stencils at both ends.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    if n < 4:
        raise ValueError("cubic interpolation needs at least 4 samples")
    mid = np.empty(n - 1)
    mid[1:-1] = (-g[:-3] + 9.0 * g[1:-2] + 9.0 * g[2:-1] - g[3:]) / 16.0
    mid[0] = (5.0 * g[0] + 15.0 * g[1] - 5.0 * g[2] + g[3]) / 16.0
    mid[-1] = (g[-4] - 5.0 * g[-3] + 15.0 * g[-2] + 5.0 * g[-1]) / 16.0
    return mid


def central_diff4(y, h):
    """Fourth-order first derivative of uniformly spaced samples (one-sided at the ends)."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if n < 5:
        return np.gradient(y, h, edge_order=2)
    d = np.empty(n)
    d[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
    for k in (0, 1):
        w = _FWD4[k]
        d[k] = np.dot(w, y[:5]) / h
        d[n - 1 - k] = -np.dot(w, y[::-1][:5]) / h
    return d


# rows: derivative at node 0 and node 1 of a 5-point forward stencil
_FWD4 = np.array([
    [-25.0, 48.0, -36.0, 16.0, -3.0],
    [-3.0, -10.0, 18.0, -6.0, 1.0],
]) / 12.0
