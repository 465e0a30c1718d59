"""Slab spacetime in null coordinates, causal regions, and expansion densities.

The slab is ``t_min < t < t_max`` in 1+1 dimensions with null coordinates
``u = t - x``, ``v = t + x`` and metric ``g = Omega(u, v) du dv`` (``Omega = 1``
for Minkowski). The initial null line is ``u = 0``.

The expansion-density calculator works for a null hypersurface in any
dimension, given a generator-adapted chart ``(s, y) -> x``.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

SLAB_TOL = 1e-12


ZERO_EXPANSION = 1e-10


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class SlabSpacetime:
    t_min: float
    t_max: float
    omega: Optional[Callable] = None

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise GeometryError(f"need t_min < t_max, got {self.t_min}, {self.t_max}")

    @property
    def metric(self):
        return "minkowski" if self.omega is None else "conformal"

    def conformal_factor(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.omega is None:
            return np.ones(np.broadcast(u, v).shape)
        om = np.asarray(self.omega(u, v), dtype=float) * np.ones(np.broadcast(u, v).shape)
        if np.any(om <= 0):
            raise GeometryError("conformal factor must be positive")
        return om

    def volume_weight(self, u, v):
        """``|det g|^(1/2)`` in (u, v) coordinates: ``Omega / 2``."""
        return 0.5 * self.conformal_factor(u, v)

    def contains(self, u, v, closed=False):
        t = 0.5 * (np.asarray(u, dtype=float) + np.asarray(v, dtype=float))
        if closed:
            return (t >= self.t_min - SLAB_TOL) & (t <= self.t_max + SLAB_TOL)
        return (t > self.t_min) & (t < self.t_max)


@dataclass(frozen=True)
class SlabGrid:
    spacetime: SlabSpacetime
    h: float
    u: np.ndarray
    v: np.ndarray
    i0: int  # row index of the null line u = 0

    @property
    def shape(self):
        return (self.u.size, self.v.size)

    @property
    def nodes(self):
        return np.meshgrid(self.u, self.v, indexing="ij")

    @property
    def u_halfwidth(self):
        return float(-self.u[0])

    @property
    def v_range(self):
        return (float(self.v[0]), float(self.v[-1]))

    def v_index(self, value, side="nearest"):
        x = (value - self.v[0]) / self.h
        if side == "floor":
            return int(np.floor(x + 1e-9))
        if side == "ceil":
            return int(np.ceil(x - 1e-9))
        return int(np.rint(x))

    def cell_centers(self):
        uc = self.u[:-1] + 0.5 * self.h
        vc = self.v[:-1] + 0.5 * self.h
        return np.meshgrid(uc, vc, indexing="ij")


def build_grid(spacetime, h, u_halfwidth, v_range):
    """Uniform null grid with spacing ``h`` in both u and v and an exact ``u = 0`` row.

    The u-range is ``[-m h, m h]`` with ``m = round(u_halfwidth / h)``; the v-range
    starts at ``v_range[0]`` and keeps every node ``<= v_range[1]``. All nodes
    must lie in the closed slab.
    """
    h = float(h)
    if not h > 0:
        raise GeometryError(f"grid spacing must be positive, got {h}")
    v0, v1 = (float(x) for x in v_range)
    if not v1 > v0:
        raise GeometryError("empty v-range")
    m = int(round(u_halfwidth / h))
    if m < 1:
        raise GeometryError("u_halfwidth smaller than one grid step")
    u = (np.arange(2 * m + 1) - m) * h
    nv = int(np.floor((v1 - v0) / h + 1e-9)) + 1
    v = v0 + np.arange(nv) * h
    corners_u = np.array([u[0], u[0], u[-1], u[-1]])
    corners_v = np.array([v[0], v[-1], v[0], v[-1]])
    if not np.all(spacetime.contains(corners_u, corners_v, closed=True)):
        raise GeometryError(
            "range-outside-slab: grid rectangle "
            f"u in [{u[0]:g}, {u[-1]:g}], v in [{v[0]:g}, {v[-1]:g}] leaves "
            f"t in ({spacetime.t_min:g}, {spacetime.t_max:g})")
    return SlabGrid(spacetime=spacetime, h=h, u=u, v=v, i0=m)


class CausalRegion(Enum):
    JPLUS = "Jplus"
    JMINUS = "Jminus"
    J = "J"
    EXTERIOR = "exterior"


def indicator(u, v, region, spacetime):
    """Vectorised indicator of a causal region of the null line ``u = 0``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    plus = (u >= 0) & (v > 2.0 * spacetime.t_min)
    minus = (u <= 0) & (v < 2.0 * spacetime.t_max)
    region = CausalRegion(region)
    if region is CausalRegion.JPLUS:
        return plus
    if region is CausalRegion.JMINUS:
        return minus
    if region is CausalRegion.J:
        return plus | minus
    return ~(plus | minus)


def classify(point, region, spacetime):
    u, v = point
    if not bool(spacetime.contains(u, v)):
        raise GeometryError(f"point {point} outside the open slab")
    return bool(indicator(u, v, region, spacetime))


def region_labels(grid):
    """Per-node label: Jplus for u > 0, Jminus for u < 0, J on the null line."""
    uu, vv = grid.nodes
    out = np.full(grid.shape, CausalRegion.EXTERIOR.value, dtype=object)
    inj = indicator(uu, vv, CausalRegion.J, grid.spacetime)
    out[inj & (uu > 0)] = CausalRegion.JPLUS.value
    out[inj & (uu < 0)] = CausalRegion.JMINUS.value
    out[inj & (uu == 0)] = CausalRegion.J.value
    return out


@dataclass(frozen=True)
class DensityOnN:
    """Samples ``w`` of a density ``w |ds dy_1 ... dy_{d-1}|`` on a null hypersurface."""
    weight: np.ndarray
    s: np.ndarray = field(default_factory=lambda: np.zeros(0))
    y: Optional[np.ndarray] = None


def interior_product_density(alpha, grid):
    """``iota_n mu_g`` on the line ``u = 0`` for the conormal ``n = alpha(v) du``.

    Contracts ``mu_g = (Omega/2)|du dv|`` with ``Y = d/du / alpha`` (so that
    ``n(Y) = 1``); the result is a weight in ``|dv|``.
    """
    alpha = np.asarray(alpha, dtype=float) * np.ones(grid.v.size)
    if np.any(alpha == 0) or not np.all(np.isfinite(alpha)):
        raise GeometryError("conormal scale vanishes somewhere")
    vol = grid.spacetime.volume_weight(np.zeros_like(grid.v), grid.v)
    tangent = np.array([0.0, 1.0])
    w = np.empty(grid.v.size)
    for k, a in enumerate(alpha):
        y = np.array([1.0 / a, 0.0])
        w[k] = vol[k] * abs(np.linalg.det(np.column_stack([tangent, y])))
    return DensityOnN(weight=w, s=grid.v.copy())


# --- hypersurfaces in arbitrary dimension -----------------------------------

@dataclass(frozen=True)
class HypersurfaceParam:
    """Generator-adapted chart of a null hypersurface in a (d+1)-manifold.

    ``chart(s, y)`` returns the ambient coordinates of the point with generator
    parameter ``s`` and transverse coordinates ``y`` (length d - 1);
    ``metric(x)`` returns the ambient metric matrix at ``x``. The coordinate
    field d/ds must be null and orthogonal to every d/dy_k.
    """
    dim_ambient: int
    chart: Callable
    metric: Callable

    @property
    def d(self):
        return self.dim_ambient - 1


def geometric_step(h=None):
    return 1e-4 if h is None else max(1e-4, h / 10.0)


def _d4(fun, x, step):
    return (fun(x - 2 * step) - 8.0 * fun(x - step) + 8.0 * fun(x + step) - fun(x + 2 * step)) / (12.0 * step)


def tangent_frame(hs, s, y, step):
    """Columns: d/ds, d/dy_1, ..., d/dy_{d-1} of the chart, by 4th-order differences."""
    y = np.asarray(y, dtype=float).reshape(-1)
    cols = [_d4(lambda ss: np.asarray(hs.chart(ss, y), dtype=float), s, step)]
    for k in range(y.size):
        def along(yk, k=k):
            yy = y.copy()
            yy[k] = yk
            return np.asarray(hs.chart(s, yy), dtype=float)
        cols.append(_d4(along, y[k], step))
    return np.column_stack(cols)


def adaptedness_defect(hs, s, y, step, scale=1.0):
    frame = tangent_frame(hs, s, y, step)
    g = scale * np.asarray(hs.metric(hs.chart(s, np.asarray(y, dtype=float))), dtype=float)
    gram = frame.T @ g @ frame
    return float(np.max(np.abs(gram[0, :])))


def _sample_points(s_values, y_values, d):
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    if d == 1:
        y_values = np.zeros((1, 0))
    else:
        y_values = np.asarray(y_values, dtype=float).reshape(-1, d - 1)
    return s_values, y_values


def _transverse_weight(hs, s, y, alpha, lam, step):
    """Weight of ``iota_n mu`` and the s-component of ``n^sharp`` at one point.

    ``n = alpha * g(d/ds, .)`` with ``g`` the base metric; the metric used for
    raising and for ``mu`` is ``lam * g``.
    """
    frame = tangent_frame(hs, s, y, step)
    x = np.asarray(hs.chart(s, y), dtype=float)
    g = np.asarray(hs.metric(x), dtype=float)
    gp = lam * g
    n = alpha * (g @ frame[:, 0])
    # transverse Y with n(Y) = 1 along the ambient axis that n weights most
    k = int(np.argmax(np.abs(n)))
    y_vec = np.zeros(x.size)
    y_vec[k] = 1.0 / n[k]
    vol = np.sqrt(abs(np.linalg.det(gp)))
    w = vol * abs(np.linalg.det(np.column_stack([frame, y_vec])))
    nsharp = np.linalg.solve(gp, n)
    t = frame[:, 0]
    coef = float(nsharp @ t) / float(t @ t)
    return w, coef


def expansion_density(hs, s_values, y_values=None, alpha=1.0, lam=1.0, h=None, tol=1e-8):
    """Samples of the expansion density ``Lie_{n^sharp}(iota_n mu_g)`` in ``|ds dy|``.

    ``alpha(s, y)`` rescales the conormal relative to ``g(d/ds, .)`` and
    ``lam(s, y)`` rescales the metric on the hypersurface. In the chart the
    Lie derivative of ``W |ds dy|`` along ``c d/ds`` is ``d/ds (c W)``,
    evaluated with a 4th-order centred difference of step
    ``max(1e-4, h/10)``.
    """
    step = geometric_step(h)
    s_values, y_points = _sample_points(s_values, y_values, hs.d)
    a_fun = alpha if callable(alpha) else (lambda s, y, a=float(alpha): a)
    l_fun = lam if callable(lam) else (lambda s, y, c=float(lam): c)

    out = np.empty((s_values.size, y_points.shape[0]))
    for iy, y in enumerate(y_points):
        for i_s, s in enumerate(s_values):
            a0 = a_fun(s, y)
            if a0 == 0 or not np.isfinite(a0):
                raise GeometryError("conormal scale must be nonzero")
            if not l_fun(s, y) > 0:
                raise GeometryError("conformal rescaling must be positive")
            defect = adaptedness_defect(hs, s, y, step)
            if defect > tol:
                raise GeometryError(f"chart not generator-adapted at s={s}: defect {defect:.3e}")

            def flux(ss):
                w, c = _transverse_weight(hs, ss, y, a_fun(ss, y), l_fun(ss, y), step)
                return c * w
            out[i_s, iy] = _d4(flux, s, step)
    return DensityOnN(weight=out, s=s_values, y=y_points)


def area_density(hs, s_values, y_values=None, h=None):
    """``iota_n mu_g`` weights for the adapted conormal ``n = g(d/ds, .)``."""
    step = geometric_step(h)
    s_values, y_points = _sample_points(s_values, y_values, hs.d)
    out = np.empty((s_values.size, y_points.shape[0]))
    for iy, y in enumerate(y_points):
        for i_s, s in enumerate(s_values):
            out[i_s, iy] = _transverse_weight(hs, s, y, 1.0, 1.0, step)[0]
    return out


def conformal_scaling_check(hs, lam, s_values, y_values=None, h=None, tol=1e-8):
    """Compare expansion densities of ``g`` and ``lam * g`` with ``lam^((d-1)/2)``.

    The conormal is held fixed; ``lam`` must be constant along generators.
    """
    step = geometric_step(h)
    s_values, y_points = _sample_points(s_values, y_values, hs.d)
    l_fun = lam if callable(lam) else (lambda s, y, c=float(lam): c)
    for y in y_points:
        for s in s_values:
            lval = l_fun(s, y)
            ds_lam = _d4(lambda ss: l_fun(ss, y), s, step)
            if abs(ds_lam) > tol * max(1.0, abs(lval)):
                raise GeometryError(f"lambda varies along the generator at s={s}: d/ds = {ds_lam:.3e}")
    ys = None if hs.d == 1 else y_points
    base = expansion_density(hs, s_values, ys, h=h).weight
    scaled = expansion_density(hs, s_values, ys, lam=l_fun, h=h).weight
    lam_vals = np.array([[l_fun(s, y) for y in y_points] for s in s_values])
    expected = lam_vals ** ((hs.d - 1) / 2.0) * base
    diff = np.abs(scaled - expected)
    scale = np.max(np.abs(expected))
    # a vanishing expansion (the d = 1 case) is compared in absolute terms
    max_rel = float(np.max(diff) / scale) if scale > ZERO_EXPANSION else float(np.max(diff))
    return {"max_rel_error": max_rel, "exponent": (hs.d - 1) / 2.0,
            "base": base, "scaled": scaled}


def minkowski_metric(dim):
    g = np.eye(dim)
    g[0, 0] = -1.0
    return g


def light_cone(d=3):
    """Future light cone ``t = r`` of the origin in (d+1)-Minkowski, parameter ``s = r``.

    Transverse coordinates are the polar angles: ``theta`` for d = 2,
    ``(theta, phi)`` for d = 3.
    """
    if d == 2:
        def chart(s, y):
            th = y[0]
            return np.array([s, s * np.cos(th), s * np.sin(th)])
    elif d == 3:
        def chart(s, y):
            th, ph = y[0], y[1]
            st = np.sin(th)
            return np.array([s, s * st * np.cos(ph), s * st * np.sin(ph), s * np.cos(th)])
    else:
        raise GeometryError("light_cone supports d = 2 or d = 3")
    g = minkowski_metric(d + 1)
    return HypersurfaceParam(dim_ambient=d + 1, chart=chart, metric=lambda x: g)


def slab_null_line(spacetime):
    """The line ``u = 0`` of the slab in ambient coordinates (u, v), parameter ``s = v``."""
    def metric(x):
        om = float(spacetime.conformal_factor(x[0], x[1]))
        return 0.5 * om * np.array([[0.0, 1.0], [1.0, 0.0]])
    return HypersurfaceParam(dim_ambient=2, chart=lambda s, y: np.array([0.0, s]), metric=metric)


def line_expansion(weight, coef, h):
    """Expansion density ``d/dv (c w)`` and ratio ``div_{w}(c d/dv)`` on a null line.

    ``weight`` samples ``iota_n mu`` in ``|dv|``; ``coef`` samples the v-component
    of ``n^sharp``. Fourth-order differences along the line.
    """
    from .kernels import central_diff4
    w = np.asarray(weight, dtype=float)
    c = np.asarray(coef, dtype=float) * np.ones_like(w)
    density = central_diff4(c * w, h)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(w != 0, density / w, 0.0)
    return density, ratio
