"""Retarded and advanced Green operators by characteristic marching.

Each cell of the null grid is advanced by solving the centred discretisation
of ``P phi = s`` exactly for the north-east corner (the equation is linear in
that unknown). Advanced solves reuse the retarded kernel on the time-reflected
problem ``(u, v) -> (-u, -v)``, which flips the signs of ``A`` and ``B``.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .operators import GridField, integrate_line

INSTABILITY_LIMIT = 1e12
# Single-layer trace normalisation: 4 psi' + A psi = 2 c_norm w. Pinned by the
# smeared-delta oracle (measure_c_norm), kept as a regression test.
C_NORM = 1.0


class GreenError(RuntimeError):
    pass


@dataclass(frozen=True)
class SingleLayer:
    """Density ``w(v)|dv|`` on the null line; pairs as ``int chi(0, v) w(v) dv``."""
    weight: np.ndarray
    conormal_tag: int = 1

    def pair(self, chi_trace, h):
        return integrate_line(np.asarray(chi_trace) * self.weight, h)


def _cell_average(x):
    return 0.25 * (x[:-1, :-1] + x[1:, :-1] + x[:-1, 1:] + x[1:, 1:])


def _cell_coefficients(op, grid):
    uc, vc = grid.cell_centers()
    return op.A(uc, vc), op.B(uc, vc), op.q(uc, vc)


def _vals(x):
    return x.values if isinstance(x, GridField) else np.asarray(x, dtype=float)


def _march(op, grid, src_nodes, side, trace, flip, check_inflow=True, center=None):
    """Retarded march on the (optionally time-reflected) grid.

    ``side="plus"`` marches only the half-grid ``u >= 0`` with ``trace`` as data
    on ``u = 0`` (zero by default); ``side=None`` marches the whole grid.
    The cell source is the corner average, or ``(corners + 2 centre) / 3``
    when exact cell-centre samples are supplied.
    """
    a_c, b_c, q_c = _cell_coefficients(op, grid)
    src = np.zeros(grid.shape) if src_nodes is None else np.array(src_nodes, dtype=float)
    if center is not None:
        center = np.array(center, dtype=float)
    if flip:
        src = src[::-1, ::-1]
        if center is not None:
            center = center[::-1, ::-1]
        a_c, b_c, q_c = -a_c[::-1, ::-1], -b_c[::-1, ::-1], q_c[::-1, ::-1]
        if trace is not None:
            trace = np.asarray(trace)[::-1]
    phi = np.zeros(grid.shape)
    i0 = grid.i0
    if side is None:
        if check_inflow:
            scale = max(1.0, float(np.max(np.abs(src))))
            if np.max(np.abs(src[0])) > 1e-12 * scale or np.max(np.abs(src[:, 0])) > 1e-12 * scale:
                raise GreenError("source active at the inflow boundary")
        start_i = 0
    else:
        src[:i0] = 0.0
        if center is not None:
            center[:i0] = 0.0
        start_i = i0
        if trace is not None:
            phi[i0] = trace
    if check_inflow and side is not None:
        scale = max(1.0, float(np.max(np.abs(src))))
        if np.max(np.abs(src[:, 0])) > 1e-12 * scale:
            raise GreenError("source active at the inflow boundary")
    src_c = _cell_average(src)
    if center is not None:
        src_c = (src_c + 2.0 * center) / 3.0
    src_c = np.ascontiguousarray(src_c)
    kernels.march(phi, src_c, np.ascontiguousarray(a_c), np.ascontiguousarray(b_c),
                  np.ascontiguousarray(q_c), grid.h, start_i, 0)
    if not np.all(np.isfinite(phi)) or np.max(np.abs(phi)) > INSTABILITY_LIMIT:
        raise GreenError("characteristic march went unstable")
    return phi[::-1, ::-1].copy() if flip else phi


def retarded_solve(op, source, grid=None, side=None, trace=None, center=None):
    """``G_+ s``: solution of ``P phi = s`` vanishing to the past of the source.

    ``side="plus"`` solves on ``u >= 0`` only (for sources multiplied by the
    indicator of ``J^+``), with ``trace`` prescribed on ``u = 0``. ``center``
    optionally holds exact source samples at the cell centres.
    """
    grid = grid or source.grid
    if side not in (None, "plus"):
        raise GreenError("retarded solves accept side=None or 'plus'")
    vals = None if source is None else _vals(source)
    return GridField(grid, _march(op, grid, vals, side, trace, flip=False, center=center))


def advanced_solve(op, source, grid=None, side=None, trace=None, center=None):
    """``G_- s``: solution vanishing to the future of the source; mirror of :func:`retarded_solve`."""
    grid = grid or source.grid
    if side not in (None, "minus"):
        raise GreenError("advanced solves accept side=None or 'minus'")
    vals = None if source is None else _vals(source)
    return GridField(grid, _march(op, grid, vals, None if side is None else "plus", trace,
                                  flip=True, center=center))


def causal_green(op, source, grid=None):
    grid = grid or source.grid
    return GridField(grid, retarded_solve(op, source, grid).values - advanced_solve(op, source, grid).values)


def causal_shadow(mask, kind="future", inflate=2):
    """Nodes in the discrete causal future (or past) of ``mask``, widened by ``inflate`` nodes."""
    m = np.asarray(mask, dtype=bool)
    if kind == "past":
        return causal_shadow(m[::-1, ::-1], "future", inflate)[::-1, ::-1]
    shadow = np.logical_or.accumulate(np.logical_or.accumulate(m, axis=0), axis=1)
    if inflate:
        nu, nv = m.shape
        iu = np.minimum(np.arange(nu) + inflate, nu - 1)
        jv = np.minimum(np.arange(nv) + inflate, nv - 1)
        shadow = shadow[np.ix_(iu, jv)]
    return shadow


def layer_trace(op, layer, grid, direction="retarded", c_norm=C_NORM):
    """Trace on ``u = 0`` of the one-sided field generated by a single layer."""
    w = np.asarray(layer.weight, dtype=float)
    if w.shape != grid.v.shape:
        raise GreenError("layer weight does not match the v-grid")
    scale = max(1e-300, float(np.max(np.abs(w))))
    edge = 0 if direction == "retarded" else -1
    if abs(w[edge]) > 1e-12 * scale and np.any(w):
        raise GreenError("single-layer weight touches the inflow end of the null line")
    v = grid.v
    vmid = v[:-1] + 0.5 * grid.h
    a = op.A(np.zeros_like(v), v)
    a_mid = op.A(np.zeros_like(vmid), vmid)
    sign = 1.0 if direction == "retarded" else -1.0
    g = sign * 2.0 * c_norm * w
    if direction == "retarded":
        return kernels.rk4_line(a, a_mid, g, kernels.cubic_midpoints(g), grid.h, 0, True)
    return kernels.rk4_line(a, a_mid, g, kernels.cubic_midpoints(g), grid.h, v.size - 1, False)


def green_single_layer(op, layer, grid, direction="causal", c_norm=C_NORM, parts=False):
    """``G_+/- S(rho)`` by the trace-jump method.

    The retarded field vanishes on ``u < 0``, has trace ``psi`` with
    ``4 psi' + A psi = 2 c_norm w`` on ``u = 0``, and solves ``P phi = 0`` on
    ``u > 0``. The advanced field mirrors this. For ``causal`` the nodes on
    ``u = 0`` carry the mean of the two one-sided limits; ``parts=True`` also
    returns the one-sided fields.
    """
    if direction not in ("retarded", "advanced", "causal"):
        raise GreenError(f"unknown direction {direction!r}")
    ret = adv = None
    if direction in ("retarded", "causal"):
        tr = layer_trace(op, layer, grid, "retarded", c_norm)
        ret = _march(op, grid, None, "plus", tr, flip=False, check_inflow=False)
    if direction in ("advanced", "causal"):
        tr = layer_trace(op, layer, grid, "advanced", c_norm)
        adv = _march(op, grid, None, "plus", tr, flip=True, check_inflow=False)
    if direction == "retarded":
        return GridField(grid, ret)
    if direction == "advanced":
        return GridField(grid, adv)
    out = ret - adv
    out[grid.i0] = 0.5 * (ret[grid.i0] - adv[grid.i0])
    field = GridField(grid, out)
    return (field, ret, adv) if parts else field


def smeared_delta_source(layer, grid):
    """Grid source with ``<s, chi mu_g>_h = int chi(0, v) w dv``: ``2 w / h`` on the row ``u = 0``."""
    src = np.zeros(grid.shape)
    src[grid.i0] = 2.0 * np.asarray(layer.weight) / grid.h
    return src


def measure_c_norm(op, layer, grid):
    """Least-squares ratio of the smeared-delta field to the unit-normalised trace-jump field.

    Compared on rows ``u >= h`` where the smeared source has been fully crossed.
    """
    smeared = _march(op, grid, smeared_delta_source(layer, grid), None, None, flip=False,
                     check_inflow=False)
    unit = green_single_layer(op, layer, grid, "retarded", c_norm=1.0).values
    sl = slice(grid.i0 + 1, None)
    a, b = smeared[sl].ravel(), unit[sl].ravel()
    denom = float(b @ b)
    if denom == 0.0:
        raise GreenError("zero layer: normalisation undefined")
    return float(a @ b) / denom
