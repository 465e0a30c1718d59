"""Scalar normally hyperbolic operators in null coordinates.

``P phi = 4 phi_uv + A phi_u + B phi_v + q phi`` on the slab with ``g = du dv``,
its formal adjoint with respect to ``mu_g = (1/2)|du dv|``, the Green vector
field, and discrete stencils and quadratures on a :class:`SlabGrid`.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Optional

import numpy as np
import sympy as sp

from .expressions import U, V, as_expr, lambdify, parse_expression
from .geometry import CausalRegion, SlabGrid, indicator


class OperatorError(ValueError):
    pass


class Coefficient:
    """A smooth scalar function of (u, v) with access to its partial derivatives.

    Built from a number, a grammar string or a sympy expression (exact
    derivatives), or from a callable (finite-difference derivatives).
    """

    def __init__(self, expr):
        self.expr = as_expr(expr)
        self._eval = lambdify(self.expr)

    @classmethod
    def make(cls, value):
        if isinstance(value, Coefficient):
            return value
        if callable(value) and not isinstance(value, sp.Basic):
            return CallableCoefficient(value)
        if isinstance(value, str):
            return cls(parse_expression(value))
        return cls(value)

    def __call__(self, u, v):
        return self._eval(u, v)

    @property
    def is_zero(self):
        return self.expr == 0

    @property
    def is_constant(self):
        return not self.expr.free_symbols

    @property
    def max_jet_order(self):
        return 64

    @lru_cache(maxsize=None)
    def du(self, k=1):
        """``d^k/du^k`` as a new coefficient."""
        return Coefficient(sp.diff(self.expr, U, k)) if k else self

    @lru_cache(maxsize=None)
    def dv(self, k=1):
        return Coefficient(sp.diff(self.expr, V, k)) if k else self

    def jet(self, k, v):
        """``d^k/du^k`` restricted to ``u = 0`` at the samples ``v``."""
        v = np.asarray(v, dtype=float)
        return self.du(k)(np.zeros_like(v), v)

    def __repr__(self):
        return f"Coefficient({self.expr})"


def _fd_derivative(fun, k, axis, step):
    """k-th partial by central differences, Richardson-extrapolated to O(step^6)."""
    def central(s):
        def g(u, v):
            acc = 0.0
            for m in range(k + 1):
                off = (0.5 * k - m) * s
                if axis == 0:
                    acc = acc + (-1) ** m * comb(k, m) * fun(u + off, v)
                else:
                    acc = acc + (-1) ** m * comb(k, m) * fun(u, v + off)
            return acc / s**k
        return g

    d1, d2, d4 = central(step), central(step / 2), central(step / 4)

    def rich(u, v):
        a, b, c = d1(u, v), d2(u, v), d4(u, v)
        ab = (4.0 * b - a) / 3.0
        bc = (4.0 * c - b) / 3.0
        return (16.0 * bc - ab) / 15.0
    return rich


class CallableCoefficient(Coefficient):
    """Coefficient given as ``fun(u, v)``; derivatives by extrapolated differences.

    The base step is ``1e-2`` times the function's magnitude scale, widened
    with the derivative order to keep roundoff in check.
    """

    def __init__(self, fun, scale=1.0):
        self.fun = fun
        self.expr = None
        self.scale = float(scale)

    def __call__(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return np.asarray(self.fun(u, v), dtype=float) + np.zeros(np.broadcast(u, v).shape)

    @property
    def is_zero(self):
        return False

    @property
    def is_constant(self):
        return False

    @property
    def max_jet_order(self):
        return 8

    def _step(self, k):
        return 1e-2 * self.scale * max(1.0, 0.5 * k)

    @lru_cache(maxsize=None)
    def du(self, k=1):
        if k == 0:
            return self
        if k > self.max_jet_order:
            raise OperatorError(f"callable coefficient supports jets up to order {self.max_jet_order}")
        return CallableCoefficient(_fd_derivative(self, k, 0, self._step(k)), self.scale)

    @lru_cache(maxsize=None)
    def dv(self, k=1):
        if k == 0:
            return self
        return CallableCoefficient(_fd_derivative(self, k, 1, self._step(k)), self.scale)

    def __repr__(self):
        return f"CallableCoefficient({self.fun!r})"


ZERO = Coefficient(0)


@dataclass(frozen=True)
class WaveOperator:
    """``P = 4 d_u d_v + A d_u + B d_v + q`` with ``A = b^t - b^x``, ``B = b^t + b^x``."""
    A: Coefficient = ZERO
    B: Coefficient = ZERO
    q: Coefficient = ZERO

    @classmethod
    def make(cls, A=0, B=0, q=0):
        return cls(Coefficient.make(A), Coefficient.make(B), Coefficient.make(q))

    @classmethod
    def from_tx(cls, bt=0, bx=0, q=0):
        """From the (t, x) components of the first-order vector field ``X``."""
        bt, bx = as_expr(bt), as_expr(bx)
        return cls.make(bt - bx, bt + bx, q)

    @property
    def has_drift(self):
        return not (self.A.is_zero and self.B.is_zero)

    @property
    def tangent_drift(self):
        """X is tangent to the null line ``u = 0`` iff ``A`` vanishes there."""
        return self.A.is_zero

    def divX(self, u, v):
        """``div_mu X = d_u A + d_v B`` (constant density in null coordinates)."""
        return self.A.du()(u, v) + self.B.dv()(u, v)

    def adjoint(self):
        """Formal adjoint ``4 d_u d_v - A d_u - B d_v + (q - div X)`` (symbolic coefficients)."""
        if not self.has_drift:
            return self
        if self.A.expr is None or self.B.expr is None or self.q.expr is None:
            raise OperatorError("symbolic adjoint needs symbolic coefficients")
        div = sp.diff(self.A.expr, U) + sp.diff(self.B.expr, V)
        return WaveOperator(Coefficient(-self.A.expr), Coefficient(-self.B.expr),
                            Coefficient(self.q.expr - div))

    def apply_exact(self, phi, phi_u, phi_v, phi_uv, u, v):
        return (4.0 * phi_uv + self.A(u, v) * phi_u + self.B(u, v) * phi_v
                + self.q(u, v) * phi)

    def describe(self):
        return {k: str(getattr(self, k).expr) for k in ("A", "B", "q")}


@dataclass
class GridField:
    grid: SlabGrid
    values: np.ndarray
    valid: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise OperatorError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")
        if self.valid is None:
            self.valid = np.ones(self.grid.shape, dtype=bool)

    @classmethod
    def from_function(cls, grid, fun):
        uu, vv = grid.nodes
        return cls(grid, fun(uu, vv))

    @property
    def trace(self):
        return self.values[self.grid.i0]


def _values(x):
    return x.values if isinstance(x, GridField) else np.asarray(x, dtype=float)


def _check_size(grid):
    if min(grid.shape) < 3:
        raise OperatorError("grid too small: need at least 3 lines in each direction")


def _stencil(grid, phi, a, b, q):
    h = grid.h
    out = np.zeros(grid.shape)
    c = phi[1:-1, 1:-1]
    p_uv = (phi[2:, 2:] - phi[2:, :-2] - phi[:-2, 2:] + phi[:-2, :-2]) / (4.0 * h * h)
    p_u = (phi[2:, 1:-1] - phi[:-2, 1:-1]) / (2.0 * h)
    p_v = (phi[1:-1, 2:] - phi[1:-1, :-2]) / (2.0 * h)
    out[1:-1, 1:-1] = (4.0 * p_uv + a[1:-1, 1:-1] * p_u + b[1:-1, 1:-1] * p_v
                       + q[1:-1, 1:-1] * c)
    valid = np.zeros(grid.shape, dtype=bool)
    valid[1:-1, 1:-1] = True
    return GridField(grid, out, valid)


def coefficient_arrays(op, grid):
    uu, vv = grid.nodes
    return op.A(uu, vv), op.B(uu, vv), op.q(uu, vv)


def apply_P(op, phi, grid=None):
    """Second-order centred ``P phi`` at interior nodes; the boundary ring is flagged invalid."""
    grid = phi.grid if isinstance(phi, GridField) else grid
    _check_size(grid)
    a, b, q = coefficient_arrays(op, grid)
    return _stencil(grid, _values(phi), a, b, q)


def apply_P_adjoint(op, chi, grid=None):
    """``P^dagger chi = 4 chi_uv - A chi_u - B chi_v + (q - d_u A - d_v B) chi``."""
    if not op.has_drift:
        return apply_P(op, chi, grid)
    grid = chi.grid if isinstance(chi, GridField) else grid
    _check_size(grid)
    uu, vv = grid.nodes
    a, b, q = coefficient_arrays(op, grid)
    return _stencil(grid, _values(chi), -a, -b, q - op.divX(uu, vv))


def _grad(grid, x):
    return (np.gradient(x, grid.h, axis=0, edge_order=2),
            np.gradient(x, grid.h, axis=1, edge_order=2))


def green_vector_field(op, chi, phi, grid=None):
    """``j = chi grad phi - phi grad chi + chi phi X`` as (u, v) components.

    With ``g^{uv} = 2``: ``j^u = 2(chi phi_v - phi chi_v) + chi phi A`` and
    ``j^v = 2(chi phi_u - phi chi_u) + chi phi B``.
    """
    grid = grid or (phi.grid if isinstance(phi, GridField) else chi.grid)
    c, p = _values(chi), _values(phi)
    if c.shape != p.shape:
        raise OperatorError("chi and phi live on different grids")
    a, b, _ = coefficient_arrays(op, grid)
    c_u, c_v = _grad(grid, c)
    p_u, p_v = _grad(grid, p)
    ju = 2.0 * (c * p_v - p * c_v) + c * p * a
    jv = 2.0 * (c * p_u - p * c_u) + c * p * b
    return GridField(grid, ju), GridField(grid, jv)


def divergence(ju, jv):
    """Coordinate divergence, which is ``div_{mu_g}`` since the density is constant."""
    grid = ju.grid
    return GridField(grid, np.gradient(ju.values, grid.h, axis=0, edge_order=2)
                     + np.gradient(jv.values, grid.h, axis=1, edge_order=2))


def integrate(grid, values, region=None, corrected=False):
    """``int values mu_g`` by the node rule ``h^2/2 * sum``.

    With a region ``Jplus``/``Jminus`` the nodes on ``u = 0`` carry half weight
    (trapezoid closure at the region's boundary). ``corrected=True`` adds the
    Euler-Maclaurin endpoint term ``-/+ (h^2/12) d_u g`` at ``u = 0``, which
    lifts the half-plane rule from second to fourth order.
    """
    vals = _values(values)
    if region is None:
        return 0.5 * grid.h**2 * float(np.sum(vals))
    uu, vv = grid.nodes
    w = indicator(uu, vv, region, grid.spacetime).astype(float)
    region = CausalRegion(region)
    total = 0.0
    if region in (CausalRegion.JPLUS, CausalRegion.JMINUS):
        w[grid.i0] *= 0.5
        if corrected:
            i0, h = grid.i0, grid.h
            if region is CausalRegion.JMINUS:
                g_u = (3.0 * vals[i0] - 4.0 * vals[i0 - 1] + vals[i0 - 2]) / (2.0 * h)
                total = -h * h / 12.0 * integrate_line(g_u * w[i0] * 2.0, h)
            else:
                g_u = (-3.0 * vals[i0] + 4.0 * vals[i0 + 1] - vals[i0 + 2]) / (2.0 * h)
                total = h * h / 12.0 * integrate_line(g_u * w[i0] * 2.0, h)
    return 0.5 * grid.h**2 * float(np.sum(w * vals)) + 0.5 * total


def integrate_line(values, h):
    """Trapezoid rule along a uniformly sampled line."""
    vals = np.asarray(values, dtype=float)
    return h * (float(np.sum(vals)) - 0.5 * (vals[0] + vals[-1]))


def check_green_identity(op, phi, chi, grid=None, ring=3):
    """Pointwise and integrated residuals of ``chi P phi - phi P^dagger chi = div j``."""
    grid = grid or (phi.grid if isinstance(phi, GridField) else chi.grid)
    p, c = _values(phi), _values(chi)
    for name, x in (("phi", p), ("chi", c)):
        edge = np.concatenate([x[:ring].ravel(), x[-ring:].ravel(),
                               x[:, :ring].ravel(), x[:, -ring:].ravel()])
        if np.any(np.abs(edge) > 1e-12 * max(1.0, np.max(np.abs(x)))):
            raise OperatorError(f"support of {name} touches the grid boundary")
    lhs = c * apply_P(op, p, grid).values - p * apply_P_adjoint(op, c, grid).values
    div = divergence(*green_vector_field(op, c, p, grid)).values
    inner = (slice(2, -2), slice(2, -2))
    pointwise = float(np.max(np.abs(lhs[inner] - div[inner])))
    return {"max_abs_residual": pointwise, "integral_residual": abs(integrate(grid, lhs))}
