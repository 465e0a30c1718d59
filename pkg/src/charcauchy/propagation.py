"""Transverse jets on the null line ``u = 0`` from the tower of propagation ODEs.

Applying ``d_u^r`` to ``4 phi_uv + A phi_u + B phi_v + q phi = F`` and restricting
to ``u = 0`` gives, for ``psi_k = d_u^k phi(0, .)``,

    4 psi_{r+1}' + A psi_{r+1} = d_u^r F
        - sum_{k=1}^{r} C(r,k) A^{(k)} psi_{r+1-k}
        - sum_{k=0}^{r} C(r,k) [B^{(r-k)} psi_k' + q^{(r-k)} psi_k]

where ``A^{(k)} = d_u^k A(0, .)``. Each ODE is integrated by RK4 on the v-grid
from a cross-section where ``psi_{r+1} = 0``.
"""
from dataclasses import dataclass, field
from enum import Enum
from math import comb
from typing import Callable, Optional

import numpy as np

from . import kernels
from .operators import Coefficient, WaveOperator, ZERO

DEFAULT_NJET = 6
MAX_NJET = 12
SUPPORT_TOL = 1e-12


class PropagationError(ValueError):
    pass


class JetType(Enum):
    FUTURE = "future"
    PAST = "past"


def detect_support(values, coords, tol=SUPPORT_TOL):
    idx = np.nonzero(np.abs(values) > tol)[0]
    if idx.size == 0:
        return None
    return (float(coords[idx[0]]), float(coords[idx[-1]]))


@dataclass(frozen=True)
class CharacteristicDatum:
    """Samples of ``f`` on the v-grid of the null line, with support and optional ``f'``."""
    f: np.ndarray
    support: Optional[tuple] = None
    df: Optional[np.ndarray] = None

    @classmethod
    def from_function(cls, grid, fun, dfun=None, support=None):
        v = grid.v
        f = np.asarray(fun(v), dtype=float) * np.ones_like(v)
        df = None if dfun is None else np.asarray(dfun(v), dtype=float) * np.ones_like(v)
        if support is None:
            support = detect_support(f, v)
        return cls(f=f, support=support, df=df)

    @classmethod
    def from_coefficient(cls, grid, coef, support=None):
        """From an expression in ``v`` (evaluated on ``u = 0``) with its exact derivative."""
        coef = Coefficient.make(coef)
        zero = np.zeros_like(grid.v)
        f = coef(zero, grid.v)
        df = coef.dv()(zero, grid.v)
        if support is None:
            support = detect_support(f, grid.v)
        return cls(f=f, support=support, df=df)

    @classmethod
    def zero(cls, grid):
        return cls(f=np.zeros(grid.v.size), support=None, df=np.zeros(grid.v.size))

    def derivative(self, h):
        return self.df if self.df is not None else kernels.central_diff4(self.f, h)

    def scaled(self, alpha):
        return CharacteristicDatum(alpha * self.f, self.support if alpha != 0 else None,
                                   None if self.df is None else alpha * self.df)

    def __add__(self, other):
        if other.f.shape != self.f.shape:
            raise PropagationError("data on different grids")
        sup = _union(self.support, other.support)
        df = None if self.df is None or other.df is None else self.df + other.df
        return CharacteristicDatum(self.f + other.f, sup, df)


def _union(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return (min(a[0], b[0]), max(a[1], b[1]))


@dataclass(frozen=True)
class Inhomogeneity:
    """Source ``F(u, v)`` of the equation ``P phi = F``, supported in ``J(N)``.

    ``v_bounds`` bracket the v-support of the jets of ``F`` on ``u = 0``.
    """
    F: Coefficient = ZERO
    v_bounds: Optional[tuple] = None

    @classmethod
    def make(cls, F=0, v_bounds=None):
        return cls(Coefficient.make(F), None if v_bounds is None else tuple(v_bounds))

    @property
    def is_zero(self):
        return self.F.is_zero

    def jet(self, k, v):
        return self.F.jet(k, v)

    def scaled(self, alpha):
        if self.F.expr is None:
            fun = self.F
            return Inhomogeneity(Coefficient.make(lambda u, v: alpha * fun(u, v)), self.v_bounds)
        return Inhomogeneity(Coefficient(alpha * self.F.expr), self.v_bounds)

    def __add__(self, other):
        if self.F.expr is None or other.F.expr is None:
            a, b = self.F, other.F
            F = Coefficient.make(lambda u, v: a(u, v) + b(u, v))
        else:
            F = Coefficient(self.F.expr + other.F.expr)
        return Inhomogeneity(F, _union(self.v_bounds, other.v_bounds))


@dataclass
class JetSequence:
    psi: np.ndarray          # rows psi_0 .. psi_N on the v-grid
    dpsi: np.ndarray         # rows psi_k' (v-derivatives)
    type_tag: JetType
    cross_section_v: float
    cross_index: int
    v: np.ndarray = field(repr=False, default=None)

    @property
    def order(self):
        return self.psi.shape[0] - 1

    def support_tol(self, r):
        return 1e-10 * (1.0 + float(np.max(np.abs(self.psi[r]))))


@dataclass(frozen=True)
class ODECoefficients:
    """Data of ``4 y' + kappa y = rhs`` for ``y = psi_{r+1}``."""
    r: int
    kappa: np.ndarray
    kappa_mid: np.ndarray
    rhs_builder: Callable


class _Jets:
    """u-jets of A, B, q, F on the null line, evaluated once per order."""

    def __init__(self, op, F, v):
        self.op, self.F, self.v = op, F, v
        self._cache = {}

    def get(self, name, k):
        key = (name, k)
        if key not in self._cache:
            coef = self.F.F if name == "F" else getattr(self.op, name)
            if k > coef.max_jet_order:
                raise PropagationError(f"jet order {k} of {name} exceeds its available order {coef.max_jet_order}")
            self._cache[key] = coef.jet(k, self.v)
        return self._cache[key]


def assemble_tower(op, F, r, grid, jets=None):
    """ODE coefficients of the order-``r`` propagation equation on ``u = 0``."""
    if r < 0:
        raise PropagationError("order must be non-negative")
    v = grid.v
    jets = jets or _Jets(op, F, v)
    kappa = jets.get("A", 0)
    vmid = v[:-1] + 0.5 * grid.h
    kappa_mid = op.A(np.zeros_like(vmid), vmid)
    # touch every needed jet now so order errors surface at assembly time
    for k in range(r + 1):
        for name in ("A", "B", "q", "F"):
            jets.get(name, k)

    def rhs(psi, dpsi):
        g = jets.get("F", r).copy()
        for k in range(1, r + 1):
            g -= comb(r, k) * jets.get("A", k) * psi[r + 1 - k]
        for k in range(r + 1):
            g -= comb(r, k) * (jets.get("B", r - k) * dpsi[k] + jets.get("q", r - k) * psi[k])
        return g

    return ODECoefficients(r=r, kappa=kappa, kappa_mid=kappa_mid, rhs_builder=rhs)


def cross_section(grid, datum, F, jet_type, margin=5):
    """Cross-section index: ``margin`` steps before (future) or after (past) all supports."""
    lo, hi = [], []
    if datum.support is not None:
        lo.append(datum.support[0])
        hi.append(datum.support[1])
    if not F.is_zero:
        if F.v_bounds is None:
            raise PropagationError("inhomogeneity needs v_bounds")
        lo.append(F.v_bounds[0])
        hi.append(F.v_bounds[1])
    nv = grid.v.size
    if jet_type is JetType.FUTURE:
        if not lo:
            return 0
        idx = grid.v_index(min(lo), side="floor") - margin
        if idx < 0:
            raise PropagationError("infeasible cross-section: data support reaches the past end of the grid")
        return idx
    if not hi:
        return nv - 1
    idx = grid.v_index(max(hi), side="ceil") + margin
    if idx > nv - 1:
        raise PropagationError("infeasible cross-section: data support reaches the future end of the grid")
    return idx


def solve_propagation(op, datum, F, jet_type, n_jet, grid, margin=5):
    """Future- or past-type jets ``psi_0 = f, psi_1, ..., psi_N`` on the v-grid."""
    jet_type = JetType(jet_type)
    if not 1 <= n_jet <= MAX_NJET:
        raise PropagationError(f"N_jet must lie in 1..{MAX_NJET}")
    if datum.f.shape != grid.v.shape:
        raise PropagationError("datum does not match the v-grid")
    h = grid.h
    start = cross_section(grid, datum, F, jet_type, margin)
    nv = grid.v.size
    psi = np.zeros((n_jet + 1, nv))
    dpsi = np.zeros((n_jet + 1, nv))
    psi[0] = datum.f
    dpsi[0] = datum.derivative(h)
    jets = _Jets(op, F, grid.v)
    forward = jet_type is JetType.FUTURE
    for r in range(n_jet):
        ode = assemble_tower(op, F, r, grid, jets)
        g = ode.rhs_builder(psi, dpsi)
        y = kernels.rk4_line(ode.kappa, ode.kappa_mid, g, kernels.cubic_midpoints(g), h, start, forward)
        psi[r + 1] = y
        dpsi[r + 1] = 0.25 * (g - ode.kappa * y)
        if forward:
            dpsi[r + 1, :start] = 0.0
        else:
            dpsi[r + 1, start + 1:] = 0.0
    return JetSequence(psi=psi, dpsi=dpsi, type_tag=jet_type,
                       cross_section_v=float(grid.v[start]), cross_index=start, v=grid.v)


def jump_table(future, past):
    """``Delta_r = max_v |psi_r^future - psi_r^past|`` for r = 0..N."""
    if future.psi.shape != past.psi.shape:
        raise PropagationError("jet sequences live on different grids or orders")
    return np.max(np.abs(future.psi - past.psi), axis=1)
