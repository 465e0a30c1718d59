"""Three solution paths for the two-sided characteristic Cauchy problem.

* ``rendall``: future/past jet towers, truncated Borel extensions, and a
  Green-operator correction of the one-sided residuals.
* ``representation``: a simple extension ``e(f)`` corrected by
  ``G_+ [1^+ (P e(f) - F)] + G_- [1^- (P e(f) - F)]``.
* ``final_formula``: the causal Green operator applied to the single layer
  ``{4 f' + A f} (1/2)|dv|`` (homogeneous problems only).
"""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import borel, green
from .geometry import CausalRegion, indicator
from .operators import GridField
from .propagation import Inhomogeneity, JetType, jump_table, solve_propagation

PATHS = ("rendall", "representation", "final_formula")
DATA_TOL = 1e-12


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    n_jet: int = 6
    delta: Optional[float] = None
    delta_e: Optional[float] = None
    mu_rule: str = "unit"
    profile: str = "exp"
    margin: int = 5
    tol_reg_factor: float = 10.0

    def resolved(self, grid):
        d = borel.default_delta(grid.u_halfwidth)
        return replace(self, delta=self.delta or d, delta_e=self.delta_e or d)

    def extension(self, grid):
        cfg = self.resolved(grid)
        return borel.ExtensionConfig(delta=cfg.delta, mu_rule=cfg.mu_rule,
                                     n_jet=cfg.n_jet, profile=cfg.profile)


@dataclass
class MergedSolution:
    phi_plus: GridField
    phi_minus: GridField
    path_tag: str
    jump_report: np.ndarray
    jets_future: object = field(default=None, repr=False)
    jets_past: object = field(default=None, repr=False)

    @property
    def grid(self):
        return self.phi_plus.grid

    @property
    def trace(self):
        return self.phi_plus.values[self.grid.i0]

    @property
    def merged(self):
        """``phi^+`` on ``u >= 0``, ``phi^-`` on ``u < 0``, zero outside ``J(N)``."""
        g = self.grid
        out = self.phi_minus.values.copy()
        out[g.i0:] = self.phi_plus.values[g.i0:]
        uu, vv = g.nodes
        out[~indicator(uu, vv, CausalRegion.J, g.spacetime)] = 0.0
        return GridField(g, out)

    def trace_mismatch(self):
        g = self.grid
        return float(np.max(np.abs(self.phi_plus.values[g.i0] - self.phi_minus.values[g.i0])))


def validate_data(datum, F, grid, tol=DATA_TOL, strict=True):
    """Check temporal compactness of ``f`` and ``supp F`` inside ``J(N)``.

    Returns a report with the support of ``f``, the v-interval carrying the
    jets of ``F`` on ``u = 0`` (``None`` when ``F = 0``) and the v-extent of
    ``1^+ F`` and ``1^- F``.
    """
    v = grid.v
    violations = []
    f = np.asarray(datum.f)
    if f.shape != v.shape:
        violations.append("f: samples do not match the v-grid")
    nz = np.nonzero(np.abs(f) > tol)[0]
    f_support = None
    if nz.size:
        f_support = (float(v[nz[0]]), float(v[nz[-1]]))
        if nz[0] == 0 or nz[-1] == v.size - 1:
            violations.append("f: support is not compact inside the v-range")
        if datum.support is not None and (datum.support[0] > f_support[0] + grid.h
                                          or datum.support[1] < f_support[1] - grid.h):
            violations.append("f: declared support interval does not contain the samples")

    report = {"f_support": f_support, "F_interval": None,
              "plus_support": None, "minus_support": None}
    if not F.is_zero:
        uu, vv = grid.nodes
        Fv = F.F(uu, vv)
        in_j = indicator(uu, vv, CausalRegion.J, grid.spacetime)
        if np.any(np.abs(Fv[~in_j]) > tol):
            violations.append("F: supp F is not contained in J(N)")
        for side, sel in (("plus", uu >= 0), ("minus", uu <= 0)):
            mask = sel & (np.abs(Fv) > tol)
            if np.any(mask):
                cols = np.nonzero(mask.any(axis=0))[0]
                report[f"{side}_support"] = (float(v[cols[0]]), float(v[cols[-1]]))
                if side == "plus" and (cols[0] == 0 or np.any(mask[-1])):
                    violations.append("F: 1^+ F reaches the past or lateral edge of the grid")
                if side == "minus" and (cols[-1] == v.size - 1 or np.any(mask[0])):
                    violations.append("F: 1^- F reaches the future or lateral edge of the grid")
        line = np.abs(F.F(np.zeros_like(v), v)) > tol
        if F.v_bounds is None:
            violations.append("F: v_bounds missing")
        else:
            lo, hi = F.v_bounds
            if np.any(line & ((v < lo - 1e-12) | (v > hi + 1e-12))):
                violations.append("F: trace on N leaves the declared v_bounds")
            report["F_interval"] = (float(lo), float(hi))
    report["violations"] = violations
    report["ok"] = not violations
    if strict and violations:
        raise DataError("; ".join(violations))
    return report


def _jets(op, datum, F, grid, cfg):
    fut = solve_propagation(op, datum, F, JetType.FUTURE, cfg.n_jet, grid, cfg.margin)
    past = solve_propagation(op, datum, F, JetType.PAST, cfg.n_jet, grid, cfg.margin)
    return fut, past


def _points(grid, centers):
    return grid.cell_centers() if centers else grid.nodes


def _apply_exact(op, grid, parts, centers=False):
    uu, vv = _points(grid, centers)
    return op.apply_exact(*parts, uu, vv)


def _source(F, grid, centers=False):
    if F.is_zero:
        return 0.0
    uu, vv = _points(grid, centers)
    return F.F(uu, vv)


def _one_sided(op, grid, base, residual, center):
    """``phi^+ = base - G_+[1^+ r]`` and ``phi^- = base - G_-[1^- r]`` on the half-grids."""
    plus = base - green.retarded_solve(op, residual, grid, side="plus", center=center).values
    minus = base - green.advanced_solve(op, residual, grid, side="minus", center=center).values
    return _pack(grid, plus, minus)


def _pack(grid, plus, minus):
    """Wrap one-sided arrays, zeroing and masking the half where each is undefined."""
    i0 = grid.i0
    plus = np.array(plus, dtype=float)
    minus = np.array(minus, dtype=float)
    plus[:i0] = 0.0
    minus[i0 + 1:] = 0.0
    vp = np.zeros(grid.shape, dtype=bool)
    vp[i0:] = True
    vm = np.zeros(grid.shape, dtype=bool)
    vm[:i0 + 1] = True
    return GridField(grid, plus, vp), GridField(grid, minus, vm)


def solve_rendall(op, datum, F, grid, cfg=SolverConfig(), check=True):
    if check:
        validate_data(datum, F, grid)
    cfg = cfg.resolved(grid)
    ext = cfg.extension(grid)
    fut, past = _jets(op, datum, F, grid, cfg)
    src = _source(F, grid)
    src_c = _source(F, grid, centers=True)
    fields = []
    for jets, side in ((fut, "plus"), (past, "minus")):
        parts = borel.borel_extend_with_derivatives(jets, ext, grid)
        err = _apply_exact(op, grid, parts) - src
        parts_c = borel.borel_extend_with_derivatives(jets, ext, grid, centers=True)
        err_c = _apply_exact(op, grid, parts_c, centers=True) - src_c
        fn = green.retarded_solve if side == "plus" else green.advanced_solve
        fields.append(parts[0] - fn(op, err, grid, side=side, center=err_c).values)
    plus, minus = _pack(grid, *fields)
    return MergedSolution(plus, minus, "rendall", jump_table(fut, past), fut, past)


def solve_representation(op, datum, F, grid, cfg=SolverConfig(), check=True):
    if check:
        validate_data(datum, F, grid)
    cfg = cfg.resolved(grid)
    parts = borel.simple_extension_with_derivatives(datum, cfg.delta_e, grid, cfg.profile)
    residual = _apply_exact(op, grid, parts) - _source(F, grid)
    parts_c = borel.simple_extension_with_derivatives(datum, cfg.delta_e, grid, cfg.profile, centers=True)
    residual_c = _apply_exact(op, grid, parts_c, centers=True) - _source(F, grid, centers=True)
    plus, minus = _one_sided(op, grid, parts[0], residual, residual_c)
    fut, past = _jets(op, datum, F, grid, cfg)
    return MergedSolution(plus, minus, "representation", jump_table(fut, past), fut, past)


def final_formula_layer(op, datum, grid):
    """Weight of ``T f = {4 f' + A f} (1/2)|dv|`` on the null line (flat line: no expansion term)."""
    v = grid.v
    a = op.A(np.zeros_like(v), v)
    return green.SingleLayer(0.5 * (4.0 * datum.derivative(grid.h) + a * datum.f))


def solve_final_formula(op, datum, grid, cfg=SolverConfig(), F=None, check=True):
    if F is not None and not F.is_zero:
        raise DataError("the final representation formula covers homogeneous problems only (F = 0)")
    zero = Inhomogeneity.make()
    if check:
        validate_data(datum, zero, grid)
    layer = final_formula_layer(op, datum, grid)
    _, ret, adv = green.green_single_layer(op, layer, grid, "causal", parts=True)
    plus, minus = _pack(grid, ret, -adv)
    fut, past = _jets(op, datum, zero, grid, cfg.resolved(grid))
    return MergedSolution(plus, minus, "final_formula", jump_table(fut, past), fut, past)


def solve(op, datum, F, grid, cfg=SolverConfig(), path="rendall"):
    if path == "rendall":
        return solve_rendall(op, datum, F, grid, cfg)
    if path == "representation":
        return solve_representation(op, datum, F, grid, cfg)
    if path == "final_formula":
        return solve_final_formula(op, datum, grid, cfg, F=F)
    raise ValueError(f"unknown path {path!r}; choose from {PATHS}")


def regularity_report(sol, jets_future=None, jets_past=None, tol_reg=None, tol_factor=10.0):
    """Largest ``k`` with ``Delta_r <= tol_reg`` for all ``r <= k``.

    ``tol_reg`` defaults to ``10 h^2`` times the sup-norm of the data on ``N``.
    """
    jf = jets_future if jets_future is not None else sol.jets_future
    jp = jets_past if jets_past is not None else sol.jets_past
    table = jump_table(jf, jp)
    if tol_reg is None:
        scale = float(np.max(np.abs(jf.psi[0])))
        tol_reg = tol_factor * sol.grid.h**2 * scale
    k = 0
    for r in range(1, table.size):
        if table[r] <= tol_reg:
            k = r
        else:
            break
    return {"C_k_class": k, "jump_table": table, "tol_reg": tol_reg}


def one_sided_u_jump(sol, order=1):
    """``d_u phi^+(0, v) - d_u phi^-(0, v)`` by second-order one-sided differences."""
    g = sol.grid
    p, m, i0, h = sol.phi_plus.values, sol.phi_minus.values, g.i0, g.h
    if order != 1:
        raise ValueError("only first-order jumps are measured from the field")
    dp = (-3.0 * p[i0] + 4.0 * p[i0 + 1] - p[i0 + 2]) / (2.0 * h)
    dm = (3.0 * m[i0] - 4.0 * m[i0 - 1] + m[i0 - 2]) / (2.0 * h)
    return dp - dm
