"""Quadrature-level checks of the jump formulae, adjoint identities and uniqueness.

Test functions are products of smooth compact bumps with a linear modulation,
with analytic derivatives so that ``P^dagger chi`` is exact at grid nodes.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import sympy as sp

from . import _accel, kernels
from .expressions import U, V, as_expr, lambdify
from .geometry import CausalRegion, line_expansion
from .operators import (GridField, WaveOperator, apply_P, divergence, integrate,
                        integrate_line)
from .solver import SolverConfig, solve


class VerificationError(ValueError):
    pass


def ordered_map(fn, items):
    """``map`` over a thread pool capped by ``CHARCAUCHY_THREADS``; results keep input order."""
    items = list(items)
    workers = min(_accel.max_workers(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _bump(s):
    """``exp(-1/(1-s^2))`` and its first two derivatives (zero outside ``|s| < 1``)."""
    s = np.asarray(s, dtype=float)
    b = np.zeros_like(s)
    d1 = np.zeros_like(s)
    d2 = np.zeros_like(s)
    m = np.abs(s) < 1
    x = s[m]
    p = 1.0 - x * x
    e = np.exp(-1.0 / p)
    b[m] = e
    d1[m] = e * (-2.0 * x / p**2)
    d2[m] = e * (4.0 * x * x / p**4 - 2.0 / p**2 - 8.0 * x * x / p**3)
    return b, d1, d2


@dataclass(frozen=True)
class TestFunction:
    """``chi = (1 + a s + b t) bump(s) bump(t)`` with ``s = (u-uc)/wu``, ``t = (v-vc)/wv``."""
    __test__ = False
    uc: float
    vc: float
    wu: float
    wv: float
    a: float = 0.0
    b: float = 0.0

    def derivatives(self, u, v):
        s = (np.asarray(u, dtype=float) - self.uc) / self.wu
        t = (np.asarray(v, dtype=float) - self.vc) / self.wv
        bu, bu1, bu2 = _bump(s)
        bv, bv1, bv2 = _bump(t)
        m = 1.0 + self.a * s + self.b * t
        ma, mb = self.a / self.wu, self.b / self.wv
        du1, du2 = bu1 / self.wu, bu2 / self.wu**2
        dv1, dv2 = bv1 / self.wv, bv2 / self.wv**2
        return {
            "chi": m * bu * bv,
            "u": ma * bu * bv + m * du1 * bv,
            "v": mb * bu * bv + m * bu * dv1,
            "uv": ma * bu * dv1 + mb * du1 * bv + m * du1 * dv1,
            "uu": 2.0 * ma * du1 * bv + m * du2 * bv,
            "vv": 2.0 * mb * bu * dv1 + m * bu * dv2,
        }

    def on_grid(self, grid):
        uu, vv = grid.nodes
        return self.derivatives(uu, vv)

    def values(self, grid):
        return GridField(grid, self.on_grid(grid)["chi"])

    def trace(self, grid):
        return self.derivatives(np.zeros_like(grid.v), grid.v)

    def adjoint(self, op, grid, d=None):
        """Exact ``P^dagger chi`` at the nodes."""
        d = d or self.on_grid(grid)
        uu, vv = grid.nodes
        return (4.0 * d["uv"] - op.A(uu, vv) * d["u"] - op.B(uu, vv) * d["v"]
                + (op.q(uu, vv) - op.divX(uu, vv)) * d["chi"])

    def c2_norm(self, grid):
        d = self.on_grid(grid)
        return float(max(np.max(np.abs(x)) for x in d.values()))


@dataclass(frozen=True)
class Battery:
    members: tuple
    seed: int


TestFunctionBattery = Battery


def make_battery(grid, size=20, seed=0, ring=3, u_frac=0.7, v_margin=0.3):
    """Seeded test functions inside ``|u| < u_frac U`` and ``v`` at least ``v_margin`` from the ends.

    The draw does not depend on ``h``, so one seed gives the same functions on
    every refinement of a grid; the supports must clear the outer ``ring`` nodes.
    """
    h = grid.h
    umax = u_frac * grid.u_halfwidth
    v0, v1 = grid.v_range[0] + v_margin, grid.v_range[1] - v_margin
    if umax > grid.u_halfwidth - ring * h + 1e-9 or v_margin < ring * h - 1e-9:
        raise VerificationError("grid too coarse for a battery that clears the boundary ring")
    rng = np.random.default_rng(seed)
    members = []
    for _ in range(size):
        wu = rng.uniform(0.6, 1.0) * umax
        wv = rng.uniform(0.2, 0.35) * (v1 - v0)
        uc = rng.uniform(-umax + wu, umax - wu)
        vc = rng.uniform(v0 + wv, v1 - wv)
        a, b = rng.uniform(-0.5, 0.5, size=2)
        members.append(TestFunction(float(uc), float(vc), float(wu), float(wv), float(a), float(b)))
    return Battery(tuple(members), seed)


def _region_sign(region):
    region = CausalRegion(region)
    if region is CausalRegion.JMINUS:
        return 1.0
    if region is CausalRegion.JPLUS:
        return -1.0
    raise VerificationError("region must be Jplus or Jminus")


def _vals(x):
    return x.values if isinstance(x, GridField) else np.asarray(x, dtype=float)


def _check_support(grid, *fields, ring=2):
    for x in fields:
        edge = np.concatenate([x[:ring].ravel(), x[-ring:].ravel(), x[:, :ring].ravel(), x[:, -ring:].ravel()])
        if np.any(np.abs(edge) > 1e-12 * max(1.0, float(np.max(np.abs(x))))):
            raise VerificationError("support reaches the grid boundary")


def verify_jump_formula(op, region, phi, battery, grid=None):
    """``int_D div j[chi, Phi] mu_g`` against the boundary flux on ``u = 0``.

    The flux through ``u = 0`` is ``+/- int [2 chi Phi_v - 2 Phi chi_v + A Phi chi] (1/2) dv``
    (sign ``+`` for ``D = J^-`` whose outward conormal is ``du``).
    """
    grid = grid or phi.grid
    p = _vals(phi)
    sign = _region_sign(region)
    h, i0 = grid.h, grid.i0
    uu, vv = grid.nodes
    a = op.A(uu, vv)
    b = op.B(uu, vv)
    p_u = np.gradient(p, h, axis=0, edge_order=2)
    p_v = np.gradient(p, h, axis=1, edge_order=2)
    a_line = a[i0]
    pv_line = kernels.central_diff4(p[i0], h)

    def one(chi):
        d = chi.on_grid(grid)
        _check_support(grid, p * d["chi"])
        c = d["chi"]
        ju = GridField(grid, 2.0 * (c * p_v - p * d["v"]) + c * p * a)
        jv = GridField(grid, 2.0 * (c * p_u - p * d["u"]) + c * p * b)
        lhs = integrate(grid, divergence(ju, jv), region, corrected=True)
        flux = 2.0 * c[i0] * pv_line - 2.0 * p[i0] * d["v"][i0] + a_line * p[i0] * c[i0]
        rhs = sign * integrate_line(0.5 * flux, h)
        return lhs, rhs

    pairs = ordered_map(one, battery.members)
    res = [abs(l - r) for l, r in pairs]
    return {"max_residual": float(max(res)), "residuals": res,
            "lhs": [l for l, _ in pairs], "rhs": [r for _, r in pairs]}


def warped_operator(op, rho):
    """``L = rho^{-1} div(rho grad .) + X + q``: ``P`` with ``A + 2 rho_v/rho`` and ``B + 2 rho_u/rho``."""
    rho = as_expr(rho)
    return WaveOperator.make(op.A.expr + 2 * sp.diff(rho, V) / rho,
                             op.B.expr + 2 * sp.diff(rho, U) / rho, op.q.expr)


def _warped_adjoint(op, rho, chi_d, grid):
    """Formal adjoint of ``L`` with respect to ``rho mu_g``, exact at the nodes."""
    uu, vv = grid.nodes
    r = lambdify(rho)(uu, vv)
    ru = lambdify(sp.diff(rho, U))(uu, vv)
    rv = lambdify(sp.diff(rho, V))(uu, vv)
    a, b = op.A(uu, vv), op.B(uu, vv)
    with np.errstate(divide="ignore", invalid="ignore"):
        div_rho = op.divX(uu, vv) + (ru * a + rv * b) / r
        out = (4.0 * chi_d["uv"] + (2.0 * rv / r - a) * chi_d["u"]
               + (2.0 * ru / r - b) * chi_d["v"] + (op.q(uu, vv) - div_rho) * chi_d["chi"])
    return np.where(chi_d["chi"] != 0, out, 0.0)


def t_layer_weight(phi_line, dphi_line, a_line, iota, coef, h, expansion=True):
    """Weight of ``T phi = {2 n^sharp phi + [n(X) + div_iota n^sharp] phi} iota`` in ``|dv|``.

    ``coef`` is the v-component of ``n^sharp``, ``iota`` the weight of ``iota_n mu``
    and ``a_line`` the value of ``n(X)``.
    """
    _, theta = line_expansion(iota, coef, h)
    if not expansion:
        theta = np.zeros_like(theta)
    return (2.0 * coef * dphi_line + (a_line + theta) * phi_line) * iota


def verify_T_identity(op, phi, battery, region=CausalRegion.JMINUS, grid=None, rho=None):
    """``int_D (chi P Phi - Phi P^dagger chi) mu = int chi T(Phi|_N)`` over a battery.

    With a density ``rho`` the measure is ``rho mu_g`` and ``P`` becomes the
    warped operator; the expansion term of ``T`` is then nonzero, and the
    report includes the right side with that term dropped.
    """
    grid = grid or phi.grid
    p = _vals(phi)
    sign = _region_sign(region)
    h, i0 = grid.h, grid.i0
    v = grid.v
    if rho is None:
        L = op
        rho_nodes = np.ones(grid.shape)
    else:
        L = warped_operator(op, rho)
        uu, vv = grid.nodes
        rho_nodes = lambdify(as_expr(rho))(uu, vv)
    with np.errstate(divide="ignore", invalid="ignore"):
        Lp = apply_P(L, p, grid).values
    Lp = np.where(p != 0, Lp, 0.0) if rho is not None else Lp
    _check_support(grid, p)
    a_line = op.A(np.zeros_like(v), v)
    iota = 0.5 * rho_nodes[i0]
    dphi = kernels.central_diff4(p[i0], h)
    # J^- has outward conormal du (n^sharp = 2 d_v, n(X) = A); J^+ has -du
    w_full = t_layer_weight(p[i0], dphi, sign * a_line, iota, sign * 2.0, h)
    w_flat = t_layer_weight(p[i0], dphi, sign * a_line, iota, sign * 2.0, h, expansion=False)

    def one(chi):
        d = chi.on_grid(grid)
        adj = chi.adjoint(op, grid, d) if rho is None else _warped_adjoint(op, as_expr(rho), d, grid)
        with np.errstate(invalid="ignore"):
            integrand = np.where(d["chi"] != 0, (d["chi"] * Lp - p * adj) * rho_nodes, 0.0)
        lhs = integrate(grid, integrand, region)
        tr = d["chi"][i0]
        return lhs, integrate_line(tr * w_full, h), integrate_line(tr * w_flat, h)

    rows = ordered_map(one, battery.members)
    res = [abs(l - r) for l, r, _ in rows]
    dropped = [abs(l - r) for l, _, r in rows]
    return {"max_residual": float(max(res)), "residuals": res,
            "lhs": [r[0] for r in rows], "rhs": [r[1] for r in rows],
            "rhs_without_expansion": [r[2] for r in rows],
            "max_residual_without_expansion": float(max(dropped))}


def tdagger_line(op, chi_d, grid, region, beta=None, gamma=None):
    """``T^dagger chi = -2 nhat^sharp chi - Theta chi + nhat(X) chi`` on ``u = 0``.

    ``nhat = alpha du`` with ``alpha = 1 + u beta(v)`` and ``Theta = u gamma(v)``
    extend the conormal and expansion off the line; on the line only their
    values enter.
    """
    sign = _region_sign(region)
    uu, vv = grid.nodes
    alpha = 1.0 + uu * (0.0 if beta is None else beta(vv))
    theta = uu * (0.0 if gamma is None else gamma(vv))
    n_sharp_chi = sign * 2.0 * alpha * chi_d["v"]
    nx = sign * alpha * op.A(uu, vv)
    full = -2.0 * n_sharp_chi - theta * chi_d["chi"] + nx * chi_d["chi"]
    return full[grid.i0]


def verify_second_jump(op, datum, battery, grid, region=CausalRegion.JMINUS, cfg=SolverConfig(),
                       kernel_tol=None, extensions=None):
    """``<P(Phi 1_D), chi mu> = -<Phi delta_{N,n}, T^dagger chi mu>`` for a homogeneous solution.

    ``Phi`` is the one-sided solution on ``D`` from the Rendall path. Both
    sides are evaluated adjoint-side. Also reports the right side of the T
    identity for the same ``Phi`` (the two should sum to zero) and the spread
    over two extensions of ``nhat`` and ``Theta``.
    """
    from .propagation import Inhomogeneity
    sign = _region_sign(region)
    sol = solve(op, datum, Inhomogeneity.make(), grid, cfg, path="rendall")
    phi = (sol.phi_minus if sign > 0 else sol.phi_plus).values
    h, i0 = grid.h, grid.i0
    scale = max(1e-300, float(np.max(np.abs(phi))))
    resid = apply_P(op, phi, grid).values
    inner = resid[1:i0] if sign > 0 else resid[i0 + 1:-1]
    inner = inner[:, 1:-1]
    kernel_tol = kernel_tol if kernel_tol is not None else 1e3 * h**2 * scale
    kernel_residual = float(np.max(np.abs(inner))) if inner.size else 0.0
    if kernel_residual > kernel_tol:
        raise VerificationError(f"Phi is not an approximate kernel element: |P Phi| = {kernel_residual:.3e}")
    v = grid.v
    a_line = op.A(np.zeros_like(v), v)
    dphi = np.gradient(phi[i0], h, edge_order=2)
    w_t = t_layer_weight(phi[i0], dphi, sign * a_line, 0.5 * np.ones_like(v), sign * 2.0, h)
    extensions = extensions or [(None, None), (lambda x: np.sin(x), lambda x: np.cos(x))]

    def one(chi):
        d = chi.on_grid(grid)
        lhs = integrate(grid, phi * chi.adjoint(op, grid, d), region)
        rhs_all = [-integrate_line(phi[i0] * tdagger_line(op, d, grid, region, bt, gm) * 0.5, h)
                   for bt, gm in extensions]
        rhs_t = integrate_line(d["chi"][i0] * w_t, h)
        return lhs, rhs_all[0], max(abs(r - rhs_all[0]) for r in rhs_all), rhs_t

    rows = ordered_map(one, battery.members)
    return {"max_residual": float(max(abs(l - r) for l, r, _, _ in rows)),
            "consistency": float(max(abs(r + t) for _, r, _, t in rows)),
            "extension_spread": float(max(s for _, _, s, _ in rows)),
            "kernel_residual": kernel_residual,
            "lhs": [r[0] for r in rows], "rhs": [r[1] for r in rows]}


def verify_equivariance(op, lam, phi_line, battery, grid, dphi_line=None, d=1):
    """``S_{mu_g'} T_{g'} phi = S_{mu_g} T_g (phi / lam)`` paired with a battery, ``g' = lam g``.

    Requires ``X`` tangent to the null line (``A = 0``) and ``lam`` constant
    along the generator, which on the 1+1 line means a positive constant.
    """
    if not op.tangent_drift:
        raise VerificationError("equivariance requires X tangent to N (A = 0)")
    lam_arr = np.asarray(lam, dtype=float) * np.ones(grid.v.size)
    if np.any(lam_arr <= 0):
        raise VerificationError("lambda must be positive")
    if np.max(np.abs(np.diff(lam_arr))) > 1e-12 * float(np.max(lam_arr)):
        raise VerificationError("lambda must be constant along the generator")
    h = grid.h
    phi = np.asarray(phi_line, dtype=float)
    dphi = kernels.central_diff4(phi, h) if dphi_line is None else np.asarray(dphi_line)
    a_line = op.A(np.zeros_like(grid.v), grid.v)
    vol = lam_arr ** ((d + 1) / 2.0)
    # g': n^sharp' = (2/lam) d_v, iota_n mu_g' = lam^{(d+1)/2} / 2
    w_prime = t_layer_weight(phi, dphi, a_line, 0.5 * vol, 2.0 / lam_arr, h) / vol
    scaled = phi / lam_arr
    w_base = t_layer_weight(scaled, kernels.central_diff4(scaled, h) if dphi_line is None else dphi / lam_arr,
                            a_line, 0.5 * np.ones_like(phi), 2.0, h)

    def one(chi):
        tr = chi.trace(grid)["chi"]
        return integrate_line(tr * w_prime, h), integrate_line(tr * w_base, h)

    rows = ordered_map(one, battery.members)
    rel = [abs(l - r) / max(abs(l), abs(r), 1e-300) for l, r in rows]
    return {"max_rel_error": float(max(rel)), "lhs": [r[0] for r in rows], "rhs": [r[1] for r in rows]}


def distributional_residual(sol, op, F, battery):
    """``max |<phi, P^dagger chi mu> - <F, chi mu>| / ||chi||_{C^2}`` over the battery."""
    grid = sol.grid
    phi = sol.merged.values
    uu, vv = grid.nodes
    Fv = 0.0 if F is None or F.is_zero else F.F(uu, vv)

    def one(chi):
        d = chi.on_grid(grid)
        lhs = integrate(grid, phi * chi.adjoint(op, grid, d))
        rhs = integrate(grid, Fv * d["chi"])
        norm = float(max(np.max(np.abs(x)) for x in d.values()))
        return abs(lhs - rhs), norm

    rows = ordered_map(one, battery.members)
    ratios = [r / n for r, n in rows]
    return {"max_normalised": float(max(ratios)), "residuals": [r for r, _ in rows],
            "c2_norms": [n for _, n in rows]}


def independence_suite(op, datum, F, grid, variants, path="rendall"):
    """Pairwise sup-distances of merged solutions computed with different choices."""
    if len(variants) < 2:
        raise VerificationError("need at least two variants")
    sols = ordered_map(lambda cfg: solve(op, datum, F, grid, cfg, path).merged.values, variants)
    dist = {(i, j): float(np.max(np.abs(sols[i] - sols[j])))
            for i, j in combinations(range(len(sols)), 2)}
    return {"max_distance": max(dist.values()), "pairwise": dist}


def linearity_check(op, data, sources, grid, weights=(2.0, -0.5), cfg=SolverConfig(), path="rendall"):
    """Relative defect of ``S(a f1 + b f2, a F1 + b F2) - a S(f1, F1) - b S(f2, F2)``."""
    (f1, f2), (F1, F2), (a, b) = data, sources, weights
    s1 = solve(op, f1, F1, grid, cfg, path).merged.values
    s2 = solve(op, f2, F2, grid, cfg, path).merged.values
    combo = solve(op, f1.scaled(a) + f2.scaled(b), F1.scaled(a) + F2.scaled(b), grid, cfg, path)
    ref = a * s1 + b * s2
    scale = max(1e-300, float(np.max(np.abs(ref))))
    return float(np.max(np.abs(combo.merged.values - ref))) / scale


def data_gain(op, data, grid, cfg=SolverConfig(), path="rendall"):
    """``K = max_i ||S f_i||_sup / ||f_i||_{C^1}`` over homogeneous problems with data ``f_i``.

    ``data`` holds callables ``f(v)`` so the family can be sampled on any grid.
    """
    from .propagation import CharacteristicDatum, Inhomogeneity
    F = Inhomogeneity.make()
    gains = []
    for fun in data:
        datum = CharacteristicDatum.from_function(grid, fun)
        norm = max(float(np.max(np.abs(datum.f))), float(np.max(np.abs(datum.derivative(grid.h)))))
        phi = solve(op, datum, F, grid, cfg, path).merged.values
        gains.append(float(np.max(np.abs(phi))) / norm)
    return max(gains)


def observed_orders(h_list, errors):
    h = np.asarray(h_list, dtype=float)
    e = np.asarray(errors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


def convergence_study(error_at, h_list):
    """Errors at each ``h`` (coarse to fine) and observed orders between successive levels.

    ``error_at(h)`` returns the error on the grid of spacing ``h``.
    """
    if len(h_list) < 3:
        raise VerificationError("a convergence study needs at least three grid levels")
    h_list = sorted(h_list, reverse=True)
    errors = [float(error_at(h)) for h in h_list]
    orders = observed_orders(h_list, errors)
    rows = [{"h": h, "error": e, "order": (None if k == 0 else float(orders[k - 1]))}
            for k, (h, e) in enumerate(zip(h_list, errors))]
    monotone = all(errors[k + 1] < errors[k] for k in range(len(errors) - 1))
    return {"rows": rows, "monotone": monotone, "orders": [float(o) for o in orders]}


def restrict(fine, coarse):
    """Sample a fine-grid field on the nodes of a coarse grid that it refines."""
    stride = int(round(coarse.h / fine.grid.h))
    i_off = fine.grid.i0 - stride * coarse.i0
    j_off = int(round((coarse.v[0] - fine.grid.v[0]) / fine.grid.h))
    vals = fine.values[i_off::stride, j_off::stride][:coarse.shape[0], :coarse.shape[1]]
    if vals.shape != coarse.shape:
        raise VerificationError("fine grid does not refine the coarse grid")
    return vals
