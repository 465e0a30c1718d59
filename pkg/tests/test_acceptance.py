"""The ten acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed in the terminal
summary (see ``conftest.py``) and by ``python3 tests/test_acceptance.py``.
"""
import time

import numpy as np
import pytest

from charcauchy import geometry as geo
from charcauchy import green
from charcauchy import verify as vf
from charcauchy.cli import Problem
from charcauchy.config import bundled_configs, load_config
from charcauchy.geometry import CausalRegion, SlabSpacetime, region_labels
from charcauchy.kernels import central_diff4
from charcauchy.operators import Coefficient, WaveOperator, apply_P
from charcauchy.propagation import CharacteristicDatum, Inhomogeneity
from charcauchy.solver import SolverConfig, one_sided_u_jump, regularity_report, solve

from conftest import bump_datum, bump_np, make_grid

BUMP_MASS = 1.20690032243787617534
WAVE = WaveOperator.make()
KG = WaveOperator.make(q=1)
DRIFT = WaveOperator.make("0.3", "0.2*cos(u + v)", "0.5")
NO_SOURCE = Inhomogeneity.make()
RESULTS = {}


def record(n, ok, detail, started):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - started:.1f}s)"
    RESULTS[n] = line
    print(line)
    assert ok, line


def _c2(datum, h):
    df = datum.derivative(h)
    return max(np.max(np.abs(datum.f)), np.max(np.abs(df)), np.max(np.abs(central_diff4(df, h))))


def _kg_datum(grid):
    # bump with unit integral
    return bump_datum(grid).scaled(1.0 / (1.5 * BUMP_MASS))


def test_criterion_01_pure_wave():
    t0 = time.perf_counter()
    ok, worst, classes = True, 0.0, set()
    for h in (0.05, 0.025):
        g = make_grid(h)
        d = bump_datum(g)
        inside = region_labels(g) != "exterior"
        for path in ("rendall", "representation"):
            sol = solve(WAVE, d, NO_SOURCE, g, SolverConfig(n_jet=6), path)
            err = np.max(np.abs(sol.merged.values - d.f[None, :])[inside])
            ratio = err / (5 * h * h * _c2(d, h))
            worst = max(worst, ratio)
            cls = regularity_report(sol)["C_k_class"]
            classes.add(cls)
            ok &= ratio <= 1.0 and cls == 6
    record(1, ok, f"max err/(5h^2|f|_C2) = {worst:.3g}, C_k classes {sorted(classes)} (N_jet = 6)", t0)


def test_criterion_02_klein_gordon_jump():
    t0 = time.perf_counter()
    ok, details = True, []
    for h in (0.05, 0.025):
        g = make_grid(h)
        sol = solve(KG, _kg_datum(g), NO_SOURCE, g, SolverConfig(), "rendall")
        jump = one_sided_u_jump(sol)[2:-2]
        dev = np.max(np.abs(jump + 0.25))
        spread = np.max(jump) - np.min(jump)
        ok &= dev <= 10 * h * h and spread <= 10 * h * h
        details.append(f"h={h}: |jump+1/4|={dev:.2e}, spread={spread:.2e}, tol={10 * h * h:.2e}")
    record(2, ok, "; ".join(details), t0)


def test_criterion_03_path_agreement():
    t0 = time.perf_counter()
    ok, worst = True, 0.0
    for h in (0.05, 0.025):
        g = make_grid(h)
        for op, d in ((WAVE, bump_datum(g)), (KG, _kg_datum(g))):
            a = solve(op, d, NO_SOURCE, g, SolverConfig(), "rendall").merged.values
            b = solve(op, d, NO_SOURCE, g, SolverConfig(), "representation").merged.values
            r = np.max(np.abs(a - b)) / (10 * h * h)
            worst = max(worst, r)
            ok &= r <= 1.0
    hs = (0.1, 0.05, 0.025)
    errs = []
    for h in hs:
        g = make_grid(h)
        d = _kg_datum(g)
        a = solve(KG, d, NO_SOURCE, g, SolverConfig(), "rendall").merged.values
        b = solve(KG, d, NO_SOURCE, g, SolverConfig(), "final_formula").merged.values
        errs.append(np.max(np.abs(a - b)))
    orders = vf.observed_orders(hs, errs)
    c = max(e / h for e, h in zip(errs, hs))
    ok &= bool(np.min(orders) >= 0.8) and c <= 5.0
    record(3, ok, f"rendall vs representation max/(10h^2) = {worst:.3g}; final formula err/h <= {c:.3g}, "
                  f"orders {np.round(orders, 2).tolist()} (>= 0.8)", t0)


def test_criterion_04_distributional_solution():
    t0 = time.perf_counter()
    ok, details = True, []
    for name in bundled_configs():
        cfg = load_config(name)
        prob = Problem(cfg)
        battery = vf.make_battery(prob.grid, 20, seed=0)
        worst = 0.0
        for path in prob.paths:
            sol = prob.solve(path)
            res = vf.distributional_residual(sol, prob.op, prob.F, battery)["max_normalised"]
            worst = max(worst, res / (10 * prob.h**2))
        ok &= worst <= 1.0
        details.append(f"{name.removesuffix('.cfg')}={worst:.3g}")
    record(4, ok, "max residual/(10h^2 |chi|_C2): " + ", ".join(details), t0)


VARIANTS = [SolverConfig(profile="tanh"), SolverConfig(delta=0.5), SolverConfig(delta=0.7),
            SolverConfig(delta_e=0.6), SolverConfig(margin=3), SolverConfig(margin=10),
            SolverConfig(n_jet=5), SolverConfig(n_jet=8)]


def test_criterion_05_choice_independence():
    t0 = time.perf_counter()
    ok, worst = True, 0.0
    for h in (0.05, 0.025):
        g = make_grid(h)
        for op in (KG, DRIFT):
            for path in ("rendall", "representation"):
                out = vf.independence_suite(op, _kg_datum(g), NO_SOURCE, g, [SolverConfig()] + VARIANTS, path)
                r = out["max_distance"] / (20 * (h * h + h**4))
                worst = max(worst, r)
                ok &= r <= 1.0
    g = make_grid(0.05)
    runs = [solve(DRIFT, _kg_datum(g), NO_SOURCE, g, SolverConfig(), p).merged.values
            for p in ("rendall", "rendall", "representation", "representation")]
    identical = np.array_equal(runs[0], runs[1]) and np.array_equal(runs[2], runs[3])
    ok &= identical
    record(5, ok, f"max change/(20(h^2+h^4)) = {worst:.3g}; repeat runs bit-identical: {identical}", t0)


def test_criterion_06_jump_formulae_orders():
    t0 = time.perf_counter()
    hs = (0.05, 0.025, 0.0125)
    rows = {k: [] for k in ("jump-", "jump+", "T-", "T+", "2nd-jump consistency")}
    for h in hs:
        g = make_grid(h)
        battery = vf.make_battery(g, 20, seed=0)
        phi = vf.make_battery(g, 1, seed=1).members[0].values(g)
        rows["jump-"].append(vf.verify_jump_formula(DRIFT, CausalRegion.JMINUS, phi, battery)["max_residual"])
        rows["jump+"].append(vf.verify_jump_formula(DRIFT, CausalRegion.JPLUS, phi, battery)["max_residual"])
        rows["T-"].append(vf.verify_T_identity(DRIFT, phi, battery, CausalRegion.JMINUS)["max_residual"])
        rows["T+"].append(vf.verify_T_identity(DRIFT, phi, battery, CausalRegion.JPLUS)["max_residual"])
        rows["2nd-jump consistency"].append(vf.verify_second_jump(KG, bump_datum(g), battery, g)["consistency"])
    ok, details = True, []
    for name, errs in rows.items():
        orders = vf.observed_orders(hs, errs)
        c = max(e / h**2 for e, h in zip(errs, hs))
        ok &= bool(np.all((orders >= 1.7) & (orders <= 2.3))) and c <= 1.0
        details.append(f"{name} {np.round(orders, 2).tolist()}")
    record(6, ok, "orders " + "; ".join(details) + " (in [1.7, 2.3], residual <= h^2)", t0)


def test_criterion_07_expansion_density():
    t0 = time.perf_counter()
    flat = geo.expansion_density(geo.slab_null_line(SlabSpacetime(0.0, 4.0)), np.linspace(1.0, 7.0, 25)).weight
    flat_err = float(np.max(np.abs(flat)))
    cone = geo.light_cone(3)
    r = np.linspace(1.0, 5.0, 9)
    y = [[0.7, 0.3], [1.3, 2.0], [2.2, -1.1]]
    dens = geo.expansion_density(cone, r, y).weight
    ratio = dens / geo.area_density(cone, r, y)
    cone_err = float(np.max(np.abs(ratio * r[:, None] / 2.0 - 1.0)))
    resc = 0.0
    for alpha, sign in ((2.0, 1.0), (lambda s, yy: float(np.exp(0.3 * s)), 1.0), (-1.0, -1.0)):
        d = geo.expansion_density(cone, r, y, alpha=alpha).weight
        resc = max(resc, float(np.max(np.abs(d - sign * dens)) / np.max(np.abs(dens))))
    warped = SlabSpacetime(0.0, 4.0, omega=lambda u, v: 1.0 + 0.2 * np.cos(u + v))
    conf1 = geo.conformal_scaling_check(geo.slab_null_line(warped), 4.0, np.linspace(1.5, 6.5, 11))
    conf3 = geo.conformal_scaling_check(cone, 4.0, r, y)
    ok = flat_err <= 1e-10 and cone_err <= 1e-4 and resc <= 1e-6 and conf1["max_rel_error"] <= 1e-10 \
        and conf3["max_rel_error"] <= 1e-6 and conf3["exponent"] == 1.0
    record(7, ok, f"flat {flat_err:.1e}; cone ratio rel {cone_err:.1e}; rescaling {resc:.1e}; "
                  f"conformal d=1 {conf1['max_rel_error']:.1e}, d=3 {conf3['max_rel_error']:.1e}", t0)


def test_criterion_08_equivariance():
    t0 = time.perf_counter()
    g = make_grid(0.05)
    battery = vf.make_battery(g, 20, seed=0)
    worst = 0.0
    for op in (WAVE, KG, WaveOperator.make(B="0.2*cos(u + v)", q="0.5")):
        worst = max(worst, vf.verify_equivariance(op, 4.0, bump_datum(g).f, battery, g)["max_rel_error"])
    try:
        vf.verify_equivariance(DRIFT, 4.0, bump_datum(g).f, battery, g)
        rejected = False
    except vf.VerificationError:
        rejected = True
    record(8, worst <= 1e-10 and rejected, f"max rel pairing error {worst:.1e}; A != 0 rejected: {rejected}", t0)


def test_criterion_09_green_operators():
    t0 = time.perf_counter()
    src = Coefficient.make("bump(u, 0.2, 0.4)*bump(v, 4, 1)")
    ok, res, leak = True, {}, 0.0
    for h in (0.025, 0.0125):
        g = make_grid(h)
        s = src(*g.nodes)
        for solve_fn, kind in ((green.retarded_solve, "future"), (green.advanced_solve, "past")):
            phi = solve_fn(DRIFT, s, g).values
            r = apply_P(DRIFT, phi, g)
            res.setdefault(kind, []).append(float(np.max(np.abs(r.values - s)[r.valid])))
            shadow = green.causal_shadow(s != 0, kind, inflate=2)
            leak = max(leak, float(np.max(np.abs(phi[~shadow]))) / float(np.max(np.abs(phi))))
    c = max(e / h**2 for v in res.values() for e, h in zip(v, (0.025, 0.0125)))
    orders = [float(np.log2(v[0] / v[1])) for v in res.values()]
    ok &= c <= 40.0 and min(orders) >= 1.7 and leak <= 1e-10
    cn = []
    for h in (0.05, 0.025, 0.0125):
        g = make_grid(h)
        layer = green.SingleLayer(np.asarray(Coefficient.make("bump(v, 4, 1.5)")(0 * g.v, g.v)))
        cn.append(green.measure_c_norm(DRIFT, layer, g))
    stable = all(abs(a - b) <= 5e-4 * abs(b) for a, b in zip(cn, cn[1:]))
    ok &= stable and abs(cn[-1] - green.C_NORM) <= 5e-4
    record(9, ok, f"residual/h^2 {c:.3g} (C = 40), orders {np.round(orders, 2).tolist()}; leakage {leak:.1e}; "
                  f"c_norm {[round(x, 6) for x in cn]}", t0)


def test_criterion_10_continuous_dependence():
    t0 = time.perf_counter()
    g = make_grid(0.05)
    f1, f2 = _kg_datum(g), CharacteristicDatum.from_coefficient(g, "bump(v, 3.5, 0.8)*sin(v)", (2.7, 4.3))
    F1 = Inhomogeneity.make("bump(u, 0, 0.6)*bump(v, 4.5, 1)", (3.5, 5.5))
    lin = max(vf.linearity_check(DRIFT, (f1, f2), (F1, NO_SOURCE), g, path=p)
              for p in ("rendall", "representation"))
    family = [lambda v, c=c, w=w: bump_np(v, c, w) for c, w in ((3.5, 0.8), (4.0, 1.5), (4.5, 1.0))]
    gains = [vf.data_gain(DRIFT, family, make_grid(h)) for h in (0.1, 0.05, 0.025)]
    spread = max(gains) / min(gains) - 1.0
    ok = lin <= 1e-12 and spread <= 0.2
    record(10, ok, f"linearity defect {lin:.1e}; gain K {np.round(gains, 4).tolist()} (spread {spread:.1%})", t0)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
