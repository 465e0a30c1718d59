"""Command-line interface: ``charcauchy {solve,verify,expansion,converge}``.

Exit codes: 0 when every check passes, 1 when a tolerance fails, 2 for
configuration or data errors.
"""
import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import geometry, verify
from .config import ConfigError, load_config
from .expressions import ExpressionError, lambdify, parse_expression
from .geometry import CausalRegion, GeometryError, SlabSpacetime, build_grid, region_labels
from .green import GreenError
from .operators import WaveOperator, integrate_line
from .propagation import CharacteristicDatum, Inhomogeneity, PropagationError
from .solver import DataError, SolverConfig, regularity_report, solve

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class Problem:
    """Everything a command needs, built from a :class:`RunConfig`."""

    def __init__(self, cfg, h=None):
        st, gr, op, data, sv = (cfg[k] for k in ("spacetime", "grid", "operator", "data", "solver"))
        omega = None if st["omega"] is None else parse_expression(st["omega"])
        self.spacetime = SlabSpacetime(float(st["t_min"]), float(st["t_max"]),
                                       None if omega is None else lambdify(omega))
        self.h = float(h if h is not None else gr["h"])
        self.grid = build_grid(self.spacetime, self.h, float(gr["u_halfwidth"]), tuple(gr["v_range"]))
        if op["preset"] == "wave":
            coefs = (0, 0, 0)
        elif op["preset"] == "klein_gordon":
            coefs = (0, 0, op["mass2"])
        else:
            coefs = (op["A"], op["B"], op["q"])
        coefs = [parse_expression(c) for c in coefs]
        F = parse_expression(data["F"])
        if omega is not None:
            uu, vv = self.grid.nodes
            if not np.all(lambdify(omega)(uu, vv) > 0):
                raise DataError("omega must be positive on the grid")
            # in 1+1 the wave operator of omega*g is omega^{-1} times that of g,
            # so omega*P is a flat-metric operator with the same solutions
            coefs = [omega * c for c in coefs]
            F = omega * F
        self.op = WaveOperator.make(*coefs)
        datum = CharacteristicDatum.from_coefficient(
            self.grid, data["f"], None if data["f_support"] is None else tuple(data["f_support"]))
        if data["normalize"] == "integral":
            total = integrate_line(datum.f, self.grid.h)
            if total == 0:
                raise DataError("cannot normalise f: its integral vanishes")
            datum = datum.scaled(1.0 / total)
        self.datum = datum
        self.F = Inhomogeneity.make(F, data["F_v_bounds"])
        self.solver = SolverConfig(n_jet=sv["N_jet"], delta=sv["delta"], delta_e=sv["delta_e"],
                                   mu_rule=sv["mu_rule"], profile=sv["profile"], margin=sv["margin"])
        self.paths = [p for p in sv["paths"] if not (p == "final_formula" and not self.F.is_zero)]
        if not self.paths:
            raise DataError("no solution path applies (final_formula needs F = 0)")

    @property
    def is_pure_wave(self):
        return not self.op.has_drift and self.op.q.is_zero and self.F.is_zero

    def solve(self, path):
        return solve(self.op, self.datum, self.F, self.grid, self.solver, path)


def _fmt(x):
    return repr(float(x))


def write_field_csv(path, grid, values):
    labels = region_labels(grid)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "v", "value", "region"])
        for i, u in enumerate(grid.u):
            for j, v in enumerate(grid.v):
                w.writerow([_fmt(u), _fmt(v), _fmt(values[i, j]), labels[i, j]])


def read_field_csv(path):
    """Rows of ``(u, v, value, region)`` as parsed floats and labels."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r)
        return [(float(a), float(b), float(c), d) for a, b, c, d in r]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _check(checks, name, value, tol):
    ok = bool(np.isfinite(value) and value <= tol)
    checks.append({"name": name, "value": float(value), "tol": float(tol), "pass": ok})
    return ok


def _c2_line(datum, h):
    from .kernels import central_diff4
    df = datum.derivative(h)
    return float(max(np.max(np.abs(datum.f)), np.max(np.abs(df)),
                     np.max(np.abs(central_diff4(df, h)))))


def cmd_solve(cfg, prob, out):
    h = prob.h
    sols = {p: prob.solve(p) for p in prob.paths}
    primary = cfg["output"]["path"] if cfg["output"]["path"] in sols else prob.paths[0]
    sol = sols[primary]
    merged = sol.merged.values
    write_field_csv(out / cfg["output"]["field_csv"], prob.grid, merged)
    battery = verify.make_battery(prob.grid, cfg["verify"]["battery_size"], cfg["verify"]["seed"])
    residual = verify.distributional_residual(sol, prob.op, prob.F, battery)["max_normalised"]
    reg = regularity_report(sol)
    trace_error = float(np.max(np.abs(sol.trace - prob.datum.f)))
    agreement = {}
    if "rendall" in sols:
        base = sols["rendall"].merged.values
        for other in ("representation", "final_formula"):
            if other in sols:
                agreement[f"rendall_vs_{other}"] = float(np.max(np.abs(base - sols[other].merged.values)))
    checks = []
    _check(checks, "trace", trace_error, cfg.tolerance("trace_c") * h * h * max(1.0, _c2_line(prob.datum, h)))
    _check(checks, "distributional_residual", residual, cfg.tolerance("residual_c") * h * h)
    if "rendall_vs_representation" in agreement:
        _check(checks, "rendall_vs_representation", agreement["rendall_vs_representation"],
               cfg.tolerance("agreement_c") * h * h)
    if "rendall_vs_final_formula" in agreement:
        _check(checks, "rendall_vs_final_formula", agreement["rendall_vs_final_formula"],
               cfg.tolerance("final_formula_c") * h)
    summary = {
        "path": primary,
        "h": h,
        "shape": list(prob.grid.shape),
        "trace_error": trace_error,
        "residual": residual,
        "jump_table": reg["jump_table"],
        "C_k_class": reg["C_k_class"],
        "path_agreement": agreement,
        "checks": checks,
    }
    write_json(out / cfg["output"]["summary_json"], summary)
    return EXIT_OK if all(c["pass"] for c in checks) else EXIT_FAIL


def cmd_verify(cfg, prob, out):
    h = prob.h
    vb = cfg["verify"]
    grid = prob.grid
    battery = verify.make_battery(grid, vb["battery_size"], vb["seed"])
    phi = verify.make_battery(grid, 1, vb["seed"] + 1).members[0].values(grid)
    checks = []
    report = {}
    jc = cfg.tolerance("jump_c") * h * h
    for region in (CausalRegion.JMINUS, CausalRegion.JPLUS):
        r = verify.verify_jump_formula(prob.op, region, phi, battery, grid)
        name = region.value
        report[f"jump_formula_{name}"] = r["max_residual"]
        _check(checks, f"jump_formula_{name}", r["max_residual"], jc)
        t = verify.verify_T_identity(prob.op, phi, battery, region, grid)
        report[f"T_identity_{name}"] = t["max_residual"]
        _check(checks, f"T_identity_{name}", t["max_residual"], jc)
    if prob.F.is_zero and np.any(prob.datum.f):
        s = verify.verify_second_jump(prob.op, prob.datum, battery, grid, cfg=prob.solver)
        report["second_jump"] = {k: s[k] for k in ("max_residual", "consistency", "extension_spread")}
        scale = max(1.0, _c2_line(prob.datum, h))
        _check(checks, "second_jump", s["max_residual"], 5.0 * jc * scale)
        _check(checks, "second_jump_consistency", s["consistency"], jc * scale)
    sol = prob.solve("rendall")
    res = verify.distributional_residual(sol, prob.op, prob.F, battery)["max_normalised"]
    report["distributional_residual"] = res
    _check(checks, "distributional_residual", res, cfg.tolerance("residual_c") * h * h)
    if vb["rho"] is not None:
        rho = parse_expression(vb["rho"])
        t = verify.verify_T_identity(prob.op, phi, battery, CausalRegion.JMINUS, grid, rho=rho)
        report["T_identity_warped"] = {"with_expansion": t["max_residual"],
                                       "without_expansion": t["max_residual_without_expansion"]}
        _check(checks, "T_identity_warped", t["max_residual"], 10.0 * jc)
        checks.append({"name": "expansion_term_matters", "value": t["max_residual_without_expansion"],
                       "tol": 10.0 * t["max_residual"],
                       "pass": bool(t["max_residual_without_expansion"] > 10.0 * t["max_residual"])})
    if prob.op.tangent_drift:
        line = prob.datum.f if np.any(prob.datum.f) else battery.members[0].trace(grid)["chi"]
        e = verify.verify_equivariance(prob.op, vb["lambda"], line, battery, grid)
        report["equivariance"] = e["max_rel_error"]
        _check(checks, "equivariance", e["max_rel_error"], cfg.tolerance("equivariance"))
    else:
        report["equivariance"] = "skipped: X is not tangent to N (A != 0)"
    write_json(out / "verify.json", {"h": h, "seed": vb["seed"], "report": report, "checks": checks})
    return EXIT_OK if all(c["pass"] for c in checks) else EXIT_FAIL


def _rel(a, b):
    scale = float(np.max(np.abs(b)))
    diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
    return diff / scale if scale > 0 else diff


def cmd_expansion(cfg, prob, out):
    vb = cfg["verify"]
    rows = []
    checks = []
    report = {}
    v = prob.grid.v[3:-3:max(1, prob.grid.v.size // 16)]
    line = geometry.slab_null_line(prob.spacetime)
    flat = geometry.expansion_density(line, v, h=prob.h).weight[:, 0]
    rows += [("null_line", s, "", d) for s, d in zip(v, flat)]
    report["null_line_max_abs"] = float(np.max(np.abs(flat)))
    _check(checks, "null_line_zero", report["null_line_max_abs"], cfg.tolerance("flat_line"))
    lam = float(vb["lambda"])
    conf1 = geometry.conformal_scaling_check(line, lam, v, h=prob.h)
    report["conformal_d1"] = conf1["max_rel_error"]
    _check(checks, "conformal_d1", conf1["max_rel_error"], cfg.tolerance("flat_line"))

    cone = geometry.light_cone(3)
    r = np.linspace(vb["radii"][0], vb["radii"][1], vb["samples"])
    angles = np.array([[0.7, 0.3], [1.3, 2.0], [2.2, -1.1]])
    dens = geometry.expansion_density(cone, r, angles).weight
    area = geometry.area_density(cone, r, angles)
    ratio = dens / area
    for k, (th, ph) in enumerate(angles):
        rows += [("light_cone", s, f"{th};{ph}", d) for s, d in zip(r, dens[:, k])]
    report["light_cone_ratio_rel_error"] = _rel(ratio, np.outer(2.0 / r, np.ones(len(angles))))
    _check(checks, "light_cone_ratio", report["light_cone_ratio_rel_error"], cfg.tolerance("light_cone"))
    rescale = {}
    for name, alpha, sign in (("alpha=2", 2.0, 1.0), ("alpha=exp(s)", lambda s, y: float(np.exp(0.3 * s)), 1.0),
                              ("alpha=-1", -1.0, -1.0)):
        d = geometry.expansion_density(cone, r, angles, alpha=alpha).weight
        rescale[name] = _rel(d, sign * dens)
        _check(checks, f"rescaling {name}", rescale[name], cfg.tolerance("rescaling"))
    report["conormal_rescaling"] = rescale
    conf3 = geometry.conformal_scaling_check(cone, lam, r, angles)
    report["conformal_d3"] = conf3["max_rel_error"]
    _check(checks, "conformal_d3", conf3["max_rel_error"], cfg.tolerance("conformal"))
    with open(out / "expansion.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case", "s", "y", "density"])
        for case, s, y, d in rows:
            w.writerow([case, _fmt(s), y, _fmt(d)])
    write_json(out / "expansion.json", {"report": report, "checks": checks})
    return EXIT_OK if all(c["pass"] for c in checks) else EXIT_FAIL


def cmd_converge(cfg, prob, out, make_problem):
    h_list = cfg["verify"]["h_list"] or [prob.h, prob.h / 2, prob.h / 4]
    h_list = sorted((float(x) for x in h_list), reverse=True)
    checks = []
    table = []
    ref_cache = {}
    for path in prob.paths:
        def error_at(h, path=path):
            p = make_problem(h)
            merged = p.solve(path).merged.values
            if p.is_pure_wave:
                # for the wave operator the solution is f(v) throughout J(N)
                inside = region_labels(p.grid) != "exterior"
                exact = np.broadcast_to(p.datum.f, merged.shape)
                return float(np.max(np.abs(merged - exact)[inside]))
            if path not in ref_cache:
                ref_cache[path] = make_problem(h_list[-1] / 2).solve(path).merged
            fine = verify.restrict(ref_cache[path], p.grid)
            return float(np.max(np.abs(merged - fine)))
        study = verify.convergence_study(error_at, h_list)
        for row in study["rows"]:
            table.append((path, row["h"], row["error"], row["order"]))
        floor = cfg.tolerance("min_order_final" if path == "final_formula" else "min_order")
        worst = min(study["orders"])
        checks.append({"name": f"order_{path}", "value": worst, "tol": floor, "pass": bool(worst >= floor)})
        checks.append({"name": f"monotone_{path}", "value": study["monotone"], "tol": True,
                       "pass": bool(study["monotone"])})
    with open(out / "converge.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "h", "error", "order"])
        for path, h, e, o in table:
            w.writerow([path, _fmt(h), _fmt(e), "" if o is None else _fmt(o)])
    write_json(out / "converge.json", {"checks": checks})
    return EXIT_OK if all(c["pass"] for c in checks) else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="charcauchy", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=("solve", "verify", "expansion", "converge"))
    p.add_argument("--config", required=True, help="config file (or the name of a bundled config)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--grid-h", type=float, default=None, help="override grid.h")
    p.add_argument("--seed", type=int, default=None, help="override verify.seed")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["verify"]["seed"] = args.seed
        if args.grid_h is not None and not args.grid_h > 0:
            raise ConfigError("--grid-h", "grid.h", "must be positive")

        def make_problem(h=None):
            return Problem(cfg, h if h is not None else args.grid_h)

        prob = make_problem()
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "solve":
            return cmd_solve(cfg, prob, out)
        if args.command == "verify":
            return cmd_verify(cfg, prob, out)
        if args.command == "expansion":
            return cmd_expansion(cfg, prob, out)
        return cmd_converge(cfg, prob, out, make_problem)
    except (ConfigError, ExpressionError, GeometryError, DataError, PropagationError) as exc:
        print(f"charcauchy: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GreenError, verify.VerificationError) as exc:
        print(f"charcauchy: check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
