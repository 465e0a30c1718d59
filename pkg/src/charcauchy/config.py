"""Run configuration: flat JSON with the blocks spacetime, grid, operator, data,
solver, verify and output.

Unknown blocks or keys, wrong types and unparseable expressions raise
:class:`ConfigError` carrying the offending field (and the line/column for JSON
syntax errors).
"""
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .expressions import ExpressionError, parse_expression

BLOCKS = ("spacetime", "grid", "operator", "data", "solver", "verify", "output")
OPERATOR_PRESETS = ("wave", "klein_gordon", "custom")
PATH_NAMES = ("rendall", "representation", "final_formula")


class ConfigError(ValueError):
    def __init__(self, source, field, message, line=None, column=None):
        where = f"{source}"
        if line is not None:
            where += f":{line}:{column}"
        super().__init__(f"{where}: field '{field}': {message}" if field else f"{where}: {message}")
        self.source, self.field, self.line, self.column = source, field, line, column


def _num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _expr(x):
    return isinstance(x, str) or _num(x)


def _interval(x):
    return isinstance(x, list) and len(x) == 2 and all(_num(a) for a in x) and x[0] < x[1]


def _pos(x):
    return _num(x) and x > 0


def _opt(check):
    return lambda x: x is None or check(x)


def _int_in(lo, hi):
    return lambda x: isinstance(x, int) and not isinstance(x, bool) and lo <= x <= hi


def _num_list(x):
    return isinstance(x, list) and len(x) > 0 and all(_num(a) for a in x)


# block -> key -> (validator, description, default)
SCHEMA = {
    "spacetime": {
        "t_min": (_num, "a number", 0.0),
        "t_max": (_num, "a number", 4.0),
        "omega": (_opt(_expr), "an expression or null", None),
    },
    "grid": {
        "h": (_pos, "a positive number", 0.05),
        "u_halfwidth": (_pos, "a positive number", 1.0),
        "v_range": (_interval, "an increasing pair [v0, v1]", [1.0, 7.0]),
    },
    "operator": {
        "preset": (lambda x: x in OPERATOR_PRESETS, f"one of {OPERATOR_PRESETS}", "wave"),
        "mass2": (_num, "a number", 1.0),
        "A": (_expr, "an expression", "0"),
        "B": (_expr, "an expression", "0"),
        "q": (_expr, "an expression", "0"),
    },
    "data": {
        "f": (_expr, "an expression in v", "0"),
        "f_support": (_opt(_interval), "an increasing pair or null", None),
        "normalize": (lambda x: x in (None, "integral"), "null or 'integral'", None),
        "F": (_expr, "an expression in u and v", "0"),
        "F_v_bounds": (_opt(_interval), "an increasing pair or null", None),
    },
    "solver": {
        "N_jet": (_int_in(1, 12), "an integer in 1..12", 6),
        "delta": (_opt(_pos), "a positive number or null", None),
        "delta_e": (_opt(_pos), "a positive number or null", None),
        "mu_rule": (lambda x: x in ("unit", "jet_norm"), "'unit' or 'jet_norm'", "unit"),
        "profile": (lambda x: x in ("exp", "tanh"), "'exp' or 'tanh'", "exp"),
        "margin": (_int_in(1, 1000), "a positive integer", 5),
        "paths": (lambda x: isinstance(x, list) and x and all(p in PATH_NAMES for p in x),
                  f"a non-empty list drawn from {PATH_NAMES}", list(PATH_NAMES)),
    },
    "verify": {
        "seed": (_int_in(0, 2**32 - 1), "a non-negative integer", 0),
        "battery_size": (_int_in(1, 1000), "a positive integer", 20),
        "h_list": (_opt(_num_list), "a list of numbers or null", None),
        "lambda": (_pos, "a positive number", 4.0),
        "rho": (_opt(_expr), "an expression or null", None),
        "radii": (_interval, "an increasing pair [r0, r1]", [1.0, 5.0]),
        "samples": (_int_in(2, 10000), "an integer >= 2", 9),
        "tolerances": (lambda x: isinstance(x, dict) and all(_num(v) for v in x.values()),
                       "an object of numbers", {}),
    },
    "output": {
        "field_csv": (lambda x: isinstance(x, str), "a file name", "field.csv"),
        "summary_json": (lambda x: isinstance(x, str), "a file name", "summary.json"),
        "path": (lambda x: x in PATH_NAMES, f"one of {PATH_NAMES}", "rendall"),
    },
}

DEFAULT_TOLERANCES = {
    "trace_c": 5.0,            # trace error <= c h^2 ||f||
    "residual_c": 10.0,        # distributional residual <= c h^2 ||chi||_{C^2}
    "agreement_c": 10.0,       # rendall vs representation <= c h^2
    "final_formula_c": 5.0,    # rendall vs final formula <= c h
    "jump_c": 1.0,             # jump-formula and T-identity residuals <= c h^2
    "equivariance": 1e-10,
    "flat_line": 1e-10,
    "light_cone": 1e-4,
    "rescaling": 1e-6,
    "conformal": 1e-6,
    "min_order": 1.7,
    "min_order_final": 0.8,
}


@dataclass
class RunConfig:
    blocks: dict
    source: str = "<config>"

    def __getitem__(self, key):
        return self.blocks[key]

    def tolerance(self, key):
        return self.blocks["verify"]["tolerances"].get(key, DEFAULT_TOLERANCES[key])


def _line_of(text, key):
    idx = text.find(f'"{key}"')
    return None if idx < 0 else text.count("\n", 0, idx) + 1


def parse_config(text, source="<config>"):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(source, None, f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(raw, dict):
        raise ConfigError(source, None, "top level must be an object")
    blocks = {}
    for name in raw:
        if name not in SCHEMA:
            raise ConfigError(source, name, f"unknown block; expected one of {BLOCKS}", _line_of(text, name), 1)
    for name, fields in SCHEMA.items():
        given = raw.get(name, {})
        if not isinstance(given, dict):
            raise ConfigError(source, name, "block must be an object", _line_of(text, name), 1)
        block = {}
        for key in given:
            if key not in fields:
                raise ConfigError(source, f"{name}.{key}", "unknown field", _line_of(text, key), 1)
        for key, (check, desc, default) in fields.items():
            value = given.get(key, default)
            if not check(value):
                raise ConfigError(source, f"{name}.{key}", f"must be {desc}, got {value!r}",
                                  _line_of(text, key), 1)
            block[key] = value
        blocks[name] = block
    for name, key in (("operator", "A"), ("operator", "B"), ("operator", "q"),
                      ("data", "f"), ("data", "F"), ("spacetime", "omega"), ("verify", "rho")):
        value = blocks[name][key]
        if value is None:
            continue
        try:
            parse_expression(value)
        except ExpressionError as exc:
            raise ConfigError(source, f"{name}.{key}", str(exc), _line_of(text, key), 1) from None
    if not blocks["spacetime"]["t_min"] < blocks["spacetime"]["t_max"]:
        raise ConfigError(source, "spacetime.t_max", "must exceed t_min", _line_of(text, "t_max"), 1)
    return RunConfig(blocks, source)


def bundled_configs():
    return sorted(p.name for p in resources.files("charcauchy").joinpath("configs").iterdir()
                  if p.name.endswith(".cfg"))


def load_config(path):
    """Load a config file; a bare bundled name such as ``kg_jump.cfg`` also resolves."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("charcauchy").joinpath("configs").joinpath(p.name)
        if bundled.is_file():
            return parse_config(bundled.read_text(), str(p.name))
        raise ConfigError(str(path), None, "no such file")
    return parse_config(p.read_text(), str(path))


def as_float_list(x):
    return [float(a) for a in np.atleast_1d(x)]
