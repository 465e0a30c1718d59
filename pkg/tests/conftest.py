import numpy as np
import pytest

from charcauchy.geometry import SlabSpacetime, build_grid
from charcauchy.operators import WaveOperator
from charcauchy.propagation import CharacteristicDatum, Inhomogeneity


@pytest.fixture(scope="session")
def slab():
    return SlabSpacetime(0.0, 4.0)


def make_grid(h, slab=None, u_halfwidth=1.0, v_range=(1.0, 7.0)):
    return build_grid(slab or SlabSpacetime(0.0, 4.0), h, u_halfwidth, v_range)


def bump_datum(grid, c=4.0, w=1.5):
    return CharacteristicDatum.from_coefficient(grid, f"bump(v, {c}, {w})", (c - w, c + w))


@pytest.fixture(scope="session")
def grid05():
    return make_grid(0.05)


@pytest.fixture(scope="session")
def grid1():
    return make_grid(0.1)


@pytest.fixture
def wave():
    return WaveOperator.make()


@pytest.fixture
def kg():
    return WaveOperator.make(q=1)


@pytest.fixture
def no_source():
    return Inhomogeneity.make()


def bump_np(x, c, w):
    s = (np.asarray(x, dtype=float) - c) / w
    out = np.zeros_like(s)
    m = np.abs(s) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
