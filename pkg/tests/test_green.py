import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charcauchy import green
from charcauchy.green import GreenError, SingleLayer
from charcauchy.operators import Coefficient, WaveOperator, apply_P

from conftest import bump_np, make_grid

BUMP_MASS = 1.20690032243787617534
DRIFT = WaveOperator.make("0.3", "0.2*cos(u + v)", "0.5")


def _source(grid):
    uu, vv = grid.nodes
    return bump_np(uu, 0.2, 0.4) * bump_np(vv, 4.0, 1.0)


def test_retarded_wave_solution_oracle():
    # G_+ s for 4 d_u d_v is (1/4) of the integral of s over the past quadrant
    exact = 0.25 * (0.4 * BUMP_MASS) * (1.0 * BUMP_MASS)
    errs = []
    for h in (0.05, 0.025):
        g = make_grid(h)
        phi = green.retarded_solve(WaveOperator.make(), _source(g), g).values
        errs.append(abs(phi[-1, -1] - exact))
    assert errs[1] < 1e-4 and errs[1] < errs[0]


def test_advanced_wave_solution_oracle():
    exact = 0.25 * (0.4 * BUMP_MASS) * (1.0 * BUMP_MASS)
    g = make_grid(0.025)
    phi = green.advanced_solve(WaveOperator.make(), _source(g), g).values
    assert phi[0, 0] == pytest.approx(exact, abs=1e-4)


@pytest.mark.parametrize("solve,kind", [(green.retarded_solve, "future"), (green.advanced_solve, "past")])
def test_right_inverse_and_support(solve, kind):
    res = []
    for h in (0.025, 0.0125):
        g = make_grid(h)
        s = _source(g)
        phi = solve(DRIFT, s, g).values
        r = apply_P(DRIFT, phi, g)
        res.append(np.max(np.abs(r.values - s)[r.valid]))
        shadow = green.causal_shadow(s != 0, kind, inflate=2)
        assert np.max(np.abs(phi[~shadow])) == 0.0
    assert res[1] <= 40 * 0.0125**2
    assert np.log2(res[0] / res[1]) > 1.7


def test_source_at_inflow_is_rejected():
    g = make_grid(0.1)
    s = np.zeros(g.shape)
    s[0, 10] = 1.0
    with pytest.raises(GreenError, match="inflow"):
        green.retarded_solve(WaveOperator.make(), s, g)


def test_side_arguments_are_checked():
    g = make_grid(0.1)
    with pytest.raises(GreenError):
        green.retarded_solve(WaveOperator.make(), np.zeros(g.shape), g, side="minus")
    with pytest.raises(GreenError):
        green.advanced_solve(WaveOperator.make(), np.zeros(g.shape), g, side="plus")


@settings(max_examples=15, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_green_operators_are_linear(a, b):
    g = make_grid(0.1)
    uu, vv = g.nodes
    s1 = _source(g)
    s2 = bump_np(uu, -0.3, 0.5) * bump_np(vv, 3.0, 1.2)
    for solve in (green.retarded_solve, green.advanced_solve):
        lhs = solve(DRIFT, a * s1 + b * s2, g).values
        rhs = a * solve(DRIFT, s1, g).values + b * solve(DRIFT, s2, g).values
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-13 * (1 + np.max(np.abs(rhs))))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 1000), inflate=st.integers(0, 3))
def test_causal_shadow_properties(seed, inflate):
    rng = np.random.default_rng(seed)
    mask = rng.uniform(size=(12, 15)) > 0.97
    fut = green.causal_shadow(mask, "future", inflate)
    past = green.causal_shadow(mask, "past", inflate)
    assert np.all(fut[mask]) and np.all(past[mask])
    assert np.all(green.causal_shadow(mask, "future", inflate + 1)[fut])
    # the future shadow is closed under null steps to the future
    assert np.all(fut[1:][fut[:-1]]) and np.all(fut[:, 1:][fut[:, :-1]])


def _layer(grid, c=4.0, w=1.5):
    return SingleLayer(np.asarray(Coefficient.make(f"bump(v, {c}, {w})")(0 * grid.v, grid.v)))


def test_single_layer_wave_trace_oracle():
    # retarded: 4 psi' = 2 w from the past end; advanced: 4 psi' = -2 w from the future end.
    # Either trace reaches (1/2) int w, and for the wave operator the field is constant in u
    g = make_grid(0.05)
    ret = green.green_single_layer(WaveOperator.make(), _layer(g), g, "retarded").values
    assert ret[g.i0, -1] == pytest.approx(0.5 * 1.5 * BUMP_MASS, rel=1e-6)
    np.testing.assert_allclose(ret[g.i0:], np.broadcast_to(ret[g.i0], ret[g.i0:].shape), atol=1e-13)
    assert np.all(ret[:g.i0] == 0)
    adv = green.green_single_layer(WaveOperator.make(), _layer(g), g, "advanced").values
    assert adv[g.i0, 0] == pytest.approx(0.5 * 1.5 * BUMP_MASS, rel=1e-6)
    assert np.all(adv[g.i0 + 1:] == 0)


def test_causal_single_layer_takes_the_mean_on_the_line():
    g = make_grid(0.05)
    field, ret, adv = green.green_single_layer(DRIFT, _layer(g), g, "causal", parts=True)
    np.testing.assert_array_equal(field.values[g.i0], 0.5 * (ret[g.i0] - adv[g.i0]))
    np.testing.assert_array_equal(field.values[g.i0 + 1:], ret[g.i0 + 1:])
    np.testing.assert_array_equal(field.values[:g.i0], -adv[:g.i0])


@pytest.mark.parametrize("op", [WaveOperator.make(), DRIFT])
def test_c_norm_is_one(op):
    vals = [green.measure_c_norm(op, _layer(make_grid(h)), make_grid(h)) for h in (0.05, 0.025)]
    assert vals[0] == pytest.approx(green.C_NORM, abs=5e-4)
    assert vals[1] == pytest.approx(vals[0], abs=5e-4)


def test_layer_touching_inflow_is_rejected():
    g = make_grid(0.1)
    with pytest.raises(GreenError, match="inflow"):
        green.layer_trace(WaveOperator.make(), SingleLayer(np.ones(g.v.size)), g)


def test_single_layer_pairing():
    g = make_grid(0.05)
    assert _layer(g).pair(np.ones(g.v.size), g.h) == pytest.approx(1.5 * BUMP_MASS, rel=1e-6)
