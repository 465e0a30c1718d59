import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charcauchy.operators import WaveOperator
from charcauchy.propagation import (CharacteristicDatum, Inhomogeneity, JetType, PropagationError,
                                    cross_section, detect_support, jump_table, solve_propagation)

from conftest import bump_datum, make_grid

BUMP_MASS = 1.20690032243787617534


def _jets(op, grid, datum, F=None, n=6):
    F = F or Inhomogeneity.make()
    return (solve_propagation(op, datum, F, JetType.FUTURE, n, grid),
            solve_propagation(op, datum, F, JetType.PAST, n, grid))


@pytest.mark.parametrize("q", [0.5, 1.0, 3.0])
def test_klein_gordon_first_jump_closed_form(q):
    # 4 psi_1' = -q f, so the two zero-anchored solutions differ by (q/4) int f
    g = make_grid(0.05)
    fut, past = _jets(WaveOperator.make(q=q), g, bump_datum(g, 4.0, 1.5))
    table = jump_table(fut, past)
    assert table[0] == 0.0
    assert table[1] == pytest.approx(q / 4 * 1.5 * BUMP_MASS, rel=1e-6)
    assert fut.psi[1, -1] == pytest.approx(-q / 4 * 1.5 * BUMP_MASS, rel=1e-6)
    np.testing.assert_allclose(past.psi[1] - fut.psi[1], table[1], rtol=0, atol=1e-9)


def test_wave_operator_has_no_transverse_jets():
    g = make_grid(0.05)
    fut, past = _jets(WaveOperator.make(), g, bump_datum(g))
    assert np.all(fut.psi[1:] == 0) and np.all(past.psi[1:] == 0)
    assert np.all(jump_table(fut, past) == 0)


def test_future_and_past_jets_vanish_beyond_their_cross_sections():
    g = make_grid(0.05)
    fut, past = _jets(WaveOperator.make("0.3", "0.2*v", "1"), g, bump_datum(g))
    assert np.all(fut.psi[:, :fut.cross_index + 1] == 0)
    assert np.all(past.psi[:, past.cross_index:] == 0)
    assert fut.order == 6


def test_constant_drift_decay_oracle():
    # 4 psi_1' + A psi_1 = -q f with f supported left of v0: psi_1 decays like exp(-A (v - v0)/4)
    g = make_grid(0.025)
    op = WaveOperator.make(A="0.8", q="1")
    fut, _ = _jets(op, g, bump_datum(g, 3.0, 0.5), n=1)
    j0, j1 = g.v_index(4.0), g.v_index(6.0)
    ratio = fut.psi[1, j1] / fut.psi[1, j0]
    assert ratio == pytest.approx(np.exp(-0.8 * 2.0 / 4.0), rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2))
def test_propagation_is_linear_in_data(a, b):
    g = make_grid(0.1)
    op = WaveOperator.make("0.2", "0.1*cos(u + v)", "1 + u")
    f1, f2 = bump_datum(g, 4.0, 1.5), bump_datum(g, 3.5, 0.8)
    F1 = Inhomogeneity.make("bump(u, 0, 0.6)*bump(v, 4.5, 1)", (3.5, 5.5))
    F2 = Inhomogeneity.make()
    s1 = solve_propagation(op, f1, F1, "future", 4, g).psi
    s2 = solve_propagation(op, f2, F2, "future", 4, g).psi
    s = solve_propagation(op, f1.scaled(a) + f2.scaled(b), F1.scaled(a) + F2.scaled(b), "future", 4, g).psi
    np.testing.assert_allclose(s, a * s1 + b * s2, rtol=0, atol=1e-12 * (1 + np.max(np.abs(s))))


def test_source_jets_feed_the_tower():
    # F = u g(v): the order-1 equation picks up F_u = g
    g = make_grid(0.05)
    F = Inhomogeneity.make("u*bump(v, 4, 1)", (3.0, 5.0))
    fut = solve_propagation(WaveOperator.make(), CharacteristicDatum.zero(g), F, "future", 2, g)
    assert np.all(fut.psi[1] == 0)
    assert fut.psi[2, -1] == pytest.approx(BUMP_MASS / 4, rel=1e-5)


def test_infeasible_cross_section():
    g = make_grid(0.1)
    datum = CharacteristicDatum.from_coefficient(g, "bump(v, 1.5, 0.4)", (1.1, 1.9))
    with pytest.raises(PropagationError, match="infeasible"):
        cross_section(g, datum, Inhomogeneity.make(), JetType.FUTURE, margin=5)


def test_source_without_bounds_is_rejected():
    g = make_grid(0.1)
    with pytest.raises(PropagationError, match="v_bounds"):
        cross_section(g, bump_datum(g), Inhomogeneity.make("bump(u, 0, 0.5)"), JetType.FUTURE)


@pytest.mark.parametrize("n", [0, 13])
def test_jet_order_range(n):
    g = make_grid(0.1)
    with pytest.raises(PropagationError):
        solve_propagation(WaveOperator.make(), bump_datum(g), Inhomogeneity.make(), "future", n, g)


def test_detect_support():
    v = np.linspace(0.0, 10.0, 101)
    f = np.where((v > 2.95) & (v < 5.05), 1.0, 0.0)
    assert detect_support(f, v) == pytest.approx((3.0, 5.0))
    assert detect_support(np.zeros_like(v), v) is None
