import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charcauchy import _accel
from charcauchy import verify as vf
from charcauchy.geometry import CausalRegion
from charcauchy.operators import GridField, WaveOperator
from charcauchy.propagation import Inhomogeneity
from charcauchy.solver import SolverConfig, solve

from conftest import bump_datum, make_grid

DRIFT = WaveOperator.make("0.3", "0.2*cos(u + v)", "0.5")


def test_battery_is_seeded_and_grid_independent():
    a = vf.make_battery(make_grid(0.1), 20, seed=3)
    b = vf.make_battery(make_grid(0.025), 20, seed=3)
    c = vf.make_battery(make_grid(0.1), 20, seed=4)
    assert a.members == b.members
    assert a.members != c.members
    assert len(a.members) == 20


def test_battery_supports_clear_the_boundary():
    g = make_grid(0.05)
    for chi in vf.make_battery(g, 20, seed=0).members:
        x = chi.values(g).values
        assert np.all(x[:3] == 0) and np.all(x[-3:] == 0) and np.all(x[:, :3] == 0) and np.all(x[:, -3:] == 0)


def test_battery_needs_room_for_the_ring():
    with pytest.raises(vf.VerificationError):
        vf.make_battery(make_grid(0.25), 5, seed=0, v_margin=0.3)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_test_function_derivatives_match_differences(seed):
    chi = vf.make_battery(make_grid(0.1), 1, seed=seed).members[0]
    u0, v0 = chi.uc + 0.3 * chi.wu, chi.vc - 0.2 * chi.wv
    e = 1e-4
    d = chi.derivatives(u0, v0)
    f = lambda u, v: float(chi.derivatives(u, v)["chi"])
    scale = max(1.0, max(abs(float(x)) for x in d.values()))
    assert float(d["u"]) == pytest.approx((f(u0 + e, v0) - f(u0 - e, v0)) / (2 * e), abs=1e-5 * scale)
    assert float(d["v"]) == pytest.approx((f(u0, v0 + e) - f(u0, v0 - e)) / (2 * e), abs=1e-5 * scale)
    uv = (f(u0 + e, v0 + e) - f(u0 + e, v0 - e) - f(u0 - e, v0 + e) + f(u0 - e, v0 - e)) / (4 * e * e)
    assert float(d["uv"]) == pytest.approx(uv, abs=1e-3 * scale)


@pytest.mark.parametrize("region", [CausalRegion.JMINUS, CausalRegion.JPLUS])
def test_jump_formula_and_T_identity_are_small(region):
    g = make_grid(0.05)
    battery = vf.make_battery(g, 8, seed=0)
    phi = vf.make_battery(g, 1, seed=1).members[0].values(g)
    assert vf.verify_jump_formula(DRIFT, region, phi, battery)["max_residual"] <= g.h**2
    assert vf.verify_T_identity(DRIFT, phi, battery, region)["max_residual"] <= g.h**2


def test_expansion_term_is_needed_on_a_warped_measure():
    g = make_grid(0.05, u_halfwidth=0.8)
    battery = vf.make_battery(g, 8, seed=0)
    phi = vf.make_battery(g, 1, seed=1).members[0].values(g)
    out = vf.verify_T_identity(WaveOperator.make(q=1), phi, battery, rho="((v - u)/2)^2")
    assert out["max_residual"] <= 10 * g.h**2
    assert out["max_residual_without_expansion"] > 10 * out["max_residual"]


def test_second_jump_is_consistent_with_the_T_identity():
    g = make_grid(0.05)
    battery = vf.make_battery(g, 8, seed=0)
    out = vf.verify_second_jump(WaveOperator.make(q=1), bump_datum(g), battery, g)
    assert out["consistency"] <= g.h**2
    assert out["extension_spread"] <= 1e-12


def test_equivariance_pairing():
    g = make_grid(0.05)
    battery = vf.make_battery(g, 8, seed=0)
    out = vf.verify_equivariance(WaveOperator.make(B="0.2*v", q=1), 4.0, bump_datum(g).f, battery, g)
    assert out["max_rel_error"] <= 1e-10


@pytest.mark.parametrize("lam", [0.0, -2.0])
def test_equivariance_requires_positive_lambda(lam):
    g = make_grid(0.1)
    with pytest.raises(vf.VerificationError, match="positive"):
        vf.verify_equivariance(WaveOperator.make(), lam, bump_datum(g).f, vf.make_battery(g, 2), g)


def test_equivariance_rejects_transverse_drift():
    g = make_grid(0.1)
    with pytest.raises(vf.VerificationError, match="tangent"):
        vf.verify_equivariance(WaveOperator.make(A="0.1"), 4.0, bump_datum(g).f, vf.make_battery(g, 2), g)


def test_distributional_residual_of_a_solution():
    g = make_grid(0.05)
    sol = solve(DRIFT, bump_datum(g), Inhomogeneity.make(), g, SolverConfig(), "rendall")
    out = vf.distributional_residual(sol, DRIFT, None, vf.make_battery(g, 8))
    assert out["max_normalised"] <= 10 * g.h**2


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_observed_orders_oracle(p):
    h = [0.1, 0.05, 0.025]
    np.testing.assert_allclose(vf.observed_orders(h, [3.0 * x**p for x in h]), p)


def test_convergence_study_needs_three_levels():
    with pytest.raises(vf.VerificationError):
        vf.convergence_study(lambda h: h, [0.1, 0.05])
    out = vf.convergence_study(lambda h: h**2, [0.025, 0.1, 0.05])
    assert out["monotone"] and [r["h"] for r in out["rows"]] == [0.1, 0.05, 0.025]


def test_restrict_samples_coarse_nodes():
    fine, coarse = make_grid(0.025), make_grid(0.05)
    uu, vv = fine.nodes
    cu, cv = coarse.nodes
    out = vf.restrict(GridField(fine, uu * 10 + vv), coarse)
    np.testing.assert_allclose(out, cu * 10 + cv, atol=1e-12)


def test_ordered_map_keeps_order(monkeypatch):
    monkeypatch.setenv("CHARCAUCHY_THREADS", "3")
    assert _accel.max_workers() == 3
    assert vf.ordered_map(lambda x: x * x, range(50)) == [x * x for x in range(50)]
    monkeypatch.setenv("CHARCAUCHY_THREADS", "1")
    assert vf.ordered_map(lambda x: -x, [1, 2]) == [-1, -2]


def test_linearity_and_gain():
    g = make_grid(0.1)
    op = WaveOperator.make(q=1)
    f1, f2 = bump_datum(g), bump_datum(g, 3.5, 0.8)
    zero = Inhomogeneity.make()
    assert vf.linearity_check(op, (f1, f2), (zero, zero), g) <= 1e-12
    k = vf.data_gain(op, [lambda v: np.exp(-((v - 4.0) / 0.5) ** 2) * (np.abs(v - 4) < 2)], g)
    assert 0 < k < 10
