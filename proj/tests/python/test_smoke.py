"""Smoke tests for the python module: a thin pass over each submodule."""

import math

import pytest

try:
    import feemarket as fm
except ImportError:
    import _feemarket as fm


def params(**kw):
    base = dict(arrival_rate=1.2, capacity=1.0, operating_cost=0.3)
    base.update(kw)
    return fm.MarketParams(**base)


def test_uc_closed_forms():
    p = params()
    assert fm.uc.equilibrium_bid(0.0, p) == 0.0
    assert abs(fm.uc.equilibrium_bid(1.0, p) - 0.40382159104798042) < 1e-8
    assert abs(fm.uc.user_welfare(p) - 0.48832952946500831) < 1e-9
    assert abs(fm.uc.miner_revenue(p) - 0.21047625862278959) < 1e-9
    curve = fm.uc.sample_bid_curve(p, 5.0, 50)
    assert len(curve.grid) == 50 and curve.values[0] == 0.0


def test_eo_solution():
    rep = fm.eo.solve(params())
    assert rep.t_E.is_finite and abs(rep.t_E.value - 0.676) < 0.005
    assert rep.t_O.is_finite and abs(rep.t_O.value - 0.4714) < 0.002
    assert abs(rep.y_O - 0.1555) < 0.003
    assert rep.sw_at_tO >= rep.sw_at_tE

    never = fm.eo.equilibrium_threshold(params(block_reward=0.5))
    assert not never.is_finite and never == fm.ThresholdTime.never_suspend()


def test_eo_sweep():
    table = fm.eo.sweep(params(), fm.eo.SweepParameter.block_reward,
                        [0.0, 0.05, 0.1, 0.15], threads=2)
    values = [row.t_E.value for row in table.rows]
    assert all(row.valid for row in table.rows)
    assert values == sorted(values, reverse=True)


def test_simulation_reproducible():
    cfg = fm.sim.SimConfig(n_blocks=20000, dt=1e-3, rs=fm.RandomSource(seed=7))
    a = fm.sim.simulate_uc(params(), cfg)
    b = fm.sim.simulate_uc(params(), cfg)
    assert a.user_welfare_hat == b.user_welfare_hat
    assert abs(a.user_welfare_hat - 0.48832952946500831) < 0.01
    assert a.ks_distance <= 0.02
    assert abs(sum(a.hist_mass) - 1.0) < 1e-9


def test_best_response_scan():
    scan = fm.sim.best_response_scan(1.0, fm.ThresholdTime.never_suspend(), params(), 2001)
    assert abs(scan.argmax_s) <= (1.0 + 1.0) / 2000 + 1e-12


def test_patient_model():
    p = params(discount_rate=1.0)
    grid = [-6.0 + 0.02 * i for i in range(401)]
    curve = fm.patient.estimate_wtilde(p, grid, 50000, fm.RandomSource(seed=7))
    assert abs(curve.estimate[0] - 1.2 / 2.2) <= 3 * curve.std_error[0] + 1e-12
    rep = fm.patient.wtilde_ode_residual(curve, p, 0.05)
    assert rep.pass_fraction >= 0.95
    bid = fm.patient.patient_bid(1.0, curve)
    assert 0.0 < bid < 1.0


def test_numerics():
    root = fm.bisect(lambda x: x * math.exp(-1.2 * (1 - x)) - 0.25, 0.0, 1.0)
    assert abs(root - 0.471422258624428) < 1e-8
    one = fm.integrate(lambda x: 1.0, 0.0, 1.0)
    assert abs(one - 1.0) < 1e-10
    rng = fm.Pcg32(fm.RandomSource(seed=42))
    draws = [fm.sample_exponential(rng, 2.0) for _ in range(20000)]
    assert abs(sum(draws) / len(draws) - 0.5) < 0.02


def test_errors_raise():
    with pytest.raises(Exception, match="DOMAIN"):
        fm.eo.equilibrium_bid(0.5, fm.ThresholdTime.finite(1.0), params())
    with pytest.raises(Exception, match="BAD_CONFIG"):
        fm.MarketParams(arrival_rate=-1.0)
