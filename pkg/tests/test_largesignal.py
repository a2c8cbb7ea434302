import math

import numpy as np
import pytest

from rfpa.builtins import builtin_circuit
from rfpa.largesignal import (compute_pae, dbm_to_w, fundamental_power,
                              power_sweep_p1db, run_transient,
                              source_amplitude, steady_state, w_to_dbm)
from rfpa.mna import solve_dc
from rfpa.netlist import parse_netlist

RC_TAU = 1e3 * 1e-9


def test_fundamental_power_pure_sine():
    n = 256
    dt = 1.0 / (2.4e9 * n)
    k = np.arange(n)
    w = 1.0 * np.sin(2 * np.pi * k / n + 0.3)
    p = fundamental_power(w, dt, 2.4e9, 50.0)
    assert p == pytest.approx(0.01, abs=1e-12)
    assert w_to_dbm(p) == pytest.approx(10.0, abs=1e-9)


def test_fundamental_power_rejects_harmonics_and_dc():
    n = 256
    dt = 1.0 / (2.4e9 * n)
    k = np.arange(n)
    w = 0.7 + 1.0 * np.sin(2 * np.pi * k / n) \
        + 0.2 * np.sin(3 * 2 * np.pi * k / n + 1.0)
    assert fundamental_power(w, dt, 2.4e9, 50.0) == pytest.approx(0.01,
                                                                  abs=1e-12)
    dc_only = np.full(n, 1.3)
    assert fundamental_power(dc_only, dt, 2.4e9, 50.0) == pytest.approx(
        0.0, abs=1e-15)


def test_fundamental_power_exactness_64_points():
    rng = np.random.default_rng(5)
    for n in (64, 128, 500):
        dt = 1.0 / (1e9 * n)
        amp = float(rng.uniform(0.1, 3.0))
        ph = float(rng.uniform(0, 2 * math.pi))
        k = np.arange(n)
        w = amp * np.sin(2 * np.pi * k / n + ph)
        expect = amp * amp / (2 * 50.0)
        assert fundamental_power(w, dt, 1e9, 50.0) == pytest.approx(
            expect, rel=1e-12)


def test_fundamental_power_grid_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        fundamental_power(np.zeros(100), 1e-12, 2.4e9, 50.0)


def test_compute_pae_examples():
    assert compute_pae(10e-3, 1e-3, 135e-3) == pytest.approx(0.0666667,
                                                             rel=1e-5)
    assert compute_pae(5e-3, 5e-3, 0.1) == 0.0
    assert compute_pae(0.1, 0.0, 0.1) == 1.0
    with pytest.raises(ValueError):
        compute_pae(1e-3, 0.0, 0.0)


def test_available_power_amplitude_convention():
    # available power A^2 / (8 Z0)
    a = source_amplitude(dbm_to_w(0.0), 50.0)
    assert a * a / (8 * 50.0) == pytest.approx(1e-3, rel=1e-12)


def test_rc_step_matches_analytic():
    c = builtin_circuit("fixture_rc_step")
    dc = solve_dc(c)
    tr = run_transient(c, dc, tstop=5 * RC_TAU, dt=RC_TAU / 1000)
    analytic = 1.8 * (1.0 - np.exp(-tr.times / RC_TAU))
    assert np.max(np.abs(tr.voltage("out") - analytic)) <= 1e-4


def test_rc_step_second_order_convergence():
    c = builtin_circuit("fixture_rc_step")
    dc = solve_dc(c)

    def max_err(dt):
        tr = run_transient(c, dc, tstop=5 * RC_TAU, dt=dt)
        analytic = 1.8 * (1.0 - np.exp(-tr.times / RC_TAU))
        return np.max(np.abs(tr.voltage("out") - analytic))

    ratio = max_err(RC_TAU / 1000) / max_err(RC_TAU / 2000)
    assert 3.5 <= ratio <= 4.5


def test_resistive_divider_tracks_sine_exactly():
    text = """* memoryless divider
V1 in 0 DC 0 SIN(1 10Meg 0)
R1 in out 300
R2 out 0 100
"""
    c = parse_netlist(text)
    dc = solve_dc(c)
    for dt in (1e-9, 2.5e-9):
        tr = run_transient(c, dc, tstop=2e-7, dt=dt)
        expect = 0.25 * np.sin(2 * np.pi * 10e6 * tr.times)
        assert np.max(np.abs(tr.voltage("out") - expect)) < 1e-9


def test_run_transient_validates_grid():
    c = builtin_circuit("fixture_rc_step")
    dc = solve_dc(c)
    with pytest.raises(ValueError):
        run_transient(c, dc, tstop=5e-9, dt=1e-9)


def test_steady_state_fast_rc():
    text = """* rc, time constant well under the period
V1 in 0 DC 0 SIN(1 1e6 0)
R1 in out 1k
C1 out 0 10p
"""
    c = parse_netlist(text)
    ss = steady_state(c, solve_dc(c), 1e6, dt_per_period=128, max_periods=50)
    assert ss.converged_to_periodic
    assert ss.periods_run <= 3
    # repeatable period count
    again = steady_state(c, solve_dc(c), 1e6, dt_per_period=128,
                         max_periods=50)
    assert again.periods_run == ss.periods_run


def test_steady_state_autonomous_converges_first_period():
    c = builtin_circuit("fixture_divider")
    ss = steady_state(c, solve_dc(c), 1e6, dt_per_period=64, max_periods=10)
    assert ss.converged_to_periodic
    assert ss.periods_run == 1
    assert np.allclose(ss.voltage("n2"), 0.9, atol=1e-9)


def test_steady_state_slow_choke_flag_is_honest():
    c = builtin_circuit("fixture_slow_choke")
    dc = solve_dc(c)
    short = steady_state(c, dc, 2.4e9, dt_per_period=64, max_periods=25)
    assert not short.converged_to_periodic
    long = steady_state(c, dc, 2.4e9, dt_per_period=64, max_periods=2000)
    assert long.converged_to_periodic


def test_steady_state_validates_inputs():
    c = builtin_circuit("fixture_divider")
    dc = solve_dc(c)
    with pytest.raises(ValueError):
        steady_state(c, dc, 0.0)
    with pytest.raises(ValueError):
        steady_state(c, dc, 1e6, dt_per_period=32)


def test_energy_balance_passive_network():
    """Average source power equals total resistor dissipation to 0.1%."""
    text = """* driven RLC
V1 in 0 DC 0 SIN(1 50Meg 0)
R1 in a 75
L1 a out 80n
C1 out 0 30p
R2 out 0 120
"""
    c = parse_netlist(text)
    dc = solve_dc(c)
    ss = steady_state(c, dc, 50e6, dt_per_period=256, max_periods=400)
    assert ss.converged_to_periodic
    t = ss.times[:-1]
    vin = ss.voltage("in")[:-1]
    va = ss.voltage("a")[:-1]
    vout = ss.voltage("out")[:-1]
    i_r1 = (vin - va) / 75.0
    p_r1 = np.mean((vin - va) ** 2 / 75.0)
    p_r2 = np.mean(vout ** 2 / 120.0)
    p_src = np.mean(vin * i_r1)   # all source current flows through R1
    assert p_src == pytest.approx(p_r1 + p_r2, rel=1e-3)


def test_p1db_matches_describing_function_oracle():
    """Cubic y = 10x - x^3: fundamental gain 10 - 7.5 A^2 / ... gives the
    closed-form 1 dB input compression at A^2 = 0.145 * a1 / |a3|."""
    a1, a3 = 10.0, 1.0
    a_sq = 0.145 * a1 / a3
    pin_oracle_dbm = 10.0 * math.log10(a_sq / (2 * 50.0) / 1e-3)
    rep = power_sweep_p1db(builtin_circuit("fixture_cubic_amp"), 2.4e9,
                           -14.0, 16.0, 1.0, max_periods=50)
    assert rep.compressed
    assert abs(rep.p1db_in_dbm - pin_oracle_dbm) <= 0.05
    assert rep.small_signal_gain_db == pytest.approx(20.0, abs=0.01)
    assert rep.p1db_out_dbm == pytest.approx(
        rep.p1db_in_dbm + rep.small_signal_gain_db - 1.0, abs=1e-9)


def test_p1db_gain_at_crossing_is_one_db_down():
    rep = power_sweep_p1db(builtin_circuit("fixture_cubic_amp"), 2.4e9,
                           -14.0, 16.0, 1.0, max_periods=50)
    from rfpa.largesignal import _sweep_point
    point = _sweep_point(builtin_circuit("fixture_cubic_amp"), 2.4e9,
                         rep.p1db_in_dbm, 256, 50, None)
    assert point.gain_db == pytest.approx(rep.small_signal_gain_db - 1.0,
                                          abs=0.01)


def test_linear_circuit_never_compresses():
    rep = power_sweep_p1db(builtin_circuit("fixture_linear_amp"), 2.4e9,
                           -14.0, 10.0, 1.0, max_periods=50)
    assert not rep.compressed
    assert rep.p1db_in_dbm is None
    gains = [p.gain_db for p in rep.sweep]
    assert max(gains) - min(gains) < 1e-6


def test_sweep_validates_inputs():
    c = builtin_circuit("fixture_cubic_amp")
    with pytest.raises(ValueError):
        power_sweep_p1db(c, 2.4e9, -10.0, 10.0, 2.0)
    with pytest.raises(ValueError):
        power_sweep_p1db(c, 2.4e9, 10.0, -10.0, 1.0)
