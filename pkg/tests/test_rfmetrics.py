import math

import numpy as np
import pytest

from rfpa.builtins import builtin_circuit
from rfpa.netlist import Capacitor, Circuit, Component, Inductor, Port, Resistor
from rfpa.rfmetrics import (TwoPortPoint, TwoPortSet, extract_s_parameters,
                            gain_metrics, rollett_stability)

GRID = list(np.linspace(1e9, 3e9, 201))


def spoint(s11, s12, s21, s22, freq=2.4e9):
    return TwoPortPoint(freq=freq,
                        s=np.array([[s11, s12], [s21, s22]], dtype=complex),
                        z0=50.0)


def test_series_resistor_closed_form():
    s = extract_s_parameters(builtin_circuit("fixture_series_r"), GRID)
    for pt in s.points:
        assert pt.s[0, 0] == pytest.approx(1.0 / 3.0, abs=1e-9)
        assert pt.s[1, 0] == pytest.approx(2.0 / 3.0, abs=1e-9)
        assert pt.s[0, 1] == pytest.approx(2.0 / 3.0, abs=1e-9)
        assert pt.s[1, 1] == pytest.approx(1.0 / 3.0, abs=1e-9)


def test_shunt_resistor_closed_form():
    s = extract_s_parameters(builtin_circuit("fixture_shunt_r"), GRID)
    for pt in s.points:
        assert pt.s[0, 0] == pytest.approx(-1.0 / 3.0, abs=1e-9)
        assert pt.s[1, 0] == pytest.approx(2.0 / 3.0, abs=1e-9)


def test_thru_closed_form():
    s = extract_s_parameters(builtin_circuit("fixture_thru"), GRID)
    for pt in s.points:
        assert abs(pt.s[0, 0]) <= 1e-9
        assert pt.s[1, 0] == pytest.approx(1.0, abs=1e-9)


def test_rollett_hand_fixture():
    r = rollett_stability(spoint(0.5, 0.1, 2.0, 0.3))
    assert r.k == pytest.approx(1.65625, abs=1e-12)
    assert r.delta_mag == pytest.approx(0.05, abs=1e-12)
    assert r.unconditionally_stable


def test_rollett_ideal_thru_marginal():
    r = rollett_stability(spoint(0.0, 1.0, 1.0, 0.0))
    assert r.k == pytest.approx(1.0, abs=1e-12)
    assert r.delta_mag == pytest.approx(1.0, abs=1e-12)
    assert not r.unconditionally_stable


def test_rollett_attenuator():
    r = rollett_stability(spoint(0.0, 0.5, 0.5, 0.0))
    assert r.k == pytest.approx(2.125, abs=1e-12)
    assert r.unconditionally_stable


def test_rollett_unilateral_sentinel():
    r = rollett_stability(spoint(0.2, 0.0, 3.0, 0.1))
    assert math.isinf(r.k)
    assert r.unilateral
    assert r.unconditionally_stable  # |Delta| = 0.02 < 1


def test_gain_metrics():
    g = gain_metrics(spoint(10 ** -0.5, 0.0, 10 ** 0.5, 0.0))
    assert g.s21_db == pytest.approx(10.0, abs=1e-12)
    assert g.s11_db == pytest.approx(-10.0, abs=1e-12)
    assert g.transducer_gain_db == g.s21_db
    thru = gain_metrics(spoint(0.0, 1.0, 1.0, 0.0))
    assert thru.s21_db == 0.0
    assert math.isinf(thru.s11_db) and thru.s11_db < 0


def random_passive_two_port(rng) -> Circuit:
    """Random RLC ladder between the two port nodes."""
    n_mid = int(rng.integers(0, 3))
    nodes = ["p1"] + [f"m{k}" for k in range(n_mid)] + ["p2"]
    comps = []
    idx = 0

    def element(a, b):
        nonlocal idx
        idx += 1
        kind = int(rng.integers(0, 3))
        if kind == 0:
            return Component(f"R{idx}", Resistor(float(rng.uniform(5, 500))),
                             (a, b))
        if kind == 1:
            return Component(f"L{idx}",
                             Inductor(float(rng.uniform(0.5, 30)) * 1e-9,
                                      q=20.0), (a, b))
        return Component(f"C{idx}",
                         Capacitor(float(rng.uniform(0.1, 20)) * 1e-12),
                         (a, b))

    for a, b in zip(nodes, nodes[1:]):
        comps.append(element(a, b))
        if rng.uniform() < 0.7:
            comps.append(element(b, "0"))
    if rng.uniform() < 0.5:
        comps.append(element("p1", "0"))
    return Circuit(name="random_passive", components=tuple(comps),
                   ports=(Port(1, "p1", "0"), Port(2, "p2", "0")))


def test_reciprocity_and_passivity_random_two_ports():
    rng = np.random.default_rng(20240818)
    freqs = [1.0e9, 1.5e9, 2.2e9, 2.7e9, 3.0e9]
    for _ in range(100):
        circuit = random_passive_two_port(rng)
        s = extract_s_parameters(circuit, freqs)
        for pt in s.points:
            assert abs(pt.s[0, 1] - pt.s[1, 0]) <= 1e-9
            sv = np.linalg.svd(pt.s, compute_uv=False)
            assert sv.max() <= 1.0 + 1e-9


def test_port_relabeling_transposes_s():
    rng = np.random.default_rng(99)
    circuit = random_passive_two_port(rng)
    swapped = Circuit(name=circuit.name, components=circuit.components,
                      ports=(Port(1, "p2", "0"), Port(2, "p1", "0")))
    s = extract_s_parameters(circuit, [1.7e9, 2.4e9])
    t = extract_s_parameters(swapped, [1.7e9, 2.4e9])
    exchange = np.array([[0.0, 1.0], [1.0, 0.0]])
    for a, b in zip(s.points, t.points):
        assert np.allclose(b.s, exchange @ a.s @ exchange, atol=1e-12)


def test_extraction_matches_lumped_closed_form():
    """Series L + shunt C network against its ABCD-derived S-parameters."""
    l_val, c_val = 5e-9, 1.2e-12
    circuit = Circuit(
        name="lc",
        components=(
            Component("L1", Inductor(l_val), ("p1", "p2")),
            Component("C1", Capacitor(c_val), ("p2", "0")),
        ),
        ports=(Port(1, "p1", "0"), Port(2, "p2", "0")))
    s = extract_s_parameters(circuit, GRID)
    z0 = 50.0
    for pt in s.points:
        w = 2 * math.pi * pt.freq
        a, b = 1 + 1j * w * l_val * (1j * w * c_val), 1j * w * l_val
        c, d = 1j * w * c_val, 1.0
        denom = a + b / z0 + c * z0 + d
        s11 = (a + b / z0 - c * z0 - d) / denom
        s21 = 2.0 / denom
        s12 = 2.0 * (a * d - b * c) / denom
        s22 = (-a + b / z0 - c * z0 + d) / denom
        assert pt.s[0, 0] == pytest.approx(s11, rel=1e-9, abs=1e-12)
        assert pt.s[1, 0] == pytest.approx(s21, rel=1e-9, abs=1e-12)
        assert pt.s[0, 1] == pytest.approx(s12, rel=1e-9, abs=1e-12)
        assert pt.s[1, 1] == pytest.approx(s22, rel=1e-9, abs=1e-12)


def test_two_port_set_invariants():
    pt = spoint(0.1, 0.2, 0.2, 0.1)
    with pytest.raises(ValueError, match="strictly increasing"):
        TwoPortSet(points=(pt, pt))
    other = TwoPortPoint(freq=3e9, s=pt.s, z0=75.0)
    with pytest.raises(ValueError, match="reference impedance"):
        TwoPortSet(points=(pt, other))


def test_extraction_rejects_bad_grids():
    c = builtin_circuit("fixture_thru")
    with pytest.raises(ValueError):
        extract_s_parameters(c, [])
    with pytest.raises(ValueError):
        extract_s_parameters(c, [2e9, 1e9])
    with pytest.raises(ValueError):
        extract_s_parameters(builtin_circuit("fixture_divider"), [1e9])
