import math

import numpy as np
import pytest

from rfpa.devices import (CUTOFF, SATURATION, TRIODE, MosfetModelCard,
                          inductor_parasitic_resistance, mosfet_dc_current,
                          mosfet_operating_point, mosfet_small_signal)

CARD = MosfetModelCard(kp=200e-6, vt0=0.5, lam=0.1, cox=8.5e-3, cgdo=0.3e-9)
W, L = 100e-6, 1e-6   # Weff/Lg = 100


def test_threshold_boundary_is_cutoff():
    id_, region = mosfet_dc_current(CARD, W, L, 0.5, 1.0)
    assert id_ == 0.0
    assert region == CUTOFF


def test_saturation_closed_form():
    # 0.5 * 200e-6 * 100 * 0.25 * 1.18 = 2.95 mA
    id_, region = mosfet_dc_current(CARD, W, L, 1.0, 1.8)
    assert region == SATURATION
    assert id_ == pytest.approx(2.95e-3, rel=1e-12)


def test_region_boundary_continuity():
    vgs = 1.0
    vds = vgs - CARD.vt0
    id_sat, region = mosfet_dc_current(CARD, W, L, vgs, vds)
    assert region == SATURATION
    # evaluate the triode polynomial at the boundary by hand
    beta = CARD.kp * W / L
    vov = vgs - CARD.vt0
    id_tri = beta * (vov * vds - 0.5 * vds ** 2) * (1 + CARD.lam * vds)
    assert id_sat == pytest.approx(id_tri, rel=1e-12)


def test_zero_vds_zero_current():
    id_, _ = mosfet_dc_current(CARD, W, L, 1.2, 0.0)
    assert id_ == 0.0


def test_geometry_validation():
    with pytest.raises(ValueError):
        mosfet_dc_current(CARD, -1e-6, L, 1.0, 1.0)
    with pytest.raises(ValueError):
        mosfet_dc_current(CARD, W, 0.0, 1.0, 1.0)


def test_small_signal_closed_forms():
    op = mosfet_operating_point(CARD, W, L, 1.0, 1.8)
    ss = mosfet_small_signal(CARD, W, L, op)
    assert ss.gm == pytest.approx(11.8e-3, rel=1e-12)
    assert ss.gds == pytest.approx(0.25e-3, rel=1e-12)


def test_cutoff_small_signal():
    op = mosfet_operating_point(CARD, W, L, 0.3, 1.0)
    ss = mosfet_small_signal(CARD, W, L, op)
    assert ss.gm == 0.0 and ss.gds == 0.0
    assert ss.cgs == pytest.approx(CARD.cgdo * W)
    assert ss.cgd == pytest.approx(CARD.cgdo * W)


def test_capacitance_partition():
    c_chan = W * L * CARD.cox
    c_ov = CARD.cgdo * W
    sat = mosfet_small_signal(CARD, W, L,
                              mosfet_operating_point(CARD, W, L, 1.0, 1.8))
    assert sat.cgs == pytest.approx(2.0 / 3.0 * c_chan + c_ov, rel=1e-12)
    assert sat.cgd == pytest.approx(c_ov, rel=1e-12)
    tri = mosfet_small_signal(CARD, W, L,
                              mosfet_operating_point(CARD, W, L, 1.5, 0.3))
    assert tri.cgs == pytest.approx(0.5 * c_chan + c_ov, rel=1e-12)
    assert tri.cgd == pytest.approx(0.5 * c_chan + c_ov, rel=1e-12)


def _fd_derivatives(vgs, vds, h=1e-6):
    """Central finite differences of Id, the independent oracle for gm/gds."""
    gm = (mosfet_dc_current(CARD, W, L, vgs + h, vds)[0]
          - mosfet_dc_current(CARD, W, L, vgs - h, vds)[0]) / (2 * h)
    gds = (mosfet_dc_current(CARD, W, L, vgs, vds + h)[0]
           - mosfet_dc_current(CARD, W, L, vgs, vds - h)[0]) / (2 * h)
    return gm, gds


def test_derivatives_match_finite_differences():
    rng = np.random.default_rng(20240817)
    regions = {
        CUTOFF: lambda: (rng.uniform(-0.5, 0.45), rng.uniform(0.0, 1.8)),
        TRIODE: lambda: _triode_point(rng),
        SATURATION: lambda: _sat_point(rng),
    }
    for region, draw in regions.items():
        for _ in range(100):
            vgs, vds = draw()
            op = mosfet_operating_point(CARD, W, L, vgs, vds)
            assert op.region == region
            ss = mosfet_small_signal(CARD, W, L, op)
            gm_fd, gds_fd = _fd_derivatives(vgs, vds)
            assert ss.gm == pytest.approx(gm_fd, rel=1e-4, abs=1e-12)
            assert ss.gds == pytest.approx(gds_fd, rel=1e-4, abs=1e-12)


def _triode_point(rng):
    vgs = rng.uniform(0.7, 1.8)
    # keep a margin from both region boundaries so the finite-difference
    # stencil stays inside the region
    vds = rng.uniform(0.05, vgs - 0.5 - 0.05)
    return vgs, vds


def _sat_point(rng):
    vgs = rng.uniform(0.6, 1.5)
    vds = rng.uniform(vgs - 0.5 + 0.05, 2.5)
    return vgs, vds


def test_id_monotone_in_vgs():
    rng = np.random.default_rng(7)
    for _ in range(50):
        vds = rng.uniform(0.0, 2.0)
        grid = np.linspace(-0.2, 2.0, 200)
        ids = [mosfet_dc_current(CARD, W, L, vgs, vds)[0] for vgs in grid]
        assert all(b >= a - 1e-15 for a, b in zip(ids, ids[1:]))


def test_regions_partition_quadrant():
    rng = np.random.default_rng(11)
    for _ in range(500):
        vgs = rng.uniform(-1.0, 2.5)
        vds = rng.uniform(0.0, 3.0)
        _, region = mosfet_dc_current(CARD, W, L, vgs, vds)
        assert region in (CUTOFF, TRIODE, SATURATION)
        if vgs <= CARD.vt0:
            assert region == CUTOFF
        elif vds < vgs - CARD.vt0:
            assert region == TRIODE
        else:
            assert region == SATURATION


def test_model_card_validation():
    with pytest.raises(ValueError):
        MosfetModelCard(kp=0.0, vt0=0.5)
    with pytest.raises(ValueError):
        MosfetModelCard(kp=1e-4, vt0=0.5, lam=-0.1)


def test_inductor_parasitic_resistance():
    rs = inductor_parasitic_resistance(22e-9, 20.0, 2.4e9)
    assert rs == pytest.approx(2 * math.pi * 2.4e9 * 22e-9 / 20, rel=1e-15)
    assert rs == pytest.approx(16.59, abs=5e-3)
    rs4 = inductor_parasitic_resistance(400e-9, 20.0, 2.4e9)
    assert rs4 == pytest.approx(301.6, abs=5e-2)
    # Q -> infinity limit vanishes
    assert inductor_parasitic_resistance(22e-9, 1e12, 2.4e9) < 1e-9
    with pytest.raises(ValueError):
        inductor_parasitic_resistance(22e-9, 0.0, 2.4e9)
