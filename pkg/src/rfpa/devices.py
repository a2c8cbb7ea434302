"""Square-law NMOS device model and inductor loss conversion.

The transistor model is a level-1 square law with channel-length modulation
and Meyer-style gate capacitances.  It deliberately omits body effect and
subthreshold conduction: cutoff clamps the channel current to zero, which is
the mechanism that produces gain compression in the large-signal engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

CUTOFF = "cutoff"
TRIODE = "triode"
SATURATION = "saturation"


@dataclass(frozen=True)
class MosfetModelCard:
    """NMOS model parameters as named on `.model` netlist lines.

    kp:    transconductance parameter mu*Cox (A/V^2), keyword KP
    vt0:   threshold voltage (V), keyword VT0
    lam:   channel-length modulation (1/V), keyword LAMBDA
    cox:   gate-oxide capacitance density (F/m^2), keyword COX
    cgdo:  gate-drain overlap capacitance per width (F/m), keyword CGDO
    """

    kp: float
    vt0: float
    lam: float = 0.0
    cox: float = 0.0
    cgdo: float = 0.0

    def __post_init__(self) -> None:
        if self.kp <= 0.0:
            raise ValueError(f"KP must be > 0, got {self.kp}")
        if self.lam < 0.0:
            raise ValueError(f"LAMBDA must be >= 0, got {self.lam}")
        if self.cox < 0.0:
            raise ValueError(f"COX must be >= 0, got {self.cox}")
        if self.cgdo < 0.0:
            raise ValueError(f"CGDO must be >= 0, got {self.cgdo}")


@dataclass(frozen=True)
class OperatingPoint:
    """Solved bias point of one transistor."""

    vgs: float
    vds: float
    id: float
    region: str


@dataclass(frozen=True)
class SmallSignalModel:
    """Linearization of the square law at an operating point."""

    gm: float
    gds: float
    cgs: float
    cgd: float


def mosfet_region(card: MosfetModelCard, vgs: float, vds: float) -> str:
    """Classify the channel region for vds >= 0.

    The boundary vds == vgs - vt0 belongs to saturation, where the triode
    and saturation expressions agree in value.
    """
    if vgs <= card.vt0:
        return CUTOFF
    if vds < vgs - card.vt0:
        return TRIODE
    return SATURATION


def _channel(card: MosfetModelCard, weff: float, lg: float,
             vgs: float, vds: float) -> tuple[float, float, float, str]:
    """Drain current and its partials (id, gm, gds) for vds >= 0."""
    beta = card.kp * weff / lg
    region = mosfet_region(card, vgs, vds)
    if region == CUTOFF:
        return 0.0, 0.0, 0.0, region
    vov = vgs - card.vt0
    clm = 1.0 + card.lam * vds
    if region == TRIODE:
        core = vov * vds - 0.5 * vds * vds
        id_ = beta * core * clm
        gm = beta * vds * clm
        gds = beta * ((vov - vds) * clm + core * card.lam)
    else:
        id_ = 0.5 * beta * vov * vov * clm
        gm = beta * vov * clm
        gds = 0.5 * beta * vov * vov * card.lam
    return id_, gm, gds, region


def mosfet_dc_current(card: MosfetModelCard, weff: float, lg: float,
                      vgs: float, vds: float) -> tuple[float, str]:
    """Evaluate the square-law drain current.

    Args:
        card: model parameters.
        weff: effective width W*NF*M (m).
        lg: gate length (m).
        vgs, vds: terminal voltages (V), vds >= 0.

    Returns:
        (drain current in A, region label).
    """
    if weff <= 0.0 or lg <= 0.0:
        raise ValueError("device geometry must be positive")
    id_, _, _, region = _channel(card, weff, lg, vgs, vds)
    return id_, region


def mosfet_operating_point(card: MosfetModelCard, weff: float, lg: float,
                           vgs: float, vds: float) -> OperatingPoint:
    id_, region = mosfet_dc_current(card, weff, lg, vgs, vds)
    return OperatingPoint(vgs=vgs, vds=vds, id=id_, region=region)


def mosfet_small_signal(card: MosfetModelCard, weff: float, lg: float,
                        op: OperatingPoint) -> SmallSignalModel:
    """Linearize at `op` (re-evaluated internally from op.vgs/op.vds).

    gm and gds are the analytic partial derivatives of the regional current
    expression; capacitances follow the Meyer partition plus overlap.
    """
    if weff <= 0.0 or lg <= 0.0:
        raise ValueError("device geometry must be positive")
    _, gm, gds, region = _channel(card, weff, lg, op.vgs, op.vds)
    c_chan = weff * lg * card.cox
    c_ov = card.cgdo * weff
    if region == SATURATION:
        cgs = (2.0 / 3.0) * c_chan + c_ov
        cgd = c_ov
    elif region == TRIODE:
        cgs = 0.5 * c_chan + c_ov
        cgd = 0.5 * c_chan + c_ov
    else:
        cgs = c_ov
        cgd = c_ov
    return SmallSignalModel(gm=gm, gds=gds, cgs=cgs, cgd=cgd)


def inductor_parasitic_resistance(l: float, q: float, f_ref: float) -> float:
    """Series loss resistance of a finite-Q inductor: 2*pi*f_ref*L/Q.

    The result is treated as frequency independent everywhere downstream,
    which keeps DC, AC and transient analyses mutually consistent.
    """
    if l <= 0.0 or q <= 0.0 or f_ref <= 0.0:
        raise ValueError("L, Q and f_ref must all be positive")
    return 2.0 * math.pi * f_ref * l / q
