"""Two-element L-match synthesis and ladder impedance evaluation.

Synthesis handles real source and load resistances; complex terminations
are absorbed by the caller before synthesis.  Elements are lossless; the
shipped amplifier netlists substitute finite-Q inductors afterwards and
the regression suite measures the resulting match degradation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SERIES_L_SHUNT_C = "series_L_shunt_C"   # lowpass form
SERIES_C_SHUNT_L = "series_C_shunt_L"   # highpass form
SERIES_FIRST = "series_first"           # series element on the source side
SHUNT_FIRST = "shunt_first"


@dataclass(frozen=True)
class ReactiveElement:
    kind: str       # "L" or "C"
    value: float    # henries or farads

    def impedance(self, f: float) -> complex:
        w = 2.0 * math.pi * f
        if self.kind == "L":
            return 1j * w * self.value
        return 1.0 / (1j * w * self.value)


@dataclass(frozen=True)
class LMatch:
    """Synthesized two-element match between two real resistances.

    `series` sits on the low-resistance side, `shunt` across the
    high-resistance side; `orientation` records which side faces the
    source.  Both elements are None for the degenerate equal-R case.
    """

    topology: str
    orientation: str
    f0: float
    qm: float
    series_x: float       # signed reactance of the series element at f0
    shunt_x: float        # signed reactance of the shunt element at f0
    series: ReactiveElement | None
    shunt: ReactiveElement | None

    @property
    def is_empty(self) -> bool:
        return self.series is None and self.shunt is None


def synthesize_l_match(r_source: float, r_load: float, f0: float,
                       topology: str = SERIES_L_SHUNT_C) -> LMatch:
    """Design the L-match that presents r_source looking into the network
    terminated in r_load, exact at f0.

    Qm = sqrt(Rhigh/Rlow - 1); the series element carries |X| = Qm*Rlow,
    the shunt element |X| = Rhigh/Qm.
    """
    if r_source <= 0.0 or r_load <= 0.0 or f0 <= 0.0:
        raise ValueError("resistances and frequency must be positive")
    if topology not in (SERIES_L_SHUNT_C, SERIES_C_SHUNT_L):
        raise ValueError(f"unknown topology {topology!r}")

    orientation = SERIES_FIRST if r_source <= r_load else SHUNT_FIRST
    if r_source == r_load:
        return LMatch(topology=topology, orientation=orientation, f0=f0,
                      qm=0.0, series_x=0.0, shunt_x=0.0,
                      series=None, shunt=None)

    r_low, r_high = min(r_source, r_load), max(r_source, r_load)
    qm = math.sqrt(r_high / r_low - 1.0)
    x_series = qm * r_low
    x_shunt = r_high / qm
    w0 = 2.0 * math.pi * f0

    if topology == SERIES_L_SHUNT_C:
        series = ReactiveElement("L", x_series / w0)
        shunt = ReactiveElement("C", 1.0 / (w0 * x_shunt))
        series_x, shunt_x = x_series, -x_shunt
    else:
        series = ReactiveElement("C", 1.0 / (w0 * x_series))
        shunt = ReactiveElement("L", x_shunt / w0)
        series_x, shunt_x = -x_series, x_shunt

    return LMatch(topology=topology, orientation=orientation, f0=f0, qm=qm,
                  series_x=series_x, shunt_x=shunt_x,
                  series=series, shunt=shunt)


def input_impedance(network: LMatch, termination: complex, f: float) -> complex:
    """Ladder evaluation of the match terminated in `termination`.

    Serves as the synthesis oracle: at f0, the synthesized match
    terminated in r_load presents r_source.
    """
    if f <= 0.0:
        raise ValueError("frequency must be positive")
    z = complex(termination)
    if network.is_empty:
        return z
    if network.orientation == SERIES_FIRST:
        # source -> series element -> (shunt element || termination)
        z = _parallel(network.shunt.impedance(f), z)
        z = network.series.impedance(f) + z
    else:
        # source -> (shunt element || (series element + termination))
        z = network.series.impedance(f) + z
        z = _parallel(network.shunt.impedance(f), z)
    return z


def reflection_coefficient(z_in: complex, z_ref: float) -> complex:
    return (z_in - z_ref) / (z_in + z_ref)


def _parallel(a: complex, b: complex) -> complex:
    return a * b / (a + b)
