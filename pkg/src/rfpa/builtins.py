"""Bundled reference circuits and oracle fixtures.

The three amplifier netlists are this repo's canonical realization of the
2.4 GHz two-stage class-AB design: the published figures underdetermine
the exact schematic, so these netlists are the authoritative reference.
Rails are 1.8 V with explicit tuned gate-bias sources; every component
value from the published tables appears verbatim.  Elements beyond the
tables carry distinct prefixes: L../C.. matching and bias-feed parts
(LIN input shunt match, LB bias chokes, LT/CT the tapped-capacitor
resonator that drives the wide output device, LCH/CCH the resonated
low-loss drain choke) and RBL bleed resistors that give DC-blocked port
nodes a defined bias.
"""

from __future__ import annotations

from .netlist import (Circuit, Component, PolyVcvs, Port, Resistor,
                      parse_netlist)

_MODEL_LINE = (".model nch NMOS KP=200u VT0=0.5 LAMBDA=0.1 "
               "COX=8.5m CGDO=0.3n")

# Input chain: shunt LIN plus the series-resonant C1+L1 pair (resonant at
# 2.4 GHz) match the gate; R1 in series keeps the driver gate termination
# resistive at all frequencies.  L2 is the drain choke, R3/MQ3 the
# class-AB reference branch mirrored by the VG1 rail.
DRIVER_STAGE = f"""* driver stage, 2.4 GHz class AB
{_MODEL_LINE}
VDD vdd 0 DC 1.8
VG1 nb1 0 DC 1.06
LIN in 0 7.7n Q=20
C1 in na 200f
L1 na ng 22n Q=20
R1 ng g1 14.5
LB1 nb1 g1 50n Q=20
MQ2 d1 g1 0 nch W=4.8u L=1u NF=16 M=12
L2 vdd d1 15n Q=20
R3 vdd nx 13k
MQ3 nx nx 0 nch W=0.3u L=1u
C2 d1 out 10p
RBL out 0 100k
.port 1 in 0
.port 2 out 0
.supply VDD
.end
"""

# The output device's gate capacitance is large enough that matching into
# it directly is hopeless; LT2/CT2 form a tapped-capacitor resonator that
# recirculates the gate current while the gate itself always sees a
# capacitive termination (which keeps the stage unconditionally stable).
# L3 is the input-side shunt match and DC return, L4+R2 the zero-current
# gate-bias feed, LCH/CCH a resonated low-loss drain choke that preserves
# voltage headroom, R5/MQ5 the bias reference branch.
OUTPUT_STAGE = f"""* output stage, 2.4 GHz class AB
{_MODEL_LINE}
VDD vdd 0 DC 1.8
VG2 nb2 0 DC 1.47
L3 in2 0 15n Q=20
C6 in2 nt 800f
LT2 nt 0 0.5n Q=20
CT2 nt g2 17p
L4 nb2 ng2 400n Q=20
R2 ng2 g2 22.2
MQ4 d2 g2 0 nch W=4.8u L=3u NF=16 M=12
LCH vdd d2 4n Q=20
CCH d2 0 0.7p
C7 d2 out2 20p
RBL out2 0 100k
R5 vdd ny 7k
MQ5 ny ny 0 nch W=0.3u L=1.2u
.port 1 in2 0
.port 2 out2 0
.supply VDD
.end
"""

# Both stages on one 1.8 V rail; C2 couples the driver drain into the
# interstage node, where L3 provides the DC return and LT2/CT2 the tapped
# resonator into the output gate.
TWO_STAGE_PA = f"""* two-stage 2.4 GHz class AB PA
{_MODEL_LINE}
VDD vdd 0 DC 1.8
VG1 nb1 0 DC 1.06
VG2 nb2 0 DC 1.47
* driver
LIN in 0 7.7n Q=20
C1 in na 200f
L1 na ng 22n Q=20
R1 ng g1 14.5
LB1 nb1 g1 50n Q=20
MQ2 d1 g1 0 nch W=4.8u L=1u NF=16 M=12
L2 vdd d1 15n Q=20
R3 vdd nx 13k
MQ3 nx nx 0 nch W=0.3u L=1u
* interstage
C2 d1 n12 10p
L3 n12 0 15n Q=20
C6 n12 nt 800f
LT2 nt 0 0.5n Q=20
CT2 nt g2 17p
* output stage
L4 nb2 ng2 400n Q=20
R2 ng2 g2 22.2
MQ4 d2 g2 0 nch W=4.8u L=3u NF=16 M=12
LCH vdd d2 4n Q=20
CCH d2 0 0.7p
C7 d2 out 20p
RBL out 0 100k
R5 vdd ny 7k
MQ5 ny ny 0 nch W=0.3u L=1.2u
.port 1 in 0
.port 2 out 0
.supply VDD
.end
"""

FIXTURE_DIVIDER = """* resistive divider on a 1.8 V rail
VS n1 0 DC 1.8
RA n1 n2 1k
RB n2 0 1k
.supply VS
.end
"""

# Diode-connected device, Weff/Lg = 100, fed from 1.8 V through 1 kOhm;
# the bias point solves a scalar square-law equation.
FIXTURE_DIODE_MOSFET = """* diode-connected MOSFET bias cell
.model nch NMOS KP=200u VT0=0.5 LAMBDA=0.1
VS n1 0 DC 1.8
RD n1 n2 1k
MD n2 n2 0 nch W=100u L=1u
.supply VS
.end
"""

# Pole at 1/(2*pi*RC) = 159.15 kHz.
FIXTURE_RC_LOWPASS = """* single-pole RC lowpass
V1 in 0 DC 0 AC 1
R1 in out 1k
C1 out 0 1n
.end
"""

# Same RC driven by an effectively constant 1.8 V that switches on at
# t = 0+ (the DC solve sees only the DC field of the source, and the
# 0.01 Hz quarter wave is flat to ~1e-13 over any microsecond window).
FIXTURE_RC_STEP = """* RC charging step fixture
V1 in 0 DC 0 SIN(1.8 0.01 1.5707963267948966)
R1 in out 1k
C1 out 0 1n
.end
"""

FIXTURE_SERIES_R = """* series 50 ohm between the ports
RS a b 50
RBL1 a 0 1e12
RBL2 b 0 1e12
.port 1 a 0
.port 2 b 0
.end
"""

FIXTURE_SHUNT_R = """* shunt 50 ohm at the shared port node
RSH a 0 50
.port 1 a 0
.port 2 a 0
.end
"""

FIXTURE_THRU = """* direct through-connection
RBL1 a 0 1e12
.port 1 a 0
.port 2 a 0
.end
"""

# Ideal 400 nH choke against 10 ohms: time constant 40 ns, roughly 100
# carrier periods at 2.4 GHz, so periodic steady state is genuinely slow.
FIXTURE_SLOW_CHOKE = """* deliberately slow-settling choke
V1 in 0 DC 0 SIN(1 2.4G 0)
L1 in mid 400n
R1 mid 0 10
.end
"""


def _cubic_compressor(a1: float, a3: float, name: str) -> Circuit:
    """Memoryless polynomial amplifier: matched 50 ohm input, ideal-source
    output.  Realized programmatically; the polynomial controlled source
    has no netlist form.
    """
    comps = (
        Component("RIN", Resistor(50.0), ("in", "0")),
        Component("ENL", PolyVcvs(a1=a1, a3=a3), ("out", "0", "in", "0")),
    )
    return Circuit(name=name, components=comps,
                   ports=(Port(1, "in", "0"), Port(2, "out", "0")))


_TEXT_BUILTINS = {
    "driver_stage": DRIVER_STAGE,
    "output_stage": OUTPUT_STAGE,
    "two_stage_pa": TWO_STAGE_PA,
    "fixture_divider": FIXTURE_DIVIDER,
    "fixture_diode_mosfet": FIXTURE_DIODE_MOSFET,
    "fixture_rc_lowpass": FIXTURE_RC_LOWPASS,
    "fixture_rc_step": FIXTURE_RC_STEP,
    "fixture_series_r": FIXTURE_SERIES_R,
    "fixture_shunt_r": FIXTURE_SHUNT_R,
    "fixture_thru": FIXTURE_THRU,
    "fixture_slow_choke": FIXTURE_SLOW_CHOKE,
}


def builtin_names() -> list[str]:
    return sorted(_TEXT_BUILTINS) + ["fixture_cubic_amp", "fixture_linear_amp"]


def builtin_circuit(name: str) -> Circuit:
    """Return a bundled circuit by name; KeyError lists the known names."""
    if name in _TEXT_BUILTINS:
        return parse_netlist(_TEXT_BUILTINS[name], name=name)
    if name == "fixture_cubic_amp":
        return _cubic_compressor(10.0, -1.0, name)
    if name == "fixture_linear_amp":
        return _cubic_compressor(10.0, 0.0, name)
    raise KeyError(f"unknown builtin {name!r}; available: "
                   + ", ".join(builtin_names()))
