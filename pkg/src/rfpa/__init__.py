"""rfpa: a desk-scale RF power-amplifier simulation workbench.

Parse a netlist, solve DC bias, extract S-parameters and stability,
synthesize matching networks, and sweep input power for gain compression
and PAE.
"""

from .builtins import builtin_circuit, builtin_names
from .devices import (MosfetModelCard, OperatingPoint, SmallSignalModel,
                      inductor_parasitic_resistance, mosfet_dc_current,
                      mosfet_small_signal)
from .largesignal import (CompressionReport, PowerSweepPoint, TransientResult,
                          compute_pae, fundamental_power, power_sweep_p1db,
                          run_transient, steady_state)
from .matching import LMatch, input_impedance, synthesize_l_match
from .mna import (AcSolution, ConvergenceError, DcSolution,
                  SingularMatrixError, solve_ac, solve_dc)
from .netlist import (Circuit, Component, Diagnostic, NetlistError, Port,
                      circuit_to_netlist, parse_netlist, validate_circuit)
from .rfmetrics import (StabilityReport, TwoPortPoint, TwoPortSet,
                        extract_s_parameters, gain_metrics, rollett_stability)
from ._core import backend_name

__version__ = "0.1.0"

__all__ = [
    "AcSolution", "Circuit", "Component", "CompressionReport",
    "ConvergenceError", "DcSolution", "Diagnostic", "LMatch",
    "MosfetModelCard", "NetlistError", "OperatingPoint", "Port",
    "PowerSweepPoint", "SingularMatrixError", "SmallSignalModel",
    "StabilityReport", "TransientResult", "TwoPortPoint", "TwoPortSet",
    "backend_name", "builtin_circuit", "builtin_names", "circuit_to_netlist",
    "compute_pae", "extract_s_parameters", "fundamental_power",
    "gain_metrics", "inductor_parasitic_resistance", "input_impedance",
    "mosfet_dc_current", "mosfet_small_signal", "parse_netlist",
    "power_sweep_p1db", "rollett_stability", "run_transient", "solve_ac",
    "solve_dc", "steady_state", "synthesize_l_match", "validate_circuit",
]
