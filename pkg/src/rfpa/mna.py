"""Modified nodal analysis: DC operating point and AC small-signal solves.

DC uses Newton-Raphson with the standard continuation ladder (plain Newton,
then gmin stepping, then source stepping).  AC linearizes every MOSFET at
the DC bias and solves the dense complex system by LU with partial
pivoting.  Circuits at this scale have well under a hundred unknowns, so
everything is dense on purpose.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .devices import OperatingPoint
from ._core.system import (CompiledCircuit, UnknownMap, ac_matrices,
                           compile_circuit, dc_residual_jacobian,
                           device_operating_points, small_signal_models,
                           vcvs_small_signal_gain)
from .netlist import Circuit, Component, GROUND, VSource

DC_RESIDUAL_TOL = 1e-9   # amperes, infinity norm of KCL residual
DC_UPDATE_TOL = 1e-6     # volts, infinity norm of the Newton update
AC_RESIDUAL_TOL = 1e-9   # relative to the excitation magnitude
_MAX_NEWTON_ITER = 200
_GMIN_LADDER = [10.0 ** -e for e in range(3, 13)]   # 1e-3 .. 1e-12 S
_SOURCE_STEPS = [0.1 * k for k in range(1, 11)]
_DEVICE_STEP_LIMIT = 0.5  # volts per Newton iteration on MOSFET terminals


class SingularMatrixError(RuntimeError):
    """The MNA matrix is structurally or numerically singular."""

    def __init__(self, suspect: str):
        self.suspect = suspect
        super().__init__(f"singular MNA matrix; suspect unknown: {suspect}")


class ConvergenceError(RuntimeError):
    """Newton failed through the whole continuation ladder."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(
            "DC operating point did not converge (plain Newton, gmin "
            f"stepping and source stepping all failed); last residual "
            f"{residual:.3e} A")


@dataclass
class DcSolution:
    """Converged DC operating point of a circuit."""

    node_voltages: dict[str, float]
    branch_currents: dict[str, float]
    device_ops: dict[str, OperatingPoint]
    iterations: int
    residual_norm: float
    residual_history: list[float] = field(default_factory=list)
    x: np.ndarray = None  # raw unknown vector, consumed by other engines


@dataclass
class AcSolution:
    """Phasor solution at one frequency for one excitation."""

    freq: float
    node_phasors: dict[str, complex]
    branch_phasors: dict[str, complex]
    source_excitation: str
    residual: float

    def phasor(self, node: str) -> complex:
        if node == GROUND:
            return 0.0 + 0.0j
        return self.node_phasors[node]


def build_unknown_map(circuit: Circuit) -> UnknownMap:
    """Row assignment used by all analyses (ground excluded)."""
    return compile_circuit(circuit).unknowns


def _names(sys: CompiledCircuit) -> list[str]:
    """Unknown-row labels for error reporting."""
    labels = list(sys.node_names)
    branch = sorted(sys.unknowns.branch_index.items(), key=lambda kv: kv[1])
    labels.extend(f"I({cid})" for cid, _ in branch)
    return labels


def _solve_linear(J: np.ndarray, rhs: np.ndarray, sys: CompiledCircuit
                  ) -> np.ndarray:
    try:
        out = np.linalg.solve(J, rhs)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(_find_suspect(J, sys))
    if not np.all(np.isfinite(out)):
        raise SingularMatrixError(_find_suspect(J, sys))
    return out


def _find_suspect(J: np.ndarray, sys: CompiledCircuit) -> str:
    """Locate the unknown whose pivot collapses during elimination."""
    labels = _names(sys)
    A = J.copy()
    n = A.shape[0]
    order = list(range(n))
    for k in range(n):
        col = np.abs(A[k:, k])
        p = int(np.argmax(col)) + k
        if col.max() <= 1e-300:
            return labels[order[k]]
        if p != k:
            A[[k, p]] = A[[p, k]]
            order[k], order[p] = order[p], order[k]
        A[k + 1:, k:] -= np.outer(A[k + 1:, k] / A[k, k], A[k, k:])
    return labels[order[n - 1]]


def _structural_check(sys: CompiledCircuit, J: np.ndarray) -> None:
    zero_rows = np.where(~J.any(axis=1))[0]
    if len(zero_rows):
        raise SingularMatrixError(_names(sys)[zero_rows[0]])
    zero_cols = np.where(~J.any(axis=0))[0]
    if len(zero_cols):
        raise SingularMatrixError(_names(sys)[zero_cols[0]])


def _seed(sys: CompiledCircuit) -> np.ndarray:
    """Initial guess: all nodes at 0 V, supply-driven nodes at their value."""
    x = np.zeros(sys.n_unknowns)
    for k in range(len(sys.vsrc_dc)):
        a, b = sys.vsrc_nodes[k]
        if b < 0 and a >= 0:
            x[a] = sys.vsrc_dc[k]
        elif a < 0 and b >= 0:
            x[b] = -sys.vsrc_dc[k]
    return x


def _newton(sys: CompiledCircuit, x: np.ndarray, gmin: float,
            source_scale: float, history: list[float],
            check_structure: bool = False) -> tuple[np.ndarray, bool, float, int]:
    """Damped Newton iteration; returns (x, converged, residual, iters)."""
    residual = np.inf
    delta_norm = np.inf
    mos_rows = sys.mos_nodes.reshape(-1) if len(sys.mos_beta) else None
    for it in range(_MAX_NEWTON_ITER):
        F, J = dc_residual_jacobian(sys, x, gmin=gmin,
                                    source_scale=source_scale)
        if check_structure and it == 0:
            _structural_check(sys, J)
        residual = float(np.max(np.abs(F[:sys.n_nodes]))) if sys.n_nodes \
            else float(np.max(np.abs(F), initial=0.0))
        history.append(residual)
        if residual < DC_RESIDUAL_TOL and delta_norm < DC_UPDATE_TOL:
            return x, True, residual, it
        delta = _solve_linear(J, -F, sys)
        # limit how far MOSFET terminal voltages move per iteration
        scale = 1.0
        if mos_rows is not None:
            dev = np.abs(delta[mos_rows[mos_rows >= 0]])
            peak = dev.max() if len(dev) else 0.0
            if peak > _DEVICE_STEP_LIMIT:
                scale = _DEVICE_STEP_LIMIT / peak
        x = x + scale * delta
        delta_norm = float(np.max(np.abs(scale * delta)))
    return x, False, residual, _MAX_NEWTON_ITER


def solve_dc(circuit: Circuit, compiled: CompiledCircuit | None = None
             ) -> DcSolution:
    """Newton-Raphson DC operating point.

    Convergence requires the KCL residual below 1e-9 A and the last voltage
    update below 1e-6 V.  On failure the solver walks a continuation
    ladder: gmin stepping from 1e-3 S down to 1e-12 S, then supply ramping
    in ten steps, each stage warm-starting the next.

    Raises SingularMatrixError naming the suspect node for structurally
    defective circuits and ConvergenceError after the full ladder fails.
    """
    sys = compiled if compiled is not None else compile_circuit(circuit)
    history: list[float] = []
    total_iters = 0

    x, ok, residual, iters = _newton(sys, _seed(sys), 0.0, 1.0, history,
                                     check_structure=True)
    total_iters += iters
    if not ok:
        x = _seed(sys)
        for gmin in _GMIN_LADDER:
            x, ok, residual, iters = _newton(sys, x, gmin, 1.0, history)
            total_iters += iters
        if ok:
            x, ok, residual, iters = _newton(sys, x, 0.0, 1.0, history)
            total_iters += iters
    if not ok:
        x = _seed(sys) * 0.0
        for scale in _SOURCE_STEPS:
            x, ok, residual, iters = _newton(sys, x, 1e-12, scale, history)
            total_iters += iters
            if not ok:
                break
        if ok:
            x, ok, residual, iters = _newton(sys, x, 0.0, 1.0, history)
            total_iters += iters
    if not ok:
        raise ConvergenceError(residual)

    node_voltages = {name: float(x[i])
                     for name, i in sys.unknowns.node_index.items()}
    branch_currents = {cid: float(x[i])
                       for cid, i in sys.unknowns.branch_index.items()}
    return DcSolution(
        node_voltages=node_voltages,
        branch_currents=branch_currents,
        device_ops=device_operating_points(sys, x),
        iterations=total_iters,
        residual_norm=residual,
        residual_history=history,
        x=x,
    )


def solve_ac(circuit: Circuit, dc: DcSolution | None, freq: float,
             excitation: str, magnitude: float = 1.0,
             compiled: CompiledCircuit | None = None) -> AcSolution:
    """Complex small-signal solve at one frequency.

    `excitation` names a voltage source of the circuit ("V1") or a port
    ("port:1", driven as an ideal unit source across the port nodes).  All
    other independent sources are zeroed, i.e. voltage sources become
    shorts.  MOSFETs are linearized at `dc` (required when the circuit
    contains any).
    """
    if freq <= 0.0:
        raise ValueError("frequency must be positive")
    if excitation.lower().startswith("port:"):
        number = int(excitation.split(":", 1)[1])
        port = circuit.port(number)
        drive = Component("__acport", VSource(ac_mag=1.0),
                          (port.plus_node, port.minus_node))
        circuit = circuit.with_extras((drive,))
        excitation = "__acport"
        compiled = None

    sys = compiled if compiled is not None else compile_circuit(circuit)
    if len(sys.mos_ids) and dc is None:
        raise ValueError("AC analysis of a circuit with MOSFETs needs a DC "
                         "solution for linearization")
    models = small_signal_models(sys, dc.device_ops) if len(sys.mos_ids) else []
    gains = None
    if len(sys.vcvs_a1):
        x_ctrl = np.zeros(sys.n_unknowns)
        if dc is not None:
            for name, i in sys.unknowns.node_index.items():
                x_ctrl[i] = dc.node_voltages.get(name, 0.0)
        gains = vcvs_small_signal_gain(sys, x_ctrl)

    A_g, A_c = ac_matrices(sys, models, gains)
    A = A_g + 2j * np.pi * freq * A_c

    b = np.zeros(sys.n_unknowns, dtype=complex)
    wanted = excitation.lower()
    row = None
    for k, vid in enumerate(sys.vsrc_ids):
        if vid.lower() == wanted:
            row = sys.vsrc_branch[k]
            break
    if row is None:
        raise ValueError(f"excitation {excitation!r} is not a voltage source "
                         "of the circuit")
    b[row] = magnitude

    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(_find_suspect(np.abs(A), sys))
    scale = max(abs(magnitude), 1.0)
    residual = float(np.max(np.abs(A @ x - b)) / scale)

    return AcSolution(
        freq=freq,
        node_phasors={name: complex(x[i])
                      for name, i in sys.unknowns.node_index.items()},
        branch_phasors={cid: complex(x[i])
                        for cid, i in sys.unknowns.branch_index.items()},
        source_excitation=excitation,
        residual=residual,
    )
