"""Two-port S-parameters, Rollett stability and gain metrics.

Extraction uses the power-wave definition with real reference impedance:
port j is driven through a Thevenin source with series Z0, the other port
is terminated in Z0, and with a unit source the column of S reduces to
S_jj = 2*V_j - 1 and S_ij = 2*V_i.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .mna import AC_RESIDUAL_TOL, DcSolution, solve_dc
from ._core.system import (ac_matrices, compile_circuit, small_signal_models,
                           vcvs_small_signal_gain)
from .netlist import Circuit, Component, Port, Resistor, VSource

_SRC_ID = "__sp_vs"
_SRC_RES_ID = "__sp_rs"
_TERM_ID = "__sp_term"
_SRC_NODE = "__sp_n"


def thread_count() -> int:
    """Internal parallelism cap from RFPA_THREADS (>= 1)."""
    raw = os.environ.get("RFPA_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


@dataclass(frozen=True)
class TwoPortPoint:
    """S-matrix sample: S[i][j] = S(i+1)(j+1), reference impedance z0."""

    freq: float
    s: np.ndarray          # (2, 2) complex
    z0: float


@dataclass(frozen=True)
class TwoPortSet:
    points: tuple[TwoPortPoint, ...]

    def __post_init__(self):
        freqs = [p.freq for p in self.points]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValueError("frequency grid must be strictly increasing")
        z0s = {p.z0 for p in self.points}
        if len(z0s) > 1:
            raise ValueError("mixed reference impedances in one set")

    @property
    def freqs(self) -> np.ndarray:
        return np.array([p.freq for p in self.points])

    @property
    def z0(self) -> float:
        return self.points[0].z0

    def s_array(self) -> np.ndarray:
        """(n_freq, 2, 2) complex S data."""
        return np.array([p.s for p in self.points])


@dataclass(frozen=True)
class StabilityReport:
    freq: float
    k: float
    delta_mag: float
    unconditionally_stable: bool
    unilateral: bool = False


@dataclass(frozen=True)
class GainMetrics:
    s21_db: float
    s11_db: float
    transducer_gain_db: float


def _augmented(circuit: Circuit, drive_port: Port, term_port: Port,
               sine=None) -> Circuit:
    """Thevenin source + series Z0 at one port, Z0 termination at the other."""
    src = VSource(dc=0.0, ac_mag=1.0, sine=sine)
    extras = (
        Component(_SRC_ID, src, (_SRC_NODE, drive_port.minus_node)),
        Component(_SRC_RES_ID, Resistor(drive_port.z0),
                  (_SRC_NODE, drive_port.plus_node)),
        Component(_TERM_ID, Resistor(term_port.z0),
                  (term_port.plus_node, term_port.minus_node)),
    )
    return circuit.with_extras(extras)


def _two_ports(circuit: Circuit) -> tuple[Port, Port]:
    if len(circuit.ports) != 2:
        raise ValueError(f"need exactly 2 ports, circuit declares "
                         f"{len(circuit.ports)}")
    p1 = circuit.port(1)
    p2 = circuit.port(2)
    if p1.z0 != p2.z0:
        raise ValueError("ports must share one reference impedance")
    return p1, p2


def extract_s_parameters(circuit: Circuit, freqs,
                         dc: DcSolution | None = None) -> TwoPortSet:
    """Two-port S-parameters over a strictly increasing frequency grid.

    When `dc` is omitted the operating point is solved on the terminated
    circuit (identical bias: the added port elements are DC-neutral for
    DC-blocked ports and provide the DC return for pure fixtures).
    """
    freqs = [float(f) for f in freqs]
    if not freqs or any(f <= 0 for f in freqs):
        raise ValueError("need a nonempty grid of positive frequencies")
    if any(b <= a for a, b in zip(freqs, freqs[1:])):
        raise ValueError("frequency grid must be strictly increasing")
    p1, p2 = _two_ports(circuit)
    z0 = p1.z0

    columns: list[np.ndarray] = []
    for drive, term in ((p1, p2), (p2, p1)):
        aug = _augmented(circuit, drive, term)
        sys = compile_circuit(aug)
        needs_bias = bool(len(sys.mos_ids)) or bool(len(sys.vcvs_a1))
        if not needs_bias:
            dc_aug = None
        elif dc is None:
            dc_aug = solve_dc(aug, compiled=sys)
        else:
            dc_aug = dc
        models = small_signal_models(sys, dc_aug.device_ops) \
            if len(sys.mos_ids) else []
        gains = None
        if len(sys.vcvs_a1) and dc_aug is not None:
            x_ctrl = np.zeros(sys.n_unknowns)
            for name, i in sys.unknowns.node_index.items():
                x_ctrl[i] = dc_aug.node_voltages.get(name, 0.0)
            gains = vcvs_small_signal_gain(sys, x_ctrl)
        A_g, A_c = ac_matrices(sys, models, gains)

        b = np.zeros(sys.n_unknowns, dtype=complex)
        b[sys.unknowns.branch_index[_SRC_ID]] = 1.0
        idx = sys.unknowns.node_index

        def vnode(x, node):
            return 0.0 if node == "0" else x[idx[node]]

        def solve_one(f: float) -> np.ndarray:
            A = A_g + 2j * np.pi * f * A_c
            x = np.linalg.solve(A, b)
            resid = np.max(np.abs(A @ x - b))
            if not np.isfinite(resid) or resid > AC_RESIDUAL_TOL * 1e3:
                raise ArithmeticError(
                    f"AC solve residual {resid:.2e} at {f:.4e} Hz")
            v_drive = vnode(x, drive.plus_node) - vnode(x, drive.minus_node)
            v_term = vnode(x, term.plus_node) - vnode(x, term.minus_node)
            return np.array([2.0 * v_drive - 1.0, 2.0 * v_term])

        workers = thread_count()
        if workers > 1 and len(freqs) > 8:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                col = list(pool.map(solve_one, freqs))
        else:
            col = [solve_one(f) for f in freqs]
        columns.append(np.array(col))

    points = []
    for i, f in enumerate(freqs):
        s = np.empty((2, 2), dtype=complex)
        s[0, 0], s[1, 0] = columns[0][i]   # drive port 1
        s[1, 1], s[0, 1] = columns[1][i]   # drive port 2
        points.append(TwoPortPoint(freq=f, s=s, z0=z0))
    return TwoPortSet(points=tuple(points))


def rollett_stability(point: TwoPortPoint) -> StabilityReport:
    """Rollett factor K and |Delta|; K > 1 with |Delta| < 1 means
    unconditional stability.  Unilateral networks (S12*S21 == 0) report
    K = +inf with the `unilateral` flag instead of raising.
    """
    s = point.s
    delta = s[0, 0] * s[1, 1] - s[0, 1] * s[1, 0]
    denom = 2.0 * abs(s[0, 1] * s[1, 0])
    delta_mag = abs(delta)
    if denom == 0.0:
        return StabilityReport(freq=point.freq, k=math.inf,
                               delta_mag=delta_mag,
                               unconditionally_stable=delta_mag < 1.0,
                               unilateral=True)
    k = (1.0 - abs(s[0, 0]) ** 2 - abs(s[1, 1]) ** 2 + delta_mag ** 2) / denom
    return StabilityReport(freq=point.freq, k=k, delta_mag=delta_mag,
                           unconditionally_stable=(k > 1.0 and delta_mag < 1.0))


def gain_metrics(point: TwoPortPoint) -> GainMetrics:
    """dB gain figures; |S| of zero maps to -inf rather than raising.

    With both ports terminated in Z0 the transducer gain equals |S21|^2,
    so transducer_gain_db repeats s21_db by construction.
    """
    def db(mag: float) -> float:
        return 20.0 * math.log10(mag) if mag > 0.0 else -math.inf

    s21_db = db(abs(point.s[1, 0]))
    return GainMetrics(s21_db=s21_db,
                       s11_db=db(abs(point.s[0, 0])),
                       transducer_gain_db=s21_db)
