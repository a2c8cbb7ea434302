"""Large-signal engine: transient to periodic steady state, output power,
DC supply power, PAE and the 1 dB compression point.

Periodic steady state is found by brute-force time marching, declaring
convergence when consecutive periods of all node voltages agree in RMS to
one part in 1e6 of the waveform swing.  Input power follows the
available-power convention of a Z0 source (amplitude sqrt(8*Z0*Pin)), so
small-signal sweep gain coincides with |S21|^2.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._core import get_engine
from ._core.system import CompiledCircuit, compile_circuit
from ._core.transient import build_transient_system, initial_state
from .mna import DcSolution, solve_dc
from .netlist import Circuit, Component, Port, Resistor, SineSpec, VSource
from .rfmetrics import thread_count

PSS_REL_TOL = 1e-6           # period-to-period RMS, relative to swing
DEFAULT_DT_PER_PERIOD = 256
DEFAULT_MAX_PERIODS = 2000
P1DB_REFINE_DB = 0.01        # bisection bracket width on Pin


@dataclass
class TransientResult:
    """Uniform-grid waveforms; steady-state runs keep only the last period."""

    times: np.ndarray                 # (nt,)
    nodes: list[str]
    node_voltages: np.ndarray         # (nt, n_nodes)
    supply_ids: list[str]
    supply_currents: np.ndarray       # (nt, n_supplies), MNA branch sign
    dt: float
    periods_run: int = 0
    converged_to_periodic: bool = False

    def voltage(self, node: str) -> np.ndarray:
        if node == "0":
            return np.zeros(len(self.times))
        return self.node_voltages[:, self.nodes.index(node)]

    def differential(self, plus: str, minus: str) -> np.ndarray:
        return self.voltage(plus) - self.voltage(minus)


@dataclass
class PowerSweepPoint:
    pin_dbm: float
    pout_dbm: float
    gain_db: float
    pdc_w: float
    pae: float
    converged: bool = True


@dataclass
class CompressionReport:
    small_signal_gain_db: float
    sweep: list[PowerSweepPoint]
    compressed: bool                   # False: gain never dropped 1 dB
    p1db_in_dbm: float | None = None
    p1db_out_dbm: float | None = None
    pae_at_p1db: float | None = None


def dbm_to_w(dbm: float) -> float:
    return 1e-3 * 10.0 ** (dbm / 10.0)


def w_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts / 1e-3) if watts > 0 else -math.inf


def source_amplitude(pin_w: float, z0: float) -> float:
    """Thevenin amplitude delivering `pin_w` available power from a Z0 source."""
    return math.sqrt(8.0 * z0 * pin_w)


def compute_pae(pout_w: float, pin_w: float, pdc_w: float) -> float:
    """Power-added efficiency (Pout - Pin) / Pdc."""
    if pdc_w <= 0.0:
        raise ValueError("DC power must be positive")
    if pout_w < 0.0 or pin_w < 0.0:
        raise ValueError("signal powers must be nonnegative")
    return (pout_w - pin_w) / pdc_w


def fundamental_power(values: np.ndarray, dt: float, f0: float,
                      r_load: float) -> float:
    """Power at f0 delivered to r_load by one period of load voltage.

    `values` must hold exactly one period on a uniform grid (endpoint not
    repeated).  A single-bin discrete Fourier projection rejects DC and
    all harmonics exactly.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 4:
        raise ValueError("need at least 4 samples")
    if abs(n * dt * f0 - 1.0) > 1e-6:
        raise ValueError(
            f"grid/period mismatch: {n} samples of {dt:.3e} s do not cover "
            f"one period of {f0:.3e} Hz")
    k = np.arange(n)
    phasor = 2.0 / n * np.sum(values * np.exp(-2j * np.pi * k / n))
    v1 = abs(phasor)
    return v1 * v1 / (2.0 * r_load)


def _pack_result(sys: CompiledCircuit, times: np.ndarray, X: np.ndarray,
                 dt: float, periods_run: int = 0,
                 converged: bool = False) -> TransientResult:
    supply_ids = [sid for sid, _, _ in sys.supply_branches]
    rows = [br for _, br, _ in sys.supply_branches]
    return TransientResult(
        times=times,
        nodes=list(sys.node_names),
        node_voltages=X[:, :sys.n_nodes].copy(),
        supply_ids=supply_ids,
        supply_currents=X[:, rows].copy() if rows else np.zeros((len(times), 0)),
        dt=dt,
        periods_run=periods_run,
        converged_to_periodic=converged,
    )


def run_transient(circuit: Circuit, dc: DcSolution, tstop: float, dt: float,
                  backend: str | None = None) -> TransientResult:
    """Trapezoidal transient from the DC operating point.

    Per-step Newton solves to a 1e-9 A KCL residual; a failing step is
    retried on a halved dt (resolution preserved on the output grid) up to
    8 times before aborting with the failure time.
    """
    if dt <= 0.0 or tstop < 10.0 * dt:
        raise ValueError("need dt > 0 and tstop >= 10*dt")
    engine = get_engine(backend)
    sys = compile_circuit(circuit)
    ts = build_transient_system(sys, dc.device_ops)
    state = initial_state(ts, dc.x)

    n_steps = int(round(tstop / dt))
    X = np.empty((n_steps + 1, sys.n_unknowns))
    X[0] = state.x
    X[1:] = engine.integrate(ts, state, n_steps, dt)
    times = np.arange(n_steps + 1) * dt
    return _pack_result(sys, times, X, dt)


def steady_state(circuit: Circuit, dc: DcSolution, f0: float,
                 dt_per_period: int = DEFAULT_DT_PER_PERIOD,
                 max_periods: int = DEFAULT_MAX_PERIODS,
                 backend: str | None = None) -> TransientResult:
    """Integrate period by period until the waveform repeats.

    Periodicity: RMS difference between consecutive periods of all node
    voltages below 1e-6 of the RMS swing.  The returned result holds the
    final period; `converged_to_periodic` is False when max_periods ran
    out, in which case derived metrics are unreliable.
    """
    if f0 <= 0.0:
        raise ValueError("fundamental frequency must be positive")
    if dt_per_period < 64:
        raise ValueError("need at least 64 points per period")
    engine = get_engine(backend)
    sys = compile_circuit(circuit)
    ts = build_transient_system(sys, dc.device_ops)
    dt = 1.0 / (f0 * dt_per_period)
    state = initial_state(ts, dc.x)

    nv = sys.n_nodes
    prev = np.tile(state.x[:nv], (dt_per_period, 1))   # period 0: DC hold
    converged = False
    periods = 0
    start_row = state.x.copy()
    X = prev
    for periods in range(1, max_periods + 1):
        start_row = state.x.copy()
        X = engine.integrate(ts, state, dt_per_period, dt)
        cur = X[:, :nv]
        diff = math.sqrt(float(np.mean((cur - prev) ** 2)))
        swing = math.sqrt(float(np.mean((cur - cur.mean(axis=0)) ** 2)))
        if diff <= PSS_REL_TOL * swing + 1e-15:
            converged = True
            break
        prev = cur.copy()

    # final period with both endpoints; sample 0 is the period start (the
    # previous period's final sample, identical grid position)
    out = np.empty((dt_per_period + 1, sys.n_unknowns))
    out[0] = start_row
    out[1:] = X
    times = (np.arange(dt_per_period + 1) + (periods - 1) * dt_per_period) * dt
    return _pack_result(sys, times, out, dt, periods_run=periods,
                        converged=converged)


# --------------------------------------------------------------------------
# power sweep and compression

_DRIVE_SRC = "__sw_vs"
_DRIVE_RES = "__sw_rs"
_LOAD_RES = "__sw_load"
_DRIVE_NODE = "__sw_n"


def _driven_circuit(circuit: Circuit, amplitude: float, f0: float
                    ) -> tuple[Circuit, Port, Port]:
    """Sine Thevenin source with series Z0 at port 1, Z0 load at port 2."""
    if len(circuit.ports) != 2:
        raise ValueError("power sweep needs a circuit with ports 1 and 2")
    pin_port = circuit.port(1)
    pout_port = circuit.port(2)
    extras = (
        Component(_DRIVE_SRC,
                  VSource(dc=0.0, sine=SineSpec(amplitude, f0, 0.0)),
                  (_DRIVE_NODE, pin_port.minus_node)),
        Component(_DRIVE_RES, Resistor(pin_port.z0),
                  (_DRIVE_NODE, pin_port.plus_node)),
        Component(_LOAD_RES, Resistor(pout_port.z0),
                  (pout_port.plus_node, pout_port.minus_node)),
    )
    return circuit.with_extras(extras), pin_port, pout_port


def _supply_power(result: TransientResult, sys: CompiledCircuit) -> float:
    """Mean power delivered by the `.supply` sources over the window.

    The MNA branch current flows from the + terminal through the source,
    so a delivering supply carries a negative branch current.
    """
    if not result.supply_ids:
        return 0.0
    total = 0.0
    for col, (sid, _, vi) in enumerate(sys.supply_branches):
        e = sys.vsrc_dc[vi]   # supplies are DC sources
        i_mean = float(np.mean(result.supply_currents[:-1, col]))
        total += -e * i_mean
    return total


def _sweep_point(circuit: Circuit, f0: float, pin_dbm: float,
                 dt_per_period: int, max_periods: int,
                 backend: str | None) -> PowerSweepPoint:
    pin_w = dbm_to_w(pin_dbm)
    driven, pin_port, pout_port = _driven_circuit(
        circuit, source_amplitude(pin_w, pin_port_z0(circuit)), f0)
    sys = compile_circuit(driven)
    dc = solve_dc(driven, compiled=sys)
    result = steady_state(driven, dc, f0, dt_per_period=dt_per_period,
                          max_periods=max_periods, backend=backend)
    vload = result.differential(pout_port.plus_node, pout_port.minus_node)
    pout_w = fundamental_power(vload[:-1], result.dt, f0, pout_port.z0)
    pdc_w = _supply_power(result, sys)
    pout_dbm = w_to_dbm(pout_w)
    pae = compute_pae(pout_w, pin_w, pdc_w) if pdc_w > 0.0 else math.nan
    return PowerSweepPoint(
        pin_dbm=pin_dbm,
        pout_dbm=pout_dbm,
        gain_db=pout_dbm - pin_dbm,
        pdc_w=pdc_w,
        pae=pae,
        converged=result.converged_to_periodic,
    )


def pin_port_z0(circuit: Circuit) -> float:
    return circuit.port(1).z0


def power_sweep_p1db(circuit: Circuit, f0: float, pin_start_dbm: float,
                     pin_stop_dbm: float, step_db: float = 1.0,
                     dt_per_period: int = DEFAULT_DT_PER_PERIOD,
                     max_periods: int = DEFAULT_MAX_PERIODS,
                     backend: str | None = None) -> CompressionReport:
    """Input-power sweep with interpolated and refined P1dB.

    Small-signal gain is taken at the lowest input power.  The -1 dB
    crossing found on the sweep grid is refined by bisection with real
    engine evaluations until the Pin bracket closes below 0.01 dB.
    Non-periodic points are flagged and excluded from interpolation.
    """
    if step_db <= 0.0 or step_db > 1.0:
        raise ValueError("step must be positive and at most 1 dB")
    if pin_stop_dbm <= pin_start_dbm:
        raise ValueError("empty sweep range")

    n_pts = int(math.floor((pin_stop_dbm - pin_start_dbm) / step_db + 1e-9)) + 1
    pins = [pin_start_dbm + k * step_db for k in range(n_pts)]

    def evaluate(pin: float) -> PowerSweepPoint:
        return _sweep_point(circuit, f0, pin, dt_per_period, max_periods,
                            backend)

    workers = thread_count()
    if workers > 1 and len(pins) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sweep = list(pool.map(evaluate, pins))
    else:
        sweep = [evaluate(p) for p in pins]

    usable = [p for p in sweep if p.converged]
    if not usable:
        raise RuntimeError("no sweep point reached periodic steady state; "
                           "raise max_periods or inspect the circuit")
    g_ss = usable[0].gain_db
    target = g_ss - 1.0

    lo = hi = None
    for a, b in zip(usable, usable[1:]):
        if a.gain_db > target >= b.gain_db:
            lo, hi = a, b
            break
    if lo is None:
        return CompressionReport(small_signal_gain_db=g_ss, sweep=sweep,
                                 compressed=False)

    # bisect on Pin with real engine evaluations
    lo_pin, hi_pin = lo.pin_dbm, hi.pin_dbm
    lo_gain, hi_gain = lo.gain_db, hi.gain_db
    best = hi
    while hi_pin - lo_pin > P1DB_REFINE_DB:
        # secant-flavored probe clamped into the bracket interior
        frac = (lo_gain - target) / max(lo_gain - hi_gain, 1e-12)
        probe = lo_pin + min(max(frac, 0.1), 0.9) * (hi_pin - lo_pin)
        point = evaluate(probe)
        if not point.converged:
            break   # keep the bracket; interpolate the rest
        best = point
        if point.gain_db > target:
            lo_pin, lo_gain = probe, point.gain_db
        else:
            hi_pin, hi_gain = probe, point.gain_db
    # linear interpolation inside the final sub-0.01 dB bracket
    frac = (lo_gain - target) / max(lo_gain - hi_gain, 1e-12)
    p1db_in = lo_pin + frac * (hi_pin - lo_pin)

    return CompressionReport(
        small_signal_gain_db=g_ss,
        sweep=sweep,
        compressed=True,
        p1db_in_dbm=p1db_in,
        p1db_out_dbm=p1db_in + target,
        pae_at_p1db=best.pae,
    )
