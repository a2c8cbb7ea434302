"""Command-line driver: one analysis job per invocation.

Subcommands: op | ac | sp | tran | sweep | match.  Circuits come from a
netlist path or `builtin:NAME`; outputs are requested as repeatable
`--out <format>=<path>` options with formats touchstone, csv and summary.
Numeric flags accept netlist unit suffixes ("2.4G").  Exit codes: 0 ok,
2 usage, 3 circuit input problem, 4 numerical failure, 5 output I/O.
Every error prints exactly one diagnostic line to stderr.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import reports
from .builtins import builtin_circuit, builtin_names
from .largesignal import power_sweep_p1db, run_transient
from .matching import (SERIES_C_SHUNT_L, SERIES_L_SHUNT_C, synthesize_l_match)
from .mna import ConvergenceError, SingularMatrixError, solve_ac, solve_dc
from .netlist import (Circuit, NetlistError, VSource, parse_netlist,
                      parse_value, validate_circuit)
from .rfmetrics import extract_s_parameters
from ._core.transient import TransientStepError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERIC = 4
EXIT_IO = 5


class JobError(Exception):
    def __init__(self, message: str, code: int):
        self.code = code
        super().__init__(message)


@dataclass(frozen=True)
class OutputSpec:
    format: str          # touchstone | csv | summary
    path: str


@dataclass(frozen=True)
class OpAnalysis:
    kind: str = "op"


@dataclass(frozen=True)
class AcAnalysis:
    f_start: float
    f_stop: float
    points: int
    source: str | None = None
    kind: str = "ac"


@dataclass(frozen=True)
class SpAnalysis:
    f_start: float = 1e9
    f_stop: float = 3e9
    points: int = 201
    kind: str = "sp"


@dataclass(frozen=True)
class TranAnalysis:
    tstop: float
    dt: float
    kind: str = "tran"


@dataclass(frozen=True)
class SweepAnalysis:
    f0: float
    pin_start_dbm: float
    pin_stop_dbm: float
    step_db: float
    kind: str = "sweep"


@dataclass(frozen=True)
class MatchAnalysis:
    r_source: float
    r_load: float
    f0: float
    topology: str = SERIES_L_SHUNT_C
    kind: str = "match"


Analysis = (OpAnalysis | AcAnalysis | SpAnalysis | TranAnalysis
            | SweepAnalysis | MatchAnalysis)

_ALLOWED_OUTPUTS = {
    "op": {"summary"},
    "ac": {"csv", "summary"},
    "sp": {"touchstone", "csv", "summary"},
    "tran": {"csv"},
    "sweep": {"csv", "summary"},
    "match": {"summary"},
}


@dataclass(frozen=True)
class AnalysisJob:
    """One reproducible run: circuit, analysis variant, requested outputs."""

    analysis: Analysis
    outputs: tuple[OutputSpec, ...]
    circuit_source: str | None = None   # path or builtin:NAME; match needs none


def _load_circuit(source: str) -> Circuit:
    if source.startswith("builtin:"):
        try:
            return builtin_circuit(source.split(":", 1)[1])
        except KeyError as exc:
            raise JobError(str(exc.args[0]), EXIT_INPUT)
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise JobError(f"cannot read circuit {source!r}: {exc}", EXIT_INPUT)
    try:
        return parse_netlist(text, name=path.stem)
    except NetlistError as exc:
        raise JobError(f"{source}: {exc}", EXIT_INPUT)


def _grid(f_start: float, f_stop: float, points: int) -> list[float]:
    if points < 1 or f_start <= 0 or f_stop < f_start:
        raise JobError("invalid frequency grid", EXIT_USAGE)
    if points == 1:
        return [f_start]
    return list(np.linspace(f_start, f_stop, points))


def _ac_csv(sol_rows, nodes) -> str:
    header = "freq_hz," + ",".join(f"re(V({n})),im(V({n}))" for n in nodes)
    lines = [header]
    for freq, phasors in sol_rows:
        fields = [f"{freq:.8e}"]
        for n in nodes:
            v = phasors[n]
            fields.append(f"{v.real:.8e}")
            fields.append(f"{v.imag:.8e}")
        lines.append(",".join(fields))
    return "\r\n".join(lines) + "\r\n"


def _sp_csv(two_port) -> str:
    from .rfmetrics import gain_metrics, rollett_stability
    lines = ["freq_hz,s11_db,s21_db,k,delta_mag,stable"]
    for pt in two_port.points:
        g = gain_metrics(pt)
        st = rollett_stability(pt)
        k_text = "inf" if math.isinf(st.k) else f"{st.k:.8e}"
        lines.append(f"{pt.freq:.8e},{g.s11_db:.8e},{g.s21_db:.8e},"
                     f"{k_text},{st.delta_mag:.8e},"
                     f"{1 if st.unconditionally_stable else 0}")
    return "\r\n".join(lines) + "\r\n"


def _tran_csv(result) -> str:
    header = "time_s," + ",".join(f"v({n})" for n in result.nodes)
    header += "".join(f",i({s})" for s in result.supply_ids)
    lines = [header]
    for i, t in enumerate(result.times):
        fields = [f"{t:.8e}"]
        fields.extend(f"{v:.8e}" for v in result.node_voltages[i])
        fields.extend(f"{v:.8e}" for v in result.supply_currents[i])
        lines.append(",".join(fields))
    return "\r\n".join(lines) + "\r\n"


def run_job(job: AnalysisJob) -> list[Path]:
    """Execute parse -> validate -> solve -> analysis -> write outputs.

    Output files are rendered in memory first and written last, so a
    failing job leaves no partial files behind.  Returns written paths.
    """
    if not job.outputs:
        raise JobError("job requests no outputs", EXIT_USAGE)
    kind = job.analysis.kind
    allowed = _ALLOWED_OUTPUTS[kind]
    for spec in job.outputs:
        if spec.format not in allowed:
            raise JobError(f"output format {spec.format!r} not valid for "
                           f"{kind!r} (allowed: {', '.join(sorted(allowed))})",
                           EXIT_USAGE)

    rendered: list[tuple[OutputSpec, object]] = []
    analysis = job.analysis

    if kind == "match":
        m = analysis
        try:
            match = synthesize_l_match(m.r_source, m.r_load, m.f0, m.topology)
        except ValueError as exc:
            raise JobError(str(exc), EXIT_USAGE)
        text = reports.match_summary(match)
        rendered = [(spec, text) for spec in job.outputs]
        return _write_all(rendered)

    if job.circuit_source is None:
        raise JobError("analysis needs --circuit", EXIT_USAGE)
    circuit = _load_circuit(job.circuit_source)
    diags = validate_circuit(circuit)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise JobError(f"{job.circuit_source}: invalid circuit: "
                       f"{errors[0]}" + (f" (+{len(errors) - 1} more)"
                                         if len(errors) > 1 else ""),
                       EXIT_INPUT)

    try:
        dc = solve_dc(circuit)
    except (SingularMatrixError, ConvergenceError) as exc:
        raise JobError(f"DC solve failed: {exc}", EXIT_NUMERIC)

    try:
        if kind == "op":
            text = reports.op_summary(circuit.name, dc)
            rendered = [(spec, text) for spec in job.outputs]

        elif kind == "ac":
            source = analysis.source
            if source is None:
                driven = [c.id for c in circuit.components
                          if isinstance(c.kind, VSource) and c.kind.ac_mag]
                if len(driven) != 1:
                    raise JobError("--source required: circuit has "
                                   f"{len(driven)} sources with AC magnitude",
                                   EXIT_USAGE)
                source = driven[0]
            mag = 1.0
            for comp in circuit.components:
                if comp.id.lower() == source.lower() and \
                        isinstance(comp.kind, VSource) and comp.kind.ac_mag:
                    mag = comp.kind.ac_mag
            rows = []
            nodes = None
            for f in _grid(analysis.f_start, analysis.f_stop,
                           analysis.points):
                sol = solve_ac(circuit, dc, f, source, magnitude=mag)
                if nodes is None:
                    nodes = list(sol.node_phasors)
                rows.append((f, sol.node_phasors))
            text = _ac_csv(rows, nodes)
            rendered = [(spec, text) for spec in job.outputs]

        elif kind == "sp":
            grid = _grid(analysis.f_start, analysis.f_stop, analysis.points)
            two_port = extract_s_parameters(circuit, grid, dc=dc)
            for spec in job.outputs:
                if spec.format == "touchstone":
                    rendered.append((spec, two_port))
                elif spec.format == "csv":
                    rendered.append((spec, _sp_csv(two_port)))
                else:
                    rendered.append((spec,
                                     reports.sp_summary(circuit.name,
                                                        two_port)))

        elif kind == "tran":
            result = run_transient(circuit, dc, analysis.tstop, analysis.dt)
            rendered = [(spec, _tran_csv(result)) for spec in job.outputs]

        elif kind == "sweep":
            report = power_sweep_p1db(circuit, analysis.f0,
                                      analysis.pin_start_dbm,
                                      analysis.pin_stop_dbm,
                                      analysis.step_db)
            for spec in job.outputs:
                if spec.format == "csv":
                    rendered.append((spec, report.sweep))
                else:
                    rendered.append((spec,
                                     reports.sweep_summary(circuit.name,
                                                           report)))
        else:
            raise JobError(f"unknown analysis {kind!r}", EXIT_USAGE)
    except (SingularMatrixError, ConvergenceError, TransientStepError) as exc:
        raise JobError(f"{kind} analysis failed: {exc}", EXIT_NUMERIC)
    except ValueError as exc:
        raise JobError(f"{kind} analysis rejected: {exc}", EXIT_USAGE)

    return _write_all(rendered)


def _write_all(rendered) -> list[Path]:
    written: list[Path] = []
    try:
        for spec, payload in rendered:
            path = Path(spec.path)
            if spec.format == "touchstone":
                reports.write_touchstone(payload, path)
            elif isinstance(payload, str):
                path.write_bytes(payload.encode("ascii"))
            else:
                reports.write_sweep_csv(payload, path)
            written.append(path)
    except OSError as exc:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise JobError(f"cannot write output: {exc}", EXIT_IO)
    return written


# --------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise JobError(message, EXIT_USAGE)


def _value(text: str) -> float:
    try:
        return parse_value(text)
    except ValueError as exc:
        raise JobError(str(exc), EXIT_USAGE)


def _parse_outputs(raw: list[str]) -> tuple[OutputSpec, ...]:
    specs = []
    for item in raw:
        if "=" not in item:
            raise JobError(f"--out needs <format>=<path>, got {item!r}",
                           EXIT_USAGE)
        fmt, path = item.split("=", 1)
        if fmt not in ("touchstone", "csv", "summary"):
            raise JobError(f"unknown output format {fmt!r}", EXIT_USAGE)
        if not path:
            raise JobError("empty output path", EXIT_USAGE)
        specs.append(OutputSpec(format=fmt, path=path))
    return tuple(specs)


def build_job(argv: list[str]) -> AnalysisJob:
    parser = _Parser(prog="rfpa", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, circuit=True):
        if circuit:
            p.add_argument("--circuit", required=True,
                           help="netlist path or builtin:NAME "
                                f"(builtins: {', '.join(builtin_names())})")
        p.add_argument("--out", action="append", default=[],
                       metavar="FMT=PATH",
                       help="repeatable output request: "
                            "touchstone|csv|summary=<path>")

    p_op = sub.add_parser("op", help="DC operating point")
    add_common(p_op)

    p_ac = sub.add_parser("ac", help="AC small-signal sweep")
    add_common(p_ac)
    p_ac.add_argument("--f-start", default="1e6")
    p_ac.add_argument("--f-stop", default="1e10")
    p_ac.add_argument("--points", type=int, default=201)
    p_ac.add_argument("--source", default=None,
                      help="excitation source id (default: the unique "
                           "source with AC magnitude)")

    p_sp = sub.add_parser("sp", help="two-port S-parameters")
    add_common(p_sp)
    p_sp.add_argument("--f-start", default="1G")
    p_sp.add_argument("--f-stop", default="3G")
    p_sp.add_argument("--points", type=int, default=201)

    p_tr = sub.add_parser("tran", help="transient analysis")
    add_common(p_tr)
    p_tr.add_argument("--tstop", required=True)
    p_tr.add_argument("--dt", required=True)

    p_sw = sub.add_parser("sweep", help="input power sweep with P1dB")
    add_common(p_sw)
    p_sw.add_argument("--f0", default="2.4G")
    p_sw.add_argument("--pin-start", default="-16")
    p_sw.add_argument("--pin-stop", default="8")
    p_sw.add_argument("--step", default="1")

    p_m = sub.add_parser("match", help="L-match synthesis")
    add_common(p_m, circuit=False)
    p_m.add_argument("--rs", required=True, help="source resistance (ohm)")
    p_m.add_argument("--rl", required=True, help="load resistance (ohm)")
    p_m.add_argument("--f0", default="2.4G")
    p_m.add_argument("--topology", choices=("lowpass", "highpass"),
                     default="lowpass")

    args = parser.parse_args(argv)
    outputs = _parse_outputs(args.out)

    if args.command == "op":
        analysis: Analysis = OpAnalysis()
    elif args.command == "ac":
        analysis = AcAnalysis(f_start=_value(args.f_start),
                              f_stop=_value(args.f_stop),
                              points=args.points, source=args.source)
    elif args.command == "sp":
        analysis = SpAnalysis(f_start=_value(args.f_start),
                              f_stop=_value(args.f_stop),
                              points=args.points)
    elif args.command == "tran":
        analysis = TranAnalysis(tstop=_value(args.tstop), dt=_value(args.dt))
    elif args.command == "sweep":
        analysis = SweepAnalysis(f0=_value(args.f0),
                                 pin_start_dbm=_value(args.pin_start),
                                 pin_stop_dbm=_value(args.pin_stop),
                                 step_db=_value(args.step))
    else:
        analysis = MatchAnalysis(
            r_source=_value(args.rs), r_load=_value(args.rl),
            f0=_value(args.f0),
            topology=SERIES_L_SHUNT_C if args.topology == "lowpass"
            else SERIES_C_SHUNT_L)

    circuit_source = getattr(args, "circuit", None)
    return AnalysisJob(analysis=analysis, outputs=outputs,
                       circuit_source=circuit_source)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        job = build_job(argv)
        run_job(job)
    except JobError as exc:
        print(f"rfpa: error: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
