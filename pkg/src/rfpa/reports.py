"""Bit-exact output writers and readers: Touchstone v1, sweep CSV, summaries.

All formatting is locale-independent with fixed significant digits, so
identical analyses produce byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .largesignal import CompressionReport, PowerSweepPoint
from .matching import LMatch
from .mna import DcSolution
from .rfmetrics import (TwoPortPoint, TwoPortSet, gain_metrics,
                        rollett_stability)


def _sci9(x: float) -> str:
    """Scientific notation with 9 significant digits."""
    return f"{x:.8e}"


def _sig6(x: float) -> str:
    """Positional notation with 6 significant digits, trailing zeros kept."""
    if x != x or x in (math.inf, -math.inf):
        return "nan" if x != x else ("inf" if x > 0 else "-inf")
    if x == 0.0:
        return "0.000000"
    return np.format_float_positional(x, precision=6, unique=False,
                                      fractional=False, trim="k")


def write_touchstone(two_port: TwoPortSet, path: str | Path) -> Path:
    """Touchstone v1, RI format: `# HZ S RI R <Z0>` then one line per
    frequency with S11 S21 S12 S22 as real/imaginary pairs, 9 significant
    digits.
    """
    if not two_port.points:
        raise ValueError("refusing to write an empty S-parameter set")
    z0 = two_port.z0
    z0_text = str(int(z0)) if z0 == int(z0) else repr(z0)
    lines = [f"# HZ S RI R {z0_text}"]
    for pt in two_port.points:
        fields = [_sci9(pt.freq)]
        for i, j in ((0, 0), (1, 0), (0, 1), (1, 1)):
            fields.append(_sci9(pt.s[i, j].real))
            fields.append(_sci9(pt.s[i, j].imag))
        lines.append(" ".join(fields))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def read_touchstone(path: str | Path) -> TwoPortSet:
    """Read a 2-port Touchstone v1 file written in HZ/S/RI format."""
    z0 = 50.0
    points = []
    for raw in Path(path).read_text(encoding="ascii").splitlines():
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            tokens = line[1:].split()
            upper = [t.upper() for t in tokens]
            if upper[:3] != ["HZ", "S", "RI"]:
                raise ValueError(f"unsupported Touchstone options: {line!r}")
            if "R" in upper:
                z0 = float(tokens[upper.index("R") + 1])
            continue
        fields = [float(t) for t in line.split()]
        if len(fields) != 9:
            raise ValueError(f"expected 9 fields per data line, got "
                             f"{len(fields)}")
        s = np.array([[fields[1] + 1j * fields[2], fields[5] + 1j * fields[6]],
                      [fields[3] + 1j * fields[4], fields[7] + 1j * fields[8]]])
        points.append(TwoPortPoint(freq=fields[0], s=s, z0=z0))
    if not points:
        raise ValueError(f"no data lines in {path}")
    return TwoPortSet(points=tuple(points))


CSV_HEADER = "pin_dbm,pout_dbm,gain_db,pdc_w,pae"


def write_sweep_csv(sweep: list[PowerSweepPoint], path: str | Path) -> Path:
    """RFC-4180 CSV (CRLF line endings), 6 significant digits per field."""
    if not sweep:
        raise ValueError("refusing to write an empty sweep")
    rows = [CSV_HEADER]
    for p in sweep:
        rows.append(",".join(_sig6(v) for v in
                             (p.pin_dbm, p.pout_dbm, p.gain_db, p.pdc_w,
                              p.pae)))
    path = Path(path)
    path.write_bytes(("\r\n".join(rows) + "\r\n").encode("ascii"))
    return path


def read_sweep_csv(path: str | Path) -> list[PowerSweepPoint]:
    text = Path(path).read_text(encoding="ascii")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"missing header {CSV_HEADER!r}")
    out = []
    for line in lines[1:]:
        pin, pout, gain, pdc, pae = (float(t) for t in line.split(","))
        out.append(PowerSweepPoint(pin_dbm=pin, pout_dbm=pout, gain_db=gain,
                                   pdc_w=pdc, pae=pae))
    return out


def si_value(value: float, unit: str) -> str:
    """Engineering notation: 5.743e-9, 'H' -> '5.743 nH'."""
    prefixes = [(1e12, "T"), (1e9, "G"), (1e6, "M"), (1e3, "k"), (1.0, ""),
                (1e-3, "m"), (1e-6, "u"), (1e-9, "n"), (1e-12, "p"),
                (1e-15, "f")]
    if value == 0.0:
        return f"0 {unit}"
    mag = abs(value)
    for scale, prefix in prefixes:
        if mag >= scale:
            return f"{_sig4(value / scale)} {prefix}{unit}"
    return f"{_sig4(value / 1e-15)} f{unit}"


def _sig4(x: float) -> str:
    return np.format_float_positional(x, precision=4, unique=False,
                                      fractional=False, trim="-")


def op_summary(circuit_name: str, dc: DcSolution) -> str:
    lines = [f"DC operating point: {circuit_name}",
             f"iterations {dc.iterations}, residual "
             f"{_sci9(dc.residual_norm)} A", "", "node voltages (V):"]
    for node, v in sorted(dc.node_voltages.items()):
        lines.append(f"  {node:12s} {v:+.6f}")
    lines.append("")
    lines.append("branch currents (A, into + terminal):")
    for cid, i in sorted(dc.branch_currents.items()):
        lines.append(f"  {cid:12s} {i:+.6e}")
    if dc.device_ops:
        lines.append("")
        lines.append("devices:")
        for cid, op in sorted(dc.device_ops.items()):
            lines.append(f"  {cid:8s} {op.region:10s} Vgs={op.vgs:+.4f} V "
                         f"Vds={op.vds:+.4f} V Id={op.id * 1e3:+.4f} mA")
    return "\n".join(lines) + "\n"


def sp_summary(circuit_name: str, two_port: TwoPortSet) -> str:
    lines = [f"S-parameters: {circuit_name}",
             f"{len(two_port.points)} frequencies, Z0 = "
             f"{si_value(two_port.z0, 'ohm')}", "",
             "freq_hz        s21_db    s11_db    K         |Delta|  stable"]
    for pt in two_port.points:
        g = gain_metrics(pt)
        st = rollett_stability(pt)
        k_text = "inf" if math.isinf(st.k) else f"{st.k:8.3f}"
        lines.append(f"{_sci9(pt.freq)} {g.s21_db:+8.3f} {g.s11_db:+9.3f} "
                     f"{k_text:9s} {st.delta_mag:8.4f} "
                     f"{'yes' if st.unconditionally_stable else 'no'}")
    return "\n".join(lines) + "\n"


def sweep_summary(circuit_name: str, report: CompressionReport) -> str:
    lines = [f"power sweep: {circuit_name}",
             f"small-signal gain {report.small_signal_gain_db:.4f} dB"]
    if report.compressed:
        lines.append(f"P1dB input  {report.p1db_in_dbm:+.4f} dBm")
        lines.append(f"P1dB output {report.p1db_out_dbm:+.4f} dBm")
        lines.append(f"PAE at P1dB {report.pae_at_p1db * 100.0:.4f} %")
    else:
        lines.append("gain never compressed by 1 dB within the sweep")
    bad = [p.pin_dbm for p in report.sweep if not p.converged]
    if bad:
        lines.append("non-periodic points excluded: "
                     + ", ".join(f"{p:+.2f} dBm" for p in bad))
    return "\n".join(lines) + "\n"


def match_summary(match: LMatch) -> str:
    lines = [f"L-match at {si_value(match.f0, 'Hz')}",
             f"topology {match.topology}, {match.orientation}, "
             f"Qm = {match.qm:.4f}"]
    if match.is_empty:
        lines.append("source and load already equal: no elements")
    else:
        for label, elem, x in (("series", match.series, match.series_x),
                               ("shunt", match.shunt, match.shunt_x)):
            unit = "H" if elem.kind == "L" else "F"
            lines.append(f"{label:6s} {elem.kind} = "
                         f"{si_value(elem.value, unit)} "
                         f"(X = {x:+.3f} ohm)")
    return "\n".join(lines) + "\n"
