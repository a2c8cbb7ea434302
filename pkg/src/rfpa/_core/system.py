"""Numeric compilation of a Circuit into flat stamp arrays.

All three analyses (DC Newton, complex AC, transient) consume the same
compiled form.  Node index -1 denotes ground; unknown vector layout is
[node voltages..., branch currents...] with one auxiliary current per
inductor, voltage source and controlled source.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..devices import (MosfetModelCard, OperatingPoint,
                       SmallSignalModel, inductor_parasitic_resistance,
                       mosfet_operating_point, mosfet_small_signal)
from ..netlist import (Capacitor, Circuit, GROUND, Inductor, Mosfet,
                       PolyVcvs, Resistor, VSource)


@dataclass(frozen=True)
class UnknownMap:
    """Bijection between circuit quantities and solution-vector rows."""

    node_index: dict[str, int]
    branch_index: dict[str, int]
    n_unknowns: int


@dataclass
class CompiledCircuit:
    circuit: Circuit
    unknowns: UnknownMap
    node_names: list[str]
    n_nodes: int
    n_unknowns: int

    res_nodes: np.ndarray      # (nr, 2) int32
    res_g: np.ndarray          # (nr,) float64 conductance

    cap_nodes: np.ndarray      # (nc, 2)
    cap_c: np.ndarray

    ind_nodes: np.ndarray      # (nl, 2)
    ind_branch: np.ndarray     # (nl,) row index of auxiliary current
    ind_l: np.ndarray
    ind_rs: np.ndarray         # series loss from finite Q

    vsrc_nodes: np.ndarray     # (nv, 2)
    vsrc_branch: np.ndarray
    vsrc_dc: np.ndarray
    vsrc_ac: np.ndarray
    vsrc_amp: np.ndarray       # sine amplitude (0 when no SIN)
    vsrc_freq: np.ndarray
    vsrc_phase: np.ndarray
    vsrc_ids: list[str] = field(default_factory=list)

    mos_nodes: np.ndarray = None       # (nm, 3) drain, gate, source
    mos_beta: np.ndarray = None        # KP * Weff / Lg
    mos_vt0: np.ndarray = None
    mos_lam: np.ndarray = None
    mos_weff: np.ndarray = None
    mos_lg: np.ndarray = None
    mos_cards: list[MosfetModelCard] = field(default_factory=list)
    mos_ids: list[str] = field(default_factory=list)

    vcvs_nodes: np.ndarray = None      # (nk, 4) out+, out-, ctrl+, ctrl-
    vcvs_branch: np.ndarray = None
    vcvs_a1: np.ndarray = None
    vcvs_a3: np.ndarray = None
    vcvs_ids: list[str] = field(default_factory=list)

    ind_ids: list[str] = field(default_factory=list)
    supply_branches: list[tuple[str, int, int]] = field(default_factory=list)
    # (component id, branch row, index into vsrc arrays)

    def node_row(self, node: str) -> int:
        return -1 if node == GROUND else self.unknowns.node_index[node]


def compile_circuit(circuit: Circuit) -> CompiledCircuit:
    node_index: dict[str, int] = {}
    for comp in circuit.components:
        for node in comp.terminals:
            if node != GROUND and node not in node_index:
                node_index[node] = len(node_index)
    n_nodes = len(node_index)

    branch_index: dict[str, int] = {}
    for comp in circuit.components:
        if isinstance(comp.kind, (Inductor, VSource, PolyVcvs)):
            branch_index[comp.id] = n_nodes + len(branch_index)
    n_unknowns = n_nodes + len(branch_index)

    def row(node: str) -> int:
        return -1 if node == GROUND else node_index[node]

    res_n, res_g = [], []
    cap_n, cap_c = [], []
    ind_n, ind_b, ind_l, ind_rs, ind_ids = [], [], [], [], []
    vs_n, vs_b, vs_dc, vs_ac, vs_amp, vs_freq, vs_phase, vs_ids = \
        [], [], [], [], [], [], [], []
    mos_n, mos_beta, mos_vt0, mos_lam, mos_weff, mos_lg = [], [], [], [], [], []
    mos_cards, mos_ids = [], []
    k_n, k_b, k_a1, k_a3, k_ids = [], [], [], [], []

    for comp in circuit.components:
        kind = comp.kind
        if isinstance(kind, Resistor):
            res_n.append([row(comp.terminals[0]), row(comp.terminals[1])])
            res_g.append(1.0 / kind.resistance)
        elif isinstance(kind, Capacitor):
            cap_n.append([row(comp.terminals[0]), row(comp.terminals[1])])
            cap_c.append(kind.capacitance)
        elif isinstance(kind, Inductor):
            ind_n.append([row(comp.terminals[0]), row(comp.terminals[1])])
            ind_b.append(branch_index[comp.id])
            ind_l.append(kind.inductance)
            rs = 0.0
            if kind.q is not None:
                rs = inductor_parasitic_resistance(kind.inductance, kind.q,
                                                   kind.f_ref)
            ind_rs.append(rs)
            ind_ids.append(comp.id)
        elif isinstance(kind, VSource):
            vs_n.append([row(comp.terminals[0]), row(comp.terminals[1])])
            vs_b.append(branch_index[comp.id])
            vs_dc.append(kind.dc)
            vs_ac.append(kind.ac_mag)
            if kind.sine is not None:
                vs_amp.append(kind.sine.amplitude)
                vs_freq.append(kind.sine.freq)
                vs_phase.append(kind.sine.phase)
            else:
                vs_amp.append(0.0)
                vs_freq.append(0.0)
                vs_phase.append(0.0)
            vs_ids.append(comp.id)
        elif isinstance(kind, Mosfet):
            mos_n.append([row(t) for t in comp.terminals])
            mos_beta.append(kind.model.kp * kind.weff / kind.length)
            mos_vt0.append(kind.model.vt0)
            mos_lam.append(kind.model.lam)
            mos_weff.append(kind.weff)
            mos_lg.append(kind.length)
            mos_cards.append(kind.model)
            mos_ids.append(comp.id)
        elif isinstance(kind, PolyVcvs):
            k_n.append([row(t) for t in comp.terminals])
            k_b.append(branch_index[comp.id])
            k_a1.append(kind.a1)
            k_a3.append(kind.a3)
            k_ids.append(comp.id)
        else:
            raise TypeError(f"cannot compile component kind {type(kind)}")

    supply_branches = []
    for supply in circuit.supplies:
        for i, vid in enumerate(vs_ids):
            if vid.lower() == supply.lower():
                supply_branches.append((vid, vs_b[i], i))
                break

    def iarr(data, width):
        return np.array(data, dtype=np.int32).reshape(len(data), width)

    def farr(data):
        return np.array(data, dtype=np.float64)

    return CompiledCircuit(
        circuit=circuit,
        unknowns=UnknownMap(node_index=dict(node_index),
                            branch_index=dict(branch_index),
                            n_unknowns=n_unknowns),
        node_names=list(node_index),
        n_nodes=n_nodes,
        n_unknowns=n_unknowns,
        res_nodes=iarr(res_n, 2), res_g=farr(res_g),
        cap_nodes=iarr(cap_n, 2), cap_c=farr(cap_c),
        ind_nodes=iarr(ind_n, 2), ind_branch=np.array(ind_b, dtype=np.int32),
        ind_l=farr(ind_l), ind_rs=farr(ind_rs), ind_ids=ind_ids,
        vsrc_nodes=iarr(vs_n, 2), vsrc_branch=np.array(vs_b, dtype=np.int32),
        vsrc_dc=farr(vs_dc), vsrc_ac=farr(vs_ac), vsrc_amp=farr(vs_amp),
        vsrc_freq=farr(vs_freq), vsrc_phase=farr(vs_phase), vsrc_ids=vs_ids,
        mos_nodes=iarr(mos_n, 3), mos_beta=farr(mos_beta),
        mos_vt0=farr(mos_vt0), mos_lam=farr(mos_lam), mos_weff=farr(mos_weff),
        mos_lg=farr(mos_lg), mos_cards=mos_cards, mos_ids=mos_ids,
        vcvs_nodes=iarr(k_n, 4), vcvs_branch=np.array(k_b, dtype=np.int32),
        vcvs_a1=farr(k_a1), vcvs_a3=farr(k_a3), vcvs_ids=k_ids,
        supply_branches=supply_branches,
    )


# --------------------------------------------------------------------------
# shared stamping helpers (python paths: DC Newton, AC, consistent init)

def _add(mat: np.ndarray, i: int, j: int, val: float) -> None:
    if i >= 0 and j >= 0:
        mat[i, j] += val


def _addv(vec: np.ndarray, i: int, val) -> None:
    if i >= 0:
        vec[i] += val


def mosfet_channel(beta: float, vt0: float, lam: float,
                   vg: float, vd: float, vs: float) -> tuple[float, float, float, float]:
    """Channel current into the drain terminal and partials w.r.t. node
    voltages (did/dvd, did/dvg, did/dvs).  Handles vds < 0 by symmetric
    drain/source exchange so the characteristic stays continuous.
    """
    if vd >= vs:
        vgs, vds = vg - vs, vd - vs
        id_, gm, gds, _ = _square_law(beta, vt0, lam, vgs, vds)
        return id_, gds, gm, -(gm + gds)
    vgs, vds = vg - vd, vs - vd
    id_, gm, gds, _ = _square_law(beta, vt0, lam, vgs, vds)
    # current flows source->drain; derivatives follow the swapped roles
    return -id_, (gm + gds), -gm, -gds


def _square_law(beta: float, vt0: float, lam: float,
                vgs: float, vds: float) -> tuple[float, float, float, str]:
    vov = vgs - vt0
    if vov <= 0.0:
        return 0.0, 0.0, 0.0, "cutoff"
    clm = 1.0 + lam * vds
    if vds < vov:
        core = vov * vds - 0.5 * vds * vds
        return (beta * core * clm, beta * vds * clm,
                beta * ((vov - vds) * clm + core * lam), "triode")
    return (0.5 * beta * vov * vov * clm, beta * vov * clm,
            0.5 * beta * vov * vov * lam, "saturation")


def dc_residual_jacobian(sys: CompiledCircuit, x: np.ndarray,
                         gmin: float = 0.0, source_scale: float = 1.0
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Nonlinear DC system F(x) and Jacobian.

    Capacitors are open; inductors reduce to their series loss resistance
    (an ideal short when Q is not given) with an auxiliary current.
    """
    n = sys.n_unknowns
    F = np.zeros(n)
    J = np.zeros((n, n))

    def v(i: int) -> float:
        return 0.0 if i < 0 else x[i]

    for k in range(len(sys.res_g)):
        a, b = sys.res_nodes[k]
        g = sys.res_g[k]
        i = g * (v(a) - v(b))
        _addv(F, a, i); _addv(F, b, -i)
        _add(J, a, a, g); _add(J, b, b, g)
        _add(J, a, b, -g); _add(J, b, a, -g)

    for k in range(len(sys.ind_l)):
        a, b = sys.ind_nodes[k]
        br = sys.ind_branch[k]
        i_l = x[br]
        _addv(F, a, i_l); _addv(F, b, -i_l)
        _add(J, a, br, 1.0); _add(J, b, br, -1.0)
        F[br] = v(a) - v(b) - sys.ind_rs[k] * i_l
        _add(J, br, a, 1.0); _add(J, br, b, -1.0)
        J[br, br] -= sys.ind_rs[k]

    for k in range(len(sys.vsrc_dc)):
        a, b = sys.vsrc_nodes[k]
        br = sys.vsrc_branch[k]
        i_s = x[br]
        _addv(F, a, i_s); _addv(F, b, -i_s)
        _add(J, a, br, 1.0); _add(J, b, br, -1.0)
        F[br] = v(a) - v(b) - sys.vsrc_dc[k] * source_scale
        _add(J, br, a, 1.0); _add(J, br, b, -1.0)

    for k in range(len(sys.mos_beta)):
        d, g, s = sys.mos_nodes[k]
        id_, dd, dg, ds = mosfet_channel(sys.mos_beta[k], sys.mos_vt0[k],
                                         sys.mos_lam[k], v(g), v(d), v(s))
        _addv(F, d, id_); _addv(F, s, -id_)
        _add(J, d, d, dd); _add(J, d, g, dg); _add(J, d, s, ds)
        _add(J, s, d, -dd); _add(J, s, g, -dg); _add(J, s, s, -ds)

    for k in range(len(sys.vcvs_a1)):
        op, om, cp, cm = sys.vcvs_nodes[k]
        br = sys.vcvs_branch[k]
        i_b = x[br]
        _addv(F, op, i_b); _addv(F, om, -i_b)
        _add(J, op, br, 1.0); _add(J, om, br, -1.0)
        vc = v(cp) - v(cm)
        emf = sys.vcvs_a1[k] * vc + sys.vcvs_a3[k] * vc ** 3
        demf = sys.vcvs_a1[k] + 3.0 * sys.vcvs_a3[k] * vc * vc
        F[br] = v(op) - v(om) - emf
        _add(J, br, op, 1.0); _add(J, br, om, -1.0)
        _add(J, br, cp, -demf); _add(J, br, cm, demf)

    if gmin > 0.0:
        for i in range(sys.n_nodes):
            F[i] += gmin * x[i]
            J[i, i] += gmin

    return F, J


def ac_matrices(sys: CompiledCircuit,
                ss_models: list[SmallSignalModel],
                vcvs_gain: np.ndarray | None = None
                ) -> tuple[np.ndarray, np.ndarray]:
    """Frequency-independent split A(w) = A_g + j*w*A_c of the AC system.

    ss_models supplies one linearization per MOSFET (compile order);
    vcvs_gain the small-signal gain per controlled source.
    """
    n = sys.n_unknowns
    A_g = np.zeros((n, n))
    A_c = np.zeros((n, n))

    for k in range(len(sys.res_g)):
        a, b = sys.res_nodes[k]
        g = sys.res_g[k]
        _add(A_g, a, a, g); _add(A_g, b, b, g)
        _add(A_g, a, b, -g); _add(A_g, b, a, -g)

    for k in range(len(sys.cap_c)):
        a, b = sys.cap_nodes[k]
        c = sys.cap_c[k]
        _add(A_c, a, a, c); _add(A_c, b, b, c)
        _add(A_c, a, b, -c); _add(A_c, b, a, -c)

    for k in range(len(sys.ind_l)):
        a, b = sys.ind_nodes[k]
        br = sys.ind_branch[k]
        _add(A_g, a, br, 1.0); _add(A_g, b, br, -1.0)
        _add(A_g, br, a, 1.0); _add(A_g, br, b, -1.0)
        A_g[br, br] -= sys.ind_rs[k]
        A_c[br, br] -= sys.ind_l[k]

    for k in range(len(sys.vsrc_dc)):
        a, b = sys.vsrc_nodes[k]
        br = sys.vsrc_branch[k]
        _add(A_g, a, br, 1.0); _add(A_g, b, br, -1.0)
        _add(A_g, br, a, 1.0); _add(A_g, br, b, -1.0)

    for k in range(len(sys.mos_beta)):
        d, g, s = sys.mos_nodes[k]
        m = ss_models[k]
        # gm: current gm*(vg - vs) into drain, out of source
        _add(A_g, d, g, m.gm); _add(A_g, d, s, -m.gm)
        _add(A_g, s, g, -m.gm); _add(A_g, s, s, m.gm)
        _add(A_g, d, d, m.gds); _add(A_g, d, s, -m.gds)
        _add(A_g, s, d, -m.gds); _add(A_g, s, s, m.gds)
        _add(A_c, g, g, m.cgs); _add(A_c, s, s, m.cgs)
        _add(A_c, g, s, -m.cgs); _add(A_c, s, g, -m.cgs)
        _add(A_c, g, g, m.cgd); _add(A_c, d, d, m.cgd)
        _add(A_c, g, d, -m.cgd); _add(A_c, d, g, -m.cgd)

    for k in range(len(sys.vcvs_a1)):
        op, om, cp, cm = sys.vcvs_nodes[k]
        br = sys.vcvs_branch[k]
        gain = sys.vcvs_a1[k] if vcvs_gain is None else vcvs_gain[k]
        _add(A_g, op, br, 1.0); _add(A_g, om, br, -1.0)
        _add(A_g, br, op, 1.0); _add(A_g, br, om, -1.0)
        _add(A_g, br, cp, -gain); _add(A_g, br, cm, gain)

    return A_g, A_c


def device_operating_points(sys: CompiledCircuit, x: np.ndarray
                            ) -> dict[str, OperatingPoint]:
    """Extract per-MOSFET bias from a DC solution vector."""
    ops: dict[str, OperatingPoint] = {}

    def v(i: int) -> float:
        return 0.0 if i < 0 else x[i]

    for k, comp_id in enumerate(sys.mos_ids):
        d, g, s = sys.mos_nodes[k]
        vd, vg, vs = v(d), v(g), v(s)
        if vd >= vs:
            ops[comp_id] = mosfet_operating_point(
                sys.mos_cards[k], sys.mos_weff[k], sys.mos_lg[k],
                float(vg - vs), float(vd - vs))
        else:
            # report the swapped-terminal bias; current sign follows vds
            op = mosfet_operating_point(sys.mos_cards[k], sys.mos_weff[k],
                                        sys.mos_lg[k], float(vg - vd),
                                        float(vs - vd))
            ops[comp_id] = OperatingPoint(vgs=float(vg - vs),
                                          vds=float(vd - vs),
                                          id=-op.id, region=op.region)
    return ops


def small_signal_models(sys: CompiledCircuit,
                        ops: dict[str, OperatingPoint]
                        ) -> list[SmallSignalModel]:
    models = []
    for k, comp_id in enumerate(sys.mos_ids):
        op = ops[comp_id]
        if op.vds < 0:
            op = OperatingPoint(vgs=op.vgs - op.vds, vds=-op.vds,
                                id=-op.id, region=op.region)
        models.append(mosfet_small_signal(sys.mos_cards[k], sys.mos_weff[k],
                                          sys.mos_lg[k], op))
    return models


def vcvs_small_signal_gain(sys: CompiledCircuit, x_dc: np.ndarray) -> np.ndarray:
    gains = np.zeros(len(sys.vcvs_a1))
    for k in range(len(sys.vcvs_a1)):
        _, _, cp, cm = sys.vcvs_nodes[k]
        vc = (0.0 if cp < 0 else x_dc[cp]) - (0.0 if cm < 0 else x_dc[cm])
        gains[k] = sys.vcvs_a1[k] + 3.0 * sys.vcvs_a3[k] * vc * vc
    return gains
