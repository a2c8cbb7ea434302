"""Transient problem setup shared by the compiled and pure-Python engines.

Time integration is trapezoidal with per-step Newton solves.  MOSFET gate
capacitances are frozen at their DC-bias values and folded into the linear
capacitor list, which makes the small-drive limit of the transient engine
agree with the AC linearization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .system import CompiledCircuit, small_signal_models
from ..devices import OperatingPoint

NEWTON_ABSTOL = 1e-9     # amperes, KCL residual per step
NEWTON_MAX_ITER = 50
MAX_DT_HALVINGS = 8


class TransientStepError(RuntimeError):
    """Newton failed at a time point even after dt halving."""

    def __init__(self, time: float):
        self.time = time
        super().__init__(f"transient Newton failed near t = {time:.6e} s "
                         f"after {MAX_DT_HALVINGS} dt halvings")


@dataclass
class TransientSystem:
    """Flat arrays consumed by the integration kernels."""

    n_unknowns: int
    n_nodes: int
    res_nodes: np.ndarray
    res_g: np.ndarray
    cap_nodes: np.ndarray
    cap_c: np.ndarray
    ind_nodes: np.ndarray
    ind_branch: np.ndarray
    ind_l: np.ndarray
    ind_rs: np.ndarray
    vsrc_nodes: np.ndarray
    vsrc_branch: np.ndarray
    vsrc_dc: np.ndarray
    vsrc_amp: np.ndarray
    vsrc_omega: np.ndarray
    vsrc_phase: np.ndarray
    mos_nodes: np.ndarray
    mos_beta: np.ndarray
    mos_vt0: np.ndarray
    mos_lam: np.ndarray
    vcvs_nodes: np.ndarray
    vcvs_branch: np.ndarray
    vcvs_a1: np.ndarray
    vcvs_a3: np.ndarray


@dataclass
class TransientState:
    """Integration state: solution vector plus companion-model history."""

    x: np.ndarray        # (n_unknowns,)
    cap_i: np.ndarray    # capacitor currents
    ind_vl: np.ndarray   # inductor L*dI/dt voltages
    t: float             # absolute time of x

    def copy(self) -> "TransientState":
        return TransientState(self.x.copy(), self.cap_i.copy(),
                              self.ind_vl.copy(), self.t)


def build_transient_system(sys: CompiledCircuit,
                           ops: dict[str, OperatingPoint] | None
                           ) -> TransientSystem:
    """Assemble kernel arrays; `ops` supplies the bias for device caps."""
    cap_nodes = [list(row) for row in sys.cap_nodes]
    cap_c = list(sys.cap_c)
    if len(sys.mos_ids) and ops is not None:
        for k, model in enumerate(small_signal_models(sys, ops)):
            d, g, s = sys.mos_nodes[k]
            if model.cgs > 0.0:
                cap_nodes.append([int(g), int(s)])
                cap_c.append(model.cgs)
            if model.cgd > 0.0:
                cap_nodes.append([int(g), int(d)])
                cap_c.append(model.cgd)
    return TransientSystem(
        n_unknowns=sys.n_unknowns,
        n_nodes=sys.n_nodes,
        res_nodes=sys.res_nodes, res_g=sys.res_g,
        cap_nodes=np.array(cap_nodes, dtype=np.int32).reshape(len(cap_c), 2),
        cap_c=np.array(cap_c, dtype=np.float64),
        ind_nodes=sys.ind_nodes, ind_branch=sys.ind_branch,
        ind_l=sys.ind_l, ind_rs=sys.ind_rs,
        vsrc_nodes=sys.vsrc_nodes, vsrc_branch=sys.vsrc_branch,
        vsrc_dc=sys.vsrc_dc, vsrc_amp=sys.vsrc_amp,
        vsrc_omega=2.0 * np.pi * sys.vsrc_freq, vsrc_phase=sys.vsrc_phase,
        mos_nodes=sys.mos_nodes, mos_beta=sys.mos_beta,
        mos_vt0=sys.mos_vt0, mos_lam=sys.mos_lam,
        vcvs_nodes=sys.vcvs_nodes, vcvs_branch=sys.vcvs_branch,
        vcvs_a1=sys.vcvs_a1, vcvs_a3=sys.vcvs_a3,
    )


def initial_state(ts: TransientSystem, x_dc: np.ndarray) -> TransientState:
    """Consistent t=0+ state from the DC operating point.

    Source waveforms may jump at t=0 relative to the DC convention (the DC
    solve sees only the DC field).  Capacitor voltages and inductor
    currents are continuous, so the t=0+ state solves the algebraic system
    with every capacitor pinned at its DC voltage (its current becomes an
    extra unknown), every inductor current frozen, and sources at their
    t=0 waveform values.  For continuous drives this reduces exactly to
    the DC point with zero companion history.
    """
    x_dc = np.asarray(x_dc, dtype=np.float64)
    n = ts.n_unknowns
    nc = len(ts.cap_c)
    nl = len(ts.ind_l)
    e0 = ts.vsrc_dc + ts.vsrc_amp * np.sin(ts.vsrc_phase)
    i_l0 = x_dc[ts.ind_branch] if nl else np.zeros(0)

    y = np.concatenate([x_dc, np.zeros(nc)])
    vab_dc = _vab(x_dc, ts.cap_nodes)

    def vat(x, i):
        return x[i] if i >= 0 else 0.0

    converged = False
    for _ in range(NEWTON_MAX_ITER):
        F = np.zeros(n + nc)
        J = np.zeros((n + nc, n + nc))

        def add(i, j, v):
            if i >= 0 and j >= 0:
                J[i, j] += v

        for k in range(len(ts.res_g)):
            a, b = ts.res_nodes[k]
            g = ts.res_g[k]
            i = g * (vat(y, a) - vat(y, b))
            if a >= 0:
                F[a] += i
            if b >= 0:
                F[b] -= i
            add(a, a, g); add(b, b, g); add(a, b, -g); add(b, a, -g)

        for k in range(nc):
            a, b = ts.cap_nodes[k]
            row = n + k
            ic = y[row]
            if a >= 0:
                F[a] += ic
            if b >= 0:
                F[b] -= ic
            add(a, row, 1.0); add(b, row, -1.0)
            F[row] = vat(y, a) - vat(y, b) - vab_dc[k]
            add(row, a, 1.0); add(row, b, -1.0)

        for k in range(nl):
            a, b = ts.ind_nodes[k]
            br = ts.ind_branch[k]
            i_l = y[br]
            if a >= 0:
                F[a] += i_l
            if b >= 0:
                F[b] -= i_l
            add(a, br, 1.0); add(b, br, -1.0)
            F[br] = i_l - i_l0[k]
            J[br, br] += 1.0

        for k in range(len(ts.vsrc_dc)):
            a, b = ts.vsrc_nodes[k]
            br = ts.vsrc_branch[k]
            i_s = y[br]
            if a >= 0:
                F[a] += i_s
            if b >= 0:
                F[b] -= i_s
            add(a, br, 1.0); add(b, br, -1.0)
            F[br] = vat(y, a) - vat(y, b) - e0[k]
            add(br, a, 1.0); add(br, b, -1.0)

        for k in range(len(ts.mos_beta)):
            d, g, s = ts.mos_nodes[k]
            id_, dd, dg, ds = _mos_channel_py(
                ts.mos_beta[k], ts.mos_vt0[k], ts.mos_lam[k],
                vat(y, g), vat(y, d), vat(y, s))
            if d >= 0:
                F[d] += id_
            if s >= 0:
                F[s] -= id_
            add(d, d, dd); add(d, g, dg); add(d, s, ds)
            add(s, d, -dd); add(s, g, -dg); add(s, s, -ds)

        for k in range(len(ts.vcvs_a1)):
            op, om, cp, cm = ts.vcvs_nodes[k]
            br = ts.vcvs_branch[k]
            i_b = y[br]
            if op >= 0:
                F[op] += i_b
            if om >= 0:
                F[om] -= i_b
            add(op, br, 1.0); add(om, br, -1.0)
            vc = vat(y, cp) - vat(y, cm)
            F[br] = vat(y, op) - vat(y, om) \
                - (ts.vcvs_a1[k] * vc + ts.vcvs_a3[k] * vc ** 3)
            demf = ts.vcvs_a1[k] + 3.0 * ts.vcvs_a3[k] * vc * vc
            add(br, op, 1.0); add(br, om, -1.0)
            add(br, cp, -demf); add(br, cm, demf)

        if np.max(np.abs(F)) < NEWTON_ABSTOL:
            converged = True
            break
        y += np.linalg.solve(J, -F)

    if not converged:
        raise TransientStepError(0.0)

    x0 = y[:n]
    ind_vl = np.zeros(nl)
    for k in range(nl):
        a, b = ts.ind_nodes[k]
        ind_vl[k] = vat(x0, a) - vat(x0, b) - ts.ind_rs[k] * x0[ts.ind_branch[k]]
    return TransientState(x=x0, cap_i=y[n:].copy(), ind_vl=ind_vl, t=0.0)


def _vab(x: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    if len(nodes) == 0:
        return np.zeros(0)
    va = np.where(nodes[:, 0] >= 0, x[nodes[:, 0]], 0.0)
    vb = np.where(nodes[:, 1] >= 0, x[nodes[:, 1]], 0.0)
    return va - vb


def _mos_channel_py(beta, vt0, lam, vg, vd, vs):
    if vd >= vs:
        sign, vgs, vds = 1.0, vg - vs, vd - vs
    else:
        sign, vgs, vds = -1.0, vg - vd, vs - vd
    vov = vgs - vt0
    if vov <= 0.0:
        return 0.0, 0.0, 0.0, 0.0
    clm = 1.0 + lam * vds
    if vds < vov:
        core = vov * vds - 0.5 * vds * vds
        id_ = beta * core * clm
        gm = beta * vds * clm
        gds = beta * ((vov - vds) * clm + core * lam)
    else:
        id_ = 0.5 * beta * vov * vov * clm
        gm = beta * vov * clm
        gds = 0.5 * beta * vov * vov * lam
    if sign > 0:
        return id_, gds, gm, -(gm + gds)
    return -id_, gm + gds, -gm, -gds
