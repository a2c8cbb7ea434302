"""Pure-numpy transient integration engine (fallback backend).

Implements the same trapezoidal stepping contract as the compiled kernel:
integrate(ts, state, n_steps, dt) advances `state` in place and returns the
solution rows for steps 1..n_steps.
"""

from __future__ import annotations

import numpy as np

from .transient import (MAX_DT_HALVINGS, NEWTON_ABSTOL, NEWTON_MAX_ITER,
                        TransientState, TransientStepError, TransientSystem)

BACKEND_NAME = "python"


def _linear_parts(ts: TransientSystem, dt: float):
    """Constant Jacobian and per-step stamp indices for a fixed dt."""
    n = ts.n_unknowns
    A = np.zeros((n, n))

    def add(i, j, v):
        if i >= 0 and j >= 0:
            A[i, j] += v

    for k in range(len(ts.res_g)):
        a, b = ts.res_nodes[k]
        g = ts.res_g[k]
        add(a, a, g); add(b, b, g); add(a, b, -g); add(b, a, -g)

    cap_geq = 2.0 * ts.cap_c / dt
    for k in range(len(ts.cap_c)):
        a, b = ts.cap_nodes[k]
        g = cap_geq[k]
        add(a, a, g); add(b, b, g); add(a, b, -g); add(b, a, -g)

    ind_k = dt / (2.0 * ts.ind_l) if len(ts.ind_l) else ts.ind_l
    for k in range(len(ts.ind_l)):
        a, b = ts.ind_nodes[k]
        br = ts.ind_branch[k]
        add(a, br, 1.0); add(b, br, -1.0)
        A[br, br] += 1.0 + ind_k[k] * ts.ind_rs[k]
        add(br, a, -ind_k[k]); add(br, b, ind_k[k])

    for k in range(len(ts.vsrc_dc)):
        a, b = ts.vsrc_nodes[k]
        br = ts.vsrc_branch[k]
        add(a, br, 1.0); add(b, br, -1.0)
        add(br, a, 1.0); add(br, b, -1.0)

    for k in range(len(ts.vcvs_a1)):
        op, om, _, _ = ts.vcvs_nodes[k]
        br = ts.vcvs_branch[k]
        add(op, br, 1.0); add(om, br, -1.0)
        add(br, op, 1.0); add(br, om, -1.0)

    return A, cap_geq, ind_k


def _vab(x: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    if len(nodes) == 0:
        return np.zeros(0)
    va = np.where(nodes[:, 0] >= 0, x[nodes[:, 0]], 0.0)
    vb = np.where(nodes[:, 1] >= 0, x[nodes[:, 1]], 0.0)
    return va - vb


def _source_values(ts: TransientSystem, t: float) -> np.ndarray:
    return ts.vsrc_dc + ts.vsrc_amp * np.sin(ts.vsrc_omega * t + ts.vsrc_phase)


def _step(ts: TransientSystem, state: TransientState, dt: float,
          A_lin: np.ndarray, cap_geq: np.ndarray, ind_k: np.ndarray) -> bool:
    """One trapezoidal step; returns False when Newton fails."""
    t1 = state.t + dt
    n = ts.n_unknowns
    b = np.zeros(n)

    cap_vab0 = _vab(state.x, ts.cap_nodes)
    cap_hist = cap_geq * cap_vab0 + state.cap_i
    for k in range(len(ts.cap_c)):
        a, bb = ts.cap_nodes[k]
        if a >= 0:
            b[a] += cap_hist[k]
        if bb >= 0:
            b[bb] -= cap_hist[k]

    for k in range(len(ts.ind_l)):
        br = ts.ind_branch[k]
        b[br] = state.x[br] + ind_k[k] * state.ind_vl[k]

    e1 = _source_values(ts, t1)
    for k in range(len(ts.vsrc_dc)):
        b[ts.vsrc_branch[k]] = e1[k]

    x = state.x.copy()
    converged = False
    for _ in range(NEWTON_MAX_ITER):
        F = A_lin @ x - b
        dev_rows = []
        for k in range(len(ts.mos_beta)):
            d, g, s = ts.mos_nodes[k]
            vd = x[d] if d >= 0 else 0.0
            vg = x[g] if g >= 0 else 0.0
            vs = x[s] if s >= 0 else 0.0
            id_, dd, dg, ds = _mos_channel(ts.mos_beta[k], ts.mos_vt0[k],
                                           ts.mos_lam[k], vg, vd, vs)
            if d >= 0:
                F[d] += id_
            if s >= 0:
                F[s] -= id_
            dev_rows.append(("mos", k, dd, dg, ds))
        for k in range(len(ts.vcvs_a1)):
            _, _, cp, cm = ts.vcvs_nodes[k]
            br = ts.vcvs_branch[k]
            vc = (x[cp] if cp >= 0 else 0.0) - (x[cm] if cm >= 0 else 0.0)
            F[br] -= ts.vcvs_a1[k] * vc + ts.vcvs_a3[k] * vc ** 3
            dev_rows.append(("vcvs", k,
                             ts.vcvs_a1[k] + 3.0 * ts.vcvs_a3[k] * vc * vc,
                             0.0, 0.0))

        if np.max(np.abs(F)) < NEWTON_ABSTOL:
            converged = True
            break

        J = A_lin.copy()
        for tag, k, p1, p2, p3 in dev_rows:
            if tag == "mos":
                d, g, s = ts.mos_nodes[k]
                _jadd(J, d, d, p1); _jadd(J, d, g, p2); _jadd(J, d, s, p3)
                _jadd(J, s, d, -p1); _jadd(J, s, g, -p2); _jadd(J, s, s, -p3)
            else:
                _, _, cp, cm = ts.vcvs_nodes[k]
                br = ts.vcvs_branch[k]
                _jadd(J, br, cp, -p1); _jadd(J, br, cm, p1)
        try:
            delta = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(delta)):
            return False
        x += delta

    if not converged:
        return False

    cap_vab1 = _vab(x, ts.cap_nodes)
    state.cap_i = cap_geq * (cap_vab1 - cap_vab0) - state.cap_i
    for k in range(len(ts.ind_l)):
        vab = _pair(x, ts.ind_nodes[k])
        state.ind_vl[k] = vab - ts.ind_rs[k] * x[ts.ind_branch[k]]
    state.x = x
    state.t = t1
    return True


def _pair(x: np.ndarray, nodes) -> float:
    a, b = nodes
    va = x[a] if a >= 0 else 0.0
    vb = x[b] if b >= 0 else 0.0
    return va - vb


def _jadd(J, i, j, v):
    if i >= 0 and j >= 0:
        J[i, j] += v


def _mos_channel(beta, vt0, lam, vg, vd, vs):
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


def _advance(ts: TransientSystem, state: TransientState, dt: float,
             parts, depth: int) -> None:
    """One grid step with recursive dt halving on Newton failure."""
    if _step(ts, state, dt, *parts):
        return
    if depth >= MAX_DT_HALVINGS:
        raise TransientStepError(state.t + dt)
    half_parts = _linear_parts(ts, dt / 2.0)
    _advance(ts, state, dt / 2.0, half_parts, depth + 1)
    _advance(ts, state, dt / 2.0, half_parts, depth + 1)


def integrate(ts: TransientSystem, state: TransientState, n_steps: int,
              dt: float) -> np.ndarray:
    """Advance n_steps of size dt; returns rows for steps 1..n_steps."""
    out = np.empty((n_steps, ts.n_unknowns))
    parts = _linear_parts(ts, dt)
    for i in range(n_steps):
        _advance(ts, state, dt, parts, 0)
        out[i] = state.x
    return out
