# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, language_level=3
"""Compiled trapezoidal transient kernel.

Same stepping contract as engine_py: per-step Newton on the companion-model
system, recursive dt halving on failure.  All state lives in flat C arrays;
the step loop runs without the GIL so sweep points can overlap on threads.
"""

from libc.math cimport fabs, sin

import numpy as np

from .transient import (MAX_DT_HALVINGS, NEWTON_ABSTOL, NEWTON_MAX_ITER,
                        TransientStepError)

BACKEND_NAME = "compiled"

cdef double ABSTOL = NEWTON_ABSTOL
cdef int MAX_ITER = NEWTON_MAX_ITER
cdef int MAX_HALVINGS = MAX_DT_HALVINGS


cdef struct Sys:
    int n
    int nr, nc, nl, nv, nm, nk
    int *res_n
    double *res_g
    int *cap_n
    double *cap_c
    int *ind_n
    int *ind_b
    double *ind_l
    double *ind_rs
    int *vs_n
    int *vs_b
    double *vs_dc
    double *vs_amp
    double *vs_om
    double *vs_ph
    int *mos_n
    double *mos_beta
    double *mos_vt0
    double *mos_lam
    int *k_n
    int *k_b
    double *k_a1
    double *k_a3


cdef struct Work:
    double *J        # n*n
    double *F        # n
    double *x        # n, Newton iterate
    double *cap_hist # nc
    double *cap_vab0 # nc
    double *ind_rhs  # nl
    int *piv         # n


cdef inline double vat(double *x, int i) noexcept nogil:
    return x[i] if i >= 0 else 0.0


cdef inline void jadd(double *J, int n, int i, int j, double v) noexcept nogil:
    if i >= 0 and j >= 0:
        J[i * n + j] += v


cdef int lu_solve(double *A, double *b, int *piv, int n) noexcept nogil:
    """In-place partial-pivot LU; solution left in b.  Returns 0 on success."""
    cdef int i, j, k, p
    cdef double amax, tmp, pivval
    for k in range(n):
        p = k
        amax = fabs(A[k * n + k])
        for i in range(k + 1, n):
            if fabs(A[i * n + k]) > amax:
                amax = fabs(A[i * n + k])
                p = i
        if amax <= 0.0 or amax != amax:
            return 1
        piv[k] = p
        if p != k:
            for j in range(n):
                tmp = A[k * n + j]
                A[k * n + j] = A[p * n + j]
                A[p * n + j] = tmp
            tmp = b[k]
            b[k] = b[p]
            b[p] = tmp
        pivval = A[k * n + k]
        for i in range(k + 1, n):
            tmp = A[i * n + k] / pivval
            A[i * n + k] = tmp
            if tmp != 0.0:
                for j in range(k + 1, n):
                    A[i * n + j] -= tmp * A[k * n + j]
                b[i] -= tmp * b[k]
    for i in range(n - 1, -1, -1):
        tmp = b[i]
        for j in range(i + 1, n):
            tmp -= A[i * n + j] * b[j]
        b[i] = tmp / A[i * n + i]
    return 0


cdef void mos_channel(double beta, double vt0, double lam,
                      double vg, double vd, double vs,
                      double *out) noexcept nogil:
    """out = [id, did/dvd, did/dvg, did/dvs]; symmetric for vds < 0."""
    cdef double sign, vgs, vds, vov, clm, core, id_, gm, gds
    if vd >= vs:
        sign = 1.0
        vgs = vg - vs
        vds = vd - vs
    else:
        sign = -1.0
        vgs = vg - vd
        vds = vs - vd
    vov = vgs - vt0
    if vov <= 0.0:
        out[0] = 0.0; out[1] = 0.0; out[2] = 0.0; out[3] = 0.0
        return
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
    if sign > 0.0:
        out[0] = id_; out[1] = gds; out[2] = gm; out[3] = -(gm + gds)
    else:
        out[0] = -id_; out[1] = gm + gds; out[2] = -gm; out[3] = -gds


cdef int newton_step(Sys *S, Work *W, double *x, double *cap_i,
                     double *ind_vl, double t1, double dt) noexcept nogil:
    """One trapezoidal step from (x, histories); 0 on success.

    On success x, cap_i and ind_vl are advanced in place.
    """
    cdef int n = S.n
    cdef int i, j, k, a, b, br, it, d, g, s
    cdef int op, om, cp, cm
    cdef double geq, kk, val, e1, vc, emf, demf, resid
    cdef double dev[4]

    for k in range(S.nc):
        a = S.cap_n[2 * k]; b = S.cap_n[2 * k + 1]
        W.cap_vab0[k] = vat(x, a) - vat(x, b)
        W.cap_hist[k] = (2.0 * S.cap_c[k] / dt) * W.cap_vab0[k] + cap_i[k]
    for k in range(S.nl):
        kk = dt / (2.0 * S.ind_l[k])
        W.ind_rhs[k] = x[S.ind_b[k]] + kk * ind_vl[k]
    for i in range(n):
        W.x[i] = x[i]

    for it in range(MAX_ITER):
        for i in range(n):
            W.F[i] = 0.0
        for i in range(n * n):
            W.J[i] = 0.0

        for k in range(S.nr):
            a = S.res_n[2 * k]; b = S.res_n[2 * k + 1]
            geq = S.res_g[k]
            val = geq * (vat(W.x, a) - vat(W.x, b))
            if a >= 0:
                W.F[a] += val
            if b >= 0:
                W.F[b] -= val
            jadd(W.J, n, a, a, geq); jadd(W.J, n, b, b, geq)
            jadd(W.J, n, a, b, -geq); jadd(W.J, n, b, a, -geq)

        for k in range(S.nc):
            a = S.cap_n[2 * k]; b = S.cap_n[2 * k + 1]
            geq = 2.0 * S.cap_c[k] / dt
            val = geq * (vat(W.x, a) - vat(W.x, b)) - W.cap_hist[k]
            if a >= 0:
                W.F[a] += val
            if b >= 0:
                W.F[b] -= val
            jadd(W.J, n, a, a, geq); jadd(W.J, n, b, b, geq)
            jadd(W.J, n, a, b, -geq); jadd(W.J, n, b, a, -geq)

        for k in range(S.nl):
            a = S.ind_n[2 * k]; b = S.ind_n[2 * k + 1]
            br = S.ind_b[k]
            kk = dt / (2.0 * S.ind_l[k])
            val = W.x[br]
            if a >= 0:
                W.F[a] += val
            if b >= 0:
                W.F[b] -= val
            jadd(W.J, n, a, br, 1.0); jadd(W.J, n, b, br, -1.0)
            W.F[br] += val * (1.0 + kk * S.ind_rs[k]) \
                - kk * (vat(W.x, a) - vat(W.x, b)) - W.ind_rhs[k]
            W.J[br * n + br] += 1.0 + kk * S.ind_rs[k]
            jadd(W.J, n, br, a, -kk); jadd(W.J, n, br, b, kk)

        for k in range(S.nv):
            a = S.vs_n[2 * k]; b = S.vs_n[2 * k + 1]
            br = S.vs_b[k]
            e1 = S.vs_dc[k] + S.vs_amp[k] * sin(S.vs_om[k] * t1 + S.vs_ph[k])
            val = W.x[br]
            if a >= 0:
                W.F[a] += val
            if b >= 0:
                W.F[b] -= val
            jadd(W.J, n, a, br, 1.0); jadd(W.J, n, b, br, -1.0)
            W.F[br] += vat(W.x, a) - vat(W.x, b) - e1
            jadd(W.J, n, br, a, 1.0); jadd(W.J, n, br, b, -1.0)

        for k in range(S.nm):
            d = S.mos_n[3 * k]; g = S.mos_n[3 * k + 1]; s = S.mos_n[3 * k + 2]
            mos_channel(S.mos_beta[k], S.mos_vt0[k], S.mos_lam[k],
                        vat(W.x, g), vat(W.x, d), vat(W.x, s), dev)
            if d >= 0:
                W.F[d] += dev[0]
            if s >= 0:
                W.F[s] -= dev[0]
            jadd(W.J, n, d, d, dev[1]); jadd(W.J, n, d, g, dev[2])
            jadd(W.J, n, d, s, dev[3])
            jadd(W.J, n, s, d, -dev[1]); jadd(W.J, n, s, g, -dev[2])
            jadd(W.J, n, s, s, -dev[3])

        for k in range(S.nk):
            op = S.k_n[4 * k]; om = S.k_n[4 * k + 1]
            cp = S.k_n[4 * k + 2]; cm = S.k_n[4 * k + 3]
            br = S.k_b[k]
            val = W.x[br]
            if op >= 0:
                W.F[op] += val
            if om >= 0:
                W.F[om] -= val
            jadd(W.J, n, op, br, 1.0); jadd(W.J, n, om, br, -1.0)
            vc = vat(W.x, cp) - vat(W.x, cm)
            emf = S.k_a1[k] * vc + S.k_a3[k] * vc * vc * vc
            demf = S.k_a1[k] + 3.0 * S.k_a3[k] * vc * vc
            W.F[br] += vat(W.x, op) - vat(W.x, om) - emf
            jadd(W.J, n, br, op, 1.0); jadd(W.J, n, br, om, -1.0)
            jadd(W.J, n, br, cp, -demf); jadd(W.J, n, br, cm, demf)

        resid = 0.0
        for i in range(n):
            if fabs(W.F[i]) > resid:
                resid = fabs(W.F[i])
        if resid < ABSTOL:
            break
        if it == MAX_ITER - 1:
            return 1

        for i in range(n):
            W.F[i] = -W.F[i]
        if lu_solve(W.J, W.F, W.piv, n):
            return 1
        for i in range(n):
            W.x[i] += W.F[i]
            if W.x[i] != W.x[i]:
                return 1

    for k in range(S.nc):
        a = S.cap_n[2 * k]; b = S.cap_n[2 * k + 1]
        geq = 2.0 * S.cap_c[k] / dt
        cap_i[k] = geq * ((vat(W.x, a) - vat(W.x, b)) - W.cap_vab0[k]) \
            - cap_i[k]
    for k in range(S.nl):
        a = S.ind_n[2 * k]; b = S.ind_n[2 * k + 1]
        ind_vl[k] = vat(W.x, a) - vat(W.x, b) - S.ind_rs[k] * W.x[S.ind_b[k]]
    for i in range(n):
        x[i] = W.x[i]
    return 0


cdef int advance(Sys *S, Work *W, double *x, double *cap_i, double *ind_vl,
                 double t0, double dt, int depth) noexcept nogil:
    """Grid step with recursive dt halving; 0 on success."""
    if newton_step(S, W, x, cap_i, ind_vl, t0 + dt, dt) == 0:
        return 0
    if depth >= MAX_HALVINGS:
        return 1
    if advance(S, W, x, cap_i, ind_vl, t0, 0.5 * dt, depth + 1):
        return 1
    return advance(S, W, x, cap_i, ind_vl, t0 + 0.5 * dt, 0.5 * dt, depth + 1)


def integrate(ts, state, int n_steps, double dt):
    """Advance n_steps of size dt; returns rows for steps 1..n_steps."""
    cdef int n = ts.n_unknowns

    res_n = np.ascontiguousarray(ts.res_nodes.reshape(-1), dtype=np.int32)
    cap_n = np.ascontiguousarray(ts.cap_nodes.reshape(-1), dtype=np.int32)
    ind_n = np.ascontiguousarray(ts.ind_nodes.reshape(-1), dtype=np.int32)
    vs_n = np.ascontiguousarray(ts.vsrc_nodes.reshape(-1), dtype=np.int32)
    mos_n = np.ascontiguousarray(ts.mos_nodes.reshape(-1), dtype=np.int32)
    k_n = np.ascontiguousarray(ts.vcvs_nodes.reshape(-1), dtype=np.int32)

    cdef int[::1] res_nv = res_n, cap_nv = cap_n, ind_nv = ind_n
    cdef int[::1] vs_nv = vs_n, mos_nv = mos_n, k_nv = k_n
    cdef int[::1] ind_bv = np.ascontiguousarray(ts.ind_branch, dtype=np.int32)
    cdef int[::1] vs_bv = np.ascontiguousarray(ts.vsrc_branch, dtype=np.int32)
    cdef int[::1] k_bv = np.ascontiguousarray(ts.vcvs_branch, dtype=np.int32)
    cdef double[::1] res_g = np.ascontiguousarray(ts.res_g)
    cdef double[::1] cap_c = np.ascontiguousarray(ts.cap_c)
    cdef double[::1] ind_l = np.ascontiguousarray(ts.ind_l)
    cdef double[::1] ind_rs = np.ascontiguousarray(ts.ind_rs)
    cdef double[::1] vs_dc = np.ascontiguousarray(ts.vsrc_dc)
    cdef double[::1] vs_amp = np.ascontiguousarray(ts.vsrc_amp)
    cdef double[::1] vs_om = np.ascontiguousarray(ts.vsrc_omega)
    cdef double[::1] vs_ph = np.ascontiguousarray(ts.vsrc_phase)
    cdef double[::1] mos_beta = np.ascontiguousarray(ts.mos_beta)
    cdef double[::1] mos_vt0 = np.ascontiguousarray(ts.mos_vt0)
    cdef double[::1] mos_lam = np.ascontiguousarray(ts.mos_lam)
    cdef double[::1] k_a1 = np.ascontiguousarray(ts.vcvs_a1)
    cdef double[::1] k_a3 = np.ascontiguousarray(ts.vcvs_a3)

    cdef double[::1] x = np.ascontiguousarray(state.x)
    cdef double[::1] cap_i = np.ascontiguousarray(state.cap_i)
    cdef double[::1] ind_vl = np.ascontiguousarray(state.ind_vl)

    out_arr = np.empty((n_steps, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr

    J_arr = np.empty(n * n); F_arr = np.empty(n); xw_arr = np.empty(n)
    ch_arr = np.empty(max(1, len(ts.cap_c)))
    cv_arr = np.empty(max(1, len(ts.cap_c)))
    ir_arr = np.empty(max(1, len(ts.ind_l)))
    piv_arr = np.empty(n, dtype=np.int32)
    cdef double[::1] Jv = J_arr, Fv = F_arr, xwv = xw_arr
    cdef double[::1] chv = ch_arr, cvv = cv_arr, irv = ir_arr
    cdef int[::1] pivv = piv_arr

    cdef Sys S
    S.n = n
    S.nr = len(ts.res_g); S.nc = len(ts.cap_c); S.nl = len(ts.ind_l)
    S.nv = len(ts.vsrc_dc); S.nm = len(ts.mos_beta); S.nk = len(ts.vcvs_a1)
    S.res_n = &res_nv[0] if S.nr else NULL
    S.res_g = &res_g[0] if S.nr else NULL
    S.cap_n = &cap_nv[0] if S.nc else NULL
    S.cap_c = &cap_c[0] if S.nc else NULL
    S.ind_n = &ind_nv[0] if S.nl else NULL
    S.ind_b = &ind_bv[0] if S.nl else NULL
    S.ind_l = &ind_l[0] if S.nl else NULL
    S.ind_rs = &ind_rs[0] if S.nl else NULL
    S.vs_n = &vs_nv[0] if S.nv else NULL
    S.vs_b = &vs_bv[0] if S.nv else NULL
    S.vs_dc = &vs_dc[0] if S.nv else NULL
    S.vs_amp = &vs_amp[0] if S.nv else NULL
    S.vs_om = &vs_om[0] if S.nv else NULL
    S.vs_ph = &vs_ph[0] if S.nv else NULL
    S.mos_n = &mos_nv[0] if S.nm else NULL
    S.mos_beta = &mos_beta[0] if S.nm else NULL
    S.mos_vt0 = &mos_vt0[0] if S.nm else NULL
    S.mos_lam = &mos_lam[0] if S.nm else NULL
    S.k_n = &k_nv[0] if S.nk else NULL
    S.k_b = &k_bv[0] if S.nk else NULL
    S.k_a1 = &k_a1[0] if S.nk else NULL
    S.k_a3 = &k_a3[0] if S.nk else NULL

    cdef Work W
    W.J = &Jv[0]; W.F = &Fv[0]; W.x = &xwv[0]
    W.cap_hist = &chv[0]; W.cap_vab0 = &cvv[0]; W.ind_rhs = &irv[0]
    W.piv = &pivv[0]

    cdef double t0 = state.t
    cdef int i, j, failed = 0, done = 0
    cdef double *xp = &x[0]
    cdef double *cap_ip = &cap_i[0] if S.nc else NULL
    cdef double *ind_vlp = &ind_vl[0] if S.nl else NULL
    cdef double *outp = &out[0, 0]
    with nogil:
        for i in range(n_steps):
            if advance(&S, &W, xp, cap_ip, ind_vlp, t0 + i * dt, dt, 0):
                failed = 1
                break
            done = i + 1
            for j in range(n):
                outp[i * n + j] = xp[j]

    state.x = np.asarray(x)
    state.cap_i = np.asarray(cap_i)
    state.ind_vl = np.asarray(ind_vl)
    state.t = t0 + done * dt
    if failed:
        raise TransientStepError(t0 + (done + 1) * dt)
    return out_arr
