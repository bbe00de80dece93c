# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 kernel for the closed-loop and prescribed-velocity simulations.

Layout constants mirror ``_layout.py``; behaviour mirrors ``_pykernel.py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sin, cos, fabs

cnp.import_array()

NAME = "cython"

cdef enum:
    NX = 10
    NREC = 13
    NOUT = 7

cdef double LIMIT = 1e9
cdef double STEP_EPS = 1e-12
cdef double TWO_PI = 6.283185307179586

cdef enum:
    LOOP_VELOCITY = 0
    LOOP_POSITION = 1
    LOOP_PRESCRIBED = 2
    OBS_NONE = 0
    OBS_NATURAL = 1
    OBS_EXISTING = 2
    OBS_PROPOSED = 3
    OBS_ORACLE = 4
    REF_CONSTANT = 0
    REF_STEP = 1
    REF_SINUSOID = 2
    REF_RAMP = 3
    REF_DECAYING_EXP = 4


cdef struct Params:
    double J
    double s0, s1, Fc, Fs, Fv, ws
    double os0, os1, oFc, oFs, oFv, ows
    double Kp, Ki, Kd, tau, tf
    double pole
    double r_amp, r_start, r_freq, r_phase, r_rate, r_off
    double K1c, K2c, kex, gA, gC, galpha
    double Kpi, Kii
    int loop, rkind, okind, k1tv, k2tv, use_pref, use_ff, use_comp, fric, cascade


cdef void reference(const Params* p, double t, double* r) noexcept nogil:
    cdef double om, s, c, v
    if p.rkind == REF_STEP:
        r[0] = p.r_amp if t >= p.r_start - STEP_EPS else 0.0
        r[1] = 0.0
        r[2] = 0.0
    elif p.rkind == REF_SINUSOID:
        om = TWO_PI * p.r_freq
        s = sin(om * t + p.r_phase)
        c = cos(om * t + p.r_phase)
        r[0] = p.r_off + p.r_amp * s
        r[1] = p.r_amp * om * c
        r[2] = -p.r_amp * om * om * s
    elif p.rkind == REF_RAMP:
        r[0] = p.r_rate * t
        r[1] = p.r_rate
        r[2] = 0.0
    elif p.rkind == REF_DECAYING_EXP:
        v = p.r_amp * exp(-p.r_rate * t)
        r[0] = v
        r[1] = -p.r_rate * v
        r[2] = p.r_rate * p.r_rate * v
    else:
        r[0] = p.r_amp
        r[1] = 0.0
        r[2] = 0.0


cdef double rhs(const Params* p, double t, const double* x, double* dx, double* out) noexcept nogil:
    cdef double r[3]
    cdef double w, aw, rf, rf1, rf2, h, dz, F, e, ei, ipath, v, oh, dzh, dwh, Fh, K1, K2, ew, u
    cdef bint prescribed = p.loop == LOOP_PRESCRIBED

    reference(p, t, r)
    if prescribed:
        w = r[0]
        rf = r[0]
        rf1 = r[1]
        rf2 = r[2]
        dx[7] = 0.0
    else:
        w = x[1]
        if p.use_pref:
            rf = x[7]
            rf1 = p.pole * (r[0] - rf)
            rf2 = p.pole * (r[1] - rf1)
            dx[7] = rf1
        else:
            rf = r[0]
            rf1 = r[1]
            rf2 = r[2]
            dx[7] = 0.0
    aw = fabs(w)

    if p.fric:
        h = p.Fc + (p.Fs - p.Fc) * exp(-(w / p.ws) * (w / p.ws))
        dz = w - p.s0 * aw * x[2] / h
        F = p.s0 * x[2] + p.s1 * dz + p.Fv * w
    else:
        dz = 0.0
        F = 0.0

    if prescribed:
        e = 0.0
        v = 0.0
        dx[5] = 0.0
        dx[6] = 0.0
        dx[8] = 0.0
        dx[9] = 0.0
    else:
        e = rf - (x[0] if p.loop == LOOP_POSITION else w)
        dx[5] = e
        if p.tau > 0.0:
            dx[6] = (x[5] - x[6]) / p.tau
            ipath = x[6]
        else:
            dx[6] = 0.0
            ipath = x[5]
        if p.Kd > 0.0:
            dx[8] = (e - x[8]) / p.tf
            v = p.Kp * e + p.Ki * ipath + p.Kd * dx[8]
        else:
            dx[8] = 0.0
            v = p.Kp * e + p.Ki * ipath
        if p.cascade:
            ei = v - w
            dx[9] = ei
            v = p.Kpi * ei + p.Kii * x[9]
        else:
            dx[9] = 0.0

    dzh = 0.0
    dwh = 0.0
    Fh = 0.0
    K2 = 0.0
    ew = 0.0
    if p.okind == OBS_NATURAL or p.okind == OBS_EXISTING or p.okind == OBS_PROPOSED:
        oh = p.oFc + (p.oFs - p.oFc) * exp(-(w / p.ows) * (w / p.ows))
        dzh = w - p.os0 * aw * x[3] / oh
        if p.okind == OBS_EXISTING:
            dzh -= p.kex * (-e)
        elif p.okind == OBS_PROPOSED:
            if p.k1tv:
                K1 = (p.gC * p.os0 / (p.gA * p.J)) * (p.os1 * aw / oh - 1.0)
            else:
                K1 = p.K1c
            if p.k2tv:
                K2 = p.galpha + p.os1 * K1
            else:
                K2 = p.K2c
            ew = w - x[4]
            dzh += K1 * ew
        Fh = p.os0 * x[3] + p.os1 * dzh + p.oFv * w
    elif p.okind == OBS_ORACLE:
        Fh = F

    if prescribed:
        u = p.J * r[1] + F
    else:
        u = v
        if p.use_comp:
            u += Fh
        if p.use_ff:
            u += p.J * (rf2 if p.loop == LOOP_POSITION else rf1)
    if p.okind == OBS_PROPOSED:
        dwh = (-Fh + u + K2 * ew) / p.J

    dx[0] = w
    dx[1] = r[1] if prescribed else (u - F) / p.J
    dx[2] = dz
    dx[3] = dzh
    dx[4] = dwh
    out[0] = F
    out[1] = Fh
    out[2] = u
    out[3] = v
    out[4] = r[0]
    out[5] = rf
    out[6] = e
    return w


cdef Params unpack(const double[::1] prm, const long[::1] iprm):
    cdef Params p
    p.J = prm[0]
    p.s0 = prm[1]; p.s1 = prm[2]; p.Fc = prm[3]; p.Fs = prm[4]; p.Fv = prm[5]; p.ws = prm[6]
    p.os0 = prm[7]; p.os1 = prm[8]; p.oFc = prm[9]; p.oFs = prm[10]; p.oFv = prm[11]; p.ows = prm[12]
    p.Kp = prm[13]; p.Ki = prm[14]; p.Kd = prm[15]; p.tau = prm[16]; p.tf = prm[17]
    p.pole = prm[18]
    p.r_amp = prm[19]; p.r_start = prm[20]; p.r_freq = prm[21]
    p.r_phase = prm[22]; p.r_rate = prm[23]; p.r_off = prm[24]
    p.K1c = prm[25]; p.K2c = prm[26]; p.kex = prm[27]
    p.gA = prm[28]; p.gC = prm[29]; p.galpha = prm[30]
    p.Kpi = prm[31]; p.Kii = prm[32]
    p.loop = <int>iprm[0]; p.rkind = <int>iprm[1]; p.okind = <int>iprm[2]
    p.k1tv = <int>iprm[3]; p.k2tv = <int>iprm[4]; p.use_pref = <int>iprm[5]
    p.use_ff = <int>iprm[6]; p.use_comp = <int>iprm[7]; p.fric = <int>iprm[8]
    p.cascade = <int>iprm[9]
    return p


def simulate(x0, prm, iprm, double dt, long n_steps, long stride):
    """Integrate ``n_steps`` RK4 steps from ``t = 0``; see ``_pykernel.simulate``."""
    cdef const double[::1] prm_v = np.ascontiguousarray(prm, dtype=np.float64)
    cdef const long[::1] iprm_v = np.ascontiguousarray(iprm, dtype=np.int_)
    cdef Params p = unpack(prm_v, iprm_v)
    cdef long n_rec = n_steps // stride + 1
    rec_arr = np.full((n_rec, NREC), np.nan)
    cdef double[:, ::1] rec = rec_arr
    cdef double x[NX]
    cdef double xt[NX]
    cdef double k1[NX]
    cdef double k2[NX]
    cdef double k3[NX]
    cdef double k4[NX]
    cdef double out[NOUT]
    cdef double scratch[NOUT]
    cdef double rr[3]
    cdef double t, w, xi, half = 0.5 * dt
    cdef long k, j = 0, done = n_steps
    cdef int i, status = 0
    cdef bint prescribed = p.loop == LOOP_PRESCRIBED
    cdef const double[::1] x0_v = np.ascontiguousarray(x0, dtype=np.float64)

    for i in range(NX):
        x[i] = x0_v[i]

    with nogil:
        if prescribed:
            reference(&p, 0.0, rr)
            x[1] = rr[0]
        for k in range(n_steps + 1):
            t = k * dt
            w = rhs(&p, t, x, k1, out)
            if k % stride == 0:
                rec[j, 0] = t
                rec[j, 1] = x[0]
                rec[j, 2] = w
                rec[j, 3] = x[2]
                rec[j, 4] = x[3]
                rec[j, 5] = x[4]
                for i in range(NOUT):
                    rec[j, 6 + i] = out[i]
                j += 1
            if k == n_steps:
                break
            for i in range(NX):
                xt[i] = x[i] + half * k1[i]
            rhs(&p, t + half, xt, k2, scratch)
            for i in range(NX):
                xt[i] = x[i] + half * k2[i]
            rhs(&p, t + half, xt, k3, scratch)
            for i in range(NX):
                xt[i] = x[i] + dt * k3[i]
            rhs(&p, t + dt, xt, k4, scratch)
            for i in range(NX):
                xi = x[i] + dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
                x[i] = xi
                if not (fabs(xi) <= LIMIT):
                    status = 1
            if prescribed:
                reference(&p, (k + 1) * dt, rr)
                x[1] = rr[0]
            if status:
                done = k + 1
                break

    x_final = np.array([x[i] for i in range(NX)])
    if status:
        return rec_arr[:j], done, status, x_final
    return rec_arr, n_steps, 0, x_final
