"""Pure-Python RK4 kernel; the fallback when the compiled extension is absent.

Mirrors ``_ckernel.pyx`` operation for operation so the two backends agree
to rounding.
"""
import math

import numpy as np

from ._layout import (
    DIVERGENCE_LIMIT, LOOP_POSITION, LOOP_PRESCRIBED, NREC, NX, OBS_EXISTING,
    OBS_NATURAL, OBS_ORACLE, OBS_PROPOSED, P_A, P_ALPHA, P_C, P_J, P_K1, P_K2,
    P_KD, P_KEX, P_KI, P_KII, P_KP, P_KPI, P_OBS, P_PLANT, P_POLE, P_REF, P_TAU, P_TF,
    I_CASCADE, I_COMP, I_FF, I_FRIC, I_K1MODE, I_K2MODE, I_LOOP, I_OBS, I_PREF, I_REF,
)
from .signals import CONSTANT, DECAYING_EXP, RAMP, SINUSOID, STEP, STEP_EPS

NAME = "python"
TWO_PI = 2.0 * math.pi


def _make_rhs(prm, iprm):
    J = prm[P_J]
    s0, s1, Fc, Fs, Fv, ws = (prm[P_PLANT + i] for i in range(6))
    os0, os1, oFc, oFs, oFv, ows = (prm[P_OBS + i] for i in range(6))
    Kp, Ki, Kd, tau, tf = prm[P_KP], prm[P_KI], prm[P_KD], prm[P_TAU], prm[P_TF]
    pole = prm[P_POLE]
    r_amp, r_start, r_freq, r_phase, r_rate, r_off = (prm[P_REF + i] for i in range(6))
    K1c, K2c, kex = prm[P_K1], prm[P_K2], prm[P_KEX]
    gA, gC, galpha = prm[P_A], prm[P_C], prm[P_ALPHA]
    Kpi, Kii = prm[P_KPI], prm[P_KII]

    loop, rkind, okind = iprm[I_LOOP], iprm[I_REF], iprm[I_OBS]
    k1tv, k2tv = iprm[I_K1MODE], iprm[I_K2MODE]
    use_pref, use_ff, use_comp, fric = iprm[I_PREF], iprm[I_FF], iprm[I_COMP], iprm[I_FRIC]
    cascade = iprm[I_CASCADE]
    prescribed = loop == LOOP_PRESCRIBED
    om = TWO_PI * r_freq

    def reference(t):
        if rkind == STEP:
            return (r_amp if t >= r_start - STEP_EPS else 0.0), 0.0, 0.0
        if rkind == SINUSOID:
            s = math.sin(om * t + r_phase)
            c = math.cos(om * t + r_phase)
            return r_off + r_amp * s, r_amp * om * c, -r_amp * om * om * s
        if rkind == RAMP:
            return r_rate * t, r_rate, 0.0
        if rkind == DECAYING_EXP:
            v = r_amp * math.exp(-r_rate * t)
            return v, -r_rate * v, r_rate * r_rate * v
        return r_amp, 0.0, 0.0

    def rhs(t, x, dx, out):
        r, r1, r2 = reference(t)
        if prescribed:
            w = r
            rf, rf1, rf2 = r, r1, r2
            dx[7] = 0.0
        else:
            w = x[1]
            if use_pref:
                rf = x[7]
                rf1 = pole * (r - rf)
                rf2 = pole * (r1 - rf1)
                dx[7] = rf1
            else:
                rf, rf1, rf2 = r, r1, r2
                dx[7] = 0.0
        aw = abs(w)

        # plant friction
        if fric:
            h = Fc + (Fs - Fc) * math.exp(-(w / ws) * (w / ws))
            dz = w - s0 * aw * x[2] / h
            F = s0 * x[2] + s1 * dz + Fv * w
        else:
            dz = 0.0
            F = 0.0

        # controller
        if prescribed:
            e = 0.0
            v = 0.0
            dx[5] = dx[6] = dx[8] = dx[9] = 0.0
        else:
            e = rf - (x[0] if loop == LOOP_POSITION else w)
            dx[5] = e
            if tau > 0.0:
                dx[6] = (x[5] - x[6]) / tau
                ipath = x[6]
            else:
                dx[6] = 0.0
                ipath = x[5]
            if Kd > 0.0:
                dx[8] = (e - x[8]) / tf
                v = Kp * e + Ki * ipath + Kd * dx[8]
            else:
                dx[8] = 0.0
                v = Kp * e + Ki * ipath
            if cascade:
                # outer output is a velocity demand for the inner PI
                ei = v - w
                dx[9] = ei
                v = Kpi * ei + Kii * x[9]
            else:
                dx[9] = 0.0

        # observer
        dzh = 0.0
        dwh = 0.0
        Fh = 0.0
        K2 = 0.0
        ew = 0.0
        if okind == OBS_NATURAL or okind == OBS_EXISTING or okind == OBS_PROPOSED:
            oh = oFc + (oFs - oFc) * math.exp(-(w / ows) * (w / ows))
            dzh = w - os0 * aw * x[3] / oh
            if okind == OBS_EXISTING:
                dzh -= kex * (-e)
            elif okind == OBS_PROPOSED:
                if k1tv:
                    K1 = (gC * os0 / (gA * J)) * (os1 * aw / oh - 1.0)
                else:
                    K1 = K1c
                K2 = galpha + os1 * K1 if k2tv else K2c
                ew = w - x[4]
                dzh += K1 * ew
            Fh = os0 * x[3] + os1 * dzh + oFv * w
        elif okind == OBS_ORACLE:
            Fh = F

        # applied torque
        if prescribed:
            u = J * r1 + F
        else:
            u = v
            if use_comp:
                u += Fh
            if use_ff:
                u += J * (rf2 if loop == LOOP_POSITION else rf1)
        if okind == OBS_PROPOSED:
            dwh = (-Fh + u + K2 * ew) / J

        dx[0] = w
        dx[1] = r1 if prescribed else (u - F) / J
        dx[2] = dz
        dx[3] = dzh
        dx[4] = dwh
        out[0] = F
        out[1] = Fh
        out[2] = u
        out[3] = v
        out[4] = r
        out[5] = rf
        out[6] = e
        return w

    return rhs, reference


def simulate(x0, prm, iprm, dt, n_steps, stride):
    """Integrate ``n_steps`` RK4 steps from ``t = 0``.

    Returns ``(records, n_done, status, x_final)``. ``status`` is 0 on success
    and 1 if the state left the finite region, in which case ``n_done`` is the
    step at which that was detected and ``x_final`` the offending state.
    """
    prm = [float(v) for v in prm]
    iprm = [int(v) for v in iprm]
    rhs, reference = _make_rhs(prm, iprm)
    prescribed = iprm[I_LOOP] == LOOP_PRESCRIBED
    n_rec = n_steps // stride + 1
    rec = np.full((n_rec, NREC), np.nan)

    x = [float(v) for v in x0]
    if prescribed:
        x[1] = reference(0.0)[0]
    xt = [0.0] * NX
    k1, k2, k3, k4 = ([0.0] * NX for _ in range(4))
    out = [0.0] * 7
    scratch = [0.0] * 7
    half = 0.5 * dt
    j = 0
    for k in range(n_steps + 1):
        t = k * dt
        w = rhs(t, x, k1, out)
        if k % stride == 0:
            row = rec[j]
            row[0] = t
            row[1] = x[0]
            row[2] = w
            row[3] = x[2]
            row[4] = x[3]
            row[5] = x[4]
            for i in range(7):
                row[6 + i] = out[i]
            j += 1
        if k == n_steps:
            break
        for i in range(NX):
            xt[i] = x[i] + half * k1[i]
        rhs(t + half, xt, k2, scratch)
        for i in range(NX):
            xt[i] = x[i] + half * k2[i]
        rhs(t + half, xt, k3, scratch)
        for i in range(NX):
            xt[i] = x[i] + dt * k3[i]
        rhs(t + dt, xt, k4, scratch)
        bad = False
        for i in range(NX):
            xi = x[i] + dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
            x[i] = xi
            if not (abs(xi) <= DIVERGENCE_LIMIT):
                bad = True
        if prescribed:
            x[1] = reference((k + 1) * dt)[0]
        if bad:
            return rec[:j], k + 1, 1, np.array(x)
    return rec, n_steps, 0, np.array(x)
