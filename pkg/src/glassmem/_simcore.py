"""Compiled hot path for the driven spin-network simulation.

Everything here is private. The public module (`semiclassical`) holds the
plain-numpy reference implementations; tests assert the two routes agree
to near machine precision. The kernel math matches `cavity.coupling` and
`cavity.grad_coupling` term by term: four complex Mehler terms with
per-term constants precomputed once per trial.

State vector layout: y = [sx(n), sy(n), sz(n), rx(n), ry(n)].

Parameter vector layout (PAR_* indices below): scalar schedule, damping
and trap settings, plus flags for elasticity and lazy kernel refresh.
"""

from __future__ import annotations

import numpy as np
from numba import njit

PAR_OMEGA_Z = 0
PAR_G_C = 1
PAR_PUMP_FINAL = 2
PAR_PUMP_TAU = 3
PAR_T_END = 4
PAR_STIM_PEAK = 5
PAR_T_UP = 6
PAR_T_HOLD = 7
PAR_T_OFF = 8
PAR_INV_CD = 9
PAR_TRAP_K = 10     # e_trap / w_t^2
PAR_ELASTIC = 11    # 0.0 or 1.0
PAR_LAZY = 12       # 0.0 or 1.0
PAR_STALE = 13      # position drift (um) that invalidates cached kernels
N_PARS = 14

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2


def kernel_constants(gamma: float, w0: float, eta: int, detuning_weight: float):
    """Per-term complex constants of the four-term Mehler sum.

    Returns (amp, c_sum, c_dot, wgt), each complex128[4], such that

        J(r, r') = sum_m Re[ wgt_m * amp_m
                             * exp(-c_sum_m (r^2 + r'^2) + c_dot_m r.r') ]

    and the gradient with respect to r of each term is the term times
    (-2 c_sum_m r + c_dot_m r'). The detuning weight is folded into wgt.
    """
    ts = np.concatenate(([1.0 + 0j], np.exp(2j * np.pi * np.arange(1, 4) / 7.0)))
    w2 = w0 * w0
    amp = np.empty(4, dtype=np.complex128)
    c_sum = np.empty(4, dtype=np.complex128)
    c_dot = np.empty(4, dtype=np.complex128)
    wgt = np.empty(4, dtype=np.complex128)
    for m, t in enumerate(ts):
        denom = 1.0 - (gamma * t) ** 2
        b = (1.0 + gamma) / (2.0 * denom)
        amp[m] = (1.0 + gamma) ** 2 / (4.0 * denom)
        c_sum[m] = b * (1.0 + gamma * t * t) / w2
        c_dot[m] = 2.0 * b * (1.0 + gamma) * t / w2
        if m == 0:
            wgt[m] = detuning_weight / 7.0
        else:
            wgt[m] = detuning_weight * (2.0 / 7.0) * np.exp(-2j * np.pi * eta * m / 7.0)
    return amp, c_sum, c_dot, wgt


@njit(cache=True)
def _fill_site_kernels(rx, ry, amp, c_sum, c_dot, wgt, J, dJx, dJy):
    """J[i, j] and the gradient of J(r_i, r_j) with respect to r_i."""
    n = rx.shape[0]
    for i in range(n):
        r2i = rx[i] * rx[i] + ry[i] * ry[i]
        for j in range(i, n):
            r2j = rx[j] * rx[j] + ry[j] * ry[j]
            dot = rx[i] * rx[j] + ry[i] * ry[j]
            jv = 0.0
            gx_i = 0.0
            gy_i = 0.0
            gx_j = 0.0
            gy_j = 0.0
            for m in range(4):
                G = wgt[m] * amp[m] * np.exp(-c_sum[m] * (r2i + r2j) + c_dot[m] * dot)
                jv += G.real
                ti = -2.0 * c_sum[m]
                gi = G * ti * rx[i] + G * c_dot[m] * rx[j]
                gx_i += gi.real
                gi = G * ti * ry[i] + G * c_dot[m] * ry[j]
                gy_i += gi.real
                gi = G * ti * rx[j] + G * c_dot[m] * rx[i]
                gx_j += gi.real
                gi = G * ti * ry[j] + G * c_dot[m] * ry[i]
                gy_j += gi.real
            J[i, j] = jv
            J[j, i] = jv
            dJx[i, j] = gx_i
            dJy[i, j] = gy_i
            dJx[j, i] = gx_j
            dJy[j, i] = gy_j


@njit(cache=True)
def _fill_beam_fields(rx, ry, bx, by, wbeam, amp, c_sum, c_dot, wgt, F, dFx, dFy):
    """F[i] = sum_m wbeam_m J(r_i, b_m) and its gradient in r_i."""
    n = rx.shape[0]
    nb = bx.shape[0]
    for i in range(n):
        r2i = rx[i] * rx[i] + ry[i] * ry[i]
        fv = 0.0
        gx = 0.0
        gy = 0.0
        for m in range(nb):
            r2b = bx[m] * bx[m] + by[m] * by[m]
            dot = rx[i] * bx[m] + ry[i] * by[m]
            jv = 0.0
            jgx = 0.0
            jgy = 0.0
            for k in range(4):
                G = wgt[k] * amp[k] * np.exp(-c_sum[k] * (r2i + r2b) + c_dot[k] * dot)
                jv += G.real
                tk = -2.0 * c_sum[k]
                gi = G * tk * rx[i] + G * c_dot[k] * bx[m]
                jgx += gi.real
                gi = G * tk * ry[i] + G * c_dot[k] * by[m]
                jgy += gi.real
            fv += wbeam[m] * jv
            gx += wbeam[m] * jgx
            gy += wbeam[m] * jgy
        F[i] = fv
        dFx[i] = gx
        dFy[i] = gy


@njit(cache=True, inline="always")
def _pump_ratio(t, pars):
    return pars[PAR_PUMP_FINAL] * np.exp((t - pars[PAR_T_END]) / pars[PAR_PUMP_TAU])


@njit(cache=True, inline="always")
def _stim_envelope(t, pars):
    peak = pars[PAR_STIM_PEAK]
    if t <= 0.0 or t >= pars[PAR_T_OFF]:
        return 0.0
    if t < pars[PAR_T_UP]:
        return peak * 0.5 * (1.0 - np.cos(np.pi * t / pars[PAR_T_UP]))
    if t <= pars[PAR_T_HOLD]:
        return peak
    width = pars[PAR_T_OFF] - pars[PAR_T_HOLD]
    return peak * 0.5 * (1.0 + np.cos(np.pi * (t - pars[PAR_T_HOLD]) / width))


@njit(cache=True)
def _rhs(t, y, dy, pars, amp, c_sum, c_dot, wgt, bx, by, wbeam, tx, ty,
         J, dJx, dJy, F, dFx, dFy, pos_ref):
    n = bx.shape[0]
    sx = y[0:n]
    sy = y[n:2 * n]
    sz = y[2 * n:3 * n]
    rx = y[3 * n:4 * n]
    ry = y[4 * n:5 * n]

    refresh = True
    if pars[PAR_LAZY] != 0.0:
        drift = 0.0
        for i in range(n):
            dxa = abs(rx[i] - pos_ref[i, 0])
            dya = abs(ry[i] - pos_ref[i, 1])
            if dxa > drift:
                drift = dxa
            if dya > drift:
                drift = dya
        refresh = drift > pars[PAR_STALE] or pos_ref[0, 0] != pos_ref[0, 0]
    if refresh:
        _fill_site_kernels(rx, ry, amp, c_sum, c_dot, wgt, J, dJx, dJy)
        _fill_beam_fields(rx, ry, bx, by, wbeam, amp, c_sum, c_dot, wgt, F, dFx, dFy)
        for i in range(n):
            pos_ref[i, 0] = rx[i]
            pos_ref[i, 1] = ry[i]

    w = pars[PAR_OMEGA_Z]
    g = _pump_ratio(t, pars) * pars[PAR_G_C]
    a = _stim_envelope(t, pars)

    for i in range(n):
        hx = 0.0
        for j in range(n):
            hx += J[i, j] * sx[j]
        h = a * F[i] + 2.0 * g * hx
        dy[i] = -w * sy[i]
        dy[n + i] = w * sx[i] + h * sz[i]
        dy[2 * n + i] = -h * sy[i]
        if pars[PAR_ELASTIC] != 0.0:
            fx = 0.0
            fy = 0.0
            for k in range(n):
                fx += dJx[i, k] * sx[k]
                fy += dJy[i, k] * sx[k]
            # -dE/dr_i: Ising + stimulus pull, trap restoring force
            px = 2.0 * g * sx[i] * fx + a * sx[i] * dFx[i] - pars[PAR_TRAP_K] * (rx[i] - tx[i])
            py = 2.0 * g * sx[i] * fy + a * sx[i] * dFy[i] - pars[PAR_TRAP_K] * (ry[i] - ty[i])
            dy[3 * n + i] = pars[PAR_INV_CD] * px
            dy[4 * n + i] = pars[PAR_INV_CD] * py
        else:
            dy[3 * n + i] = 0.0
            dy[4 * n + i] = 0.0


# Dormand-Prince 5(4) coefficients.
_C2, _C3, _C4, _C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1 = 35.0 / 384.0 - 5179.0 / 57600.0
_E3 = 500.0 / 1113.0 - 7571.0 / 16695.0
_E4 = 125.0 / 192.0 - 393.0 / 640.0
_E5 = -2187.0 / 6784.0 + 92097.0 / 339200.0
_E6 = 11.0 / 84.0 - 187.0 / 2100.0
_E7 = -1.0 / 40.0


@njit(cache=True)
def integrate(y, t0, t1, pars, amp, c_sum, c_dot, wgt, bx, by, wbeam, tx, ty,
              breakpoints, rtol, atol, max_steps, trace_t, trace_y):
    """Integrate the trial EOM in place from t0 to t1.

    Adaptive Dormand-Prince 5(4) with FSAL reuse and a PI-free standard
    step controller. Steps land exactly on every breakpoint (schedule
    joins) and on t1. Accepted states are recorded into trace_t/trace_y
    while capacity lasts (pass zero-length arrays to disable tracing).

    Returns (status, n_accepted, n_trace).
    """
    n = bx.shape[0]
    dim = 5 * n
    J = np.empty((n, n))
    dJx = np.empty((n, n))
    dJy = np.empty((n, n))
    F = np.empty(n)
    dFx = np.empty(n)
    dFy = np.empty(n)
    pos_ref = np.full((n, 2), np.nan)

    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    k5 = np.empty(dim)
    k6 = np.empty(dim)
    k7 = np.empty(dim)
    ytmp = np.empty(dim)
    ynew = np.empty(dim)

    cap = trace_t.shape[0]
    ntr = 0
    if cap > 0:
        trace_t[0] = t0
        for i in range(dim):
            trace_y[0, i] = y[i]
        ntr = 1

    t = t0
    h = 1e-4
    _rhs(t, y, k1, pars, amp, c_sum, c_dot, wgt, bx, by, wbeam, tx, ty,
         J, dJx, dJy, F, dFx, dFy, pos_ref)
    naccept = 0
    nb = breakpoints.shape[0]

    for _ in range(max_steps):
        if t >= t1:
            return STATUS_OK, naccept, ntr
        # do not step across a schedule breakpoint or past the end
        hmax = t1 - t
        for b in range(nb):
            if t < breakpoints[b] - 1e-12 and breakpoints[b] - t < hmax:
                hmax = breakpoints[b] - t
        if h > hmax:
            h = hmax
        if h < 1e-14:
            return STATUS_STEP_UNDERFLOW, naccept, ntr

        for i in range(dim):
            ytmp[i] = y[i] + h * _A21 * k1[i]
        _rhs(t + _C2 * h, ytmp, k2, pars, amp, c_sum, c_dot, wgt, bx, by, wbeam,
             tx, ty, J, dJx, dJy, F, dFx, dFy, pos_ref)
        for i in range(dim):
            ytmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        _rhs(t + _C3 * h, ytmp, k3, pars, amp, c_sum, c_dot, wgt, bx, by, wbeam,
             tx, ty, J, dJx, dJy, F, dFx, dFy, pos_ref)
        for i in range(dim):
            ytmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _rhs(t + _C4 * h, ytmp, k4, pars, amp, c_sum, c_dot, wgt, bx, by, wbeam,
             tx, ty, J, dJx, dJy, F, dFx, dFy, pos_ref)
        for i in range(dim):
            ytmp[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i]
                                  + _A54 * k4[i])
        _rhs(t + _C5 * h, ytmp, k5, pars, amp, c_sum, c_dot, wgt, bx, by, wbeam,
             tx, ty, J, dJx, dJy, F, dFx, dFy, pos_ref)
        for i in range(dim):
            ytmp[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                  + _A64 * k4[i] + _A65 * k5[i])
        _rhs(t + h, ytmp, k6, pars, amp, c_sum, c_dot, wgt, bx, by, wbeam,
             tx, ty, J, dJx, dJy, F, dFx, dFy, pos_ref)
        for i in range(dim):
            ynew[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                  + _B5 * k5[i] + _B6 * k6[i])
        _rhs(t + h, ynew, k7, pars, amp, c_sum, c_dot, wgt, bx, by, wbeam,
             tx, ty, J, dJx, dJy, F, dFx, dFy, pos_ref)

        errnorm = 0.0
        for i in range(dim):
            erri = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                        + _E6 * k6[i] + _E7 * k7[i])
            ay = abs(y[i])
            ayn = abs(ynew[i])
            sc = atol + rtol * (ay if ay > ayn else ayn)
            q = erri / sc
            errnorm += q * q
        errnorm = np.sqrt(errnorm / dim)

        if errnorm <= 1.0:
            t = t + h
            for i in range(dim):
                y[i] = ynew[i]
                k1[i] = k7[i]
            naccept += 1
            if ntr < cap:
                trace_t[ntr] = t
                for i in range(dim):
                    trace_y[ntr, i] = y[i]
                ntr += 1
        # standard controller, bounded growth/shrink
        if errnorm == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * errnorm ** -0.2
            if fac > 5.0:
                fac = 5.0
            elif fac < 0.2:
                fac = 0.2
        h = h * fac

    return STATUS_MAX_STEPS, naccept, ntr
