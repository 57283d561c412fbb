"""Compiled hybrid integrators for the vertical and boom rigs.

Both loops advance on a fixed grid ``k * dt`` with classic RK4.  A grid step
is split at controller switching times, and at any guard sign change the
step is bisected down to ``tol`` so mode changes land on the event time.

Guards are "positive while the mode persists"; an event fires when a guard
goes from > 0 at the start of a sub-step to <= 0 at its end.
"""
from __future__ import annotations

import math
from collections import namedtuple

import numpy as np
from numba import njit

from .actuation import _clamp, _electrical_power
from .compliance import _damper_force, _dissipative_force
from .control import _hip_ref, _next_switch, _pulse_on, _pd, _warp
from .kinematics import _alpha_of_length, _leg_jacobian
from .terrain import _height

KParams = namedtuple(
    "KParams",
    [
        "m", "g", "l0", "l_eff", "alpha0", "r_k", "r_d", "k_k",
        "c", "exponent", "k_rec", "slack",
        "kt", "R", "regen", "gear_knee", "gear_hip", "lim_knee", "lim_hip",
        "k_freq", "k_amp", "k_shift", "k_duty", "k_phase0",
        "A_hip", "O_hip", "f_f", "D_vir", "kp", "kd", "swing_inertia",
        "mu", "alpha_min", "b_knee",
    ],
)

# trace columns; the first twelve are the public CSV schema
TRACE_COLUMNS = (
    "t", "x", "y", "vy", "alpha", "grf", "f_spring", "f_damper", "piston_pos",
    "tau_hip", "tau_knee", "p_elec",
    "vx", "grf_x", "theta", "f_dissipative", "e_mech", "w_motor", "e_visc",
    "e_elec", "e_diss_trap", "w_swing",
)
NCOL = len(TRACE_COLUMNS)

# event kinds
EV_TOUCHDOWN = 1
EV_LIFTOFF = 2
EV_APEX = 3
EV_ENGAGE = 4
EV_DISENGAGE = 5
EV_REMOVAL = 6
EV_BOTTOM = 7
EV_SLIP = 8
EV_SCUFF = 9
EV_OVERFLOW = 10
# event row: kind, t, x, y, ground, e_elec, e_diss_trap, e_visc
EV_WIDTH = 8

FAIL_NONE = 0
FAIL_BOTTOM = 1
FAIL_EVENTS = 2
FAIL_BISECT = 3
FAIL_FALL = 4


@njit(cache=True)
def _knee_cmd(p, t):
    if _pulse_on(t, p.k_freq, p.k_phase0, p.k_shift, p.k_duty):
        return _clamp(p.k_amp, p.lim_knee)
    return 0.0


@njit(cache=True)
def _next_time_event(p, t, forward):
    ts = _next_switch(t, p.k_freq, p.k_phase0, p.k_shift, p.k_duty)
    if forward:
        # hip phase-warp branch changes (reference acceleration jumps)
        th = _next_switch(t, p.f_f, p.k_phase0, 0.0, p.D_vir)
        if th < ts:
            ts = th
    return ts


# ---------------------------------------------------------------------------
# leg forces shared by both rigs
# ---------------------------------------------------------------------------

@njit(cache=True)
def _leg(p, l, ldot, engaged, tau_knee):
    """Axial force and its parts for leg length ``l`` and rate ``ldot``.

    Returns (f_axial, f_spring, f_damper, f_dissipative, piston_pos,
    piston_vel, alpha, alpha_dot, x_spring).
    """
    alpha = _alpha_of_length(p.l_eff, l)
    jac = _leg_jacobian(p.l_eff, alpha)
    adot = ldot / jac
    xs = p.r_k * (p.alpha0 - alpha)
    if xs < 0.0:
        xs = 0.0
    fs = p.k_k * xs
    pp = p.r_d * (p.alpha0 - alpha) - p.slack
    vp = -p.r_d * adot
    fd = _damper_force(p.c, p.exponent, p.k_rec, pp, vp, engaged)
    fdis = _dissipative_force(p.c, p.exponent, p.k_rec, pp, vp, engaged)
    tau = p.r_k * fs + p.r_d * fd + tau_knee - p.b_knee * adot
    return tau / jac, fs, fd, fdis, pp, vp, alpha, adot, xs


@njit(cache=True)
def _stored_energy(p, xs, pp, engaged):
    """Elastic energy held by the knee spring and the engaged damper recoil spring."""
    e = 0.5 * p.k_k * xs * xs
    if engaged:
        e += 0.5 * p.k_rec * pp * pp
    return e


# ---------------------------------------------------------------------------
# vertical rig: state = y, vy, w_knee, e_elec, e_visc
# ---------------------------------------------------------------------------

@njit(cache=True)
def _v_deriv(p, t, s, stance, foot_y, engaged, tau_knee, out):
    out[0] = s[1]
    if stance:
        fax, fs, fd, fdis, pp, vp, alpha, adot, xs = _leg(p, s[0] - foot_y, s[1], engaged, tau_knee)
        out[1] = fax / p.m - p.g
        out[2] = tau_knee * adot
        out[3] = _electrical_power(tau_knee, adot, p.gear_knee, p.kt, p.R, p.regen > 0.5)
        out[4] = fdis * vp + p.b_knee * adot * adot
    else:
        out[1] = -p.g
        out[2] = 0.0
        out[3] = _electrical_power(tau_knee, 0.0, p.gear_knee, p.kt, p.R, p.regen > 0.5)
        out[4] = 0.0


@njit(cache=True)
def _v_rk4(p, t, s, h, stance, foot_y, engaged, tau_knee, k1, k2, k3, k4, tmp, out):
    n = s.shape[0]
    _v_deriv(p, t, s, stance, foot_y, engaged, tau_knee, k1)
    for i in range(n):
        tmp[i] = s[i] + 0.5 * h * k1[i]
    _v_deriv(p, t + 0.5 * h, tmp, stance, foot_y, engaged, tau_knee, k2)
    for i in range(n):
        tmp[i] = s[i] + 0.5 * h * k2[i]
    _v_deriv(p, t + 0.5 * h, tmp, stance, foot_y, engaged, tau_knee, k3)
    for i in range(n):
        tmp[i] = s[i] + h * k3[i]
    _v_deriv(p, t + h, tmp, stance, foot_y, engaged, tau_knee, k4)
    for i in range(n):
        out[i] = s[i] + h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0


@njit(cache=True)
def _v_guards(p, s, stance, foot_y, ground, engaged, tau_knee, g):
    if stance:
        l = s[0] - foot_y
        fax, fs, fd, fdis, pp, vp, alpha, adot, xs = _leg(p, l, s[1], engaged, tau_knee)
        g[0] = fax
        g[1] = p.l0 - l
        g[2] = pp if engaged else -pp
        g[3] = alpha - p.alpha_min
    else:
        g[0] = s[0] - p.l0 - ground
        g[1] = s[1]
        g[2] = 1.0
        g[3] = 1.0


@njit(cache=True)
def _v_sample(p, t, s, stance, foot_y, engaged, tau_knee, diss_trap, row):
    row[:] = 0.0
    row[0] = t
    row[2] = s[0]
    row[3] = s[1]
    row[10] = tau_knee
    e = 0.5 * p.m * s[1] * s[1] + p.m * p.g * s[0]
    if stance:
        fax, fs, fd, fdis, pp, vp, alpha, adot, xs = _leg(p, s[0] - foot_y, s[1], engaged, tau_knee)
        row[4] = alpha
        row[5] = fax
        row[6] = fs
        row[7] = fd
        row[8] = pp if (engaged and pp > 0.0) else 0.0
        row[11] = _electrical_power(tau_knee, adot, p.gear_knee, p.kt, p.R, p.regen > 0.5)
        row[15] = fdis
        e += _stored_energy(p, xs, pp, engaged)
    else:
        row[4] = p.alpha0
        row[11] = _electrical_power(tau_knee, 0.0, p.gear_knee, p.kt, p.R, p.regen > 0.5)
    row[16] = e
    row[17] = s[2]
    row[18] = s[4]
    row[19] = s[3]
    row[20] = diss_trap


@njit(cache=True)
def _piston(p, s, stance, foot_y, engaged):
    if not (stance and engaged):
        return 0.0, 0.0
    l = s[0] - foot_y
    fax, fs, fd, fdis, pp, vp, alpha, adot, xs = _leg(p, l, s[1], engaged, 0.0)
    if pp < 0.0:
        pp = 0.0
    return pp, fdis


@njit(cache=True)
def run_vertical(p, tp, y0, t_end, dt, tol, sample_every, removal_time, max_events):
    """Simulate the vertical rig from rest at hip height ``y0``.

    Returns (trace, events, n_events, status).
    """
    n_grid = int(round(t_end / dt))
    n_samp = n_grid // sample_every + 1
    trace = np.zeros((n_samp, NCOL))
    events = np.zeros((max_events, EV_WIDTH))
    n_ev = 0
    status = FAIL_NONE

    s = np.zeros(5)
    s[0] = y0
    s_new = np.zeros(5)
    s_try = np.zeros(5)
    k1 = np.zeros(5)
    k2 = np.zeros(5)
    k3 = np.zeros(5)
    k4 = np.zeros(5)
    tmp = np.zeros(5)
    g0 = np.zeros(4)
    g1 = np.zeros(4)
    gm = np.zeros(4)

    stance = False
    engaged = False
    removed = False
    foot_y = 0.0
    diss_trap = 0.0
    t = 0.0
    ground = _height(tp, 0.0, removed)

    _v_sample(p, t, s, stance, foot_y, engaged, _knee_cmd(p, t), diss_trap, trace[0])
    i_samp = 1
    next_sw = _next_time_event(p, t, False)

    for k in range(n_grid):
        t_target = (k + 1) * dt
        while t < t_target:
            h_full = t_target - t
            if h_full < 1e-13:
                t = t_target
                break
            if next_sw <= t:
                next_sw = _next_time_event(p, t, False)
            h = h_full
            clipped = next_sw < t + h_full
            if clipped:
                h = next_sw - t
            tau = _knee_cmd(p, t + 0.5 * h)
            _v_rk4(p, t, s, h, stance, foot_y, engaged, tau, k1, k2, k3, k4, tmp, s_new)
            _v_guards(p, s, stance, foot_y, ground, engaged, tau, g0)
            _v_guards(p, s_new, stance, foot_y, ground, engaged, tau, g1)
            hit = -1
            h_ev = h
            for i in range(4):
                if g0[i] > 0.0 and g1[i] <= 0.0:
                    lo = 0.0
                    hi = h
                    while hi - lo > tol:
                        mid = 0.5 * (lo + hi)
                        _v_rk4(p, t, s, mid, stance, foot_y, engaged, tau, k1, k2, k3, k4, tmp, s_try)
                        _v_guards(p, s_try, stance, foot_y, ground, engaged, tau, gm)
                        if gm[i] <= 0.0:
                            hi = mid
                        else:
                            lo = mid
                    if hi < h_ev or hit < 0:
                        h_ev = hi
                        hit = i
            if stance and g0[0] < 0.0:
                # a knee torque switch left the leg pulling on the ground:
                # contact ends at the switch instant
                hit = 0
                h_ev = 0.0
            pp0, f0 = _piston(p, s, stance, foot_y, engaged)
            if hit >= 0 and h_ev < h:
                _v_rk4(p, t, s, h_ev, stance, foot_y, engaged, tau, k1, k2, k3, k4, tmp, s_new)
                t = t + h_ev
            elif clipped:
                t = next_sw
            else:
                t = t_target
            for i in range(5):
                s[i] = s_new[i]
            pp1, f1 = _piston(p, s, stance, foot_y, engaged)
            diss_trap += 0.5 * (f0 + f1) * (pp1 - pp0)
            if hit < 0:
                continue

            kind = 0
            if stance:
                if hit == 0 or hit == 1:
                    kind = EV_LIFTOFF
                elif hit == 2:
                    kind = EV_DISENGAGE if engaged else EV_ENGAGE
                else:
                    kind = EV_BOTTOM
            else:
                kind = EV_TOUCHDOWN if hit == 0 else EV_APEX

            if n_ev >= max_events:
                status = FAIL_EVENTS
                break
            ev = events[n_ev]
            ev[0] = kind
            ev[1] = t
            ev[2] = 0.0
            ev[3] = s[0]
            ev[4] = ground
            ev[5] = s[3]
            ev[6] = diss_trap
            ev[7] = s[4]
            n_ev += 1

            if kind == EV_TOUCHDOWN:
                stance = True
                foot_y = s[0] - p.l0
                engaged = p.slack <= 0.0
                if engaged:
                    events[n_ev - 1, 2] = 1.0  # engaged at touchdown
            elif kind == EV_LIFTOFF:
                # the massless leg snaps back to rest length in flight; the
                # elastic energy still stored at liftoff is booked as a loss
                r = _leg(p, s[0] - foot_y, s[1], engaged, tau)
                s[4] += _stored_energy(p, r[8], r[4], engaged)
                stance = False
                engaged = False
            elif kind == EV_ENGAGE:
                engaged = True
            elif kind == EV_DISENGAGE:
                engaged = False
            elif kind == EV_APEX:
                if (not removed) and int(tp[0]) == 1 and t >= removal_time:
                    removed = True
                    ground = _height(tp, 0.0, removed)
                    if n_ev < max_events:
                        ev = events[n_ev]
                        ev[0] = EV_REMOVAL
                        ev[1] = t
                        ev[3] = s[0]
                        ev[4] = ground
                        ev[5] = s[3]
                        ev[6] = diss_trap
                        ev[7] = s[4]
                        n_ev += 1
            elif kind == EV_BOTTOM:
                status = FAIL_BOTTOM
                break
        if status != FAIL_NONE:
            break
        if (k + 1) % sample_every == 0 and i_samp < n_samp:
            _v_sample(p, t, s, stance, foot_y, engaged, _knee_cmd(p, t), diss_trap, trace[i_samp])
            i_samp += 1
    return trace[:i_samp], events[:n_ev], status


# ---------------------------------------------------------------------------
# boom rig: state = x, y, vx, vy, w_knee, w_hip, e_elec, e_visc, w_swing
# ---------------------------------------------------------------------------

@njit(cache=True)
def _f_stance(p, t, s, xf, yf, engaged, tau_knee):
    dx = s[0] - xf
    dy = s[1] - yf
    l = math.sqrt(dx * dx + dy * dy)
    st = dx / l
    ct = dy / l
    ldot = st * s[2] + ct * s[3]
    thdot = (ct * s[2] - st * s[3]) / l
    theta = math.atan2(dx, dy)
    fax, fs, fd, fdis, pp, vp, alpha, adot, xs = _leg(p, l, ldot, engaged, tau_knee)
    ref, ref_dot, ref_acc = _hip_ref(t, p.A_hip, p.O_hip, p.f_f, p.D_vir, p.k_phase0)
    tau_hip = _clamp(_pd(p.kp, p.kd, ref, theta, ref_dot, thdot), p.lim_hip)
    ft = tau_hip / l
    fx = fax * st + ft * ct
    fy = fax * ct - ft * st
    return fx, fy, fax, fs, fd, fdis, pp, vp, alpha, adot, xs, theta, thdot, tau_hip, l


@njit(cache=True)
def _f_swing(p, t):
    ref, ref_dot, ref_acc = _hip_ref(t, p.A_hip, p.O_hip, p.f_f, p.D_vir, p.k_phase0)
    tau = _clamp(p.swing_inertia * ref_acc, p.lim_hip)
    return ref, ref_dot, tau


@njit(cache=True)
def _f_deriv(p, t, s, stance, xf, yf, engaged, tau_knee, out):
    regen = p.regen > 0.5
    out[0] = s[2]
    out[1] = s[3]
    if stance:
        (fx, fy, fax, fs, fd, fdis, pp, vp, alpha, adot, xs, theta, thdot,
         tau_hip, l) = _f_stance(p, t, s, xf, yf, engaged, tau_knee)
        out[2] = fx / p.m
        out[3] = fy / p.m - p.g
        out[4] = tau_knee * adot
        out[5] = tau_hip * thdot
        out[6] = (_electrical_power(tau_knee, adot, p.gear_knee, p.kt, p.R, regen)
                  + _electrical_power(tau_hip, thdot, p.gear_hip, p.kt, p.R, regen))
        out[7] = fdis * vp + p.b_knee * adot * adot
        out[8] = 0.0
    else:
        ref, ref_dot, tau_sw = _f_swing(p, t)
        out[2] = 0.0
        out[3] = -p.g
        out[4] = 0.0
        out[5] = 0.0
        out[6] = (_electrical_power(tau_knee, 0.0, p.gear_knee, p.kt, p.R, regen)
                  + _electrical_power(tau_sw, ref_dot, p.gear_hip, p.kt, p.R, regen))
        out[7] = 0.0
        out[8] = tau_sw * ref_dot


@njit(cache=True)
def _f_rk4(p, t, s, h, stance, xf, yf, engaged, tau_knee, k1, k2, k3, k4, tmp, out):
    n = s.shape[0]
    _f_deriv(p, t, s, stance, xf, yf, engaged, tau_knee, k1)
    for i in range(n):
        tmp[i] = s[i] + 0.5 * h * k1[i]
    _f_deriv(p, t + 0.5 * h, tmp, stance, xf, yf, engaged, tau_knee, k2)
    for i in range(n):
        tmp[i] = s[i] + 0.5 * h * k2[i]
    _f_deriv(p, t + 0.5 * h, tmp, stance, xf, yf, engaged, tau_knee, k3)
    for i in range(n):
        tmp[i] = s[i] + h * k3[i]
    _f_deriv(p, t + h, tmp, stance, xf, yf, engaged, tau_knee, k4)
    for i in range(n):
        out[i] = s[i] + h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0


@njit(cache=True)
def _foot_clearance(p, tp, t, s):
    ref, ref_dot, tau_sw = _f_swing(p, t)
    fx = s[0] - p.l0 * math.sin(ref)
    fy = s[1] - p.l0 * math.cos(ref)
    return fy - _height(tp, fx, False), fx, fy


@njit(cache=True)
def _f_guards(p, tp, t, s, stance, xf, yf, engaged, tau_knee, g):
    if stance:
        (fx, fy, fax, fs, fd, fdis, pp, vp, alpha, adot, xs, theta, thdot,
         tau_hip, l) = _f_stance(p, t, s, xf, yf, engaged, tau_knee)
        g[0] = fax
        g[1] = p.l0 - l
        g[2] = pp if engaged else -pp
        g[3] = alpha - p.alpha_min
    else:
        c, fx, fy = _foot_clearance(p, tp, t, s)
        g[0] = c
        g[1] = s[3]
        g[2] = 1.0
        g[3] = 1.0


@njit(cache=True)
def _f_sample(p, tp, t, s, stance, xf, yf, engaged, tau_knee, diss_trap, row):
    regen = p.regen > 0.5
    row[:] = 0.0
    row[0] = t
    row[1] = s[0]
    row[2] = s[1]
    row[3] = s[3]
    row[10] = tau_knee
    row[12] = s[2]
    e = 0.5 * p.m * (s[2] * s[2] + s[3] * s[3]) + p.m * p.g * s[1]
    if stance:
        (fx, fy, fax, fs, fd, fdis, pp, vp, alpha, adot, xs, theta, thdot,
         tau_hip, l) = _f_stance(p, t, s, xf, yf, engaged, tau_knee)
        row[4] = alpha
        row[5] = fy
        row[6] = fs
        row[7] = fd
        row[8] = pp if (engaged and pp > 0.0) else 0.0
        row[9] = tau_hip
        row[11] = (_electrical_power(tau_knee, adot, p.gear_knee, p.kt, p.R, regen)
                   + _electrical_power(tau_hip, thdot, p.gear_hip, p.kt, p.R, regen))
        row[13] = fx
        row[14] = theta
        row[15] = fdis
        e += _stored_energy(p, xs, pp, engaged)
    else:
        ref, ref_dot, tau_sw = _f_swing(p, t)
        row[4] = p.alpha0
        row[9] = tau_sw
        row[11] = (_electrical_power(tau_knee, 0.0, p.gear_knee, p.kt, p.R, regen)
                   + _electrical_power(tau_sw, ref_dot, p.gear_hip, p.kt, p.R, regen))
        row[14] = ref
    row[16] = e
    row[17] = s[4] + s[5]
    row[18] = s[7]
    row[19] = s[6]
    row[20] = diss_trap
    row[21] = s[8]


@njit(cache=True)
def _f_piston(p, t, s, stance, xf, yf, engaged):
    if not (stance and engaged):
        return 0.0, 0.0
    (fx, fy, fax, fs, fd, fdis, pp, vp, alpha, adot, xs, theta, thdot,
     tau_hip, l) = _f_stance(p, t, s, xf, yf, engaged, 0.0)
    if pp < 0.0:
        pp = 0.0
    return pp, fdis


@njit(cache=True)
def run_forward(p, tp, x0, y0, vx0, t_end, dt, tol, sample_every, max_events, penetration, x_end):
    """Simulate the boom rig from hip position (x0, y0) at speed vx0.

    Returns (trace, events, status).  Slip events are logged once per stance.
    The run ends at ``t_end`` or once the hip passes arc position ``x_end``.
    """
    n_grid = int(round(t_end / dt))
    n_samp = n_grid // sample_every + 1
    trace = np.zeros((n_samp, NCOL))
    events = np.zeros((max_events, EV_WIDTH))
    n_ev = 0
    status = FAIL_NONE

    s = np.zeros(9)
    s[0] = x0
    s[1] = y0
    s[2] = vx0
    s_new = np.zeros(9)
    s_try = np.zeros(9)
    k1 = np.zeros(9)
    k2 = np.zeros(9)
    k3 = np.zeros(9)
    k4 = np.zeros(9)
    tmp = np.zeros(9)
    g0 = np.zeros(4)
    g1 = np.zeros(4)
    gm = np.zeros(4)

    stance = False
    engaged = False
    slipped = False
    scuffed = False
    xf = 0.0
    yf = 0.0
    diss_trap = 0.0
    t = 0.0

    _f_sample(p, tp, t, s, stance, xf, yf, engaged, _knee_cmd(p, t), diss_trap, trace[0])
    i_samp = 1
    next_sw = _next_time_event(p, t, True)

    for k in range(n_grid):
        t_target = (k + 1) * dt
        while t < t_target:
            h_full = t_target - t
            if h_full < 1e-13:
                t = t_target
                break
            if next_sw <= t:
                next_sw = _next_time_event(p, t, True)
            h = h_full
            clipped = next_sw < t + h_full
            if clipped:
                h = next_sw - t
            tau = _knee_cmd(p, t + 0.5 * h)
            _f_rk4(p, t, s, h, stance, xf, yf, engaged, tau, k1, k2, k3, k4, tmp, s_new)
            _f_guards(p, tp, t, s, stance, xf, yf, engaged, tau, g0)
            _f_guards(p, tp, t + h, s_new, stance, xf, yf, engaged, tau, g1)
            hit = -1
            h_ev = h
            for i in range(4):
                if g0[i] > 0.0 and g1[i] <= 0.0:
                    lo = 0.0
                    hi = h
                    while hi - lo > tol:
                        mid = 0.5 * (lo + hi)
                        _f_rk4(p, t, s, mid, stance, xf, yf, engaged, tau, k1, k2, k3, k4, tmp, s_try)
                        _f_guards(p, tp, t + mid, s_try, stance, xf, yf, engaged, tau, gm)
                        if gm[i] <= 0.0:
                            hi = mid
                        else:
                            lo = mid
                    if hi < h_ev or hit < 0:
                        h_ev = hi
                        hit = i
            if stance and g0[0] < 0.0:
                # a knee torque switch left the leg pulling on the ground:
                # contact ends at the switch instant
                hit = 0
                h_ev = 0.0
            pp0, f0 = _f_piston(p, t, s, stance, xf, yf, engaged)
            if hit >= 0 and h_ev < h:
                _f_rk4(p, t, s, h_ev, stance, xf, yf, engaged, tau, k1, k2, k3, k4, tmp, s_new)
                t = t + h_ev
            elif clipped:
                t = next_sw
            else:
                t = t_target
            for i in range(9):
                s[i] = s_new[i]
            pp1, f1 = _f_piston(p, t, s, stance, xf, yf, engaged)
            diss_trap += 0.5 * (f0 + f1) * (pp1 - pp0)

            if not stance and hit != 1:
                c, fxp, fyp = _foot_clearance(p, tp, t, s)
                if hit == 0 or c < -penetration:
                    ldot = ((s[0] - fxp) * s[2] + (s[1] - fyp) * s[3]) / p.l0
                    if ldot < 0.0:
                        hit = 0
                    else:
                        hit = -1
                        if not scuffed and n_ev < max_events:
                            scuffed = True
                            ev = events[n_ev]
                            ev[0] = EV_SCUFF
                            ev[1] = t
                            ev[2] = s[0]
                            ev[3] = s[1]
                            n_ev += 1
            if stance and not slipped:
                r = _f_stance(p, t, s, xf, yf, engaged, tau)
                if r[1] > 5.0 and abs(r[0]) > p.mu * r[1]:
                    slipped = True
                    if n_ev < max_events:
                        ev = events[n_ev]
                        ev[0] = EV_SLIP
                        ev[1] = t
                        ev[2] = s[0]
                        ev[3] = s[1]
                        n_ev += 1
            if hit < 0:
                continue

            kind = 0
            if stance:
                if hit == 0 or hit == 1:
                    kind = EV_LIFTOFF
                elif hit == 2:
                    kind = EV_DISENGAGE if engaged else EV_ENGAGE
                else:
                    kind = EV_BOTTOM
            else:
                kind = EV_TOUCHDOWN if hit == 0 else EV_APEX

            if n_ev >= max_events:
                status = FAIL_EVENTS
                break
            ev = events[n_ev]
            ev[0] = kind
            ev[1] = t
            ev[2] = s[0]
            ev[3] = s[1]
            ev[4] = _height(tp, s[0], False)
            ev[5] = s[6]
            ev[6] = diss_trap
            ev[7] = s[7]
            n_ev += 1

            if kind == EV_TOUCHDOWN:
                c, fxp, fyp = _foot_clearance(p, tp, t, s)
                stance = True
                slipped = False
                xf = fxp
                yf = _height(tp, fxp, False)
                engaged = p.slack <= 0.0
            elif kind == EV_LIFTOFF:
                r = _f_stance(p, t, s, xf, yf, engaged, tau)
                s[7] += _stored_energy(p, r[10], r[6], engaged)
                stance = False
                engaged = False
                scuffed = False
            elif kind == EV_ENGAGE:
                engaged = True
            elif kind == EV_DISENGAGE:
                engaged = False
            elif kind == EV_BOTTOM:
                status = FAIL_BOTTOM
                break
        if status != FAIL_NONE:
            break
        if s[1] - _height(tp, s[0], False) < 0.5 * p.l0:
            status = FAIL_FALL
            break
        if (k + 1) % sample_every == 0 and i_samp < n_samp:
            _f_sample(p, tp, t, s, stance, xf, yf, engaged, _knee_cmd(p, t), diss_trap, trace[i_samp])
            i_samp += 1
            if s[0] >= x_end:
                break
    return trace[:i_samp], events[:n_ev], status
