"""Pure-Python integration kernels.

Reference implementation of the hot loops. The compiled ``_kernels``
extension mirrors every function here line for line; tests require the two
to agree to rounding.
"""
import math

from blackstart._layout import (
    C_CMD, C_ELAPSED_STEPS, C_INTEG, C_LATCH_A, C_LATCH_C, C_PHASE, C_REF,
    C_SETTLE_STEPS, C_STARTED, C_TAU_STEPS, N_STATE,
    P_CF, P_DC_A, P_DC_B, P_DC_C, P_ISAT, P_KI, P_KNEE, P_KP, P_LF, P_LMAG,
    P_LSAT, P_OMEGA, P_RCORE, P_RDAMP, P_RWIND, P_SETTLE, P_SLEW, P_TA, P_TD, P_TIMEOUT,
    P_VCLAMP, P_VD, P_VHAT, PH_DONE, PH_RETURN_TO_ORIGIN,
    PH_REVERSE_SATURATE, PH_SATURATE_POSITIVE, SRC_DC, SRC_DEMAG, SRC_HARD,
    SRC_SPIRAL, SRC_ULTRAFAST, ST_DEMAG_DONE, ST_DIVERGED, ST_OK, ST_TIMEOUT,
)

SQRT3_2 = math.sqrt(3.0) / 2.0
TWO_PI = 2.0 * math.pi


def magnetizing_current(lam, knee, l_mag, l_sat):
    """Piecewise-linear anhysteretic curve for one phase."""
    a = abs(lam)
    if a <= knee:
        return lam / l_mag
    i = knee / l_mag + (a - knee) / l_sat
    return i if lam > 0.0 else -i


def profile_alphabeta(source, par, t):
    """EMF reference of a magnetization profile at local time ``t``."""
    v_hat = par[P_VHAT]
    w = par[P_OMEGA]
    if source == SRC_HARD:
        return v_hat * math.cos(w * t), v_hat * math.sin(w * t)
    if source == SRC_ULTRAFAST:
        t_d = par[P_TD]
        if t < t_d:
            return v_hat, 0.0
        th = 0.5 * math.pi + w * (t - t_d)
        return v_hat * math.cos(th), v_hat * math.sin(th)
    if source == SRC_SPIRAL:
        t_a = par[P_TA]
        if t <= t_a:
            mag = v_hat * w / TWO_PI * t
            return mag * math.cos(w * t), mag * math.sin(w * t)
        s = w * (t - t_a)
        return v_hat * math.cos(s), v_hat * math.sin(s)
    return 0.0, 0.0


def source_abc(source, par, t):
    if source == SRC_DC:
        return par[P_DC_A], par[P_DC_B], par[P_DC_C]
    al, be = profile_alphabeta(source, par, t)
    return al, -0.5 * al + SQRT3_2 * be, -0.5 * al - SQRT3_2 * be


def rhs(x, v, par, has_filter, dx, ipcc):
    """Joint plant derivative; writes ``dx`` and the PCC current ``ipcc``."""
    knee = par[P_KNEE]
    l_mag = par[P_LMAG]
    l_sat = par[P_LSAT]
    g_core = 1.0 / par[P_RCORE]
    r_w = par[P_RWIND]
    e = [0.0, 0.0, 0.0]
    for j in range(3):
        v_pcc = x[3 + j] if has_filter else v[j]
        i_p = magnetizing_current(x[6 + j], knee, l_mag, l_sat) + v_pcc * g_core
        ipcc[j] = i_p
        e[j] = v_pcc - r_w * i_p
    mean = (e[0] + e[1] + e[2]) / 3.0
    for j in range(3):
        dx[6 + j] = e[j] - mean
    if has_filter:
        l_f = par[P_LF]
        c_f = par[P_CF]
        r_d = par[P_RDAMP]
        for j in range(3):
            dx[j] = (v[j] - x[3 + j] - r_d * x[j]) / l_f
            dx[3 + j] = (x[j] - ipcc[j]) / c_f
    else:
        for j in range(6):
            dx[j] = 0.0


def measure(x, v, par, has_filter, i_inv, i_pcc):
    """Terminal currents and PCC voltage at the current state."""
    knee = par[P_KNEE]
    l_mag = par[P_LMAG]
    l_sat = par[P_LSAT]
    g_core = 1.0 / par[P_RCORE]
    v_pcc = [0.0, 0.0, 0.0]
    for j in range(3):
        v_pcc[j] = x[3 + j] if has_filter else v[j]
        i_pcc[j] = magnetizing_current(x[6 + j], knee, l_mag, l_sat) + v_pcc[j] * g_core
        i_inv[j] = x[j] if has_filter else i_pcc[j]
    return v_pcc


def demag_update(ctl, par, i_a, i_b, i_c, dt):
    """Advance the demagnetization state machine by one step.

    Writes the held inverter command into ``ctl[C_CMD:C_CMD + 3]``.
    Returns ``ST_OK``, ``ST_DEMAG_DONE`` or ``ST_TIMEOUT``.
    """
    i_sat = par[P_ISAT]
    ph = int(ctl[C_PHASE])
    if ph == PH_SATURATE_POSITIVE:
        if i_a >= i_sat:
            ctl[C_LATCH_A] = 1.0
        if i_c <= -i_sat:
            ctl[C_LATCH_C] = 1.0
        if ctl[C_LATCH_A] > 0.0 and ctl[C_LATCH_C] > 0.0:
            if ctl[C_SETTLE_STEPS] * dt >= par[P_SETTLE]:
                ph = PH_REVERSE_SATURATE
                ctl[C_ELAPSED_STEPS] = 0.0
            else:
                ctl[C_SETTLE_STEPS] += 1.0
    if ph == PH_REVERSE_SATURATE and i_a <= -i_sat:
        ph = PH_RETURN_TO_ORIGIN
        ctl[C_TAU_STEPS] = ctl[C_ELAPSED_STEPS]
        ctl[C_ELAPSED_STEPS] = 0.0
    if ph == PH_RETURN_TO_ORIGIN and ctl[C_ELAPSED_STEPS] >= math.floor(0.5 * ctl[C_TAU_STEPS] + 0.5):
        ph = PH_DONE
    ctl[C_PHASE] = float(ph)

    if ph == PH_SATURATE_POSITIVE:
        kp = par[P_KP]
        ki = par[P_KI]
        clamp = par[P_VCLAMP]
        max_move = par[P_SLEW] * dt
        meas = (i_a, i_b, i_c)
        targets = (i_sat, 0.0, -i_sat)
        if ctl[C_STARTED] == 0.0:
            for j in range(3):
                ctl[C_REF + j] = meas[j]
            ctl[C_STARTED] = 1.0
        for j in range(3):
            gap = targets[j] - ctl[C_REF + j]
            if gap > max_move:
                gap = max_move
            elif gap < -max_move:
                gap = -max_move
            ctl[C_REF + j] += gap
            err = ctl[C_REF + j] - meas[j]
            u = kp * err + ctl[C_INTEG + j]
            if -clamp < u < clamp or (u >= clamp and err < 0.0) or (u <= -clamp and err > 0.0):
                ctl[C_INTEG + j] += ki * err * dt
            ctl[C_CMD + j] = kp * err + ctl[C_INTEG + j]
        # three-wire drive: no zero-sequence command or integrator state
        mean = (ctl[C_CMD] + ctl[C_CMD + 1] + ctl[C_CMD + 2]) / 3.0
        mean_i = (ctl[C_INTEG] + ctl[C_INTEG + 1] + ctl[C_INTEG + 2]) / 3.0
        for j in range(3):
            ctl[C_INTEG + j] -= mean_i
            u = ctl[C_CMD + j] - mean
            if u > clamp:
                u = clamp
            elif u < -clamp:
                u = -clamp
            ctl[C_CMD + j] = u
    elif ph == PH_REVERSE_SATURATE:
        ctl[C_CMD] = -par[P_VD]
        ctl[C_CMD + 1] = 0.0
        ctl[C_CMD + 2] = par[P_VD]
    elif ph == PH_RETURN_TO_ORIGIN:
        ctl[C_CMD] = par[P_VD]
        ctl[C_CMD + 1] = 0.0
        ctl[C_CMD + 2] = -par[P_VD]
    else:
        ctl[C_CMD] = 0.0
        ctl[C_CMD + 1] = 0.0
        ctl[C_CMD + 2] = 0.0
        return ST_DEMAG_DONE

    ctl[C_ELAPSED_STEPS] += 1.0
    if ctl[C_ELAPSED_STEPS] * dt > par[P_TIMEOUT]:
        return ST_TIMEOUT
    return ST_OK


def _record(out, row, t, v, v_pcc, i_inv, i_pcc, x):
    r = out[row]
    r[0] = t
    for j in range(3):
        r[1 + j] = v[j]
        r[4 + j] = v_pcc[j]
        r[7 + j] = i_inv[j]
        r[10 + j] = i_pcc[j]
        r[13 + j] = x[6 + j]


def _rk4(x, v1, v2, v3, par, has_filter, h):
    """Classical RK4 step of length ``h`` in place; False if ``x`` became non-finite."""
    n = N_STATE
    k1 = [0.0] * n
    k2 = [0.0] * n
    k3 = [0.0] * n
    k4 = [0.0] * n
    xs = [0.0] * n
    scratch = [0.0, 0.0, 0.0]
    half = 0.5 * h
    rhs(x, v1, par, has_filter, k1, scratch)
    for i in range(n):
        xs[i] = x[i] + half * k1[i]
    rhs(xs, v2, par, has_filter, k2, scratch)
    for i in range(n):
        xs[i] = x[i] + half * k2[i]
    rhs(xs, v2, par, has_filter, k3, scratch)
    for i in range(n):
        xs[i] = x[i] + h * k3[i]
    rhs(xs, v3, par, has_filter, k4, scratch)
    finite = True
    for i in range(n):
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if not math.isfinite(x[i]):
            finite = False
    return finite


def integrate(x, par, source, has_filter, t_abs0, t_loc0, dt, n_steps,
              zoh_steps, out, rec_every, peaks, ctl):
    """Fixed-step RK4 over ``n_steps`` steps.

    ``x``, ``peaks`` and ``ctl`` are updated in place. Samples are written to
    ``out`` every ``rec_every`` steps and at the final step.

    Returns ``(status, steps_taken, rows_written)``.
    """
    has_filter = bool(has_filter)
    i_inv = [0.0, 0.0, 0.0]
    i_pcc = [0.0, 0.0, 0.0]
    held = [ctl[C_CMD], ctl[C_CMD + 1], ctl[C_CMD + 2]] if source == SRC_DEMAG else [0.0, 0.0, 0.0]
    half = 0.5 * dt
    status = ST_OK
    row = 0
    k = 0
    while True:
        t_loc = t_loc0 + k * dt
        t_abs = t_abs0 + k * dt
        last = k == n_steps
        if source == SRC_DEMAG:
            measure(x, held, par, has_filter, i_inv, i_pcc)
            if not last:
                status = demag_update(ctl, par, i_inv[0], i_inv[1], i_inv[2], dt)
                held = [ctl[C_CMD], ctl[C_CMD + 1], ctl[C_CMD + 2]]
                if status == ST_DEMAG_DONE:
                    last = True
        elif zoh_steps > 0:
            if k % zoh_steps == 0:
                held = list(source_abc(source, par, t_loc))
        else:
            held = list(source_abc(source, par, t_loc))
        v_pcc = measure(x, held, par, has_filter, i_inv, i_pcc)
        for j in range(3):
            a = abs(i_inv[j])
            if a > peaks[j]:
                peaks[j] = a
            a = abs(i_pcc[j])
            if a > peaks[3 + j]:
                peaks[3 + j] = a
        if last or k % rec_every == 0:
            _record(out, row, t_abs, held, v_pcc, i_inv, i_pcc, x)
            row += 1
        if last:
            break
        if status == ST_TIMEOUT:
            break

        if source == SRC_DEMAG or zoh_steps > 0:
            finite = _rk4(x, held, held, held, par, has_filter, dt)
        elif source == SRC_ULTRAFAST and t_loc < par[P_TD] <= t_loc + dt:
            # split the step at the phase jump; the command is constant before it
            h1 = par[P_TD] - t_loc
            finite = _rk4(x, held, held, held, par, has_filter, h1)
            v1 = source_abc(source, par, par[P_TD])
            v2 = source_abc(source, par, par[P_TD] + 0.5 * (dt - h1))
            v3 = source_abc(source, par, t_loc + dt)
            finite = _rk4(x, v1, v2, v3, par, has_filter, dt - h1) and finite
        else:
            v2 = source_abc(source, par, t_loc + half)
            v3 = source_abc(source, par, t_loc + dt)
            finite = _rk4(x, held, v2, v3, par, has_filter, dt)
        k += 1
        if not finite:
            return ST_DIVERGED, k, row
    if status == ST_TIMEOUT:
        return ST_TIMEOUT, k, row
    return status, k, row
