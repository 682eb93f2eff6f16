# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration kernels; mirrors ``_kernels_py`` exactly."""
from libc.math cimport cos, sin, fabs, floor, isfinite, sqrt, M_PI

# keep in sync with _layout.py
cdef enum:
    P_VHAT = 0
    P_OMEGA = 1
    P_TD = 2
    P_TA = 3
    P_DC_A = 4
    P_KNEE = 7
    P_LMAG = 8
    P_LSAT = 9
    P_RCORE = 10
    P_RWIND = 11
    P_LF = 12
    P_CF = 13
    P_RDAMP = 14
    P_ISAT = 15
    P_VD = 16
    P_KP = 17
    P_KI = 18
    P_VCLAMP = 19
    P_TIMEOUT = 20
    P_SLEW = 21
    P_SETTLE = 22

cdef enum:
    SRC_HARD = 1
    SRC_ULTRAFAST = 2
    SRC_SPIRAL = 3
    SRC_DC = 4
    SRC_DEMAG = 5

cdef enum:
    C_PHASE = 0
    C_TAU_STEPS = 1
    C_ELAPSED_STEPS = 2
    C_INTEG = 3
    C_CMD = 6
    C_REF = 9
    C_LATCH_A = 12
    C_LATCH_C = 13
    C_STARTED = 14
    C_SETTLE_STEPS = 15

cdef enum:
    PH_SATURATE_POSITIVE = 0
    PH_REVERSE_SATURATE = 1
    PH_RETURN_TO_ORIGIN = 2
    PH_DONE = 3

cdef enum:
    ST_OK = 0
    ST_DEMAG_DONE = 1
    ST_TIMEOUT = -1
    ST_DIVERGED = -2

cdef double SQRT3_2 = sqrt(3.0) / 2.0
cdef double TWO_PI = 2.0 * M_PI


cdef inline double _imag(double lam, double knee, double l_mag, double l_sat) noexcept nogil:
    cdef double a = fabs(lam)
    cdef double i
    if a <= knee:
        return lam / l_mag
    i = knee / l_mag + (a - knee) / l_sat
    return i if lam > 0.0 else -i


def magnetizing_current(double lam, double knee, double l_mag, double l_sat):
    return _imag(lam, knee, l_mag, l_sat)


cdef inline void _profile(int source, const double[::1] par, double t,
                          double* al, double* be) noexcept nogil:
    cdef double v_hat = par[P_VHAT]
    cdef double w = par[P_OMEGA]
    cdef double th, mag, s
    if source == SRC_HARD:
        al[0] = v_hat * cos(w * t)
        be[0] = v_hat * sin(w * t)
    elif source == SRC_ULTRAFAST:
        if t < par[P_TD]:
            al[0] = v_hat
            be[0] = 0.0
        else:
            th = 0.5 * M_PI + w * (t - par[P_TD])
            al[0] = v_hat * cos(th)
            be[0] = v_hat * sin(th)
    elif source == SRC_SPIRAL:
        if t <= par[P_TA]:
            mag = v_hat * w / TWO_PI * t
            al[0] = mag * cos(w * t)
            be[0] = mag * sin(w * t)
        else:
            s = w * (t - par[P_TA])
            al[0] = v_hat * cos(s)
            be[0] = v_hat * sin(s)
    else:
        al[0] = 0.0
        be[0] = 0.0


cdef inline void _source_abc(int source, const double[::1] par, double t,
                             double* v) noexcept nogil:
    cdef double al, be
    if source == SRC_DC:
        v[0] = par[P_DC_A]
        v[1] = par[P_DC_A + 1]
        v[2] = par[P_DC_A + 2]
        return
    _profile(source, par, t, &al, &be)
    v[0] = al
    v[1] = -0.5 * al + SQRT3_2 * be
    v[2] = -0.5 * al - SQRT3_2 * be


def profile_alphabeta(int source, const double[::1] par, double t):
    cdef double al, be
    _profile(source, par, t, &al, &be)
    return al, be


def source_abc(int source, const double[::1] par, double t):
    cdef double v[3]
    _source_abc(source, par, t, v)
    return v[0], v[1], v[2]


cdef inline void _rhs(const double* x, const double* v, const double[::1] par,
                      bint has_filter, double* dx, double* ipcc) noexcept nogil:
    cdef double knee = par[P_KNEE]
    cdef double l_mag = par[P_LMAG]
    cdef double l_sat = par[P_LSAT]
    cdef double g_core = 1.0 / par[P_RCORE]
    cdef double r_w = par[P_RWIND]
    cdef double e[3]
    cdef double v_pcc, i_p, mean, l_f, c_f, r_d
    cdef int j
    for j in range(3):
        v_pcc = x[3 + j] if has_filter else v[j]
        i_p = _imag(x[6 + j], knee, l_mag, l_sat) + v_pcc * g_core
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


cdef inline void _measure(const double* x, const double* v, const double[::1] par,
                          bint has_filter, double* i_inv, double* i_pcc,
                          double* v_pcc) noexcept nogil:
    cdef double knee = par[P_KNEE]
    cdef double l_mag = par[P_LMAG]
    cdef double l_sat = par[P_LSAT]
    cdef double g_core = 1.0 / par[P_RCORE]
    cdef int j
    for j in range(3):
        v_pcc[j] = x[3 + j] if has_filter else v[j]
        i_pcc[j] = _imag(x[6 + j], knee, l_mag, l_sat) + v_pcc[j] * g_core
        i_inv[j] = x[j] if has_filter else i_pcc[j]


cdef int _demag_update(double[::1] ctl, const double[::1] par, double i_a,
                       double i_b, double i_c, double dt) noexcept nogil:
    cdef double i_sat = par[P_ISAT]
    cdef int ph = <int>ctl[C_PHASE]
    cdef double kp, ki, clamp, err, u, gap, max_move, mean, mean_i
    cdef double meas[3]
    cdef double targets[3]
    cdef int j
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
    if ph == PH_RETURN_TO_ORIGIN and ctl[C_ELAPSED_STEPS] >= floor(0.5 * ctl[C_TAU_STEPS] + 0.5):
        ph = PH_DONE
    ctl[C_PHASE] = <double>ph

    if ph == PH_SATURATE_POSITIVE:
        kp = par[P_KP]
        ki = par[P_KI]
        clamp = par[P_VCLAMP]
        max_move = par[P_SLEW] * dt
        meas[0] = i_a
        meas[1] = i_b
        meas[2] = i_c
        targets[0] = i_sat
        targets[1] = 0.0
        targets[2] = -i_sat
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
            if (-clamp < u < clamp) or (u >= clamp and err < 0.0) or (u <= -clamp and err > 0.0):
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


def demag_update(double[::1] ctl, const double[::1] par, double i_a, double i_b,
                 double i_c, double dt):
    return _demag_update(ctl, par, i_a, i_b, i_c, dt)


cdef inline bint _rk4(double* xv, const double* v1, const double* v2, const double* v3,
                      const double[::1] par, bint has_filter, double h) noexcept nogil:
    """Classical RK4 step of length ``h``; False if the state became non-finite."""
    cdef double k1[9]
    cdef double k2[9]
    cdef double k3[9]
    cdef double k4[9]
    cdef double xs[9]
    cdef double scratch[3]
    cdef double half = 0.5 * h
    cdef bint finite = True
    cdef int i
    _rhs(xv, v1, par, has_filter, k1, scratch)
    for i in range(9):
        xs[i] = xv[i] + half * k1[i]
    _rhs(xs, v2, par, has_filter, k2, scratch)
    for i in range(9):
        xs[i] = xv[i] + half * k2[i]
    _rhs(xs, v2, par, has_filter, k3, scratch)
    for i in range(9):
        xs[i] = xv[i] + h * k3[i]
    _rhs(xs, v3, par, has_filter, k4, scratch)
    for i in range(9):
        xv[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if not isfinite(xv[i]):
            finite = False
    return finite


def integrate(double[::1] x, const double[::1] par, int source, bint has_filter,
              double t_abs0, double t_loc0, double dt, long n_steps,
              long zoh_steps, double[:, ::1] out, long rec_every,
              double[::1] peaks, double[::1] ctl):
    """Fixed-step RK4 over ``n_steps`` steps; see ``_kernels_py.integrate``."""
    cdef double xv[9]
    cdef double i_inv[3]
    cdef double i_pcc[3]
    cdef double v_pcc[3]
    cdef double held[3]
    cdef double v1[3]
    cdef double v2[3]
    cdef double v3[3]
    cdef double half = 0.5 * dt
    cdef double t_loc, t_abs, a, h1
    cdef int status = ST_OK
    cdef long row = 0
    cdef long k = 0
    cdef bint last, hold
    cdef bint finite = True
    cdef int i, j

    for i in range(9):
        xv[i] = x[i]
    if source == SRC_DEMAG:
        for j in range(3):
            held[j] = ctl[C_CMD + j]
    else:
        for j in range(3):
            held[j] = 0.0
    hold = source == SRC_DEMAG or zoh_steps > 0

    with nogil:
        while True:
            t_loc = t_loc0 + k * dt
            t_abs = t_abs0 + k * dt
            last = k == n_steps
            if source == SRC_DEMAG:
                _measure(xv, held, par, has_filter, i_inv, i_pcc, v_pcc)
                if not last:
                    status = _demag_update(ctl, par, i_inv[0], i_inv[1], i_inv[2], dt)
                    for j in range(3):
                        held[j] = ctl[C_CMD + j]
                    if status == ST_DEMAG_DONE:
                        last = True
            elif zoh_steps > 0:
                if k % zoh_steps == 0:
                    _source_abc(source, par, t_loc, held)
            else:
                _source_abc(source, par, t_loc, held)
            _measure(xv, held, par, has_filter, i_inv, i_pcc, v_pcc)
            for j in range(3):
                a = fabs(i_inv[j])
                if a > peaks[j]:
                    peaks[j] = a
                a = fabs(i_pcc[j])
                if a > peaks[3 + j]:
                    peaks[3 + j] = a
            if last or k % rec_every == 0:
                out[row, 0] = t_abs
                for j in range(3):
                    out[row, 1 + j] = held[j]
                    out[row, 4 + j] = v_pcc[j]
                    out[row, 7 + j] = i_inv[j]
                    out[row, 10 + j] = i_pcc[j]
                    out[row, 13 + j] = xv[6 + j]
                row += 1
            if last:
                break
            if status == ST_TIMEOUT:
                break

            if hold:
                finite = _rk4(xv, held, held, held, par, has_filter, dt)
            elif source == SRC_ULTRAFAST and t_loc < par[P_TD] <= t_loc + dt:
                # split the step at the phase jump; the command is constant before it
                h1 = par[P_TD] - t_loc
                finite = _rk4(xv, held, held, held, par, has_filter, h1)
                _source_abc(source, par, par[P_TD], v1)
                _source_abc(source, par, par[P_TD] + 0.5 * (dt - h1), v2)
                _source_abc(source, par, t_loc + dt, v3)
                finite = _rk4(xv, v1, v2, v3, par, has_filter, dt - h1) and finite
            else:
                _source_abc(source, par, t_loc + half, v2)
                _source_abc(source, par, t_loc + dt, v3)
                finite = _rk4(xv, held, v2, v3, par, has_filter, dt)
            k += 1
            if not finite:
                break

    for i in range(9):
        x[i] = xv[i]
    if not finite:
        return ST_DIVERGED, k, row
    if status == ST_TIMEOUT:
        return ST_TIMEOUT, k, row
    return status, k, row
