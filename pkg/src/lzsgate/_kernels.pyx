# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled propagation kernels for the built-in two-level generators.

Mirrors ``_model.coupling_detuning`` and the Dormand-Prince controller of
``numerics.integrate``. State is carried as four doubles (Re c_g, Im c_g,
Re c_e, Im c_e).
"""

import numpy as np

from libc.math cimport cos, sin, sqrt, fabs, pow, ceil

DEF MAX_STEPS = 50000000

cdef enum:
    LAB = 0
    ROTATED = 1
    HARMONIC = 2
    POWERLAW = 3

cdef enum:
    OK = 0
    UNDERFLOW = 1
    BUDGET = 2

cdef struct Model:
    int kind
    double v, a, d0, w, phi, gg, ge, s1, s2, c
    int nh
    const double* cre
    const double* cim
    const double* nu


cdef inline void rhs(const Model* m, double t, const double* y, double* f) noexcept nogil:
    cdef double xr, xi, d, th, u, ct, st
    cdef int k
    if m.kind == LAB:
        xr = m.v
        xi = 0.0
        d = m.d0 + m.a * cos(m.w * t + m.phi)
    elif m.kind == ROTATED:
        th = (m.a / m.w) * sin(m.w * t)
        xr = m.v * cos(th)
        xi = m.v * sin(th)
        d = m.d0
    elif m.kind == HARMONIC:
        xr = 0.0
        xi = 0.0
        for k in range(m.nh):
            ct = cos(m.nu[k] * t)
            st = sin(m.nu[k] * t)
            xr = xr + m.cre[k] * ct - m.cim[k] * st
            xi = xi + m.cre[k] * st + m.cim[k] * ct
        d = m.d0
    else:
        u = t - m.c
        d = m.s1 * u + m.s2 * u * u * u * u * u
        xr = m.v
        xi = 0.0
    f[0] = -0.5 * (xr * y[3] + xi * y[2]) - 0.5 * m.gg * y[0]
    f[1] = 0.5 * (xr * y[2] - xi * y[3]) - 0.5 * m.gg * y[1]
    f[2] = -0.5 * (xr * y[1] - xi * y[0]) - d * y[3] - 0.5 * m.ge * y[2]
    f[3] = 0.5 * (xr * y[0] + xi * y[1]) + d * y[2] - 0.5 * m.ge * y[3]


cdef inline double cabs2(const double* y, int i) noexcept nogil:
    return sqrt(y[i] * y[i] + y[i + 1] * y[i + 1])


# Dormand-Prince 5(4)
cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40


cdef int dopri(const Model* m, double* y, double t, const double* ts, int ns, double* out,
               double rtol, double atol, double max_step,
               double* t_reached, long* nsteps) noexcept nogil:
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double k5[4]
    cdef double k6[4]
    cdef double k7[4]
    cdef double yt[4]
    cdef double yn[4]
    cdef double er[4]
    cdef double direction, span, h, hs, sh, hmin, remaining, target, t_new
    cdef double sc_g, sc_e, d0, d1, en, fac, eg, ee
    cdef int idx, i, landing
    nsteps[0] = 0
    t_reached[0] = t
    if ns == 0:
        return OK
    direction = 1.0 if ts[ns - 1] >= t else -1.0
    span = fabs(ts[ns - 1] - t)
    rhs(m, t, y, k1)
    sc_g = atol + rtol * cabs2(y, 0)
    sc_e = atol + rtol * cabs2(y, 2)
    d0 = sqrt(((cabs2(y, 0) / sc_g) ** 2 + (cabs2(y, 2) / sc_e) ** 2) / 2)
    d1 = sqrt(((cabs2(k1, 0) / sc_g) ** 2 + (cabs2(k1, 2) / sc_e) ** 2) / 2)
    if d0 < 1e-5 or d1 < 1e-5:
        h = span if span > 0 else 1e-6
    else:
        h = 0.01 * d0 / d1
    if h > max_step:
        h = max_step
    if span > 0 and h > span:
        h = span
    if h < 1e-12:
        h = 1e-12

    for idx in range(ns):
        target = ts[idx]
        while (target - t) * direction > 0:
            remaining = fabs(target - t)
            hs = h if h < remaining else remaining
            landing = hs >= remaining
            hmin = 1e-14 * (fabs(t) if fabs(t) > 1.0 else 1.0)
            if hs < hmin and not landing:
                t_reached[0] = t
                return UNDERFLOW
            sh = direction * hs
            for i in range(4):
                yt[i] = y[i] + sh * (A21 * k1[i])
            rhs(m, t + C2 * sh, yt, k2)
            for i in range(4):
                yt[i] = y[i] + sh * (A31 * k1[i] + A32 * k2[i])
            rhs(m, t + C3 * sh, yt, k3)
            for i in range(4):
                yt[i] = y[i] + sh * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            rhs(m, t + C4 * sh, yt, k4)
            for i in range(4):
                yt[i] = y[i] + sh * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            rhs(m, t + C5 * sh, yt, k5)
            for i in range(4):
                yt[i] = y[i] + sh * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            rhs(m, t + sh, yt, k6)
            for i in range(4):
                yn[i] = y[i] + sh * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
            t_new = target if landing else t + sh
            rhs(m, t_new, yn, k7)
            for i in range(4):
                er[i] = sh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc_g = atol + rtol * (cabs2(y, 0) if cabs2(y, 0) > cabs2(yn, 0) else cabs2(yn, 0))
            sc_e = atol + rtol * (cabs2(y, 2) if cabs2(y, 2) > cabs2(yn, 2) else cabs2(yn, 2))
            eg = cabs2(er, 0) / sc_g
            ee = cabs2(er, 2) / sc_e
            en = sqrt((eg * eg + ee * ee) / 2)
            if en <= 1.0:
                if en == 0.0:
                    fac = 5.0
                else:
                    fac = 0.9 * pow(en, -0.2)
                    if fac > 5.0:
                        fac = 5.0
                    if fac < 0.2:
                        fac = 0.2
                t = t_new
                for i in range(4):
                    y[i] = yn[i]
                    k1[i] = k7[i]
                if (not landing) or hs * fac < h:
                    h = hs * fac
                    if h > max_step:
                        h = max_step
                nsteps[0] += 1
                if nsteps[0] > MAX_STEPS:
                    t_reached[0] = t
                    return BUDGET
            else:
                fac = 0.9 * pow(en, -0.2)
                if fac < 0.2:
                    fac = 0.2
                h = hs * fac
        for i in range(4):
            out[4 * idx + i] = y[i]
    t_reached[0] = t
    return OK


cdef int rk4(const Model* m, double* y, double t, const double* ts, int ns, double* out,
             double max_step, double* t_reached, long* nsteps) noexcept nogil:
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double yt[4]
    cdef double target, span, h, direction
    cdef long n, j
    cdef int idx, i
    nsteps[0] = 0
    if ns == 0:
        t_reached[0] = t
        return OK
    direction = 1.0 if ts[ns - 1] >= t else -1.0
    for idx in range(ns):
        target = ts[idx]
        span = (target - t) * direction
        if span > 0:
            n = <long>ceil(span / max_step - 1e-9)
            if n < 1:
                n = 1
            h = (target - t) / n
            for j in range(n):
                rhs(m, t, y, k1)
                for i in range(4):
                    yt[i] = y[i] + h / 2 * k1[i]
                rhs(m, t + h / 2, yt, k2)
                for i in range(4):
                    yt[i] = y[i] + h / 2 * k2[i]
                rhs(m, t + h / 2, yt, k3)
                for i in range(4):
                    yt[i] = y[i] + h * k3[i]
                rhs(m, t + h, yt, k4)
                for i in range(4):
                    y[i] = y[i] + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
                t = t + h if j < n - 1 else target
                nsteps[0] += 1
        for i in range(4):
            out[4 * idx + i] = y[i]
    t_reached[0] = t
    return OK


cdef void fill_model(Model* m, int kind, const double* p, int nh,
                     const double* cre, const double* cim, const double* nu) noexcept nogil:
    m.kind = kind
    m.v = p[0]
    m.a = p[1]
    m.d0 = p[2]
    m.w = p[3]
    m.phi = p[4]
    m.gg = p[5]
    m.ge = p[6]
    m.s1 = p[7]
    m.s2 = p[8]
    m.c = p[9]
    m.nh = nh
    m.cre = cre
    m.cim = cim
    m.nu = nu


cdef int method_code(str method) except -1:
    if method == "rk45":
        return 0
    if method == "rk4":
        return 1
    raise ValueError(f"unknown method {method!r}")


def evolve(int kind, const double[::1] params, const double[::1] cre, const double[::1] cim,
           const double[::1] nu, double complex yg0, double complex ye0, double t0,
           const double[::1] sample_times,
           str method, double rtol, double atol, double max_step):
    """Propagate one state; returns (status, t_reached, nsteps, samples[ns, 2])."""
    cdef Model m
    cdef double y[4]
    cdef int ns = sample_times.shape[0]
    cdef int code = method_code(method)
    cdef int status
    cdef double t_reached = t0
    cdef long nsteps = 0
    cdef int nh = nu.shape[0]
    if params.shape[0] != 10:
        raise ValueError("params must have 10 entries")
    if cre.shape[0] != nh or cim.shape[0] != nh:
        raise ValueError("harmonic arrays disagree in length")
    out = np.zeros((ns, 4))
    cdef double[:, ::1] ov = out
    cdef double dummy = 0.0
    cdef const double* pcre = &cre[0] if nh > 0 else &dummy
    cdef const double* pcim = &cim[0] if nh > 0 else &dummy
    cdef const double* pnu = &nu[0] if nh > 0 else &dummy
    cdef double* pout = &ov[0, 0] if ns > 0 else &dummy
    cdef const double* pts = &sample_times[0] if ns > 0 else &dummy
    fill_model(&m, kind, &params[0], nh, pcre, pcim, pnu)
    y[0] = yg0.real
    y[1] = yg0.imag
    y[2] = ye0.real
    y[3] = ye0.imag
    with nogil:
        if code == 0:
            status = dopri(&m, y, t0, pts, ns, pout, rtol, atol, max_step, &t_reached, &nsteps)
        else:
            status = rk4(&m, y, t0, pts, ns, pout, max_step, &t_reached, &nsteps)
    return status, t_reached, nsteps, out.view(np.complex128)


def evolve_lab_batch(const double[::1] v, const double[::1] a, const double[::1] d0,
                     const double[::1] w, const double[::1] phi, const double[::1] gg,
                     const double[::1] ge, const double[::1] t1,
                     str method, double rtol, double atol, double max_step):
    """Final states of |g> propagated from t=0 to t1[i] under lab-frame drives.

    Returns (finals[n, 2], status[n], nsteps[n]).
    """
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t i
    for arr in (a, d0, w, phi, gg, ge, t1):
        if arr.shape[0] != n:
            raise ValueError("batch arrays must share one length")
    cdef int code = method_code(method)
    finals = np.zeros((n, 4))
    status = np.zeros(n, dtype=np.int32)
    steps = np.zeros(n, dtype=np.int64)
    cdef double[:, ::1] fv = finals
    cdef int[::1] sv = status
    cdef long[::1] nv = steps
    cdef Model m
    cdef double y[4]
    cdef double p[10]
    cdef double ts[1]
    cdef double t_reached
    cdef long nsteps
    cdef double dummy = 0.0
    with nogil:
        for i in range(n):
            p[0] = v[i]
            p[1] = a[i]
            p[2] = d0[i]
            p[3] = w[i]
            p[4] = phi[i]
            p[5] = gg[i]
            p[6] = ge[i]
            p[7] = 0.0
            p[8] = 0.0
            p[9] = 0.0
            fill_model(&m, LAB, p, 0, &dummy, &dummy, &dummy)
            y[0] = 1.0
            y[1] = 0.0
            y[2] = 0.0
            y[3] = 0.0
            ts[0] = t1[i]
            if code == 0:
                sv[i] = dopri(&m, y, 0.0, ts, 1, &fv[i, 0], rtol, atol, max_step, &t_reached, &nsteps)
            else:
                sv[i] = rk4(&m, y, 0.0, ts, 1, &fv[i, 0], max_step, &t_reached, &nsteps)
            nv[i] = nsteps
            if sv[i] != OK:
                fv[i, 0] = 0.0
                fv[i, 1] = 0.0
                fv[i, 2] = 0.0
                fv[i, 3] = 0.0
    return finals.view(np.complex128), status, steps
