# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernel. Mirrors ``_pykernels.integrate_kernel`` step for step."""
from libc.math cimport fabs, isfinite, pow
from libc.stdlib cimport malloc, realloc, free

import numpy as np

cdef enum:
    HORIZON = 0
    STEADY = 1
    GUARD = 2
    NONFINITE = 3

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef struct Rates:
    int system
    double gamma, bh, bv, omega, mu


cdef inline void rhs(Rates* r, double* s, double* out) nogil:
    cdef double infect
    if r.system == 0:
        infect = r.bv * s[0] * s[1]
        out[0] = -r.gamma * s[0] + r.bh * (1.0 - s[0]) * s[2]
        out[1] = r.omega - r.mu * s[1] - infect
        out[2] = infect - r.mu * s[2]
    else:
        out[0] = -r.gamma * s[0] + r.bh * (1.0 - s[0]) * s[1]
        out[1] = r.bv * s[0] * (s[2] - s[1]) - r.mu * s[1]
        out[2] = r.omega - r.mu * s[2]


cdef inline bint project(int system, double* s, double tol) nogil:
    if s[0] < 0.0:
        if s[0] < -tol:
            return False
        s[0] = 0.0
    elif s[0] > 1.0:
        if s[0] > 1.0 + tol:
            return False
        s[0] = 1.0
    if s[1] < 0.0:
        if s[1] < -tol:
            return False
        s[1] = 0.0
    if s[2] < 0.0:
        if s[2] < -tol:
            return False
        s[2] = 0.0
    if system == 1 and s[1] > s[2]:
        if s[1] > s[2] + tol:
            return False
        s[1] = s[2]
    return True


cdef class _Buffer:
    cdef double* data
    cdef Py_ssize_t n, cap

    def __cinit__(self):
        self.cap = 1024
        self.n = 0
        self.data = <double*> malloc(self.cap * 4 * sizeof(double))
        if self.data == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.data)

    cdef int push(self, double t, double* s) except -1:
        cdef double* grown
        if self.n == self.cap:
            grown = <double*> realloc(self.data, 2 * self.cap * 4 * sizeof(double))
            if grown == NULL:
                raise MemoryError()
            self.data = grown
            self.cap *= 2
        self.data[4 * self.n] = t
        self.data[4 * self.n + 1] = s[0]
        self.data[4 * self.n + 2] = s[1]
        self.data[4 * self.n + 3] = s[2]
        self.n += 1
        return 0

    cdef object to_arrays(self):
        cdef double[:, ::1] view = <double[:self.n, :4]> self.data
        out = np.array(view, copy=True)
        return out[:, 0].copy(), out[:, 1:].copy()


def integrate_kernel(int system, double gamma, double bh, double bv, double omega, double mu,
                     double a0, double b0, double c0, int method, double h0, double atol,
                     double rtol, double hmin, double hmax, double t_max, long stride,
                     double ss_tol, double ss_window, double proj_tol):
    cdef Rates r
    r.system = system
    r.gamma = gamma
    r.bh = bh
    r.bv = bv
    r.omega = omega
    r.mu = mu
    cdef double s[3]
    cdef double tmp[3]
    cdef double ns[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double k5[3]
    cdef double k6[3]
    cdef double k7[3]
    cdef double t = 0.0, h = h0, h_try, t_next = 0.0, w, err, e, sc, fac, nrm
    cdef double below_since = -1.0
    cdef long nstep = 0
    cdef int reason = HORIZON, i
    cdef bint last, last_recorded = True
    message = ""
    buf = _Buffer()
    s[0] = a0
    s[1] = b0
    s[2] = c0
    buf.push(0.0, s)
    rhs(&r, s, k1)
    while t < t_max:
        last = False
        if method == 0:
            t_next = (nstep + 1) * h0
            if t_next >= t_max - 1e-9 * h0:
                t_next = t_max
                last = True
            h_try = t_next - t
        elif t + h >= t_max:
            h_try = t_max - t
            last = True
        else:
            h_try = h
        if method == 0:
            for i in range(3):
                tmp[i] = s[i] + 0.5 * h_try * k1[i]
            rhs(&r, tmp, k2)
            for i in range(3):
                tmp[i] = s[i] + 0.5 * h_try * k2[i]
            rhs(&r, tmp, k3)
            for i in range(3):
                tmp[i] = s[i] + h_try * k3[i]
            rhs(&r, tmp, k4)
            w = h_try / 6.0
            for i in range(3):
                ns[i] = s[i] + w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        else:
            for i in range(3):
                tmp[i] = s[i] + h_try * A21 * k1[i]
            rhs(&r, tmp, k2)
            for i in range(3):
                tmp[i] = s[i] + h_try * (A31 * k1[i] + A32 * k2[i])
            rhs(&r, tmp, k3)
            for i in range(3):
                tmp[i] = s[i] + h_try * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            rhs(&r, tmp, k4)
            for i in range(3):
                tmp[i] = s[i] + h_try * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            rhs(&r, tmp, k5)
            for i in range(3):
                tmp[i] = s[i] + h_try * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                         + A64 * k4[i] + A65 * k5[i])
            rhs(&r, tmp, k6)
            for i in range(3):
                ns[i] = s[i] + h_try * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
            rhs(&r, ns, k7)
            err = 0.0
            for i in range(3):
                e = h_try * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                             + E6 * k6[i] + E7 * k7[i])
                sc = atol + rtol * max(fabs(s[i]), fabs(ns[i]))
                err = max(err, fabs(e) / sc)
            if not isfinite(err):
                reason = NONFINITE
                message = f"non-finite error estimate at t={t!r}"
                break
            if err > 1.0:
                h = h_try * max(0.2, 0.9 * pow(err, -0.2))
                if h < hmin:
                    reason = GUARD
                    message = f"step size underflow at t={t!r}: h={h!r} < h_min={hmin!r}"
                    break
                continue
            if err == 0.0:
                fac = 5.0
            else:
                fac = min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
            if not last:
                h = min(hmax, h_try * fac)
        if not (isfinite(ns[0]) and isfinite(ns[1]) and isfinite(ns[2])):
            reason = NONFINITE
            message = f"non-finite state at t={t!r}"
            break
        if not project(system, ns, proj_tol):
            reason = GUARD
            message = (f"domain violated beyond {proj_tol!r} at t={t + h_try!r}: "
                       f"{(ns[0], ns[1], ns[2])!r}")
            break
        for i in range(3):
            s[i] = ns[i]
        if last:
            t = t_max
        elif method == 0:
            t = t_next
        else:
            t = t + h_try
        nstep += 1
        rhs(&r, s, k1)
        if nstep % stride == 0 or last:
            buf.push(t, s)
            last_recorded = True
        else:
            last_recorded = False
        if ss_window > 0.0:
            nrm = max(fabs(k1[0]), max(fabs(k1[1]), fabs(k1[2])))
            if nrm < ss_tol:
                if below_since < 0.0:
                    below_since = t
                elif t - below_since >= ss_window:
                    reason = STEADY
                    break
            else:
                below_since = -1.0
    if not last_recorded:
        buf.push(t, s)
    times, states = buf.to_arrays()
    return times, states, reason, message
