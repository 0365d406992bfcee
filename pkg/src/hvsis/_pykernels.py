"""Pure-Python integration kernel. Same contract as ``_ckernels.integrate_kernel``."""
import math

import numpy as np

HORIZON, STEADY, GUARD, NONFINITE = 0, 1, 2, 3

# Dormand-Prince 5(4) tableau.
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


def _make_rhs(system, gamma, bh, bv, omega, mu):
    if system == 0:
        def rhs(a, b, c):
            infect = bv * a * b
            return (-gamma * a + bh * (1.0 - a) * c, omega - mu * b - infect, infect - mu * c)
    else:
        def rhs(a, b, c):
            return (-gamma * a + bh * (1.0 - a) * b, bv * a * (c - b) - mu * b, omega - mu * c)
    return rhs


def _project(system, a, b, c, tol):
    """Clamp round-off violations of the domain; return None on a real violation."""
    if a < 0.0:
        if a < -tol:
            return None
        a = 0.0
    elif a > 1.0:
        if a > 1.0 + tol:
            return None
        a = 1.0
    if b < 0.0:
        if b < -tol:
            return None
        b = 0.0
    if c < 0.0:
        if c < -tol:
            return None
        c = 0.0
    if system == 1 and b > c:
        if b > c + tol:
            return None
        b = c
    return a, b, c


def integrate_kernel(system, gamma, bh, bv, omega, mu, a0, b0, c0, method, h0, atol, rtol,
                     hmin, hmax, t_max, stride, ss_tol, ss_window, proj_tol):
    """Integrate one trajectory.

    ``system`` 0 is ``(x, y, z)``, 1 is ``(x, z, v)``; ``method`` 0 is fixed-step
    RK4 with step ``h0``, 1 is adaptive Dormand-Prince. ``ss_window <= 0``
    disables steady-state detection. Returns ``(times, states, reason, message)``.
    """
    rhs = _make_rhs(system, gamma, bh, bv, omega, mu)
    ts = [0.0]
    ys = [(a0, b0, c0)]
    a, b, c = a0, b0, c0
    t = 0.0
    h = h0
    nstep = 0
    below_since = -1.0
    reason = HORIZON
    message = ""
    last_recorded = True
    k1 = rhs(a, b, c)
    while t < t_max:
        last = False
        if method == 0:
            # fixed grid t_n = n * h0, no accumulated drift
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
            k2 = rhs(a + 0.5 * h_try * k1[0], b + 0.5 * h_try * k1[1], c + 0.5 * h_try * k1[2])
            k3 = rhs(a + 0.5 * h_try * k2[0], b + 0.5 * h_try * k2[1], c + 0.5 * h_try * k2[2])
            k4 = rhs(a + h_try * k3[0], b + h_try * k3[1], c + h_try * k3[2])
            w = h_try / 6.0
            na = a + w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            nb = b + w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            nc = c + w * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        else:
            hh = h_try
            k2 = rhs(a + hh * _A21 * k1[0], b + hh * _A21 * k1[1], c + hh * _A21 * k1[2])
            k3 = rhs(a + hh * (_A31 * k1[0] + _A32 * k2[0]),
                     b + hh * (_A31 * k1[1] + _A32 * k2[1]),
                     c + hh * (_A31 * k1[2] + _A32 * k2[2]))
            k4 = rhs(a + hh * (_A41 * k1[0] + _A42 * k2[0] + _A43 * k3[0]),
                     b + hh * (_A41 * k1[1] + _A42 * k2[1] + _A43 * k3[1]),
                     c + hh * (_A41 * k1[2] + _A42 * k2[2] + _A43 * k3[2]))
            k5 = rhs(a + hh * (_A51 * k1[0] + _A52 * k2[0] + _A53 * k3[0] + _A54 * k4[0]),
                     b + hh * (_A51 * k1[1] + _A52 * k2[1] + _A53 * k3[1] + _A54 * k4[1]),
                     c + hh * (_A51 * k1[2] + _A52 * k2[2] + _A53 * k3[2] + _A54 * k4[2]))
            k6 = rhs(a + hh * (_A61 * k1[0] + _A62 * k2[0] + _A63 * k3[0] + _A64 * k4[0] + _A65 * k5[0]),
                     b + hh * (_A61 * k1[1] + _A62 * k2[1] + _A63 * k3[1] + _A64 * k4[1] + _A65 * k5[1]),
                     c + hh * (_A61 * k1[2] + _A62 * k2[2] + _A63 * k3[2] + _A64 * k4[2] + _A65 * k5[2]))
            na = a + hh * (_B1 * k1[0] + _B3 * k3[0] + _B4 * k4[0] + _B5 * k5[0] + _B6 * k6[0])
            nb = b + hh * (_B1 * k1[1] + _B3 * k3[1] + _B4 * k4[1] + _B5 * k5[1] + _B6 * k6[1])
            nc = c + hh * (_B1 * k1[2] + _B3 * k3[2] + _B4 * k4[2] + _B5 * k5[2] + _B6 * k6[2])
            k7 = rhs(na, nb, nc)
            err = 0.0
            for i, (old, new) in enumerate(((a, na), (b, nb), (c, nc))):
                e = hh * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                          + _E6 * k6[i] + _E7 * k7[i])
                sc = atol + rtol * max(abs(old), abs(new))
                err = max(err, abs(e) / sc)
            if not math.isfinite(err):
                reason, message = NONFINITE, f"non-finite error estimate at t={t!r}"
                break
            if err > 1.0:
                h = hh * max(0.2, 0.9 * err ** -0.2)
                if h < hmin:
                    reason = GUARD
                    message = f"step size underflow at t={t!r}: h={h!r} < h_min={hmin!r}"
                    break
                continue
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            if not last:
                h = min(hmax, hh * fac)
        if not (math.isfinite(na) and math.isfinite(nb) and math.isfinite(nc)):
            reason, message = NONFINITE, f"non-finite state at t={t!r}"
            break
        projected = _project(system, na, nb, nc, proj_tol)
        if projected is None:
            reason = GUARD
            message = f"domain violated beyond {proj_tol!r} at t={t + h_try!r}: {(na, nb, nc)!r}"
            break
        a, b, c = projected
        t = t_max if last else (t_next if method == 0 else t + h_try)
        nstep += 1
        k1 = rhs(a, b, c)
        if nstep % stride == 0 or last:
            ts.append(t)
            ys.append((a, b, c))
            last_recorded = True
        else:
            last_recorded = False
        if ss_window > 0.0:
            if max(abs(k1[0]), abs(k1[1]), abs(k1[2])) < ss_tol:
                if below_since < 0.0:
                    below_since = t
                elif t - below_since >= ss_window:
                    reason = STEADY
                    break
            else:
                below_since = -1.0
    if not last_recorded:
        ts.append(t)
        ys.append((a, b, c))
    return np.array(ts), np.array(ys, dtype=float).reshape(-1, 3), reason, message
