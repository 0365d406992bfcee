"""Closed-form eigenvalues of 3x3 real matrices via the characteristic cubic."""
from __future__ import annotations

import math

import numpy as np

EPS = float(np.finfo(float).eps)


def characteristic_coefficients(m) -> tuple[float, float, float]:
    """Return ``(a, b, c)`` with ``det(lambda I - m) = lambda^3 + a lambda^2 + b lambda + c``."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    minors = (
        m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
        + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
    )
    det = (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )
    return -float(trace), float(minors), -float(det)


def _poly(a, b, c, r):
    return ((r + a) * r + b) * r + c


def _dpoly(a, b, r):
    return (3.0 * r + 2.0 * a) * r + b


def _polish(a, b, c, r):
    """One Newton step, kept only if it lowers the residual (multiple roots stall Newton)."""
    d = _dpoly(a, b, r)
    if d == 0:
        return r
    cand = r - _poly(a, b, c, r) / d
    return cand if abs(_poly(a, b, c, cand)) < abs(_poly(a, b, c, r)) else r


def _quadratic(p, q):
    """Roots of ``r^2 + p r + q`` without cancellation."""
    disc = p * p - 4.0 * q
    if disc >= 0.0:
        sq = math.sqrt(disc)
        big = -0.5 * (p + math.copysign(sq, p))
        if big == 0.0:
            return 0.0, 0.0
        return big, q / big
    sq = math.sqrt(-disc)
    return complex(-0.5 * p, 0.5 * sq), complex(-0.5 * p, -0.5 * sq)


def cubic_roots(a: float, b: float, c: float) -> list[complex]:
    """Roots of ``r^3 + a r^2 + b r + c``.

    Three real roots use the trigonometric form; otherwise Cardano's formula
    gives the real root and the complex pair comes from deflation. Each root
    gets one guarded Newton polish.
    """
    shift = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if p == 0.0 and q == 0.0:
        roots = [-shift] * 3
    elif disc < 0.0:
        # p < 0 here
        amp = 2.0 * math.sqrt(-p / 3.0)
        arg = (3.0 * q / (p * amp))
        phi = math.acos(max(-1.0, min(1.0, arg)))
        roots = [amp * math.cos((phi - 2.0 * math.pi * k) / 3.0) - shift for k in range(3)]
    else:
        sq = math.sqrt(disc)
        w = -q / 2.0 + (sq if q <= 0.0 else -sq)
        s1 = math.copysign(abs(w) ** (1.0 / 3.0), w)
        s2 = -p / (3.0 * s1) if s1 != 0.0 else 0.0
        r0 = s1 + s2 - shift
        r0 = _polish(a, b, c, r0)
        # deflate: (r - r0)(r^2 + (a + r0) r + (b + r0 (a + r0)))
        roots = [r0, *_quadratic(a + r0, b + r0 * (a + r0))]
    out = []
    for r in roots:
        if isinstance(r, complex):
            if r.imag < 0.0:
                continue
            r = _polish(a, b, c, r)
            out.extend([r, r.conjugate()])
        else:
            out.append(complex(_polish(a, b, c, float(r)), 0.0))
    return _merge_double(a, b, c, out)


def _merge_double(a, b, c, roots, rel=1e-6):
    """Snap a near-coincident pair onto the nearby critical point of the cubic.

    A double root is ill-conditioned: closed forms split it by about
    ``sqrt(eps)``. The critical point (root of the derivative) is well
    conditioned and is kept when its residual is within rounding of the pair's.
    """
    scale = max(1.0, max(abs(r) for r in roots))
    for i in range(3):
        for j in range(i + 1, 3):
            ri, rj = roots[i], roots[j]
            if abs(ri - rj) > rel * scale:
                continue
            mid = 0.5 * (ri + rj).real
            crit = _quadratic(2.0 * a / 3.0, b / 3.0)
            crit = [c_ for c_ in crit if not isinstance(c_, complex)]
            if not crit:
                continue
            cand = min(crit, key=lambda c_: abs(c_ - mid))
            ac = abs(cand)
            rounding = 8.0 * EPS * (((ac + abs(a)) * ac + abs(b)) * ac + abs(c))
            pair = max(abs(_poly(a, b, c, ri)), abs(_poly(a, b, c, rj)))
            if abs(_poly(a, b, c, cand)) <= pair + rounding:
                out = list(roots)
                out[i] = out[j] = complex(cand, 0.0)
                return out
    return roots


def sort_eigenvalues(values) -> list[complex]:
    """Sort by real part descending, ties by imaginary part descending."""
    return sorted((complex(v) for v in values), key=lambda z: (-z.real, -z.imag))


def eigenvalues_3x3(m) -> list[complex]:
    """Eigenvalues of a real 3x3 matrix, sorted by real part (descending)."""
    return sort_eigenvalues(cubic_roots(*characteristic_coefficients(m)))


def characteristic_residual(m, lam: complex) -> float:
    """``|det(lam I - m)|`` evaluated through the characteristic coefficients."""
    a, b, c = characteristic_coefficients(m)
    return abs(_poly(a, b, c, complex(lam)))


__all__ = [
    "characteristic_coefficients",
    "characteristic_residual",
    "cubic_roots",
    "eigenvalues_3x3",
    "sort_eigenvalues",
]
