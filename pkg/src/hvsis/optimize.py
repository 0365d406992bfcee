"""
Cheapest intervention ``(u1, u2)`` that pushes the controlled threshold to 1.

Three routes:

* :func:`solve_linear` -- closed form for ``C = c1 u1 + c2 u2``;
* :func:`solve_kkt` -- damped Newton on the Lagrange system for any
  differentiable cost, plus the two edges of the constraint curve;
* :func:`grid_oracle` -- exhaustive scan of the admissible box, used to
  cross-check the other two.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analyze import threshold
from .model import NO_CONTROL, ControlInputs, ModelParams, ValidationError

#: Extra room above the pure vector-control level in the searched box.
U1_MARGIN = 0.10
#: Relative cost difference under which the two linear branches count as tied.
TIE_RTOL = 1e-12
#: Max-norm tolerance on the stationarity residual at interior KKT points.
KKT_TOL = 1e-10


class KKTConvergenceError(RuntimeError):
    """Newton failed on the stationarity system from every starting point."""

    def __init__(self, message, best_residual):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class Policy(str, enum.Enum):
    NONE_NEEDED = "none-needed"
    VECTOR_CONTROL = "vector-control"
    PROTECTION = "protection"
    MIXED = "mixed"


@dataclass(frozen=True)
class CostModel:
    """Intervention cost ``C(u1, u2)`` with its gradient.

    ``value`` must accept numpy arrays (the grid oracle evaluates it on whole
    rows). ``hessian`` is optional; Newton falls back to central differences
    of ``grad``.
    """

    value: Callable
    grad: Callable
    hessian: Callable | None = None
    kind: str = "general"
    coefficients: tuple = ()

    def __call__(self, u1, u2):
        return self.value(u1, u2)

    @classmethod
    def linear(cls, c1: float, c2: float) -> "CostModel":
        if not (c1 > 0.0 and c2 > 0.0):
            raise ValidationError(f"linear cost coefficients must be > 0, got ({c1!r}, {c2!r})")
        return cls(
            value=lambda u1, u2: c1 * u1 + c2 * u2,
            grad=lambda u1, u2: (c1, c2),
            hessian=lambda u1, u2: ((0.0, 0.0), (0.0, 0.0)),
            kind="linear",
            coefficients=(c1, c2),
        )

    @classmethod
    def quadratic(cls, c1: float = 1.0, c2: float = 1.0) -> "CostModel":
        """``C = c1 u1^2 + c2 u2^2``."""
        if not (c1 > 0.0 and c2 > 0.0):
            raise ValidationError(f"quadratic cost weights must be > 0, got ({c1!r}, {c2!r})")
        return cls(
            value=lambda u1, u2: c1 * u1 * u1 + c2 * u2 * u2,
            grad=lambda u1, u2: (2.0 * c1 * u1, 2.0 * c2 * u2),
            hessian=lambda u1, u2: ((2.0 * c1, 0.0), (0.0, 2.0 * c2)),
            kind="quadratic",
            coefficients=(c1, c2),
        )


@dataclass(frozen=True)
class OptimalPolicy:
    u1_star: float
    u2_star: float
    multiplier: float | None
    achieved_sigma_c: float
    cost_value: float
    provenance: str
    active_policy: Policy
    kkt_residual: float | None = None
    bound_multiplier: float | None = None

    @property
    def controls(self) -> ControlInputs:
        return ControlInputs(self.u1_star, self.u2_star)


def constraint_g(p: ModelParams, u: ControlInputs = NO_CONTROL) -> float:
    """``(beta_h - u2) beta_v omega - gamma (mu + u1)^2``; non-positive iff the threshold is <= 1."""
    if u.u2 > p.beta_h:
        raise ValidationError(f"u2={u.u2!r} exceeds beta_h={p.beta_h!r}")
    return (p.beta_h - u.u2) * p.beta_v * p.omega - p.gamma * (p.mu + u.u1) ** 2


def vector_control_level(p: ModelParams) -> float:
    """``u1`` reaching threshold 1 with ``u2 = 0``."""
    return math.sqrt(p.beta_h * p.beta_v * p.omega / p.gamma) - p.mu


def protection_level(p: ModelParams) -> float:
    """``u2`` reaching threshold 1 with ``u1 = 0``."""
    return (p.beta_h * p.beta_v * p.omega - p.gamma * p.mu ** 2) / (p.beta_v * p.omega)


def u1_upper(p: ModelParams) -> float:
    """Upper end of the searched ``u1`` range."""
    return max(0.0, (1.0 + U1_MARGIN) * vector_control_level(p))


@dataclass(frozen=True)
class RegionC:
    """The two inequalities deciding whether protection beats vector control.

    ``ratio_margin = c1/c2 - 2 gamma mu / (beta_v omega)`` must be > 0 and
    ``square_margin = (c1/c2 beta_v omega - gamma mu)^2 - beta_h beta_v gamma omega``
    must be >= 0.
    """

    ratio_margin: float
    square_margin: float

    @property
    def member(self) -> bool:
        return self.ratio_margin > 0.0 and self.square_margin >= 0.0


def region_c(p: ModelParams, c1: float, c2: float) -> RegionC:
    if not (c1 > 0.0 and c2 > 0.0):
        raise ValidationError(f"cost coefficients must be > 0, got ({c1!r}, {c2!r})")
    r = c1 / c2
    bw = p.beta_v * p.omega
    if bw == 0.0:
        return RegionC(-math.inf, -math.inf)
    return RegionC(
        r - 2.0 * p.gamma * p.mu / bw,
        (r * bw - p.gamma * p.mu) ** 2 - p.beta_h * p.beta_v * p.gamma * p.omega,
    )


def in_region_C(p: ModelParams, c1: float, c2: float) -> bool:
    return region_c(p, c1, c2).member


def policy_tag(p: ModelParams, u1: float, u2: float) -> Policy:
    if u1 == 0.0 and u2 == 0.0:
        return Policy.NONE_NEEDED
    if u2 == 0.0:
        return Policy.VECTOR_CONTROL
    if u1 == 0.0:
        return Policy.PROTECTION
    return Policy.MIXED


def _sigma_c(p, u1, u2):
    return threshold(p, ControlInputs(u1, u2))


def _no_control_policy(p, cost, provenance):
    return OptimalPolicy(0.0, 0.0, None, threshold(p), float(cost(0.0, 0.0)), provenance,
                         Policy.NONE_NEEDED)


def solve_linear(p: ModelParams, c1: float, c2: float) -> OptimalPolicy:
    """Closed-form optimum for the linear cost ``c1 u1 + c2 u2``.

    Only one intervention is ever used. When both options cost the same the
    vector-control branch is returned and the provenance reads
    ``closed-form/tie``.
    """
    cost = CostModel.linear(c1, c2)
    if threshold(p) <= 1.0:
        return _no_control_policy(p, cost, "closed-form")
    u1v = vector_control_level(p)
    u2p = protection_level(p)
    cost_v, cost_p = c1 * u1v, c2 * u2p
    provenance = "closed-form"
    protect = in_region_C(p, c1, c2)
    if abs(cost_v - cost_p) <= TIE_RTOL * max(cost_v, cost_p):
        protect = False
        provenance = "closed-form/tie"
    bw = p.beta_v * p.omega
    if protect:
        u1, u2, lam = 0.0, u2p, c2 / bw
        nu = c1 - 2.0 * lam * p.gamma * p.mu
    else:
        u1, u2, lam = u1v, 0.0, c1 / (2.0 * p.gamma * (p.mu + u1v))
        nu = c2 - lam * bw
    return OptimalPolicy(u1, u2, lam, _sigma_c(p, u1, u2), float(cost(u1, u2)), provenance,
                         policy_tag(p, u1, u2), 0.0, nu)


def validate_cost(p: ModelParams, cost: CostModel, samples: int = 11) -> None:
    """Check non-negativity and monotonicity (non-negative partials) on a sample grid of the box."""
    hi = max(u1_upper(p), p.mu)
    for u1 in np.linspace(0.0, hi, samples):
        for u2 in np.linspace(0.0, p.beta_h, samples):
            c = float(cost(u1, u2))
            g1, g2 = (float(v) for v in cost.grad(u1, u2))
            if not all(math.isfinite(v) for v in (c, g1, g2)):
                raise ValidationError(f"cost is not finite at ({u1!r}, {u2!r})")
            if c < 0.0:
                raise ValidationError(f"cost is negative at ({u1!r}, {u2!r}): {c!r}")
            if g1 < 0.0 or g2 < 0.0:
                raise ValidationError(
                    f"cost is not increasing at ({u1!r}, {u2!r}): gradient ({g1!r}, {g2!r})")


def _hessian(cost, u1, u2):
    if cost.hessian is not None:
        return np.asarray(cost.hessian(u1, u2), dtype=float)
    h1 = 1e-6 * max(1.0, abs(u1))
    h2 = 1e-6 * max(1.0, abs(u2))
    d1 = (np.asarray(cost.grad(u1 + h1, u2)) - np.asarray(cost.grad(u1 - h1, u2))) / (2 * h1)
    d2 = (np.asarray(cost.grad(u1, u2 + h2)) - np.asarray(cost.grad(u1, u2 - h2))) / (2 * h2)
    hess = np.column_stack([d1, d2])
    return 0.5 * (hess + hess.T)


def kkt_system(p: ModelParams, cost: CostModel, u1: float, u2: float, lam: float) -> np.ndarray:
    """Residuals of the stationarity conditions of ``C + lam * g`` and of ``g = 0``."""
    g1, g2 = cost.grad(u1, u2)
    bw = p.beta_v * p.omega
    return np.array([
        g1 - 2.0 * lam * p.gamma * (p.mu + u1),
        g2 - lam * bw,
        (p.beta_h - u2) * bw - p.gamma * (p.mu + u1) ** 2,
    ], dtype=float)


def _newton(p, cost, start, max_iter=100, tol=1e-12, max_halvings=30):
    """Damped Newton on :func:`kkt_system`; returns ``(point, residual, converged)``."""
    w = np.array(start, dtype=float)
    f = kkt_system(p, cost, *w)
    res = float(np.max(np.abs(f)))
    bw = p.beta_v * p.omega
    for _ in range(max_iter):
        if res <= tol:
            return w, res, True
        u1, u2, lam = w
        hess = _hessian(cost, u1, u2)
        d = -2.0 * p.gamma * (p.mu + u1)
        jac = np.array([
            [hess[0, 0] - 2.0 * lam * p.gamma, hess[0, 1], d],
            [hess[1, 0], hess[1, 1], -bw],
            [d, -bw, 0.0],
        ])
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        for _ in range(max_halvings + 1):
            trial = w + t * step
            ft = kkt_system(p, cost, *trial)
            rt = float(np.max(np.abs(ft)))
            if np.isfinite(rt) and rt < res:
                break
            t *= 0.5
        else:
            break
        w, f, res = trial, ft, rt
    return w, res, res <= max(tol, 1e-10)


def _policy(p, cost, u1, u2, lam, provenance, residual, nu):
    return OptimalPolicy(float(u1), float(u2), float(lam), _sigma_c(p, u1, u2),
                         float(cost(u1, u2)), provenance, policy_tag(p, u1, u2), float(residual),
                         None if nu is None else float(nu))


def _bisect(f, lo, hi, flo):
    """Sign-change bisection to adjacent floats."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_kkt(
    p: ModelParams,
    cost: CostModel,
    init: ControlInputs | None = None,
    scan: int = 64,
    tol: float = KKT_TOL,
) -> OptimalPolicy:
    """Optimal policy for a general cost satisfying the monotonicity assumption.

    The optimum lies on the curve ``g = 0``, parametrised by ``u1`` in
    ``[0, u1v]``. Interior stationary points are bracketed by sign changes of
    the reduced derivative on a ``scan``-point grid, bisected, then polished
    by Newton on the full stationarity system (also run from ``init`` if
    given). They compete with the two curve endpoints; the cheapest wins.

    Raises :class:`KKTConvergenceError` if a bracketed stationary point does
    not meet ``tol``, which happens for non-smooth costs.
    """
    validate_cost(p, cost)
    if threshold(p) <= 1.0:
        return _no_control_policy(p, cost, "kkt-newton")
    bw = p.beta_v * p.omega
    u1v, u2p = vector_control_level(p), protection_level(p)

    def curve_u2(u1):
        return min(max(p.beta_h - p.gamma * (p.mu + u1) ** 2 / bw, 0.0), p.beta_h)

    def multiplier(u1, u2):
        g1, g2 = cost.grad(u1, u2)
        return float(g2) / bw if g2 > 0 else float(g1) / (2.0 * p.gamma * (p.mu + u1))

    def reduced_slope(u1):
        g1, g2 = cost.grad(u1, curve_u2(u1))
        return float(g1) - float(g2) * 2.0 * p.gamma * (p.mu + u1) / bw

    def admissible(w):
        u1, u2, lam = w
        eps = 1e-12
        return -eps <= u1 <= u1v + eps and -eps <= u2 <= p.beta_h + eps and lam >= 0.0

    candidates = []
    worst = 0.0

    def add_stationary(w, res):
        u1, u2, lam = w
        candidates.append((min(max(u1, 0.0), u1v), min(max(u2, 0.0), p.beta_h), lam, res, None))

    grid = np.linspace(0.0, u1v, scan + 1)
    slopes = [reduced_slope(u) for u in grid]
    for k in range(scan):
        lo, hi, flo, fhi = grid[k], grid[k + 1], slopes[k], slopes[k + 1]
        if not (flo < 0.0 < fhi or fhi < 0.0 < flo or (flo == 0.0 and 0 < k)):
            continue
        u1 = lo if flo == 0.0 else _bisect(reduced_slope, lo, hi, flo)
        u2 = curve_u2(u1)
        w = np.array([u1, u2, multiplier(u1, u2)])
        res = float(np.max(np.abs(kkt_system(p, cost, *w))))
        polished, pres, ok = _newton(p, cost, w)
        if ok and admissible(polished) and lo - 1e-12 <= polished[0] <= hi + 1e-12 and pres <= res:
            w, res = polished, pres
        worst = max(worst, res)
        add_stationary(w, res)
    if worst > tol:
        raise KKTConvergenceError("stationary point of the reduced cost misses the KKT tolerance",
                                  worst)
    if init is not None:
        w, res, ok = _newton(p, cost, (init.u1, init.u2, multiplier(init.u1, init.u2)))
        if ok and admissible(w):
            add_stationary(w, res)

    # edge u2 = 0: free u1 on the curve, bound multiplier for u2 >= 0
    g1, g2 = cost.grad(u1v, 0.0)
    lam = g1 / (2.0 * p.gamma * (p.mu + u1v))
    candidates.append((u1v, 0.0, lam, abs(kkt_system(p, cost, u1v, 0.0, lam)[2]), g2 - lam * bw))
    # edge u1 = 0: free u2 on the curve, bound multiplier for u1 >= 0
    g1, g2 = cost.grad(0.0, u2p)
    lam = g2 / bw
    candidates.append((0.0, u2p, lam, abs(kkt_system(p, cost, 0.0, u2p, lam)[2]),
                       g1 - 2.0 * lam * p.gamma * p.mu))

    # cheapest first; on equal cost prefer less protection (vector control)
    best = min(candidates, key=lambda c: (float(cost(c[0], c[1])), c[1], c[0]))
    u1, u2, lam, res, nu = best
    return _policy(p, cost, u1, u2, lam, "kkt-newton", res, nu)


def grid_oracle(p: ModelParams, cost: CostModel, n: int = 2001, chunk: int = 256) -> OptimalPolicy:
    """Cheapest feasible point of an ``n x n`` grid on ``[0, u1_upper] x [0, beta_h]``.

    Ties are broken lexicographically on ``(cost, u1, u2)``.
    """
    if n < 2:
        raise ValidationError(f"grid resolution must be >= 2, got {n!r}")
    if threshold(p) <= 1.0:
        return _no_control_policy(p, cost, "grid")
    u1s = np.linspace(0.0, u1_upper(p), n)
    u2s = np.linspace(0.0, p.beta_h, n)
    bw = p.beta_v * p.omega
    slack = (p.beta_h - u2s) * bw
    best = (math.inf, math.inf, math.inf)
    for lo in range(0, n, chunk):
        rows = u1s[lo:lo + chunk, None]
        feasible = slack[None, :] - p.gamma * (p.mu + rows) ** 2 <= 0.0
        if not feasible.any():
            continue
        costs = np.broadcast_to(np.asarray(cost(rows, u2s[None, :]), dtype=float), feasible.shape)
        masked = np.where(feasible, costs, np.inf)
        cmin = masked.min()
        i, j = np.nonzero(masked == cmin)
        # np.nonzero is row-major, so the first hit has the smallest u1 then u2
        cand = (float(cmin), float(u1s[lo + i[0]]), float(u2s[j[0]]))
        if cand < best:
            best = cand
    c, u1, u2 = best
    return OptimalPolicy(u1, u2, None, _sigma_c(p, u1, u2), c, "grid", policy_tag(p, u1, u2))
