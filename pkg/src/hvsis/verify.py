"""
Invariant checks runnable from the command line.

Each check returns a :class:`CheckResult` with the worst observed margin, so
a passing run also says how close it came to failing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analyze import dfe, endemic_equilibrium, local_stability, threshold, threshold_sensitivity
from .integrate import IntegratorConfig, integrate_aux
from .model import (
    AuxState,
    ControlInputs,
    HvState,
    ModelParams,
    aux_jacobian,
    boundary_flow_check,
    vector_field,
    vector_total,
)

BOUNDARY_FLOW_TOL = 1e-12
ORDER_TOL = 1e-8
RESIDUAL_TOL = 1e-13
SENSITIVITY_TOL = 1e-6
#: Threshold values this close to 1 are excluded from the eigenvalue consistency check.
THRESHOLD_BAND = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # "pass" | "fail" | "skipped"
    worst_margin: float | None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "fail"


def random_params(rng: np.random.Generator, low: float = 0.05, high: float = 1.0) -> ModelParams:
    return ModelParams(*rng.uniform(low, high, 5))


def random_aux_state(rng: np.random.Generator, v_max: float) -> AuxState:
    v = rng.uniform(0.0, v_max)
    return AuxState(rng.uniform(0.0, 1.0), rng.uniform(0.0, v), v)


def boundary_face_states(p: ModelParams, u: ControlInputs, rng, n: int = 100):
    """Yield ``(face, set, state)`` samples on every face of D1 and D2."""
    total = vector_total(p, u)
    for region, (lo, hi) in (("D1", (0.0, total)), ("D2", (total, 3.0 * total))):
        for _ in range(n):
            x = rng.uniform(0.0, 1.0)
            v = rng.uniform(lo, hi)
            z = rng.uniform(0.0, v)
            yield "x=0", region, HvState(0.0, v - z, z)
            yield "x=1", region, HvState(1.0, v - z, z)
            yield "y=0", region, HvState(x, 0.0, v)
            yield "z=0", region, HvState(x, v, 0.0)
            z = rng.uniform(0.0, total)
            yield "v=total", region, HvState(x, total - z, z)


def check_boundary_flow(p, u, rng, n=100) -> CheckResult:
    worst = -np.inf
    for face, region, s in boundary_face_states(p, u, rng, n):
        comps = boundary_flow_check(p, u, s).components
        key = f"v=total:{region}" if face == "v=total" else face
        worst = max(worst, comps[key])
    ok = worst <= BOUNDARY_FLOW_TOL
    return CheckResult("boundary_flow", "pass" if ok else "fail", float(worst),
                       f"max outward component over {10 * n} face samples")


def check_metzler(p, u, rng, n=1000) -> CheckResult:
    off = ~np.eye(3, dtype=bool)
    worst = np.inf
    for _ in range(n):
        jac = aux_jacobian(p, u, random_aux_state(rng, 3.0 * vector_total(p, u)))
        worst = min(worst, jac[off].min())
    return CheckResult("metzler", "pass" if worst >= 0.0 else "fail", float(worst),
                       f"min off-diagonal entry over {n} auxiliary states")


def ordered_pair(rng, v_max):
    """Two auxiliary states ``a <= b`` componentwise."""
    b = random_aux_state(rng, v_max)
    v = rng.uniform(0.0, b.v)
    x = rng.uniform(0.0, b.x)
    z = rng.uniform(0.0, min(b.z, v))
    return AuxState(x, z, v), b


def check_monotone_order(p, u, rng, pairs=20, t_max=100.0, step=0.05) -> CheckResult:
    cfg = IntegratorConfig(method="rk4", step=step, t_max=t_max)
    worst = -np.inf
    for _ in range(pairs):
        a, b = ordered_pair(rng, 3.0 * vector_total(p, u))
        lo = integrate_aux(p, u, a, cfg).states
        hi = integrate_aux(p, u, b, cfg).states
        worst = max(worst, float(np.max(lo - hi)))
    ok = worst <= ORDER_TOL
    return CheckResult("monotone_order", "pass" if ok else "fail", worst,
                       f"max componentwise order violation over {pairs} pairs")


def check_threshold_eigen(p, rng, samples=200) -> CheckResult:
    mismatches = 0
    ee_unstable = 0
    margin = np.inf
    for q in [p] + [random_params(rng) for _ in range(samples)]:
        sigma = threshold(q)
        dfe_rep, ee_rep = local_stability(q)
        lead = max(ev.real for ev in dfe_rep.eigenvalues)
        if abs(sigma - 1.0) >= THRESHOLD_BAND:
            if (lead < 0.0) != (sigma < 1.0):
                mismatches += 1
            margin = min(margin, abs(lead))
        if (ee_rep is not None) != (sigma > 1.0):
            mismatches += 1
        if ee_rep is not None and max(ev.real for ev in ee_rep.eigenvalues) >= 0.0:
            ee_unstable += 1
    ok = mismatches == 0 and ee_unstable == 0
    return CheckResult("threshold_eigen_consistency", "pass" if ok else "fail", float(margin),
                       f"{mismatches} threshold mismatches, {ee_unstable} unstable EE")


def check_equilibrium_residual(p, u, rng, samples=200) -> CheckResult:
    worst = 0.0
    draws = [(p, u)] + [(random_params(rng), ControlInputs()) for _ in range(samples)]
    for q, w in draws:
        for eq in (dfe(q, w), endemic_equilibrium(q, w)):
            if eq is not None:
                worst = max(worst, max(abs(c) for c in vector_field(q, w, eq)) / q.scale)
    ok = worst <= RESIDUAL_TOL
    return CheckResult("equilibrium_residual", "pass" if ok else "fail", worst,
                       "max |field| / max rate at the equilibria")


def check_sensitivity(p) -> CheckResult:
    if p.beta_v == 0.0:
        return CheckResult("sensitivity", "skipped", None, "beta_v = 0: elasticities undefined")
    report = threshold_sensitivity(p).as_dict()
    base = threshold(p)
    worst = 0.0
    for name, value in report.items():
        theta = getattr(p, name)
        h = 1e-6 * theta
        up = threshold(ModelParams(**{**p.__dict__, name: theta + h}))
        down = threshold(ModelParams(**{**p.__dict__, name: theta - h}))
        fd = (up - down) / (2.0 * h) * theta / base
        worst = max(worst, abs(fd - value))
    ok = worst <= SENSITIVITY_TOL
    return CheckResult("sensitivity", "pass" if ok else "fail", worst,
                       "max |finite-difference - reported elasticity|")


def run_all(p: ModelParams, u: ControlInputs, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [
        check_boundary_flow(p, u, rng),
        check_metzler(p, u, rng),
        check_monotone_order(p, u, rng),
        check_threshold_eigen(p, rng),
        check_equilibrium_residual(p, u, rng),
        check_sensitivity(p),
    ]
