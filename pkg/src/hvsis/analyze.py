"""
Thresholds, equilibria, local stability and regime prediction.

All functions take the controlled form; pass ``NO_CONTROL`` (the default) for
the uncontrolled model.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .cubic import eigenvalues_3x3
from .model import (
    NO_CONTROL,
    ControlInputs,
    HvState,
    ModelParams,
    ValidationError,
    effective_rates,
    jacobian,
)

#: Half-width of the band around zero real part reported as ``marginal``.
MARGINAL_TOL = 1e-10


class Stability(str, enum.Enum):
    STABLE = "exponentially stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


class EquilibriumKind(str, enum.Enum):
    DFE = "DFE"
    EE = "EE"


def threshold(p: ModelParams, u: ControlInputs = NO_CONTROL) -> float:
    """Epidemic threshold ``(beta_h - u2) beta_v omega / (gamma (mu + u1)^2)``."""
    gamma, bh, bv, omega, mu = effective_rates(p, u)
    return bh * bv * omega / (gamma * mu * mu)


def dfe(p: ModelParams, u: ControlInputs = NO_CONTROL) -> HvState:
    """Disease-free equilibrium ``(0, omega / (mu + u1), 0)``."""
    _, _, _, omega, mu = effective_rates(p, u)
    return HvState(0.0, omega / mu, 0.0)


def endemic_equilibrium(p: ModelParams, u: ControlInputs = NO_CONTROL) -> HvState | None:
    """Endemic equilibrium, or ``None`` when the threshold is at most 1."""
    gamma, bh, bv, omega, mu = effective_rates(p, u)
    if threshold(p, u) <= 1.0:
        return None
    excess = omega * bh * bv - mu * mu * gamma
    x = excess / (omega * bh * bv + mu * gamma * bv)
    y = (gamma * mu + bh * omega) / (bh * (bv + mu))
    z = excess / (mu * bh * bv + mu * mu * bh)
    return HvState(x, y, z)


def classify(eigenvalues, tol: float = MARGINAL_TOL) -> Stability:
    lead = max(ev.real for ev in eigenvalues)
    if lead < -tol:
        return Stability.STABLE
    if lead > tol:
        return Stability.UNSTABLE
    return Stability.MARGINAL


@dataclass(frozen=True)
class EquilibriumReport:
    kind: EquilibriumKind
    point: HvState
    eigenvalues: tuple
    stability: Stability
    threshold_value: float


def _report(kind, p, u, point):
    ev = tuple(eigenvalues_3x3(jacobian(p, u, point)))
    return EquilibriumReport(kind, point, ev, classify(ev), threshold(p, u))


def local_stability(
    p: ModelParams, u: ControlInputs = NO_CONTROL
) -> tuple[EquilibriumReport, EquilibriumReport | None]:
    """Eigenvalue reports for the DFE and, when it exists, the EE."""
    dfe_report = _report(EquilibriumKind.DFE, p, u, dfe(p, u))
    ee = endemic_equilibrium(p, u)
    ee_report = None if ee is None else _report(EquilibriumKind.EE, p, u, ee)
    return dfe_report, ee_report


@dataclass(frozen=True)
class RegimeForecast:
    """Predicted limit of a trajectory.

    ``applicable`` is False when the threshold exceeds 1 but the initial state
    lies in the invariant disease-free subspace ``x = z = 0``; the limit is
    then the DFE rather than the EE.
    """

    predicted_limit: HvState
    kind: EquilibriumKind
    applicable: bool


def predict_limit(p: ModelParams, u: ControlInputs, s0: HvState) -> RegimeForecast:
    if threshold(p, u) <= 1.0:
        return RegimeForecast(dfe(p, u), EquilibriumKind.DFE, True)
    if s0.x == 0.0 and s0.z == 0.0:
        return RegimeForecast(dfe(p, u), EquilibriumKind.DFE, False)
    return RegimeForecast(endemic_equilibrium(p, u), EquilibriumKind.EE, True)


# The uncontrolled threshold is a monomial, so its elasticities are the exponents.
_THRESHOLD_EXPONENTS = {"gamma": -1.0, "beta_h": 1.0, "beta_v": 1.0, "omega": 1.0, "mu": -2.0}


@dataclass(frozen=True)
class SensitivityReport:
    """Elasticities ``(d sigma / d theta) * theta / sigma`` of the uncontrolled threshold."""

    gamma: float
    beta_h: float
    beta_v: float
    omega: float
    mu: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in _THRESHOLD_EXPONENTS}


def threshold_sensitivity(p: ModelParams) -> SensitivityReport:
    if p.beta_v == 0.0:
        raise ValidationError("threshold elasticities are undefined for beta_v = 0")
    return SensitivityReport(**_THRESHOLD_EXPONENTS)
