"""
Human-vector SIS model: parameters, states, vector fields and Jacobians.

The state of the model is ``(x, y, z)``: the infected fraction of a unit-mass
human population, the quantity of non-carrier vectors and the quantity of
carrier vectors. The auxiliary coordinates ``(x, z, v)`` with ``v = y + z``
turn the Jacobian into a Metzler matrix and are used for the monotonicity
checks.

Controls enter by substitution: vector control ``u1`` raises the vector death
rate (``mu -> mu + u1``) and protection ``u2`` lowers the human contagion rate
(``beta_h -> beta_h - u2``).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

#: Absolute tolerance used for domain membership and face detection.
BOUNDARY_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when parameters, controls or states violate their invariants."""


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ModelParams:
    """Epidemiological rates of the HV-SIS model.

    Parameters
    ----------
    gamma : float
        Human recovery rate.
    beta_h : float
        Human contagion rate (carrier vector -> susceptible human).
    beta_v : float
        Vector contagion rate (infected human -> non-carrier vector). May be 0.
    omega : float
        Vector birth rate, normalized to the unit human mass.
    mu : float
        Vector death rate.
    """

    gamma: float
    beta_h: float
    beta_v: float
    omega: float
    mu: float

    def __post_init__(self):
        for name in ("gamma", "beta_h", "beta_v", "omega", "mu"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        for name in ("gamma", "beta_h", "omega", "mu"):
            if getattr(self, name) <= 0.0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.beta_v < 0.0:
            raise ValidationError(f"beta_v must be >= 0, got {self.beta_v!r}")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.gamma, self.beta_h, self.beta_v, self.omega, self.mu)

    @property
    def scale(self) -> float:
        """Largest rate; used to scale residual tolerances."""
        return max(self.as_tuple())


@dataclass(frozen=True)
class ControlInputs:
    """Intervention levels: ``u1`` extra vector death rate, ``u2`` contagion reduction.

    ``u2 <= beta_h`` depends on the parameters and is checked by
    :func:`check_admissible`.
    """

    u1: float = 0.0
    u2: float = 0.0

    def __post_init__(self):
        for name in ("u1", "u2"):
            value = _finite(name, getattr(self, name))
            if value < 0.0:
                raise ValidationError(f"{name} must be >= 0, got {value!r}")
            object.__setattr__(self, name, value)


NO_CONTROL = ControlInputs()


def check_admissible(p: ModelParams, u: ControlInputs) -> None:
    if u.u2 > p.beta_h:
        raise ValidationError(f"u2={u.u2!r} exceeds beta_h={p.beta_h!r}")


def effective_rates(p: ModelParams, u: ControlInputs = NO_CONTROL):
    """Return ``(gamma, beta_h - u2, beta_v, omega, mu + u1)`` after validation."""
    check_admissible(p, u)
    return p.gamma, p.beta_h - u.u2, p.beta_v, p.omega, p.mu + u.u1


@dataclass(frozen=True)
class HvState:
    """Model state ``(x, y, z)``.

    Only finiteness is checked here; membership of the domain
    ``x in [0, 1], y >= 0, z >= 0`` is reported by :func:`domain_membership`
    and enforced where trajectories start.
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    @property
    def s(self) -> float:
        """Susceptible fraction."""
        return 1.0 - self.x

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class AuxState:
    """Monotone coordinates ``(x, z, v)`` with ``v = y + z``."""

    x: float
    z: float
    v: float

    def __post_init__(self):
        for name in ("x", "z", "v"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))

    def __iter__(self):
        return iter((self.x, self.z, self.v))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.z, self.v])


class Derivative3(NamedTuple):
    """Time derivative of a state, in the order of that state's coordinates."""

    d0: float
    d1: float
    d2: float


def to_aux(s: HvState) -> AuxState:
    return AuxState(s.x, s.z, s.y + s.z)


def from_aux(a: AuxState) -> HvState:
    if a.z > a.v:
        raise ValidationError(f"carrier quantity z={a.z!r} exceeds total v={a.v!r}")
    return HvState(a.x, a.v - a.z, a.z)


# Raw fields on floats; shared with the pure-Python integration kernel.

def hv_rhs(gamma, bh, bv, omega, mu, x, y, z):
    infect = bv * x * y
    return (-gamma * x + bh * (1.0 - x) * z, omega - mu * y - infect, infect - mu * z)


def aux_rhs(gamma, bh, bv, omega, mu, x, z, v):
    return (
        -gamma * x + bh * (1.0 - x) * z,
        bv * x * (v - z) - mu * z,
        omega - mu * v,
    )


def vector_field(p: ModelParams, u: ControlInputs, s: HvState) -> Derivative3:
    """Return ``(dx/dt, dy/dt, dz/dt)`` of the controlled model at ``s``."""
    x, y, z = (_finite(n, c) for n, c in zip("xyz", s))
    return Derivative3(*hv_rhs(*effective_rates(p, u), x, y, z))


def aux_vector_field(p: ModelParams, u: ControlInputs, s: AuxState) -> Derivative3:
    """Return ``(dx/dt, dz/dt, dv/dt)`` in auxiliary coordinates."""
    x, z, v = (_finite(n, c) for n, c in zip("xzv", s))
    return Derivative3(*aux_rhs(*effective_rates(p, u), x, z, v))


def jacobian(p: ModelParams, u: ControlInputs, s: HvState) -> np.ndarray:
    gamma, bh, bv, _, mu = effective_rates(p, u)
    x, y, z = s
    return np.array(
        [
            [-gamma - bh * z, 0.0, bh * (1.0 - x)],
            [-bv * y, -mu - bv * x, 0.0],
            [bv * y, bv * x, -mu],
        ]
    )


def aux_jacobian(p: ModelParams, u: ControlInputs, s: AuxState) -> np.ndarray:
    gamma, bh, bv, _, mu = effective_rates(p, u)
    x, z, v = s
    return np.array(
        [
            [-gamma - bh * z, bh * (1.0 - x), 0.0],
            [bv * (v - z), -bv * x - mu, bv * x],
            [0.0, 0.0, -mu],
        ]
    )


class Region(str, enum.Enum):
    D1 = "D1"
    D2 = "D2"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def vector_total(p: ModelParams, u: ControlInputs = NO_CONTROL) -> float:
    """Equilibrium vector quantity ``omega / (mu + u1)`` splitting D1 from D2."""
    return p.omega / (p.mu + u.u1)


def domain_membership(
    s: HvState | AuxState, p: ModelParams, u: ControlInputs = NO_CONTROL, tol: float = BOUNDARY_TOL
) -> Region:
    """Classify a state against the invariant sets D1 (``v <= omega/mu``) and D2.

    ``BOUNDARY`` is returned on the separating surface ``y + z = omega/mu``
    (within ``tol``), which belongs to both sets.
    """
    if isinstance(s, AuxState):
        x, z, v = s
        y = v - z
    else:
        x, y, z = s
        v = y + z
    if x < -tol or x > 1.0 + tol or y < -tol or z < -tol:
        return Region.OUTSIDE
    diff = v - vector_total(p, u)
    if abs(diff) <= tol:
        return Region.BOUNDARY
    return Region.D1 if diff < 0.0 else Region.D2


@dataclass(frozen=True)
class BoundaryFlowReport:
    """Outward-normal components of the vector field on each active face.

    Face names: ``x=0``, ``x=1``, ``y=0``, ``z=0``, and for the separating
    surface ``v=total:D1`` (outward from D1) and ``v=total:D2`` (outward
    from D2). Invariance of the faces means every component is ``<= 0``.
    """

    state: HvState
    components: dict

    @property
    def max_outward(self) -> float:
        return max(self.components.values())


def boundary_flow_check(
    p: ModelParams, u: ControlInputs, s: HvState, tol: float = BOUNDARY_TOL
) -> BoundaryFlowReport:
    if domain_membership(s, p, u, tol) is Region.OUTSIDE:
        raise ValidationError(f"state {s} is outside the domain")
    dx, dy, dz = vector_field(p, u, s)
    comps = {}
    if abs(s.x) <= tol:
        comps["x=0"] = -dx
    if abs(s.x - 1.0) <= tol:
        comps["x=1"] = dx
    if abs(s.y) <= tol:
        comps["y=0"] = -dy
    if abs(s.z) <= tol:
        comps["z=0"] = -dz
    if abs(s.y + s.z - vector_total(p, u)) <= tol:
        comps["v=total:D1"] = dy + dz
        comps["v=total:D2"] = -(dy + dz)
    if not comps:
        raise ValidationError(f"state {s} does not lie on any face")
    return BoundaryFlowReport(s, comps)
