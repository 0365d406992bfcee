"""
Time integration of the HV-SIS model and of its auxiliary ``(x, z, v)`` form.

The stepping loop lives in a kernel module: the compiled ``_ckernels`` when it
was built, otherwise the pure-Python ``_pykernels``. Both follow the same
contract and produce the same numbers up to floating-point reassociation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _pykernels
from .model import (
    NO_CONTROL,
    AuxState,
    ControlInputs,
    HvState,
    ModelParams,
    Region,
    ValidationError,
    domain_membership,
    effective_rates,
    from_aux,
)

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels

#: Kernel used when ``backend`` is not given.
DEFAULT_BACKEND = "compiled" if _ckernels is not None else "python"

#: Largest domain violation silently clamped after a step.
PROJECTION_TOL = 1e-9


class IntegrationError(RuntimeError):
    """The integrated state became non-finite."""


class TerminalReason(str, enum.Enum):
    HORIZON = "horizon"
    STEADY_STATE = "steady-state"
    GUARD_VIOLATION = "guard-violation"


_REASONS = {
    _pykernels.HORIZON: TerminalReason.HORIZON,
    _pykernels.STEADY: TerminalReason.STEADY_STATE,
    _pykernels.GUARD: TerminalReason.GUARD_VIOLATION,
}


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    ``method`` is ``"rk4"`` (fixed step ``step``) or ``"rk45"`` (adaptive
    Dormand-Prince pair controlled by ``abs_tol``/``rel_tol``, starting at
    ``step`` and kept within ``[min_step, max_step]``). ``t_max = 0`` yields
    the initial state only.
    """

    method: str = "rk45"
    t_max: float = 500.0
    step: float = 1e-2
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    min_step: float = 1e-12
    max_step: float = 1.0
    record_stride: int = 1

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValidationError(f"method must be 'rk4' or 'rk45', got {self.method!r}")
        for name in ("step", "abs_tol", "rel_tol", "min_step", "max_step"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
        if not (math.isfinite(self.t_max) and self.t_max >= 0.0):
            raise ValidationError(f"t_max must be >= 0, got {self.t_max!r}")
        if self.min_step > self.max_step:
            raise ValidationError("min_step must not exceed max_step")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValidationError(f"record_stride must be a positive integer, got {self.record_stride!r}")


@dataclass(frozen=True)
class SteadyStateCriterion:
    """Stop once ``max|field| < field_norm_tol`` has held for ``window`` time units."""

    field_norm_tol: float = 1e-10
    window: float = 1.0

    def __post_init__(self):
        if not (self.field_norm_tol > 0.0 and self.window > 0.0):
            raise ValidationError("field_norm_tol and window must be > 0")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded samples of one integration.

    ``states`` has one row per sample; its columns are named by ``coords``
    (``("x", "y", "z")`` or ``("x", "z", "v")``).
    """

    times: np.ndarray
    states: np.ndarray
    terminal_reason: TerminalReason
    coords: tuple = ("x", "y", "z")
    message: str = ""
    backend: str = field(default=DEFAULT_BACKEND)

    def __len__(self):
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.coords.index(name)]

    @property
    def final(self) -> HvState | AuxState:
        a, b, c = self.states[-1]
        return HvState(a, b, c) if self.coords[1] == "y" else AuxState(a, b, c)


def _run(system, p, u, s0, cfg, stop, backend):
    backend = backend or DEFAULT_BACKEND
    try:
        kernel = BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown backend {backend!r}; available: {sorted(BACKENDS)}") from None
    rates = effective_rates(p, u)
    ss_tol, ss_window = (stop.field_norm_tol, stop.window) if stop is not None else (0.0, -1.0)
    times, states, code, message = kernel.integrate_kernel(
        system, *rates, *s0,
        0 if cfg.method == "rk4" else 1,
        cfg.step, cfg.abs_tol, cfg.rel_tol, cfg.min_step, cfg.max_step, cfg.t_max,
        int(cfg.record_stride), ss_tol, ss_window, PROJECTION_TOL,
    )
    if code == _pykernels.NONFINITE:
        raise IntegrationError(message)
    coords = ("x", "y", "z") if system == 0 else ("x", "z", "v")
    return Trajectory(times, states, _REASONS[code], coords, message, backend)


def integrate(
    p: ModelParams,
    u: ControlInputs = NO_CONTROL,
    s0: HvState = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    stop: SteadyStateCriterion | None = None,
    backend: str | None = None,
) -> Trajectory:
    """Integrate the (controlled) HV-SIS model from ``s0``.

    Returns a :class:`Trajectory` whose ``terminal_reason`` says whether the
    horizon, a steady state, or a guard violation (step-size underflow or a
    domain violation larger than round-off) ended the run.
    """
    if domain_membership(s0, p, u) is Region.OUTSIDE:
        raise ValidationError(f"initial state {s0} is outside the domain")
    return _run(0, p, u, tuple(s0), cfg, stop, backend)


def integrate_aux(
    p: ModelParams,
    u: ControlInputs = NO_CONTROL,
    s0: AuxState = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    stop: SteadyStateCriterion | None = None,
    backend: str | None = None,
) -> Trajectory:
    """Integrate the auxiliary system ``(x, z, v)`` from ``s0``."""
    if domain_membership(from_aux(s0), p, u) is Region.OUTSIDE:
        raise ValidationError(f"initial state {s0} is outside the domain")
    return _run(1, p, u, tuple(s0), cfg, stop, backend)
