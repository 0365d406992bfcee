"""
Command-line front end.

    hvsis simulate|analyze|sweep|region|optimize|verify [CONFIG] [--out PATH] [--verify-grid N]

CONFIG is a flat JSON object (path, or standard input when omitted or ``-``).
Exit codes: 0 success, 1 runtime/solver failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, fields

import numpy as np

from .analyze import (
    EquilibriumKind,
    dfe,
    endemic_equilibrium,
    local_stability,
    predict_limit,
    threshold,
    threshold_sensitivity,
)
from .integrate import (
    IntegrationError,
    IntegratorConfig,
    SteadyStateCriterion,
    TerminalReason,
    integrate,
)
from .model import (
    ControlInputs,
    HvState,
    ModelParams,
    Region,
    ValidationError,
    check_admissible,
    domain_membership,
)
from .optimize import (
    CostModel,
    KKTConvergenceError,
    grid_oracle,
    in_region_C,
    solve_kkt,
    solve_linear,
)
from .verify import run_all

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    """Flat configuration shared by all subcommands; unused keys are ignored by a command."""

    # model
    gamma: float = 0.4
    beta_h: float = 0.2
    beta_v: float = 0.2
    omega: float = 0.2
    mu: float = 0.1
    # controls
    u1: float = 0.0
    u2: float = 0.0
    # initial state; y0 defaults to omega / (mu + u1)
    x0: float = 0.01
    y0: float | None = None
    z0: float = 0.05
    # integrator
    method: str = "rk45"
    step: float = 1e-2
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    min_step: float = 1e-12
    max_step: float = 1.0
    t_max: float = 500.0
    record_stride: int = 1
    steady_state: bool = False
    steady_tol: float = 1e-10
    steady_window: float = 1.0
    # sweep grid
    u1_min: float = 0.0
    u1_max: float = 0.05
    u1_count: int = 11
    u2_min: float = 0.0
    u2_max: float = 0.1
    u2_count: int = 11
    # region grid
    c1_min: float = 1.0
    c1_max: float = 10.0
    c1_count: int = 10
    c2_min: float = 1.0
    c2_max: float = 1.0
    c2_count: int = 1
    # optimize
    cost: str = "linear"
    c1: float = 1.0
    c2: float = 1.0
    solver: str = "auto"
    grid_n: int = 2001
    # verify
    seed: int = 0

    @classmethod
    def from_mapping(cls, data) -> "RunConfig":
        if not isinstance(data, dict):
            raise ValidationError("configuration must be a JSON object")
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ValidationError(f"unknown configuration keys: {', '.join(unknown)}")
        values = {}
        for key, raw in data.items():
            values[key] = _coerce(key, known[key].type, raw)
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def params(self) -> ModelParams:
        return ModelParams(self.gamma, self.beta_h, self.beta_v, self.omega, self.mu)

    def controls(self) -> ControlInputs:
        return ControlInputs(self.u1, self.u2)

    def initial_state(self) -> HvState:
        y0 = self.omega / (self.mu + self.u1) if self.y0 is None else self.y0
        return HvState(self.x0, y0, self.z0)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(self.method, self.t_max, self.step, self.abs_tol, self.rel_tol,
                                self.min_step, self.max_step, self.record_stride)

    def stop(self) -> SteadyStateCriterion | None:
        if not self.steady_state:
            return None
        return SteadyStateCriterion(self.steady_tol, self.steady_window)

    def cost_model(self) -> CostModel:
        if self.cost == "linear":
            return CostModel.linear(self.c1, self.c2)
        return CostModel.quadratic(self.c1, self.c2)

    def validate(self) -> None:
        p = self.params()
        u = self.controls()
        check_admissible(p, u)
        s0 = self.initial_state()
        if domain_membership(s0, p, u) is Region.OUTSIDE:
            raise ValidationError(f"initial state {tuple(s0)} is outside the domain")
        self.integrator()
        self.stop()
        for axis in ("u1", "u2", "c1", "c2"):
            lo, hi, n = (getattr(self, f"{axis}_{k}") for k in ("min", "max", "count"))
            if n < 1:
                raise ValidationError(f"{axis}_count must be >= 1")
            if hi < lo:
                raise ValidationError(f"{axis}_max must be >= {axis}_min")
        if self.u1_min < 0.0 or self.u2_min < 0.0:
            raise ValidationError("sweep controls must be >= 0")
        if self.u2_max > self.beta_h:
            raise ValidationError(f"u2_max={self.u2_max!r} exceeds beta_h={self.beta_h!r}")
        if self.c1_min <= 0.0 or self.c2_min <= 0.0:
            raise ValidationError("cost grid coefficients must be > 0")
        if self.cost not in ("linear", "quadratic"):
            raise ValidationError(f"cost must be 'linear' or 'quadratic', got {self.cost!r}")
        if self.solver not in ("auto", "closed-form", "kkt"):
            raise ValidationError(f"solver must be 'auto', 'closed-form' or 'kkt', got {self.solver!r}")
        if self.solver == "closed-form" and self.cost != "linear":
            raise ValidationError("the closed-form solver needs a linear cost")
        self.cost_model()
        if self.grid_n < 2:
            raise ValidationError("grid_n must be >= 2")


def _coerce(key, annotation, raw):
    kind = str(annotation)
    if "bool" in kind:
        if not isinstance(raw, bool):
            raise ValidationError(f"{key} must be a boolean")
        return raw
    if "None" in kind and raw is None:
        return None
    if "int" in kind:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ValidationError(f"{key} must be an integer")
        return raw
    if "float" in kind:
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ValidationError(f"{key} must be a number")
        value = float(raw)
        if not math.isfinite(value):
            raise ValidationError(f"{key} must be finite")
        return value
    if not isinstance(raw, str):
        raise ValidationError(f"{key} must be a string")
    return raw


# Serialization


def fmt_csv(value: float) -> str:
    """Shortest round-trip representation."""
    return repr(float(value))


def fmt_json_float(value: float) -> str:
    if not math.isfinite(value):
        return "null"
    text = f"{value:.17g}"
    if not any(ch in text for ch in ".enN"):
        text += ".0"
    return text


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with lexicographic keys and 17-significant-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt_json_float(float(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, complex):
        return dumps([obj.real, obj.imag], indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}"
                 for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


class CommandFailed(RuntimeError):
    def __init__(self, message, output=""):
        super().__init__(message)
        self.output = output


# Commands


def cmd_simulate(cfg: RunConfig, args) -> str:
    traj = integrate(cfg.params(), cfg.controls(), cfg.initial_state(), cfg.integrator(),
                     cfg.stop())
    buf = io.StringIO()
    buf.write("t,x,y,z,v\n")
    for t, (x, y, z) in zip(traj.times, traj.states):
        buf.write(",".join(fmt_csv(c) for c in (t, x, y, z, y + z)) + "\n")
    buf.write(f"# terminal_reason={traj.terminal_reason.value}\n")
    if traj.message:
        buf.write(f"# message={traj.message}\n")
    if traj.terminal_reason is TerminalReason.GUARD_VIOLATION:
        raise CommandFailed(traj.message, buf.getvalue())
    return buf.getvalue()


def analysis_document(cfg: RunConfig) -> dict:
    p, u, s0 = cfg.params(), cfg.controls(), cfg.initial_state()
    dfe_rep, ee_rep = local_stability(p, u)
    forecast = predict_limit(p, u, s0)
    doc = {
        "sigma0": threshold(p),
        "sigma_c": threshold(p, u),
        "dfe": list(dfe(p, u)),
        "eigenvalues_dfe": [[ev.real, ev.imag] for ev in dfe_rep.eigenvalues],
        "stability_dfe": dfe_rep.stability.value,
        "regime": "endemic" if forecast.kind is EquilibriumKind.EE else "disease-free",
        "predicted_limit": list(forecast.predicted_limit),
        "forecast_applicable": forecast.applicable,
        "elasticities": (threshold_sensitivity(p).as_dict() if p.beta_v > 0.0 else None),
    }
    if ee_rep is not None:
        doc["ee"] = list(ee_rep.point)
        doc["eigenvalues_ee"] = [[ev.real, ev.imag] for ev in ee_rep.eigenvalues]
        doc["stability_ee"] = ee_rep.stability.value
    return doc


def cmd_analyze(cfg: RunConfig, args) -> str:
    return dumps(analysis_document(cfg)) + "\n"


def _axis(lo, hi, n):
    return [lo] if n == 1 else [float(v) for v in np.linspace(lo, hi, n)]


def cmd_sweep(cfg: RunConfig, args) -> str:
    p = cfg.params()
    buf = io.StringIO()
    buf.write("u1,u2,sigma_c,x_ee,z_ee\n")
    for u1 in _axis(cfg.u1_min, cfg.u1_max, cfg.u1_count):
        for u2 in _axis(cfg.u2_min, cfg.u2_max, cfg.u2_count):
            u = ControlInputs(u1, u2)
            ee = endemic_equilibrium(p, u)
            cells = [fmt_csv(u1), fmt_csv(u2), fmt_csv(threshold(p, u))]
            cells += ["", ""] if ee is None else [fmt_csv(ee.x), fmt_csv(ee.z)]
            buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def cmd_region(cfg: RunConfig, args) -> str:
    p = cfg.params()
    buf = io.StringIO()
    buf.write("c1,c2,in_C,policy,u1_star,u2_star,cost\n")
    for c1 in _axis(cfg.c1_min, cfg.c1_max, cfg.c1_count):
        for c2 in _axis(cfg.c2_min, cfg.c2_max, cfg.c2_count):
            pol = solve_linear(p, c1, c2)
            member = "true" if in_region_C(p, c1, c2) else "false"
            buf.write(",".join([fmt_csv(c1), fmt_csv(c2), member, pol.active_policy.value,
                                fmt_csv(pol.u1_star), fmt_csv(pol.u2_star),
                                fmt_csv(pol.cost_value)]) + "\n")
    return buf.getvalue()


def cmd_optimize(cfg: RunConfig, args) -> str:
    p = cfg.params()
    cost = cfg.cost_model()
    solver = cfg.solver
    if solver == "auto":
        solver = "closed-form" if cfg.cost == "linear" else "kkt"
    pol = solve_linear(p, cfg.c1, cfg.c2) if solver == "closed-form" else solve_kkt(p, cost)
    doc = {
        "u1_star": pol.u1_star,
        "u2_star": pol.u2_star,
        "lambda": pol.multiplier,
        "sigma_c": pol.achieved_sigma_c,
        "cost": pol.cost_value,
        "provenance": pol.provenance,
        "policy": pol.active_policy.value,
        "kkt_residual": pol.kkt_residual,
    }
    if args.verify_grid is not None:
        if args.verify_grid < 2:
            raise ValidationError("--verify-grid must be >= 2")
        oracle = grid_oracle(p, cost, args.verify_grid)
        doc["grid_gap"] = oracle.cost_value - pol.cost_value
        doc["grid_u1"] = oracle.u1_star
        doc["grid_u2"] = oracle.u2_star
    return dumps(doc) + "\n"


def cmd_verify(cfg: RunConfig, args) -> str:
    results = run_all(cfg.params(), cfg.controls(), cfg.seed)
    doc = {
        "passed": all(r.passed for r in results),
        "checks": [
            {"name": r.name, "status": r.status, "worst_margin": r.worst_margin,
             "detail": r.detail}
            for r in results
        ],
    }
    out = dumps(doc) + "\n"
    failed = [r for r in results if not r.passed]
    if failed:
        raise CommandFailed(f"check failed: {failed[0].name}", out)
    return out


COMMANDS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "region": cmd_region,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hvsis", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", nargs="?", default="-",
                        help="JSON configuration file ('-' or omitted: standard input)")
    parser.add_argument("--out", help="write output here instead of standard output")
    parser.add_argument("--verify-grid", type=int, metavar="N",
                        help="optimize: cross-check against an N x N grid search")
    return parser


def _load(path):
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from None
    return RunConfig.from_mapping(data)


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args.config)
        output = COMMANDS[args.command](cfg, args)
    except (ValidationError, OSError) as exc:
        print(f"hvsis: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CommandFailed as exc:
        _emit(exc.output, args.out)
        print(f"hvsis: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (IntegrationError, KKTConvergenceError) as exc:
        print(f"hvsis: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _emit(output, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
