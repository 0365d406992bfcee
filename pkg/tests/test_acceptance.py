"""Acceptance criteria; each test prints one PASS/FAIL line with its measured margins.

Run with ``pytest tests/test_acceptance.py -v`` to see the lines next to the verdicts.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from hvsis.analyze import endemic_equilibrium, threshold
from hvsis.cli import main
from hvsis.integrate import integrate
from hvsis.model import ControlInputs, HvState, ModelParams
from hvsis.optimize import (
    CostModel,
    grid_oracle,
    in_region_C,
    kkt_system,
    solve_kkt,
    solve_linear,
    u1_upper,
)
from hvsis.verify import (
    check_boundary_flow,
    check_equilibrium_residual,
    check_metzler,
    check_monotone_order,
    check_threshold_eigen,
)

from .conftest import FIG2A, FIG2B, FIG5A

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def verdict(capsys):
    """Print ``PASS|FAIL name: detail`` past output capture, then assert."""

    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail

    return emit


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def test_threshold_regimes(verdict):
    low, high = threshold(ModelParams(**FIG2A)), threshold(ModelParams(**FIG2B))
    err = max(abs(low - 0.5) / 0.5, abs(high - 2.0) / 2.0)
    verdict("threshold regimes", err <= 1e-15,
            f"sigma0 = {low!r}, {high!r}; max rel err {err:.1e} (tol 1e-15)")


@pytest.mark.parametrize("params,s0,target", [
    (FIG2A, (0.01, 1.0, 0.05), (0.0, 1.0, 0.0)),
    (FIG2B, (0.01, 2.0, 0.05), (0.25, 4 / 3, 2 / 3)),
], ids=["mu=.2->DFE", "mu=.1->EE"])
def test_global_convergence(verdict, params, s0, target):
    with Timer() as t:
        traj = integrate(ModelParams(**params), ControlInputs(), HvState(*s0))
    err = float(np.max(np.abs(traj.final.as_array() - np.array(target))))
    ok = err <= 1e-6 and t.elapsed < 1.0
    verdict(f"global convergence mu={params['mu']}", ok,
            f"|s(T) - limit|_inf = {err:.2e} (tol 1e-6), {t.elapsed:.3f} s (< 1 s)")


def test_nonmonotone_transient(verdict):
    s0 = HvState(0.01, 1.0, 0.05)
    with Timer() as t:
        traj = integrate(ModelParams(**FIG2A), ControlInputs(), s0)
    x = traj.column("x")
    k = int(np.argmax(x))
    interior = 0 < k < len(x) - 1 and x[k] > x[k - 1] and x[k] > x[k + 1]
    ok = interior and x[k] > 1.5 * s0.x and t.elapsed < 1.0
    verdict("non-monotone transient", ok,
            f"max x = {x[k]:.6f} at t = {traj.times[k]:.3f} ({x[k] / s0.x:.3f} x(0), need > 1.5), "
            f"{t.elapsed:.3f} s")


def test_boundary_flow_suite(verdict):
    with Timer() as t:
        res = check_boundary_flow(ModelParams(**FIG2B), ControlInputs(), np.random.default_rng(1),
                                  n=100)
    ok = res.status == "pass" and t.elapsed < 1.0
    verdict("boundary flow suite", ok,
            f"max outward component {res.worst_margin:.2e} (tol 1e-12), {t.elapsed:.3f} s")


def test_metzler_monotone_suite(verdict):
    p, u, rng = ModelParams(**FIG2B), ControlInputs(), np.random.default_rng(2)
    with Timer() as t:
        metzler = check_metzler(p, u, rng, n=1000)
        order = check_monotone_order(p, u, rng, pairs=20)
    ok = metzler.status == "pass" and order.status == "pass" and t.elapsed < 5.0
    verdict("Metzler / monotone order", ok,
            f"min off-diagonal {metzler.worst_margin:.3e} (>= 0), "
            f"max order violation {order.worst_margin:.2e} (tol 1e-8), {t.elapsed:.3f} s")


def test_stability_consistency(verdict):
    rng = np.random.default_rng(3)
    with Timer() as t:
        eig = check_threshold_eigen(ModelParams(**FIG2B), rng, samples=200)
        resid = check_equilibrium_residual(ModelParams(**FIG2B), ControlInputs(), rng, samples=200)
    ok = eig.status == "pass" and resid.status == "pass" and t.elapsed < 5.0
    verdict("threshold / eigenvalue consistency", ok,
            f"{eig.detail}; min |lead Re| {eig.worst_margin:.2e}; "
            f"field residual {resid.worst_margin:.1e} x scale (tol 1e-13), {t.elapsed:.3f} s")


def test_control_effect(verdict):
    xc = endemic_equilibrium(ModelParams(**FIG2B), ControlInputs(0.01, 0.0)).x
    ref = 0.00316 / 0.0168
    rel = abs(xc - ref) / ref
    drop = 1.0 - xc / 0.25
    ok = rel <= 1e-12 and 0.23 <= drop <= 0.26
    verdict("control effect", ok,
            f"x_c = {xc:.10f} (rel err {rel:.1e}, tol 1e-12), reduction {100 * drop:.2f}% "
            f"(band [23%, 26%])")


def test_linear_closed_form(verdict):
    p = ModelParams(**FIG2B)
    n = 2001
    h1, h2 = u1_upper(p) / (n - 1), p.beta_h / (n - 1)
    lines, ok = [], True
    with Timer() as t:
        for c1, c2, u1_ref, u2_ref in [(1.0, 1.0, math.sqrt(0.02) - 0.1, 0.0),
                                        (3.0, 1.0, 0.0, 0.1)]:
            pol = solve_linear(p, c1, c2)
            err_u = max(abs(pol.u1_star - u1_ref), abs(pol.u2_star - u2_ref))
            err_s = abs(pol.achieved_sigma_c - 1.0)
            grid = grid_oracle(p, CostModel.linear(c1, c2), n)
            gap = grid.cost_value - pol.cost_value
            lipschitz = c1 * h1 + c2 * h2
            ok &= err_u <= 1e-12 and err_s <= 1e-12 and -lipschitz <= gap
            lines.append(f"(c1,c2)=({c1:g},{c2:g}) |u-u_ref| {err_u:.1e}, |sigma_c-1| {err_s:.1e}, "
                         f"grid gap {gap:.2e} (>= -{lipschitz:.2e})")
    ok &= t.elapsed < 10.0
    verdict("linear-cost closed form", ok, "; ".join(lines) + f"; {t.elapsed:.3f} s")


def test_region_boundary(verdict):
    p = ModelParams(**FIG5A)
    lo, hi = 1.0, 10.0
    assert not in_region_C(p, lo, 1.0) and in_region_C(p, hi, 1.0)
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if in_region_C(p, mid, 1.0) else (mid, hi)
    tags = (solve_linear(p, 5.0, 1.0).active_policy.value,
            solve_linear(p, 4.0, 1.0).active_policy.value)
    ok = abs(hi - 4.8284) <= 0.01 and tags == ("protection", "vector-control")
    verdict("region C boundary", ok,
            f"membership flips at c1/c2 = {hi:.6f} (4.8284 +- 0.01); (5,1) -> {tags[0]}, "
            f"(4,1) -> {tags[1]}")


def test_general_cost(verdict):
    p = ModelParams(**FIG2B)
    cost = CostModel.quadratic()
    n = 2001
    h1, h2 = u1_upper(p) / (n - 1), p.beta_h / (n - 1)
    with Timer() as t:
        pol = solve_kkt(p, cost)
        grid = grid_oracle(p, cost, n)
    resid = float(np.max(np.abs(kkt_system(p, cost, pol.u1_star, pol.u2_star, pol.multiplier))))
    gap = grid.cost_value - pol.cost_value
    # the grid point one cell above the optimum is feasible, so the grid can be at most this much worse
    cell = cost(pol.u1_star + h1, pol.u2_star + h2) - pol.cost_value
    ok = resid <= 1e-10 and -1e-12 <= gap <= cell and t.elapsed < 10.0
    verdict("general cost KKT", ok,
            f"u* = ({pol.u1_star:.10f}, {pol.u2_star:.10f}), stationarity residual {resid:.1e} "
            f"(tol 1e-10); grid gap {gap:.2e} within one-cell cost bound {cell:.2e}; grid argmin "
            f"offset ({(grid.u1_star - pol.u1_star) / h1:+.2f}, "
            f"{(grid.u2_star - pol.u2_star) / h2:+.2f}) cells; {t.elapsed:.3f} s")


def test_cli_determinism(verdict, tmp_path):
    runs = [
        ("simulate", "fig2b.json"), ("analyze", "fig2b.json"), ("sweep", "fig4_sweep.json"),
        ("region", "fig5a_region.json"), ("optimize", "optimize_quadratic.json"),
        ("verify", "verify.json"),
    ]
    same = []
    with Timer() as t:
        for i, (command, fixture) in enumerate(runs):
            outs = []
            for rep in range(2):
                path = tmp_path / f"{i}-{rep}"
                assert main([command, str(FIXTURES / fixture), "--out", str(path)]) == 0
                outs.append(path.read_bytes())
            same.append(outs[0] == outs[1])
    ok = all(same) and t.elapsed < 5.0
    verdict("CLI determinism", ok,
            f"{sum(same)}/{len(runs)} subcommands byte-identical, {t.elapsed:.3f} s (< 5 s)")
