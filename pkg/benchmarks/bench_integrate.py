"""Compare the pure-Python and compiled integration kernels.

    python3 benchmarks/bench_integrate.py [--repeat N]

Each case integrates the endemic parameter set once per repetition; the best
wall time is reported, followed by the max difference between the two
backends' trajectories.
"""
import argparse
import time

import numpy as np

from hvsis.integrate import BACKENDS, IntegratorConfig, integrate
from hvsis.model import ControlInputs, HvState, ModelParams

PARAMS = ModelParams(gamma=0.4, beta_h=0.2, beta_v=0.2, omega=0.2, mu=0.1)
S0 = HvState(0.01, 2.0, 0.05)

CASES = {
    "rk4 h=1e-2 T=500": IntegratorConfig(method="rk4", step=1e-2, t_max=500.0),
    "rk4 h=1e-3 T=500 stride=100": IntegratorConfig(method="rk4", step=1e-3, t_max=500.0,
                                                    record_stride=100),
    "rk45 tol=1e-12 T=500": IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12, t_max=500.0),
}


def best_time(cfg, backend, repeat):
    best, traj = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        traj = integrate(PARAMS, ControlInputs(), S0, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, traj


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if "compiled" not in BACKENDS:
        print("compiled kernel not built; only the Python backend is available")
    print(f"{'case':<30}{'samples':>9}{'python s':>11}{'compiled s':>12}{'speedup':>9}{'max diff':>11}")
    for name, cfg in CASES.items():
        t_py, ref = best_time(cfg, "python", args.repeat)
        if "compiled" in BACKENDS:
            t_c, fast = best_time(cfg, "compiled", args.repeat)
            diff = float(np.max(np.abs(ref.states - fast.states)))
            print(f"{name:<30}{len(ref.times):>9}{t_py:>11.4f}{t_c:>12.4f}{t_py / t_c:>9.1f}"
                  f"{diff:>11.1e}")
        else:
            print(f"{name:<30}{len(ref.times):>9}{t_py:>11.4f}{'-':>12}{'-':>9}{'-':>11}")


if __name__ == "__main__":
    main()
