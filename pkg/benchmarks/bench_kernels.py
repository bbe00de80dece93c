"""Time the compiled and pure-Python kernels on the same closed-loop scenario.

    python benchmarks/bench_kernels.py --steps 200000 --repeat 3

Prints microseconds per RK4 step for each backend, the speed-up, and the
largest difference between the two trajectories (expected to be zero).
"""
import argparse
import time

import numpy as np

from lugre_lab._backend import available
from lugre_lab.control import PidConfig
from lugre_lab.observers import ProposedConstant
from lugre_lab.signals import Step
from lugre_lab.sim import ScenarioConfig, run_closed_loop


def scenario(n_steps, dt):
    return ScenarioConfig(loop_kind="velocity", reference=Step(1.0),
                          controller=PidConfig(1.6, 0.16),
                          observer=ProposedConstant(-10.24, 22.0), compensation=True,
                          dt=dt, duration=n_steps * dt, record_stride=10)


def best_time(cfg, backend, repeat):
    best, traj = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        traj = run_closed_loop(cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, traj


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=100_000)
    ap.add_argument("--dt", type=float, default=1e-5)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cfg = scenario(args.steps, args.dt)
    results = {}
    for name in available():
        secs, traj = best_time(cfg, name, args.repeat)
        results[name] = (secs, traj)
        print(f"{name:<7} {secs:8.3f} s  {1e6 * secs / args.steps:8.3f} us/step")
    if len(results) == 2:
        (cs, ct), (ps, pt) = results["cython"], results["python"]
        diff = max(float(np.nanmax(np.abs(ct[c] - pt[c]))) for c in ("theta", "w", "z", "F_hat", "u"))
        print(f"speed-up {ps / cs:.1f}x, max trajectory difference {diff:.3g}")
    else:
        print("compiled kernel not built; only the Python backend was timed")


if __name__ == "__main__":
    main()
