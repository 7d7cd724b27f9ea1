"""Compiled vs pure-numpy kernels.

Times the Jacobi eigensolver both ways on Hermitian matrices of a few sizes,
then runs a short simulate end to end with and without numba (each in a
fresh interpreter, since the switch is read at import).

    python3 benchmarks/bench_kernels.py [--reps 300]
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from cshrink import _accel
from cshrink._kernels import jacobi_herm
from cshrink.sampling import RngStream


def best_of(fn, arg, repeat=5, number=20):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(arg, 100)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def kernel_table():
    if not _accel.NUMBA_ENABLED:
        print("numba disabled in this interpreter; kernel timings are fallback only")
    print(f"{'size':>5} {'numba us':>10} {'numpy us':>10} {'speedup':>8}")
    for p in (2, 3, 6, 12):
        x = RngStream(1, p).standard_cn((p + 3, p))
        h = x.conj().T @ x
        jacobi_herm(h, 100)  # compile outside the timer
        fast = best_of(jacobi_herm, h)
        slow = best_of(jacobi_herm.py_func, h, number=5)
        print(f"{p:5d} {fast * 1e6:10.1f} {slow * 1e6:10.1f} {slow / fast:8.1f}")


SNIPPET = """
import time
from cshrink.estimators import EstimatorSpec
from cshrink.harness import ExperimentConfig, ModelConfig, run_experiment
from cshrink._kernels import jacobi_herm
import numpy as np
jacobi_herm(np.eye(2, dtype=complex), 10)
kinds = ("mle", "known_crude_em", "known_ordered", "unknown_em", "unknown_as")
cfg = ExperimentConfig(ModelConfig({m}, {p}, {n}, "scaled_random", 1.0), [EstimatorSpec(k) for k in kinds], {reps}, 3)
t0 = time.perf_counter()
rows = run_experiment(cfg)
print(time.perf_counter() - t0, rows[-1].empirical_risk)
"""


def end_to_end(reps, m, p, n):
    out = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, CSHRINK_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", SNIPPET.format(reps=reps, m=m, p=p, n=n)], env=env,
                             capture_output=True, text=True, check=True)
        secs, risk = res.stdout.split()
        out[label] = (float(secs), risk)
    print(f"\nsimulate ({m}, {p}, {n}), 5 estimators, {reps} reps")
    for label, (secs, risk) in out.items():
        print(f"  {label:6s} {secs:8.3f} s   {secs / reps * 1e3:7.3f} ms/rep   last risk {risk}")
    if out["numba"][1] != out["numpy"][1]:
        print("  note: the two paths differ in the last printed digits (rounding order in the sweeps)")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=300)
    args = ap.parse_args()
    kernel_table()
    end_to_end(args.reps, 6, 2, 10)
    end_to_end(args.reps, 12, 6, 20)
