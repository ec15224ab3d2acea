"""Compare the numba kernels with their numpy / interpreted counterparts.

Usage: python benchmarks/bench_kernels.py [--repeat N]

In-process rows time both implementations on identical inputs. The last rows
time a full sharpness solve in a child process with SPINPAIR_NO_JIT=1, which
is the path users get without numba.
"""
import argparse
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from spinpair import _accel, compat, kernels, sdpsolve

SOLVE_SNIPPET = """
import time
from spinpair import compat, sdpsolve
cs = compat.build_constraints(compat.named_axes("XYZ"), compat.parallel(), compat.ensemble_{ens}())
sdpsolve.solve_max_sharpness(cs)  # warm-up (jit compile or cache load)
cs = compat.build_constraints(compat.named_axes("XYZ"), compat.parallel(), compat.ensemble_{ens}())
t0 = time.perf_counter()
sol = sdpsolve.solve_max_sharpness(cs)
print(time.perf_counter() - t0, sol.lambda_opt)
"""


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def child_solve(ens, no_jit):
    env = dict(os.environ)
    if no_jit:
        env["SPINPAIR_NO_JIT"] = "1"
    else:
        env.pop("SPINPAIR_NO_JIT", None)
    out = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET.format(ens=ens)], env=env,
                         capture_output=True, text=True, check=True)
    secs, lam = out.stdout.split()
    return float(secs), float(lam)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel.USE_NUMBA:
        print("numba backend disabled; unset SPINPAIR_NO_JIT to compare", file=sys.stderr)
        return 1

    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = (a + a.conj().T) / 2
    z = rng.normal(size=8 * 16)
    cs = compat.build_constraints(compat.named_axes("XYZ"), compat.parallel(), compat.ALL)
    prep = sdpsolve._prepare(cs)
    b = cs.rhs(0.8)
    dyk = (prep.Q, prep.pinv @ b, cs.coeffs, b, sdpsolve.uniform_start(cs), 4, 8,
           0.0, 2000, 25, 10 ** 9, 0.0)

    # compile everything first
    kernels.jacobi_eigh(h)
    kernels.psd_project(z, 4, 8)
    kernels.dykstra(*dyk)

    rows = [
        ("jacobi eig 4x4", lambda: kernels.jacobi_eigh_loop(h), lambda: kernels.jacobi_eigh(h),
         "interpreted loop", 200),
        ("lapack eigh 4x4", lambda: np.linalg.eigh(h), lambda: kernels.jacobi_eigh(h),
         "np.linalg.eigh", 2000),
        ("psd projection 8 blocks", lambda: kernels.psd_project_numpy(z, 4, 8),
         lambda: kernels.psd_project(z, 4, 8), "batched eigh", 500),
        ("dykstra 2000 iterations", lambda: kernels.dykstra_numpy(*dyk),
         lambda: kernels.dykstra(*dyk), "numpy loop", 1),
    ]
    print(f"{'kernel':28s} {'baseline':>16s} {'numba':>12s} {'speedup':>8s}  baseline")
    for name, base, fast, label, number in rows:
        tb = best_of(base, args.repeat, number)
        tf = best_of(fast, args.repeat, number)
        print(f"{name:28s} {tb * 1e6:13.1f} us {tf * 1e6:9.1f} us {tb / tf:7.1f}x  {label}")

    for ens in ("octahedral", "tetrahedral"):
        t_np, lam_np = child_solve(ens, True)
        t_nb, lam_nb = child_solve(ens, False)
        name = f"full solve E_{ens[:3]}"
        print(f"{name:28s} {t_np * 1e3:13.1f} ms {t_nb * 1e3:9.1f} ms {t_np / t_nb:7.1f}x"
              f"  SPINPAIR_NO_JIT=1 (lambda {lam_np:.5f} vs {lam_nb:.5f})")
    return 0


if __name__ == "__main__":
    t0 = time.perf_counter()
    code = main()
    print(f"total {time.perf_counter() - t0:.1f} s")
    sys.exit(code)
