"""Time the hot kernels with and without numba.

Each backend runs in its own interpreter because the choice is fixed at
import time by ROBUSTMC_DISABLE_NUMBA.

    python3 benchmarks/bench_numba.py [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, time
import numpy as np
from robustmc import _accel, _kernels

def best(fn, repeat):
    fn()  # warm-up (and JIT compile)
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)

repeat = {repeat}
g = np.random.default_rng(0)
noise = g.normal(size=(2_000, 100))
logu = np.log(g.uniform(size=2_000))
exps = g.exponential(size=100 + 50_000)

def laplace():
    x = np.full(100, 5.0)
    _kernels.laplace_langevin_chunk(x, 0.05, noise, logu, False, np.zeros(100), np.zeros(2_000))

def box():
    _kernels.zz_box_gaussian(np.zeros(100), np.ones(100), 1.0, 50_000, exps)

res = {{"numba": _accel.USE_NUMBA,
        "laplace MALA (d=100, 2e3 steps)": best(laplace, repeat),
        "box Zig-Zag (d=100, 5e4 events)": best(box, repeat)}}
print(json.dumps(res))
"""


def run(disable, repeat):
    env = dict(os.environ)
    if disable:
        env["ROBUSTMC_DISABLE_NUMBA"] = "1"
    else:
        env.pop("ROBUSTMC_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", WORKER.format(repeat=repeat)], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast, slow = run(False, args.repeat), run(True, args.repeat)
    if not fast.pop("numba"):
        print("numba unavailable; both columns use numpy")
    slow.pop("numba")
    print(f"{'kernel':36s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speed-up':>9s}")
    for k in fast:
        print(f"{k:36s} {fast[k]:10.4f} {slow[k]:10.4f} {slow[k] / fast[k]:8.1f}x")


if __name__ == "__main__":
    main()
