#!/usr/bin/env python3
"""Compare the compiled and pure-Python Bellman kernels.

    python3 benchmarks/bench_kernels.py [--sizes 1000,10000,50000] [--repeat 5]

Times one synchronous sweep, one Gauss-Seidel sweep and a full action-value
pass on random models, then a complete BVI solve under each backend (the
backend is chosen at import, so solves run in a fresh interpreter).
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ssgvi import _pykernels
from ssgvi.generation import GenParams, generate_random, simple_scc

try:
    from ssgvi import _ckernels
except ImportError:
    _ckernels = None

SOLVE_SNIPPET = """
import time
from ssgvi.generation import simple_scc
from ssgvi.solvers import solve
m = simple_scc({n}, 1)
t = time.perf_counter()
r = solve(m, "bvi")
print(time.perf_counter() - t, r.iterations)
"""


def time_kernels(impl, model, repeat: int) -> dict[str, float]:
    a = model.arrays
    f = np.random.default_rng(0).random(model.n)
    dst = f.copy()
    gs = f.copy()
    q = np.empty(a.num_actions)
    states = np.arange(model.n, dtype=np.int64)
    cases = {
        "sync": lambda: impl.backup(a.state_ptr, a.action_ptr, a.targets, a.probs, a.is_max, states, f, dst),
        "gauss_seidel": lambda: impl.backup(a.state_ptr, a.action_ptr, a.targets, a.probs, a.is_max, states, gs, gs),
        "action_values": lambda: impl.all_action_values(a.action_ptr, a.targets, a.probs, f, q),
    }
    return {k: min(timeit.repeat(fn, number=1, repeat=repeat)) for k, fn in cases.items()}


def time_solve(n: int, pure: bool) -> tuple[float, int]:
    env = dict(os.environ)
    env.pop("SSGVI_PURE_PYTHON", None)
    if pure:
        env["SSGVI_PURE_PYTHON"] = "1"
    out = subprocess.run(
        [sys.executable, "-c", SOLVE_SNIPPET.format(n=n)], env=env, capture_output=True, text=True, check=True
    ).stdout.split()
    return float(out[0]), int(out[1])


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="1000,10000,50000")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--solve-n", type=int, default=20000, help="simple-scc size for the end-to-end solve")
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; only the Python backend is available")
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])

    print(f"{'model':<20}{'kernel':<15}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for n in [int(x) for x in args.sizes.split(",")]:
        for label, model in (
            (f"random:{n}", generate_random(GenParams(n=n, seed=0))),
            (f"simple-scc:{n}", simple_scc(n, 1)),
        ):
            res = {name: time_kernels(impl, model, args.repeat) for name, impl in backends}
            for k in res["python"]:
                row = f"{label:<20}{k:<15}" + "".join(f"{res[name][k] * 1e3:>10.3f}ms" for name, _ in backends)
                if _ckernels:
                    row += f"{res['python'][k] / res['cython'][k]:>9.1f}x"
                print(row)

    print(f"\nbvi on simple-scc:{args.solve_n}")
    for name, _ in backends:
        secs, iters = time_solve(args.solve_n, pure=name == "python")
        print(f"  {name:<8}{secs:8.2f}s  {iters} iterations")
    return 0


if __name__ == "__main__":
    sys.exit(main())
