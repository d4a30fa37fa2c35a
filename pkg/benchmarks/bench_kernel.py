"""Compiled versus pure-Python assignment kernel.

    python benchmarks/bench_kernel.py [--instances 200] [--devices 10] [--fogs 6]

Runs the exact solver with each kernel on the same random instances and
checks that both return identical allocations.
"""
import argparse
import time

import numpy as np

from edgetree.allocator import AllocationInstance, solve_exact
from edgetree.allocator import _kernel_py, kernel


def instances(n, max_d, max_f, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        nd, nf = int(rng.integers(max_d // 2, max_d + 1)), int(rng.integers(2, max_f + 1))
        cap = rng.integers(1, 5, nf)
        if cap.sum() < nd:
            continue
        out.append(AllocationInstance([f"D{i}" for i in range(nd)], [f"F{j}" for j in range(nf)],
                                      rng.integers(1, 101, (nd, nf)), rng.integers(1, 101, (nf, nf)),
                                      rng.integers(1, 101, nf), cap))
    return out


def timed(insts, assign):
    t0 = time.perf_counter()
    sols = [solve_exact(i, assign) for i in insts]
    return time.perf_counter() - t0, sols


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--devices", type=int, default=10)
    ap.add_argument("--fogs", type=int, default=6)
    ap.add_argument("--seed", type=int, default=7)
    a = ap.parse_args()
    insts = instances(a.instances, a.devices, a.fogs, a.seed)
    t_py, s_py = timed(insts, _kernel_py.assign)
    print(f"python   {t_py:8.3f} s")
    if not kernel.COMPILED:
        print("compiled kernel not built; install with `pip install -e . --no-build-isolation`")
        return
    t_c, s_c = timed(insts, kernel.assign)
    same = all(p.key() == c.key() and p.z == c.z for p, c in zip(s_py, s_c))
    nodes = sum(s.stats["inner_nodes"] for s in s_c)
    print(f"cython   {t_c:8.3f} s")
    print(f"speedup  {t_py / t_c:8.2f}x over {len(insts)} instances, {nodes} kernel nodes, identical={same}")


if __name__ == "__main__":
    main()
