"""Enumeration oracle for the allocation model.

Tries every activation set.  For each one the device assignment is a
min-cost assignment against fog columns replicated by capacity, and each
active fog takes its cheapest shadow fogs.  Shares nothing with the
branch-and-bound solver beyond the instance type.
"""
from __future__ import annotations

import itertools
import time

import numpy as np
from scipy.optimize import linear_sum_assignment

from .instance import AllocationInstance, BudgetExceeded, Infeasible, build_allocation

MAX_FOGS = 6
MAX_DEVICES = 10


def _assignment(inst: AllocationInstance, active: tuple[int, ...]):
    cols = [j for j in active for _ in range(int(inst.cap[j]))]
    if len(cols) < inst.n_devices:
        return None
    if inst.n_devices == 0:
        return 0.0, []
    cost = inst.c[:, cols]
    rows, picked = linear_sum_assignment(cost)
    order = np.argsort(rows)
    return float(cost[rows, picked].sum()), [cols[picked[i]] for i in order]


def solve_oracle(inst: AllocationInstance):
    if inst.n_fogs > MAX_FOGS or inst.n_devices > MAX_DEVICES:
        raise BudgetExceeded(f"oracle handles at most {MAX_FOGS} fogs and {MAX_DEVICES} devices")
    t0 = time.perf_counter()
    best = None
    sets = 0
    for r in range(inst.n_fogs + 1):
        for active in itertools.combinations(range(inst.n_fogs), r):
            sets += 1
            res = _assignment(inst, active)
            if res is None:
                continue
            device_cost, assignment = res
            z = device_cost + sum(float(inst.f[j]) + inst.shadow_cost(j) for j in active)
            if best is None or z < best[0]:
                best = (z, active, assignment)
    if best is None:
        raise Infeasible("no activation set can hold every device")
    z, active, assignment = best
    return build_allocation(inst, active, assignment,
                            stats={"activation_sets": sets, "wall_s": time.perf_counter() - t0})
