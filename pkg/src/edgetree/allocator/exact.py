"""Exact allocation by branch and bound.

The outer search fixes fog activations one fog at a time.  Its bound is
the committed fixed and shadow cost plus, per device, the cheapest fog
still possibly active.  Each complete activation set hands the device
assignment to the kernel with the incumbent as upper bound.
"""
from __future__ import annotations

import math
import time

import numpy as np

from . import kernel
from .instance import AllocationInstance, Infeasible, build_allocation

EPS = 1e-9


def solve_exact(inst: AllocationInstance, assign=None):
    assign = assign or kernel.assign
    t0 = time.perf_counter()
    nd, nf = inst.n_devices, inst.n_fogs
    open_cost = [float(inst.f[j]) + inst.shadow_cost(j) for j in range(nf)]
    cap_suffix = np.concatenate([np.cumsum(inst.cap[::-1])[::-1], [0]]) if nf else np.zeros(1)
    c = inst.c
    best = {"z": math.inf, "key": None, "active": None, "asg": None}
    stats = {"outer_nodes": 0, "inner_nodes": 0, "leaves": 0}
    on = np.zeros(nf, dtype=bool)

    def device_bound(j_next):
        if nd == 0:
            return 0.0
        possible = on.copy()
        possible[j_next:] = True
        if not possible.any():
            return math.inf
        return float(c[:, possible].min(axis=1).sum())

    def visit(j, committed, held):
        stats["outer_nodes"] += 1
        if held + cap_suffix[j] < nd:
            return
        if committed + device_bound(j) > best["z"] + EPS:
            return
        if j == nf:
            stats["leaves"] += 1
            cap = np.where(on, inst.cap, 0)
            cost, asg, nodes = assign(c, cap, best["z"] - committed)
            stats["inner_nodes"] += int(nodes)
            if asg is None:
                return
            z = committed + cost
            key = (tuple(int(k) for k in np.flatnonzero(on)), tuple(asg))
            if z < best["z"] - EPS or (z <= best["z"] + EPS and key < best["key"]):
                best.update(z=z, key=key, active=key[0], asg=list(asg))
            return
        on[j] = True
        visit(j + 1, committed + open_cost[j], held + int(inst.cap[j]))
        on[j] = False
        visit(j + 1, committed, held)

    visit(0, 0.0, 0)
    if best["asg"] is None:
        raise Infeasible("no feasible allocation")
    stats["wall_s"] = time.perf_counter() - t0
    stats["kernel"] = getattr(assign, "__module__", "?").rsplit(".", 1)[-1]
    return build_allocation(inst, best["active"], best["asg"], stats=stats)
