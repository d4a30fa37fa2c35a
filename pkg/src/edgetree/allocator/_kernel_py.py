"""Capacitated device assignment by depth-first branch and bound.

Devices are branched in index order and fogs in ascending index, so the
search meets assignment tuples in lexicographic order.  Once an incumbent
exists, nodes whose bound merely ties it are pruned, which makes the first
optimum found the lexicographically smallest one.
"""
import math

import numpy as np

EPS = 1e-9


def assign(c, cap, ub=math.inf):
    """Best assignment of every device to a fog with ``cap[j] > 0``.

    Returns ``(cost, assignment, nodes)``; ``assignment`` is None when no
    assignment costs at most ``ub``.
    """
    c = np.asarray(c, dtype=float)
    nd, nf = c.shape
    left = [int(v) for v in cap]
    fogs = [j for j in range(nf) if left[j] > 0]
    rows = c.tolist()
    if nd and not fogs:
        return math.inf, None, 0
    # suffix[i]: cheapest possible cost of devices i.. ignoring capacity
    suffix = [0.0] * (nd + 1)
    for i in range(nd - 1, -1, -1):
        suffix[i] = suffix[i + 1] + min(rows[i][j] for j in fogs)
    best = [ub, None]
    cur = [0] * nd
    nodes = 0

    def dfs(i, acc):
        nonlocal nodes
        nodes += 1
        if i == nd:
            best[0], best[1] = acc, list(cur)
            return
        row = rows[i]
        for j in fogs:
            if not left[j]:
                continue
            bound = acc + row[j] + suffix[i + 1]
            if best[1] is None:
                if bound > best[0] + EPS:
                    continue
            elif bound >= best[0] - EPS:
                continue
            left[j] -= 1
            cur[i] = j
            dfs(i + 1, acc + row[j])
            left[j] += 1

    dfs(0, 0.0)
    if best[1] is None:
        return math.inf, None, nodes
    return best[0], best[1], nodes
