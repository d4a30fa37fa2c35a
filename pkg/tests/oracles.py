"""Independent reference computations used by the tests.

Plain Python over raw tables, no package code beyond reading inputs.
"""
import itertools
import math

DEVFOG = [
    [24, 74, 31, 51, 84],
    [57, 54, 86, 61, 68],
    [57, 67, 29, 91, 71],
    [54, 54, 65, 82, 94],
    [98, 81, 16, 61, 27],
    [13, 92, 34, 94, 87],
    [54, 72, 41, 12, 78],
    [54, 64, 65, 89, 89],
]
FOGFOG = [
    [1000, 74, 31, 51, 84],
    [57, 1000, 86, 61, 68],
    [57, 67, 1000, 91, 71],
    [54, 54, 65, 1000, 94],
    [98, 81, 16, 61, 1000],
]

# device index -> fog index, 0-based
GOLDEN_ASSIGNMENT = {0: 2, 2: 2, 4: 2, 3: 0, 5: 0, 7: 0, 1: 3, 6: 3}
GOLDEN_ACTIVE = (0, 2, 3)
GOLDEN_SHADOWS = {0: (2, 3), 3: (0, 1)}


def cheapest_shadows(u, j, count=2):
    others = sorted((u[j][k], k) for k in range(len(u)) if k != j)
    return tuple(sorted(k for _, k in others[:count]))


def z_terms(c, u, f, assignment, active):
    fixed = sum(f[j] for j in active)
    shadow = sum(u[j][k] for j in active for k in cheapest_shadows(u, j, min(2, len(u) - 1)))
    device = sum(c[i][j] for i, j in assignment.items())
    return fixed, shadow, device


def golden_z():
    return sum(z_terms(DEVFOG, FOGFOG, [400] * 5, GOLDEN_ASSIGNMENT, GOLDEN_ACTIVE))


def brute_force_z(c, u, f, cap):
    """Try every device-to-fog map; only for very small instances."""
    nd, nf = len(c), len(f)
    best = math.inf
    k = min(2, nf - 1)
    for choice in itertools.product(range(nf), repeat=nd):
        load = [0] * nf
        for j in choice:
            load[j] += 1
        if any(load[j] > cap[j] for j in range(nf)):
            continue
        active = [j for j in range(nf) if load[j]]
        z = sum(f[j] + sum(u[j][s] for s in cheapest_shadows(u, j, k)) for j in active)
        z += sum(c[i][choice[i]] for i in range(nd))
        best = min(best, z)
    return best


def sync_resume_ms(down_ms, service_ms, up_ms):
    return down_ms + service_ms + up_ms


def cache_samples(device_fog, to_cloud, requests, keys):
    seen, out = set(), []
    for i in range(requests):
        k = i % keys
        out.append(2 * device_fog if k in seen else 2 * device_fog + 2 * to_cloud)
        seen.add(k)
    return out


def fifo_mean_completion(items, service_ms, hop_ms):
    """Mean completion of ``items`` queued at t=hop_ms on one server."""
    return hop_ms + service_ms * (items + 1) / 2


def spawn_cold(costs):
    return sum(costs)


def spawn_shell_depth(depth_levels, reuse_ms):
    return depth_levels * reuse_ms
