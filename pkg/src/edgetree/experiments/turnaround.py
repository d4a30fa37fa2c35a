"""Request turnaround under four placements of the service."""
from __future__ import annotations

from ..runtime import Runtime
from ..topology import LatencyModel, NodeLevel, NodeSpec, Topology
from .common import ScenarioError, ScenarioResult

SCENARIOS = ("FogOnly", "FogCloud", "FogCloudCache", "CloudOnly")


def turnaround_topology(latency: LatencyModel | None = None, seed: int = 0) -> Topology:
    # one fog with its device, and a device attached straight to the cloud
    return Topology([
        NodeSpec("cloud", NodeLevel.CLOUD),
        NodeSpec("f1", NodeLevel.FOG, "cloud"),
        NodeSpec("d1", NodeLevel.DEVICE, "f1"),
        NodeSpec("d0", NodeLevel.DEVICE, "cloud"),
    ], latency, seed=seed)


def run_turnaround(scenario: str, config: dict | None = None) -> ScenarioResult:
    """Sequential request/response round trips.

    Config keys: ``requests`` (10000), ``keys`` (distinct cache keys, 1),
    ``seed`` (0), ``latency`` (link model document).
    """
    if scenario not in SCENARIOS:
        raise ScenarioError(f"unknown turnaround scenario {scenario!r}; expected one of {SCENARIOS}")
    cfg = dict(config or {})
    n = int(cfg.get("requests", 10_000))
    n_keys = max(1, int(cfg.get("keys", 1)))
    seed = int(cfg.get("seed", 0))
    topo = turnaround_topology(LatencyModel.from_dict(cfg.get("latency")), seed)
    rt = Runtime(topo, seed)
    samples: list[float] = []
    tags: list[str] = []
    cache: set = set()

    if scenario == "CloudOnly":
        device, legs = "d0", [("d0", "cloud"), ("cloud", "d0")]
    else:
        device = "d1"

    def request(i: int):
        if i >= n:
            return
        start = rt.now
        key = i % n_keys
        if scenario == "FogOnly":
            route, tag = [("d1", "f1"), ("f1", "d1")], "fog"
        elif scenario == "CloudOnly":
            route, tag = legs, "cloud"
        elif scenario == "FogCloudCache" and key in cache:
            route, tag = [("d1", "f1"), ("f1", "d1")], "hit"
        else:
            route = [("d1", "f1"), ("f1", "cloud"), ("cloud", "f1"), ("f1", "d1")]
            tag = "miss" if scenario == "FogCloudCache" else "cloud"

        def leg(k: int):
            if k == len(route):
                if scenario == "FogCloudCache":
                    cache.add(key)
                samples.append(rt.now - start)
                tags.append(tag)
                request(i + 1)
                return
            a, b = route[k]
            rt.send_message(a, b, "req" if k < len(route) // 2 else "resp",
                            lambda: leg(k + 1), f"#{i}:{tag}")

        leg(0)

    rt.sim.after(0.0, "start", device, scenario, lambda: request(0))
    rt.run()
    return ScenarioResult(f"turnaround_{scenario}", samples, list(rt.trace.lines()), tags,
                          {"scenario": scenario, "seed": seed,
                           "hit_mean": _mean([s for s, t in zip(samples, tags) if t == "hit"])})


def _mean(vals):
    return sum(vals) / len(vals) if vals else None
