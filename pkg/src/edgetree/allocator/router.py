"""Request routing over primary and shadow fogs."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from .instance import Allocation, AllocationInstance

UP = "Up"
SUSPECTED = "SuspectedDown"


@dataclass
class RouterState:
    primary: dict[str, str]
    shadows: dict[str, list[str]]
    cloud: str = "cloud"
    timeout_threshold_ms: float = 15.0
    health: dict[str, tuple[str, float | None]] = field(default_factory=dict)
    waited_ms: float = 0.0

    @classmethod
    def from_allocation(cls, inst: AllocationInstance, alloc: Allocation, cloud: str = "cloud",
                        timeout_threshold_ms: float = 15.0) -> "RouterState":
        primary, shadows = {}, {}
        for i, dev in enumerate(inst.devices):
            j = int(alloc.x[i].argmax())
            primary[dev] = inst.fogs[j]
            ks = [k for k in range(inst.n_fogs) if alloc.y[j, k]]
            ks.sort(key=lambda k: (inst.u[j, k], k))
            shadows[dev] = [inst.fogs[k] for k in ks]
        return cls(primary, shadows, cloud, timeout_threshold_ms)

    def status(self, node: str) -> str:
        return self.health.get(node, (UP, None))[0]

    def mark_suspect(self, node: str, t: float):
        if self.status(node) != SUSPECTED:
            self.health[node] = (SUSPECTED, t)

    def mark_up(self, node: str, t: float | None = None):
        self.health[node] = (UP, None)

    def candidates(self, device: str) -> list[str]:
        out = [self.primary[device]] if device in self.primary else []
        return out + [s for s in self.shadows.get(device, []) if s not in out]


def route_request(router: RouterState, device: str, t: float,
                  health_oracle: Callable[[str, float], bool] | None = None) -> str:
    """Primary if Up, else the first Up shadow, else the cloud.

    With a health oracle every candidate is probed in order; a probe that
    gets no answer costs ``timeout_threshold_ms`` and marks the node
    SuspectedDown, an answer marks it Up.  ``router.waited_ms`` reports
    the time spent on unanswered probes.
    """
    router.waited_ms = 0.0
    for node in router.candidates(device):
        if health_oracle is None:
            if router.status(node) == UP:
                return node
            continue
        probe_t = t + router.waited_ms
        if health_oracle(node, probe_t):
            router.mark_up(node, probe_t)
            return node
        router.waited_ms += router.timeout_threshold_ms
        router.mark_suspect(node, probe_t + router.timeout_threshold_ms)
    return router.cloud


class RandomPolicy:
    """Random fog assignment.

    With ``balanced`` the fogs are dealt from a reshuffled deck, so every
    fog gets the same share up to one device; otherwise each device picks
    a fog uniformly at random.
    """

    def __init__(self, seed: int = 0, balanced: bool = True):
        self.rng = random.Random(seed)
        self.balanced = balanced
        self._deck: list[str] = []

    def choose(self, runtime, device: str, t: float) -> str | None:
        live = [f for f in runtime.topology.fogs if not runtime.topology.is_down(f, t)]
        if not live:
            cloud = runtime.topology.cloud
            return None if runtime.topology.is_down(cloud, t) else cloud
        if not self.balanced:
            return self.rng.choice(live)
        self._deck = [f for f in self._deck if f in live]
        if not self._deck:
            self._deck = list(live)
            self.rng.shuffle(self._deck)
        return self._deck.pop()
