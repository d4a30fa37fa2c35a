"""Cloud/fog/device node graph, link latency model and failure windows.

Latency figures are read as (mean, standard deviation) pairs in
milliseconds.  A configuration quoting "variance 1ms" is taken to mean a
standard deviation of 1 ms, which is the only dimensionally sensible reading.
"""
from __future__ import annotations

import enum
import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator


class TopologyError(ValueError):
    pass


class DuplicateId(TopologyError):
    def __init__(self, node_id: str):
        super().__init__(f"duplicate node id {node_id!r}")
        self.node_id = node_id


class DanglingParent(TopologyError):
    pass


class InvalidParent(TopologyError):
    pass


class UnknownLinkClass(TopologyError):
    pass


class NodeLevel(enum.IntEnum):
    DEVICE = 0
    FOG = 1
    CLOUD = 2

    @classmethod
    def parse(cls, text: str) -> "NodeLevel":
        key = text.strip().lower()
        if key == "dev":
            key = "device"
        try:
            return cls[key.upper()]
        except KeyError:
            raise TopologyError(f"unknown node level {text!r}") from None

    @property
    def label(self) -> str:
        return self.name.lower()


class LinkClass(str, enum.Enum):
    DEVICE_FOG = "device_fog"
    FOG_FOG = "fog_fog"
    TO_CLOUD = "to_cloud"


@dataclass(frozen=True)
class LinkLatency:
    mean_ms: float
    stddev_ms: float
    floor_ms: float = 0.1

    def __post_init__(self):
        if not self.mean_ms > 0:
            raise TopologyError("mean_ms must be positive")
        if self.stddev_ms < 0:
            raise TopologyError("stddev_ms must be non-negative")


def _default_links() -> dict:
    return {
        LinkClass.DEVICE_FOG: LinkLatency(5.0, 1.0),
        LinkClass.FOG_FOG: LinkLatency(10.0, 2.0),
        LinkClass.TO_CLOUD: LinkLatency(30.0, 5.0),
    }


@dataclass
class LatencyModel:
    links: dict = field(default_factory=_default_links)

    def __getitem__(self, link_class) -> LinkLatency:
        try:
            return self.links[LinkClass(link_class)]
        except (KeyError, ValueError):
            raise UnknownLinkClass(f"link class {link_class!r} is not configured") from None

    def with_stddev(self, stddev_ms: float) -> "LatencyModel":
        return LatencyModel({k: LinkLatency(v.mean_ms, stddev_ms, v.floor_ms) for k, v in self.links.items()})

    @classmethod
    def from_dict(cls, doc: dict | None) -> "LatencyModel":
        links = _default_links()
        for key, entry in (doc or {}).items():
            try:
                lc = LinkClass(key)
            except ValueError:
                raise UnknownLinkClass(f"link class {key!r} is not configured") from None
            base = links[lc]
            links[lc] = LinkLatency(
                float(entry.get("mean_ms", base.mean_ms)),
                float(entry.get("stddev_ms", base.stddev_ms)),
                float(entry.get("floor_ms", base.floor_ms)),
            )
        return cls(links)

    def to_dict(self) -> dict:
        return {
            k.value: {"mean_ms": v.mean_ms, "stddev_ms": v.stddev_ms, "floor_ms": v.floor_ms}
            for k, v in self.links.items()
        }


def sample_latency(model: LatencyModel, link_class, rng: random.Random) -> float:
    """Draw one link delay in ms, clamped below at the link's floor."""
    spec = model[link_class]
    if spec.stddev_ms == 0:
        return max(spec.floor_ms, spec.mean_ms)
    return max(spec.floor_ms, rng.gauss(spec.mean_ms, spec.stddev_ms))


def substream(seed: int, *tags) -> random.Random:
    """Independent generator keyed by (seed, tags).

    Keys are hashed, so adding a node or a purpose never shifts the draws
    of any other stream.
    """
    h = hashlib.sha256(repr((int(seed),) + tuple(str(t) for t in tags)).encode())
    return random.Random(int.from_bytes(h.digest()[:8], "big"))


@dataclass
class NodeSpec:
    id: str
    level: NodeLevel
    parent: str | None = None
    capacity: int = 1
    rank: int = 0
    init_cost_ms: float = 300.0


@dataclass(frozen=True)
class FailureWindow:
    node: str
    fail_at_ms: float
    heal_at_ms: float = math.inf

    def covers(self, t: float) -> bool:
        return self.fail_at_ms <= t < self.heal_at_ms


class Topology:
    """Validated node tree plus latency model and failure windows.

    Device parents are mutable (``reparent``) so that the runtime can
    move a device to another fog; fog and cloud structure is fixed.
    """

    def __init__(self, nodes: Iterable[NodeSpec], latency: LatencyModel | None = None,
                 failures: Iterable[FailureWindow] = (), seed: int = 0):
        self.nodes: dict[str, NodeSpec] = {}
        for n in nodes:
            if n.id in self.nodes:
                raise DuplicateId(n.id)
            self.nodes[n.id] = n
        self.latency = latency or LatencyModel()
        self.seed = int(seed)
        self.failures: list[FailureWindow] = []
        self._check()
        for w in failures:
            self.inject_failure(w.node, w.fail_at_ms, w.heal_at_ms)

    def _check(self):
        clouds = [n for n in self.nodes.values() if n.level is NodeLevel.CLOUD]
        if len(clouds) != 1:
            raise TopologyError(f"expected exactly one cloud node, found {len(clouds)}")
        for n in self.nodes.values():
            if n.level is NodeLevel.CLOUD:
                if n.parent is not None:
                    raise InvalidParent(f"cloud node {n.id!r} cannot have a parent")
                continue
            if n.parent is None:
                # devices and fogs without an explicit parent hang off the cloud
                n.parent = clouds[0].id
            if n.parent not in self.nodes:
                raise DanglingParent(f"node {n.id!r} references unknown parent {n.parent!r}")
            parent = self.nodes[n.parent]
            if n.level is NodeLevel.FOG and parent.level is not NodeLevel.CLOUD:
                raise InvalidParent(f"fog {n.id!r} must be parented to the cloud")
            if n.level is NodeLevel.DEVICE and parent.level is NodeLevel.DEVICE:
                raise InvalidParent(f"device {n.id!r} cannot be parented to device {parent.id!r}")
            if n.level is NodeLevel.FOG and n.capacity < 1:
                raise TopologyError(f"fog {n.id!r} needs capacity >= 1")

    # structure

    @property
    def cloud(self) -> str:
        return next(n.id for n in self.nodes.values() if n.level is NodeLevel.CLOUD)

    def level(self, node: str) -> NodeLevel:
        return self.nodes[node].level

    def parent(self, node: str) -> str | None:
        return self.nodes[node].parent

    def of_level(self, level: NodeLevel) -> list[str]:
        return [n.id for n in self.nodes.values() if n.level is level]

    @property
    def fogs(self) -> list[str]:
        return self.of_level(NodeLevel.FOG)

    @property
    def devices(self) -> list[str]:
        return self.of_level(NodeLevel.DEVICE)

    def children(self, node: str) -> list[str]:
        return [n.id for n in self.nodes.values() if n.parent == node]

    def ancestors(self, node: str) -> list[str]:
        """``node`` followed by its ancestors up to the root."""
        out = [node]
        cur = self.nodes[node].parent
        while cur is not None:
            out.append(cur)
            cur = self.nodes[cur].parent
        return out

    def subtree(self, node: str) -> list[str]:
        out, stack = [], [node]
        while stack:
            cur = stack.pop()
            out.append(cur)
            stack.extend(reversed(self.children(cur)))
        return out

    def depth(self) -> int:
        return max(len(self.ancestors(n)) for n in self.nodes)

    def path(self, a: str, b: str) -> list[str]:
        """Tree path a -> b, endpoints included."""
        up_a, up_b = self.ancestors(a), self.ancestors(b)
        common = set(up_b)
        lca = next((n for n in up_a if n in common), None)
        if lca is None:
            raise TopologyError(f"{a!r} and {b!r} are not connected")
        left = up_a[: up_a.index(lca) + 1]
        right = up_b[: up_b.index(lca)]
        return left + list(reversed(right))

    def reparent(self, device: str, parent: str | None):
        if self.nodes[device].level is not NodeLevel.DEVICE:
            raise InvalidParent("only devices can be re-attached")
        if parent is not None and self.nodes[parent].level is NodeLevel.DEVICE:
            raise InvalidParent(f"device {device!r} cannot be parented to a device")
        self.nodes[device].parent = parent

    def link_class(self, a: str, b: str) -> LinkClass:
        la, lb = self.level(a), self.level(b)
        if NodeLevel.CLOUD in (la, lb):
            return LinkClass.TO_CLOUD
        if la is NodeLevel.FOG and lb is NodeLevel.FOG:
            return LinkClass.FOG_FOG
        return LinkClass.DEVICE_FOG

    # failures

    def inject_failure(self, node: str, fail_at_ms: float, heal_at_ms: float | None = None) -> FailureWindow:
        if node not in self.nodes:
            raise TopologyError(f"unknown node {node!r}")
        heal = math.inf if heal_at_ms is None else float(heal_at_ms)
        if heal <= fail_at_ms:
            raise TopologyError("heal_at_ms must be later than fail_at_ms")
        w = FailureWindow(node, float(fail_at_ms), heal)
        self.failures.append(w)
        return w

    def is_down(self, node: str, t: float) -> bool:
        return any(w.node == node and w.covers(t) for w in self.failures)

    def heal_time(self, node: str, t: float) -> float:
        """Earliest time >= t at which ``node`` is up (inf if never)."""
        cur = t
        changed = True
        while changed:
            changed = False
            for w in self.failures:
                if w.node == node and w.covers(cur):
                    cur = w.heal_at_ms
                    changed = True
        return cur

    def is_reachable(self, a: str, b: str, t: float) -> bool:
        try:
            hops = self.path(a, b)
        except TopologyError:
            return False
        return not any(self.is_down(n, t) for n in hops)

    def describe(self) -> Iterator[str]:
        def walk(node, indent):
            n = self.nodes[node]
            yield f"{'  ' * indent}{n.id} [{n.level.label}]"
            for c in self.children(node):
                yield from walk(c, indent + 1)
        yield from walk(self.cloud, 0)

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n.id, "level": n.level.label, "parent": n.parent, "capacity": n.capacity,
                 "rank": n.rank, "init_cost_ms": n.init_cost_ms}
                for n in self.nodes.values()
            ],
            "latency": self.latency.to_dict(),
            "failures": [
                {"node": w.node, "fail_at_ms": w.fail_at_ms,
                 "heal_at_ms": None if math.isinf(w.heal_at_ms) else w.heal_at_ms}
                for w in self.failures
            ],
            "seed": self.seed,
        }


def build_topology(doc: dict) -> Topology:
    """Build a topology from its JSON document form.

    Ranks default to declaration order when a node leaves ``rank`` out.
    """
    nodes = []
    seen = set()
    for i, entry in enumerate(doc.get("nodes", [])):
        nid = str(entry["id"])
        if nid in seen:
            raise DuplicateId(nid)
        seen.add(nid)
        nodes.append(NodeSpec(
            id=nid,
            level=NodeLevel.parse(entry["level"]),
            parent=entry.get("parent"),
            capacity=int(entry.get("capacity", 1)),
            rank=int(entry["rank"]) if entry.get("rank") is not None else i,
            init_cost_ms=float(entry.get("init_cost_ms", 300.0)),
        ))
    failures = [
        FailureWindow(f["node"], float(f["fail_at_ms"]),
                      math.inf if f.get("heal_at_ms") is None else float(f["heal_at_ms"]))
        for f in doc.get("failures", [])
    ]
    return Topology(nodes, LatencyModel.from_dict(doc.get("latency")), failures, seed=doc.get("seed", 0))


def load_topology(path) -> Topology:
    return build_topology(json.loads(Path(path).read_text()))


def make_tree(fogs: int = 2, devices_per_fog: int = 2, *, cloud_devices: int = 0,
              latency: LatencyModel | None = None, seed: int = 0, capacity: int = 8) -> Topology:
    """Convenience builder: one cloud, ``fogs`` fogs, devices spread per fog."""
    nodes = [NodeSpec("cloud", NodeLevel.CLOUD, rank=0)]
    rank = 1
    for f in range(1, fogs + 1):
        nodes.append(NodeSpec(f"f{f}", NodeLevel.FOG, "cloud", capacity=capacity, rank=rank))
        rank += 1
    for f in range(1, fogs + 1):
        for d in range(1, devices_per_fog + 1):
            nodes.append(NodeSpec(f"d{f}.{d}", NodeLevel.DEVICE, f"f{f}", rank=rank))
            rank += 1
    for d in range(1, cloud_devices + 1):
        nodes.append(NodeSpec(f"d0.{d}", NodeLevel.DEVICE, "cloud", rank=rank))
        rank += 1
    return Topology(nodes, latency, seed=seed)
