"""Deterministic discrete-event loop and its trace."""
from __future__ import annotations

import hashlib
import heapq
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .topology import LinkClass, Topology, sample_latency, substream


class SchedulingError(ValueError):
    pass


@dataclass(order=True)
class SimEvent:
    timestamp_ms: float
    sequence_no: int
    kind: str = field(compare=False)
    node: str | None = field(compare=False, default=None)
    detail: str = field(compare=False, default="")
    action: Callable[[], None] | None = field(compare=False, default=None, repr=False)
    # when ``node`` is down at fire time: "drop", "defer" to heal, or "run" anyway
    on_down: str = field(compare=False, default="drop")
    cancelled: bool = field(compare=False, default=False)

    def record(self) -> tuple:
        return (self.timestamp_ms, self.sequence_no, self.kind, self.node, self.detail)


class SimTrace:
    """Append-only, totally ordered event log."""

    def __init__(self):
        self.records: list[tuple] = []

    def append(self, rec: tuple):
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def __iter__(self) -> Iterator[tuple]:
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def kinds(self, kind: str) -> list[tuple]:
        return [r for r in self.records if r[2] == kind]

    def lines(self) -> Iterator[str]:
        for t, seq, kind, node, detail in self.records:
            yield json.dumps([t, seq, kind, node, detail], separators=(",", ":"))

    def dumps(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def digest(self) -> str:
        h = hashlib.sha256()
        for line in self.lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()

    def write(self, path):
        with open(path, "w", newline="\n") as fh:
            for line in self.lines():
                fh.write(line + "\n")


class EventQueue:
    """Min-heap keyed by (timestamp, insertion sequence).

    Events bound to a node consult ``topology`` when they fire; if the node
    is down the event is dropped (traced as ``dropped``) or moved to the
    node's heal time (traced as ``deferred``).
    """

    def __init__(self, topology: Topology | None = None):
        self.topology = topology
        self.now = 0.0
        self._heap: list[SimEvent] = []
        self._seq = itertools.count()
        self.trace = SimTrace()

    def __len__(self):
        return len(self._heap)

    def schedule_event(self, event: SimEvent) -> SimEvent:
        if event.timestamp_ms < self.now:
            raise SchedulingError(f"cannot schedule at {event.timestamp_ms} before clock {self.now}")
        heapq.heappush(self._heap, event)
        return event

    def schedule(self, t: float, kind: str, node: str | None = None, detail: str = "",
                 action: Callable[[], None] | None = None, on_down: str = "drop") -> SimEvent:
        return self.schedule_event(SimEvent(float(t), next(self._seq), kind, node, detail, action, on_down))

    def after(self, delay: float, kind: str, node: str | None = None, detail: str = "",
              action: Callable[[], None] | None = None, on_down: str = "drop") -> SimEvent:
        return self.schedule(self.now + delay, kind, node, detail, action, on_down)

    def note(self, kind: str, node: str | None = None, detail: str = ""):
        """Record an instantaneous happening at the current clock."""
        self.trace.append((self.now, next(self._seq), kind, node, detail))

    def peek_time(self) -> float:
        return self._heap[0].timestamp_ms if self._heap else math.inf

    def step(self) -> SimEvent | None:
        while self._heap:
            ev = heapq.heappop(self._heap)
            if ev.cancelled:
                continue
            self.now = ev.timestamp_ms
            topo = self.topology
            if ev.on_down != "run" and ev.node is not None and topo is not None and topo.is_down(ev.node, ev.timestamp_ms):
                if ev.on_down == "defer":
                    heal = topo.heal_time(ev.node, ev.timestamp_ms)
                    if math.isfinite(heal):
                        self.trace.append((self.now, ev.sequence_no, "deferred", ev.node, f"{ev.kind}:{ev.detail}"))
                        self.schedule(heal, ev.kind, ev.node, ev.detail, ev.action, ev.on_down)
                        return ev
                self.trace.append((self.now, ev.sequence_no, "dropped", ev.node, f"{ev.kind}:{ev.detail}"))
                return ev
            self.trace.append(ev.record())
            if ev.action is not None:
                ev.action()
            return ev
        return None

    def run_until(self, t_ms: float) -> SimTrace:
        """Process every event with timestamp <= t_ms; returns the new records."""
        start = len(self.trace)
        while self._heap and self.peek_time() <= t_ms:
            self.step()
        if t_ms > self.now and math.isfinite(t_ms):
            self.now = float(t_ms)
        out = SimTrace()
        out.records = self.trace.records[start:]
        return out

    def run(self, limit_ms: float = math.inf) -> SimTrace:
        return self.run_until(limit_ms)


def schedule_event(queue: EventQueue, event: SimEvent) -> None:
    queue.schedule_event(event)


def run_until(queue: EventQueue, t_ms: float) -> SimTrace:
    return queue.run_until(t_ms)


class Simulator(EventQueue):
    """Event queue bound to a topology, with seeded per-node latency streams."""

    def __init__(self, topology: Topology, seed: int | None = None):
        super().__init__(topology)
        self.seed = topology.seed if seed is None else int(seed)
        self._rngs: dict = {}
        self._link_last: dict[tuple[str, str], float] = {}

    def rng(self, *tags):
        key = tuple(str(t) for t in tags)
        r = self._rngs.get(key)
        if r is None:
            r = self._rngs[key] = substream(self.seed, *key)
        return r

    def latency(self, link_class: LinkClass, node: str) -> float:
        return sample_latency(self.topology.latency, link_class, self.rng(node, "latency", LinkClass(link_class).value))

    def hop_delay(self, a: str, b: str) -> float:
        """Sampled delay for one hop a -> b; links deliver in FIFO order."""
        if a == b:
            return 0.0
        d = self.latency(self.topology.link_class(a, b), a)
        arrive = max(self.now + d, self._link_last.get((a, b), 0.0))
        self._link_last[(a, b)] = arrive
        return arrive - self.now

    def path_delay(self, path: list[str]) -> float:
        return sum(self.latency(self.topology.link_class(a, b), a) for a, b in zip(path, path[1:]))

    def mean_path_ms(self, path: list[str], k_sigma: float = 0.0) -> float:
        total = 0.0
        for a, b in zip(path, path[1:]):
            spec = self.topology.latency[self.topology.link_class(a, b)]
            total += spec.mean_ms + k_sigma * spec.stddev_ms
        return total
