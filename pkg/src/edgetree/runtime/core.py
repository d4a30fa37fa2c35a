"""Controller-worker trees executing over a simulated topology."""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from ..dsl import (
    Blocked,
    NodeContext,
    Ready,
    check_source,
    evaluate_gate,
    validate_program,
)
from ..dsl import ast
from ..events import Simulator
from ..topology import NodeLevel, Topology
from .channel import ReliableChannel

LEVEL_ORDER = ("device", "fog", "cloud")


class RuntimeErrorBase(Exception):
    pass


class DeploymentError(RuntimeErrorBase):
    pass


class ProgramInvalid(DeploymentError):
    pass


class UnknownFunction(RuntimeErrorBase):
    pass


class UnknownVariable(RuntimeErrorBase):
    pass


class AlreadyBound(RuntimeErrorBase):
    pass


class UnboundHandler(RuntimeErrorBase):
    pass


class SubtreeViolation(RuntimeErrorBase):
    pass


class KindMismatch(RuntimeErrorBase):
    pass


class LevelViolation(RuntimeErrorBase):
    pass


class SameAppViolation(RuntimeErrorBase):
    pass


class NotSynchronous(RuntimeErrorBase):
    pass


class _Timeout:
    def __repr__(self):
        return "Timeout"


TIMEOUT = _Timeout()


@dataclass(frozen=True)
class LogRecord:
    source: str
    seq: int
    ts: float
    value: object


@dataclass
class Handler:
    behavior: Callable
    service_time_ms: float = 1.0


@dataclass
class Invocation:
    """What a handler sees when it runs."""
    runtime: "Runtime"
    app: "App"
    func: str
    node: str
    args: tuple
    caller: str
    call_id: int

    @property
    def now(self) -> float:
        return self.runtime.sim.now

    @property
    def rank(self) -> int:
        return self.runtime.topology.nodes[self.node].rank


@dataclass
class SyncCall:
    call_id: int
    caller: str
    func: str
    started_ms: float
    deadline_ms: float
    pending: set = field(default_factory=set)
    results: list = field(default_factory=list)
    done: bool = False
    resume_ms: float | None = None
    timed_out: bool = False
    on_complete: Callable | None = None

    @property
    def timeouts(self) -> list[str]:
        return [n for n, r in self.results if r is TIMEOUT]


@dataclass(frozen=True)
class Placement:
    """Outcome of gate-driven level selection.

    ``level`` is None when no level is eligible.  When ``ready`` is empty
    but ``blocked`` is not, execution waits at that level.
    """
    level: str | None
    ready: tuple = ()
    blocked: tuple = ()

    @property
    def deferred(self) -> bool:
        return self.level is not None and not self.ready and bool(self.blocked)


NONE_ELIGIBLE = Placement(None)


def select_execution_level(gate, conds, levels) -> Placement:
    """Pick the lowest tree level where the gate holds.

    ``levels`` is a sequence of ``(level_name, [(node, NodeContext), ...])``
    ordered bottom-up.  The first level holding any Ready(True) or Blocked
    node decides; a level where every node is Ready(False) is skipped.
    """
    for level, nodes in levels:
        ready, blocked = [], []
        for node, ctx in nodes:
            res = evaluate_gate(gate, conds, ctx)
            if isinstance(res, Blocked):
                blocked.append(node)
            elif res.value:
                ready.append(node)
        if ready or blocked:
            return Placement(level, tuple(ready), tuple(blocked))
    return NONE_ELIGIBLE


@dataclass
class Flow:
    """Ordered channel from one app's controllers to another's on shared nodes."""
    flow_id: int
    source: str
    sink: str
    level: str
    nodes: tuple
    buffers: dict = field(default_factory=dict)
    subscribers: list = field(default_factory=list)
    closed: bool = False

    def subscribe(self, callback: Callable[[str, object], None]):
        self.subscribers.append(callback)


BUILTIN_BEHAVIORS: dict[str, Callable] = {
    "noop": lambda inv: None,
    "echo": lambda inv: list(inv.args),
    "rank": lambda inv: inv.rank,
    "now": lambda inv: inv.now,
}


class App:
    """One deployed program: a controller tree over a node subset."""

    def __init__(self, runtime: "Runtime", program: ast.ProgramDecl, nodes, namespace: str):
        self.runtime = runtime
        self.program = program
        self.name = program.app_name
        self.namespace = namespace
        self.nodes = set(nodes)
        self.handlers: dict[str, Handler] = {}
        self.conds = {c.name: c.expr for c in program.cond_decls}
        self.kinds = {d.name: d.kind for d in program.data_decls}
        self.versions: dict[str, int] = {}
        self.cells: dict[tuple[str, str], tuple[int, object]] = {}
        self.logs: dict[tuple[str, str], dict[str, list[LogRecord]]] = {}
        self.channels: dict[tuple[str, str], ReliableChannel] = {}
        self.written: dict[tuple[str, str], int] = {}
        self.waiting: dict[str, list] = {}
        self.log_listeners: dict[str, list[Callable]] = {}
        self.bcast_listeners: dict[str, list[Callable]] = {}
        self.state: dict[str, dict] = {}
        self.active = True

    def __repr__(self):
        return f"App({self.name!r}, ns={self.namespace}, nodes={sorted(self.nodes)})"

    # tree structure (follows current device attachments)

    @property
    def topology(self) -> Topology:
        return self.runtime.topology

    @property
    def sim(self) -> Simulator:
        return self.runtime.sim

    def parent(self, node: str) -> str | None:
        for anc in self.topology.ancestors(node)[1:]:
            if anc in self.nodes:
                return anc
        return None

    def ancestry(self, node: str) -> list[str]:
        """``node`` and its controller ancestors within this app."""
        return [n for n in self.topology.ancestors(node) if n in self.nodes]

    @property
    def root(self) -> str:
        roots = [n for n in self.nodes if self.parent(n) is None]
        return sorted(roots, key=lambda n: -int(self.topology.level(n)))[0]

    def children(self, node: str) -> list[str]:
        return [n for n in self.topology.subtree(node)[1:] if n in self.nodes and self.parent(n) == node]

    def subtree(self, node: str) -> list[str]:
        return [n for n in self.topology.subtree(node) if n in self.nodes]

    def level_of(self, node: str) -> str:
        return self.topology.level(node).label

    def roles(self) -> dict[str, str]:
        return {n: ("J+C" if self.level_of(n) == "device" else "J") for n in sorted(self.nodes)}

    def node_state(self, node: str) -> dict:
        """Scratch state for handlers; wiped when the node fails."""
        return self.state.setdefault(node, {})

    # handlers

    def register_handler(self, func: str, behavior: Callable | str | None = None, service_time_ms: float = 1.0):
        if self.program.func(func) is None:
            raise UnknownFunction(f"{func!r} is not declared in {self.name!r}")
        if func in self.handlers:
            raise AlreadyBound(f"{func!r} already has a handler")
        if isinstance(behavior, str):
            behavior = BUILTIN_BEHAVIORS[behavior]
        self.handlers[func] = Handler(behavior or BUILTIN_BEHAVIORS["noop"], float(service_time_ms))

    # contexts

    def context(self, node: str) -> NodeContext:
        brd = {}
        for var, kind in self.kinds.items():
            if kind == "broadcaster":
                cell = self.cells.get((node, var))
                if cell is not None:
                    brd[var] = cell[1]
        loggers = {}
        for d in self.program.data_decls:
            if d.kind == "logger":
                loggers[d.name] = self.logger_view(node, d.name)
        return NodeContext(self.level_of(node), self.topology.nodes[node].rank, self.kinds, brd, loggers)

    def logger_view(self, node: str, var: str) -> list[tuple]:
        """Per-source latest entries of a logger as seen from ``node``.

        A node at the logger's level reads its own store; below it, the
        nearest ancestor at that level; above it, every descendant there.
        """
        level = self.program.data(var).level
        holders = [n for n in self.ancestry(node) if self.level_of(n) == level][:1]
        if not holders:
            holders = [n for n in self.subtree(node) if self.level_of(n) == level]
        out = []
        for h in holders:
            for source, recs in self.logs.get((h, var), {}).items():
                if recs:
                    out.append((source, recs[-1].ts, recs[-1].value))
        return out

    def _decl(self, var: str) -> ast.DataDecl:
        decl = self.program.data(var)
        if decl is None:
            raise UnknownVariable(f"{var!r} is not declared in {self.name!r}")
        return decl

    def _require_node(self, node: str):
        if node not in self.nodes:
            raise DeploymentError(f"{node!r} is not part of app {self.name!r}")

    # placement

    def _levels(self, candidates) -> list[tuple[str, list]]:
        out = []
        for lv in LEVEL_ORDER:
            nodes = [(n, self.context(n)) for n in candidates if self.level_of(n) == lv]
            if nodes:
                out.append((lv, nodes))
        return out

    def select_execution_level(self, func: str, caller: str | None = None, from_worker: bool = False) -> Placement:
        fdecl = self.program.func(func)
        if fdecl is None:
            raise UnknownFunction(func)
        caller = caller or self.root
        cands = self.ancestry(caller) if from_worker else self.subtree(caller)
        if fdecl.gate is None:
            if from_worker:
                return Placement(self.level_of(caller), (caller,))
            workers = [n for n in cands if self.level_of(n) == "device"] or [caller]
            return Placement(self.level_of(workers[0]), tuple(workers))
        placement = select_execution_level(fdecl.gate, self.conds, self._levels(cands))
        if placement.level is None:
            self.sim.note("none_eligible", caller, f"{self.name}:{func}")
        return placement

    # remote calls

    def call_async(self, caller: str, func: str, args=(), *, target: str | None = None,
                   from_worker: bool = False) -> int:
        return self.runtime._call(self, caller, func, tuple(args), target, from_worker, None)

    def call_sync(self, caller: str, func: str, args=(), *, target: str | None = None,
                  from_worker: bool = False, timeout_ms: float | None = None,
                  on_complete: Callable[[SyncCall], None] | None = None) -> SyncCall:
        fdecl = self.program.func(func)
        if fdecl is not None and fdecl.call_kind != "jsync":
            raise NotSynchronous(f"{func!r} is declared jasync")
        sc = SyncCall(0, caller, func, self.sim.now,
                      self.sim.now + (timeout_ms if timeout_ms is not None else self.runtime.timeout_ms),
                      on_complete=on_complete)
        self.runtime._call(self, caller, func, tuple(args), target, from_worker, sc)
        return sc

    def invoke_local(self, node: str, func: str, args=(), on_result: Callable | None = None) -> int:
        """Run a handler on ``node`` itself, queued behind its other work."""
        handler = self.handlers.get(func)
        if handler is None:
            raise UnboundHandler(func)
        cid = next(self.runtime._call_ids)
        inv = Invocation(self.runtime, self, func, node, tuple(args), node, cid)
        self.runtime._execute(self, inv, None, on_result)
        return cid

    # loggers

    def logger_write(self, source: str, var: str, value) -> int:
        decl = self._decl(var)
        if decl.kind != "logger":
            raise KindMismatch(f"{var!r} is a {decl.kind}, not a logger")
        self._require_node(source)
        if LEVEL_ORDER.index(self.level_of(source)) > LEVEL_ORDER.index(decl.level):
            raise LevelViolation(f"{source!r} is above the {decl.level} level of {var!r}")
        ch = self.channels.get((source, var))
        if ch is None:
            ch = ReliableChannel(
                self.sim, f"{self.namespace}/{var}/{source}", source,
                lambda: self._logger_target(source, decl.level),
                lambda recv, seq, rec: self._accept_log(recv, var, rec),
            )
            self.channels[(source, var)] = ch
        rec = LogRecord(source, len(ch.items), self.sim.now, value)
        self.written[(source, var)] = rec.seq + 1
        self.sim.note("log_write", source, f"{self.namespace}/{var}#{rec.seq}={value!r}")
        ch.push(rec)
        return rec.seq

    def _logger_target(self, source: str, level: str) -> str | None:
        want = LEVEL_ORDER.index(level)
        for n in self.ancestry(source):
            if LEVEL_ORDER.index(self.level_of(n)) >= want:
                return n
        return None

    def _accept_log(self, receiver: str, var: str, rec: LogRecord):
        self.logs.setdefault((receiver, var), {}).setdefault(rec.source, []).append(rec)
        self.sim.note("log_deliver", receiver, f"{self.namespace}/{var}/{rec.source}#{rec.seq}")
        for cb in self.log_listeners.get(var, ()):
            cb(receiver, rec)
        if self.level_of(receiver) == "fog" and self.program.data(var).level == "fog":
            self.runtime.replicate_to_shadows(self, receiver, var, rec)
        for n in self.subtree(receiver):
            self._retry(n)

    def on_log(self, var: str, callback: Callable[[str, LogRecord], None]):
        self._decl(var)
        self.log_listeners.setdefault(var, []).append(callback)

    def logger_records(self, node: str, var: str) -> dict[str, list[LogRecord]]:
        return self.logs.get((node, var), {})

    def logger_snapshot(self, controller: str, var: str) -> list[tuple]:
        """One ``(source, latest value, timestamp)`` entry per source."""
        decl = self._decl(var)
        if decl.kind != "logger":
            raise KindMismatch(f"{var!r} is not a logger")
        self._require_node(controller)
        level = self.level_of(controller)
        stored_here = bool(self.logs.get((controller, var)))
        if level != decl.level and not (stored_here and not any(self.level_of(n) == decl.level for n in self.nodes)):
            raise LevelViolation(f"{var!r} is readable only at the {decl.level} level, not from {controller!r}")
        out = []
        for source, recs in sorted(self.logs.get((controller, var), {}).items()):
            if recs:
                out.append((source, recs[-1].value, recs[-1].ts))
        return out

    def level_view(self, var: str) -> dict[str, list[int]]:
        """Sequence numbers held at the declared level, per source (union over nodes)."""
        level = self._decl(var).level
        view: dict[str, set] = {}
        for (node, v), per_source in self.logs.items():
            if v != var or self.level_of(node) != level:
                continue
            for source, recs in per_source.items():
                view.setdefault(source, set()).update(r.seq for r in recs)
        return {s: sorted(seqs) for s, seqs in view.items()}

    # broadcasters

    def broadcast(self, controller: str, var: str, value) -> int:
        decl = self._decl(var)
        if decl.kind != "broadcaster":
            raise KindMismatch(f"{var!r} is a {decl.kind}, not a broadcaster")
        self._require_node(controller)
        if self.level_of(controller) == "device":
            raise LevelViolation("broadcaster data originates on fog or cloud nodes only")
        version = self.versions.get(var, 0) + 1
        self.versions[var] = version
        self.sim.note("broadcast", controller, f"{self.namespace}/{var}@v{version}={value!r}")
        self._bcast_arrive(controller, var, version, value)
        return version

    def _bcast_arrive(self, node: str, var: str, version: int, value):
        if not self.active or node not in self.nodes:
            return
        cur = self.cells.get((node, var))
        if cur is not None and cur[0] >= version:
            return
        self.cells[(node, var)] = (version, value)
        for cb in self.bcast_listeners.get(var, ()):
            cb(node, version, value)
        self._retry(node)
        for child in self.children(node):
            self._bcast_send(node, child, var, version, value)

    def _bcast_send(self, src, dst, var, version, value):
        delay = self.sim.hop_delay(src, dst)
        self.sim.after(delay, "bcast_deliver", dst, f"{self.namespace}/{var}@v{version}",
                       lambda: self._bcast_arrive(dst, var, version, value))

    def broadcaster_value(self, node: str, var: str):
        """``(version, value)`` delivered at ``node`` or None."""
        return self.cells.get((node, var))

    def on_broadcast(self, var: str, callback: Callable[[str, int, object], None]):
        self._decl(var)
        self.bcast_listeners.setdefault(var, []).append(callback)

    def _resync_cells(self, node: str):
        parent = self.parent(node)
        if parent is None:
            return
        for (n, var), (version, value) in list(self.cells.items()):
            if n == parent:
                self._bcast_send(parent, node, var, version, value)

    # gated waiting

    def _retry(self, node: str):
        queue = self.waiting.get(node)
        if not queue:
            return
        self.waiting[node] = []
        for entry in queue:
            self.runtime._arrive(self, *entry)


class Runtime:
    """Owns one simulation: topology, event loop, deployed apps and flows."""

    def __init__(self, topology: Topology, seed: int | None = None, *, timeout_ms: float | None = None):
        self.topology = topology
        self.sim = Simulator(topology, seed)
        to_cloud = topology.latency["to_cloud"].mean_ms
        self.timeout_ms = float(timeout_ms) if timeout_ms is not None else 10.0 * to_cloud
        self.apps: dict[str, App] = {}
        self.flows: list[Flow] = []
        self.shadows: dict[str, list[str]] = {}
        self.routers: dict = {}
        self.policies: dict = {}
        self.replica_transform: Callable[[LogRecord], LogRecord | None] = lambda rec: rec
        self.replicas: dict[tuple, dict[str, list[LogRecord]]] = {}
        self._replication: dict[tuple, ReliableChannel] = {}
        self._busy: dict[str, float] = {}
        self._ns = itertools.count(1)
        self._call_ids = itertools.count(1)
        self._flow_ids = itertools.count(1)
        self._fail_listeners: list[Callable[[str], None]] = []
        for w in list(topology.failures):
            self._schedule_failure(w.node, w.fail_at_ms, w.heal_at_ms)

    # deployment

    def deploy(self, program, nodes=None, app_name: str | None = None) -> App:
        if isinstance(program, str):
            prog, diags = check_source(program, app_name or "app")
        else:
            prog, diags = program, validate_program(program)
            if app_name:
                prog.app_name = app_name
        if prog is None or diags:
            raise ProgramInvalid("; ".join(d.format() for d in diags))
        if app_name:
            prog.app_name = app_name
        if prog.app_name in self.apps:
            raise DeploymentError(f"app {prog.app_name!r} is already deployed")
        nodes = list(self.topology.nodes) if nodes is None else list(nodes)
        if not nodes:
            raise DeploymentError("no controller-capable node in the subset")
        for n in nodes:
            if n not in self.topology.nodes:
                raise DeploymentError(f"unknown node {n!r}")
        subset = set(nodes)
        roots = [n for n in subset if not any(a in subset for a in self.topology.ancestors(n)[1:])]
        disconnected = [n for n in subset
                        if n not in roots and self.topology.parent(n) not in subset]
        if len(roots) != 1 or disconnected:
            raise DeploymentError("node subset does not form a connected subtree")
        app = App(self, prog, subset, f"ns{next(self._ns)}")
        self.apps[app.name] = app
        self.sim.note("deploy", roots[0], f"{app.name}:{app.namespace}:{','.join(sorted(subset))}")
        return app

    def undeploy(self, app: App):
        app.active = False
        for ch in app.channels.values():
            ch.close()
        for key, ch in list(self._replication.items()):
            if key[0] == app.namespace:
                ch.close()
        for f in self.flows:
            if app.name in (f.source, f.sink):
                f.closed = True
        self.apps.pop(app.name, None)
        self.sim.note("undeploy", None, f"{app.name}:{app.namespace}")

    # calls

    def _call(self, app: App, caller, func, args, target, from_worker, sync: SyncCall | None) -> int:
        fdecl = app.program.func(func)
        if fdecl is None:
            raise UnknownFunction(f"{func!r} is not declared in {app.name!r}")
        if func not in app.handlers:
            raise UnboundHandler(f"no handler bound for {func!r}")
        app._require_node(caller)
        cid = next(self._call_ids)
        if sync is not None:
            sync.call_id = cid
        if target is not None:
            app._require_node(target)
            if target not in app.subtree(caller):
                raise SubtreeViolation(f"{caller!r} cannot call {target!r}: not in its subtree")
            direction = "ctrl2ctrl"
            executors = [target]
        else:
            if from_worker and app.level_of(caller) != "device":
                raise DeploymentError("worker calls originate on device nodes")
            direction = "wrk2ctrl" if from_worker else "ctrl2wrk"
            placement = app.select_execution_level(func, caller, from_worker)
            executors = list(placement.ready) + list(placement.blocked)
        self.sim.note("dispatch", caller, f"{app.name}:{func}#{cid}:{direction}->{','.join(executors) or '-'}")
        deadline = sync.deadline_ms if sync else self.sim.now + self.timeout_ms
        if sync is not None:
            sync.pending = set(executors)
            self.sim.after(max(0.0, sync.deadline_ms - self.sim.now), "sync_deadline", None, f"#{cid}",
                           lambda: self._finish_sync(app, sync, timeout=True))
            if not executors:
                self.sim.after(0.0, "resume", caller, f"#{cid}", lambda: self._finish_sync(app, sync))
        for ex in executors:
            inv = Invocation(self, app, func, ex, args, caller, cid)
            self._send_invocation(app, inv, direction, sync, deadline)
        return cid

    def _send_invocation(self, app, inv: Invocation, direction, sync, deadline):
        topo, sim = self.topology, self.sim
        if not topo.is_reachable(inv.caller, inv.node, sim.now):
            # held at the sender for one timeout window
            path = topo.path(inv.caller, inv.node)
            retry = max(topo.heal_time(n, sim.now) for n in path)
            if retry < deadline:
                sim.schedule(retry, "held", inv.caller, f"#{inv.call_id}->{inv.node}",
                             lambda: self._send_invocation(app, inv, direction, sync, deadline))
            else:
                sim.note("held", inv.caller, f"#{inv.call_id}->{inv.node}:timeout")
            return
        path = topo.path(inv.caller, inv.node)
        self._forward(app, inv, direction, sync, deadline, path, 1)

    def _forward(self, app, inv, direction, sync, deadline, path, i):
        if i >= len(path):
            self._arrive(app, inv, direction, sync, deadline)
            return
        delay = self.sim.hop_delay(path[i - 1], path[i])
        last = i == len(path) - 1
        kind = "invoke" if last else "invoke_hop"
        detail = f"{app.name}:{inv.func}#{inv.call_id}:{direction}:{inv.caller}->{inv.node}"
        self.sim.after(delay, kind, path[i], detail,
                       lambda: self._forward(app, inv, direction, sync, deadline, path, i + 1))

    def _arrive(self, app: App, inv: Invocation, direction, sync, deadline):
        if not app.active:
            return
        if sync is not None and sync.done:
            return
        if self.sim.now > deadline:
            return
        fdecl = app.program.func(inv.func)
        res = evaluate_gate(fdecl.gate, app.conds, app.context(inv.node))
        if isinstance(res, Blocked):
            self.sim.note("blocked", inv.node, f"#{inv.call_id}:{res.missing_var}")
            app.waiting.setdefault(inv.node, []).append((inv, direction, sync, deadline))
            return
        if not res.value:
            self.sim.note("declined", inv.node, f"#{inv.call_id}")
            if sync is not None:
                sync.pending.discard(inv.node)
                if not sync.pending:
                    self._finish_sync(app, sync)
            return
        self._execute(app, inv, sync)

    def _execute(self, app: App, inv: Invocation, sync: SyncCall | None, on_result: Callable | None = None):
        handler = app.handlers[inv.func]
        start = max(self.sim.now, self._busy.get(inv.node, 0.0))
        finish = start + handler.service_time_ms
        self._busy[inv.node] = finish

        def run():
            if not app.active:
                return
            result = handler.behavior(inv)
            if on_result is not None:
                on_result(result)
            if sync is not None:
                self._reply(app, inv, sync, result)

        self.sim.schedule(finish, "exec", inv.node, f"{app.name}:{inv.func}#{inv.call_id}", run)

    def _reply(self, app, inv, sync: SyncCall, result):
        path = self.topology.path(inv.node, inv.caller)
        delay = 0.0
        for a, b in zip(path, path[1:]):
            delay += self.sim.hop_delay(a, b) if delay == 0.0 else self.sim.latency(self.topology.link_class(a, b), a)

        def back():
            if sync.done:
                return
            sync.results.append((inv.node, result))
            sync.pending.discard(inv.node)
            if not sync.pending:
                self._finish_sync(app, sync)

        self.sim.after(delay, "reply", inv.caller, f"#{inv.call_id}<-{inv.node}", back)

    def _finish_sync(self, app, sync: SyncCall, timeout: bool = False):
        if sync.done:
            return
        if timeout:
            missing = sorted(sync.pending)
            if not missing:
                return
            sync.timed_out = True
            for n in missing:
                sync.results.append((n, TIMEOUT))
            for n in list(app.waiting):
                app.waiting[n] = [w for w in app.waiting[n] if w[2] is not sync]
        sync.pending.clear()
        sync.done = True
        sync.resume_ms = self.sim.now
        self.sim.note("resume", sync.caller, f"#{sync.call_id}:{len(sync.results)}")
        if sync.on_complete is not None:
            sync.on_complete(sync)

    # raw messages

    def send_message(self, src: str, dst: str, kind: str, action: Callable[[], None] | None = None,
                     detail: str = "") -> bool:
        """Carry a message hop by hop along the tree path; False if unreachable now."""
        if not self.topology.is_reachable(src, dst, self.sim.now):
            self.sim.note("unreachable", src, f"{kind}:{src}->{dst}")
            return False
        path = self.topology.path(src, dst)
        if len(path) == 1:
            self.sim.after(0.0, kind, dst, detail, action)
            return True

        def hop(i):
            if i == len(path) - 1:
                if action is not None:
                    action()
                return
            self._hop(path, i + 1, kind, detail, hop)

        self._hop(path, 1, kind, detail, hop)
        return True

    def _hop(self, path, i, kind, detail, cont):
        delay = self.sim.hop_delay(path[i - 1], path[i])
        name = kind if i == len(path) - 1 else f"{kind}_hop"
        self.sim.after(delay, name, path[i], detail, lambda: cont(i))

    # flows

    def flow_connect(self, app_a, app_b, level: str) -> Flow:
        a = app_a if isinstance(app_a, App) else self.apps[app_a]
        b = app_b if isinstance(app_b, App) else self.apps[app_b]
        if a is b or a.name == b.name:
            raise SameAppViolation("a flow joins two different applications")
        shared = sorted(n for n in a.nodes & b.nodes if self.topology.level(n).label == level)
        if not shared:
            raise LevelViolation(f"{a.name!r} and {b.name!r} share no controller at the {level} level")
        flow = Flow(next(self._flow_ids), a.name, b.name, level, tuple(shared),
                    {n: deque() for n in shared})
        self.flows.append(flow)
        self.sim.note("flow_connect", None, f"flow{flow.flow_id}:{a.name}->{b.name}@{level}")
        return flow

    def _flow_node(self, flow: Flow, node: str | None) -> str:
        if node is None:
            if len(flow.nodes) != 1:
                raise LevelViolation("flow spans several nodes; name one")
            return flow.nodes[0]
        if node not in flow.buffers:
            raise LevelViolation(f"flow{flow.flow_id} has no endpoint on {node!r}")
        return node

    def flow_write(self, flow: Flow, msg, node: str | None = None):
        node = self._flow_node(flow, node)
        if flow.closed:
            return

        def deliver():
            if flow.closed:
                return
            flow.buffers[node].append(msg)
            for cb in flow.subscribers:
                cb(node, msg)

        self.sim.after(0.0, "flow_msg", node, f"flow{flow.flow_id}:{msg!r}", deliver)

    def flow_read(self, flow: Flow, node: str | None = None):
        node = self._flow_node(flow, node)
        buf = flow.buffers[node]
        return buf.popleft() if buf else None

    # attachment and fail-over

    def attach_device(self, device: str, policy) -> str | None:
        """Attach ``device`` using a router, a policy object, or an explicit node id."""
        from ..allocator.router import RouterState, route_request
        t = self.sim.now
        if isinstance(policy, RouterState):
            self.routers[device] = policy
            target = route_request(policy, device, t, self._alive)
        elif isinstance(policy, str):
            target = policy
        else:
            self.policies[device] = policy
            target = policy.choose(self, device, t)
        self._move(device, target, "attach")
        return target

    def reattach_on_failure(self, device: str, t: float | None = None) -> str | None:
        from ..allocator.router import route_request
        t = self.sim.now if t is None else t
        old = self.topology.parent(device)
        router = self.routers.get(device)
        if router is not None:
            if old is not None:
                router.mark_suspect(old, t)
            target = route_request(router, device, t, self._alive)
            if not self._alive(target, t):
                target = None
        else:
            shadows = self.shadows.get(old, []) if old else []
            others = [f for f in self.topology.fogs if f != old and f not in shadows]
            target = next((f for f in shadows + others if self._alive(f, t)), None)
            if target is None and self._alive(self.topology.cloud, t):
                target = self.topology.cloud
        self._move(device, target, "reattach", previous=old)
        return target

    def _alive(self, node: str, t: float) -> bool:
        return not self.topology.is_down(node, t)

    def _move(self, device: str, target: str | None, kind: str, previous: str | None = None):
        self.topology.reparent(device, target)
        self.sim.note(kind if target else "detached", device, f"{previous or '-'}->{target or '-'}")
        if target is None:
            return
        for app in self.apps.values():
            if device not in app.nodes:
                continue
            if previous is not None and target in app.nodes:
                self._promote_replica(app, device, previous, target)
            app._resync_cells(device)
            for (src, _), ch in app.channels.items():
                if src == device:
                    ch.kick()

    def _promote_replica(self, app: App, device: str, old: str, new: str):
        for d in app.program.data_decls:
            if d.kind != "logger" or d.level != "fog":
                continue
            replica = self.replicas.get((app.namespace, d.name, new, old), {}).get(device, [])
            own = app.logs.setdefault((new, d.name), {}).setdefault(device, [])
            last = own[-1].seq if own else -1
            adopted = [r for r in replica if r.seq > last]
            own.extend(adopted)
            ch = app.channels.get((device, d.name))
            if adopted and ch is not None:
                ch.expected[new] = max(ch.expected.get(new, 0), adopted[-1].seq + 1)
            if adopted:
                self.sim.note("promote", new, f"{app.namespace}/{d.name}/{device}<={old}#{adopted[-1].seq}")

    # shadow replication

    def set_shadows(self, mapping: dict[str, list[str]]):
        self.shadows = {k: list(v) for k, v in mapping.items()}

    def replicate_to_shadows(self, app: App, fog: str, var: str, rec: LogRecord | None = None):
        """Ship fog-level logger records to ``fog``'s shadow fogs, lagged."""
        for shadow in self.shadows.get(fog, []):
            key = (app.namespace, var, fog, shadow)
            ch = self._replication.get(key)
            if ch is None:
                def deliver(recv, seq, item, key=key):
                    store = self.replicas.setdefault((key[0], key[1], key[3], key[2]), {})
                    store.setdefault(item.source, []).append(item)
                    self.sim.note("replica", recv, f"{key[0]}/{key[1]}/{item.source}#{item.seq}<={key[2]}")
                ch = ReliableChannel(self.sim, f"{app.namespace}/{var}/{fog}=>{shadow}", fog,
                                     lambda s=shadow: s, deliver, kind="repl")
                self._replication[key] = ch
            if rec is not None:
                item = self.replica_transform(rec)
                if item is not None:
                    ch.push(item)
            else:
                ch.kick()

    def replica(self, app: App, var: str, shadow: str, primary: str) -> dict[str, list[LogRecord]]:
        return self.replicas.get((app.namespace, var, shadow, primary), {})

    # failures

    def inject_failure(self, node: str, fail_at_ms: float, heal_at_ms: float | None = None):
        w = self.topology.inject_failure(node, fail_at_ms, heal_at_ms)
        self._schedule_failure(w.node, w.fail_at_ms, w.heal_at_ms)
        return w

    def on_failure(self, callback: Callable[[str], None]):
        self._fail_listeners.append(callback)

    def _schedule_failure(self, node, fail_at, heal_at):
        import math
        self.sim.schedule(fail_at, "fail", node, "", lambda: self._on_fail(node), on_down="run")
        if math.isfinite(heal_at):
            self.sim.schedule(heal_at, "heal", node, "", lambda: self._on_heal(node), on_down="run")

    def _on_fail(self, node: str):
        for app in self.apps.values():
            app.state.pop(node, None)
            app.waiting.pop(node, None)
        self._busy.pop(node, None)
        for cb in self._fail_listeners:
            cb(node)

    def _on_heal(self, node: str):
        if self.topology.is_down(node, self.sim.now):
            return
        for app in list(self.apps.values()):
            if node in app.nodes:
                app._resync_cells(node)
            for ch in app.channels.values():
                ch.kick()
        for ch in self._replication.values():
            ch.kick()

    # driving

    def run_until(self, t_ms: float):
        return self.sim.run_until(t_ms)

    def run(self, limit_ms: float = float("inf")):
        return self.sim.run(limit_ms)

    @property
    def now(self) -> float:
        return self.sim.now

    @property
    def trace(self):
        return self.sim.trace


def deploy_app(topology_or_runtime, program, node_subset=None) -> App:
    rt = topology_or_runtime if isinstance(topology_or_runtime, Runtime) else Runtime(topology_or_runtime)
    return rt.deploy(program, node_subset)
