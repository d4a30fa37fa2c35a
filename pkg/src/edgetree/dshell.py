"""Distributed shell: spawn, pipe and manage app jobs on a simulated tree."""
from __future__ import annotations

import cmd
import shlex
from dataclasses import dataclass, field
from pathlib import Path

from .runtime import Runtime, RuntimeErrorBase
from .topology import Topology

USAGE = "commands: run <file> [nodes=a,b] [mode=shell|cold] | jobs | kill <id> | pipe <a> <b> <level> | tree | quit"


class ShellError(Exception):
    pass


class ResourceViolation(ShellError):
    pass


@dataclass
class Job:
    job_id: int
    app_name: str
    namespace: str
    nodes: tuple
    mode: str
    state: str = "Spawning"
    start_ms: dict = field(default_factory=dict)
    ready_ms: float = 0.0
    app: object = field(default=None, repr=False)


def spawn_schedule(topo: Topology, nodes, mode: str, t0: float = 0.0, reuse_ms: float = 20.0) -> dict[str, float]:
    """Start time of every node; the job is up at max(start + cost).

    Cold spawns boot the nodes one after another from the root down, each
    paying its ``init_cost_ms``.  Shell spawns reuse the held resources at
    ``reuse_ms`` per node and launch sibling subtrees in parallel.
    """
    subset = set(nodes)
    roots = [n for n in topo.subtree(topo.cloud) if n in subset
             and not any(a in subset for a in topo.ancestors(n)[1:])]
    starts: dict[str, float] = {}
    if mode == "cold":
        t = t0
        for root in roots:
            for n in topo.subtree(root):
                if n in subset:
                    starts[n] = t
                    t += topo.nodes[n].init_cost_ms
        return starts
    if mode != "shell":
        raise ShellError(f"unknown spawn mode {mode!r}")

    def launch(n, t):
        starts[n] = t
        for c in topo.children(n):
            for d in _first_in_subset(topo, c, subset):
                launch(d, t + reuse_ms)

    for root in roots:
        launch(root, t0)
    return starts


def _first_in_subset(topo, node, subset):
    if node in subset:
        return [node]
    out = []
    for c in topo.children(node):
        out.extend(_first_in_subset(topo, c, subset))
    return out


def spawn_cost(topo: Topology, nodes, mode: str, reuse_ms: float = 20.0) -> float:
    starts = spawn_schedule(topo, nodes, mode, 0.0, reuse_ms)
    cost = (lambda n: topo.nodes[n].init_cost_ms) if mode == "cold" else (lambda n: reuse_ms)
    return max((t + cost(n) for n, t in starts.items()), default=0.0)


class DShell:
    """Holds every node of the topology and runs jobs inside it."""

    def __init__(self, topology: Topology, seed: int | None = None, reuse_ms: float = 20.0):
        self.topology = topology
        self.runtime = Runtime(topology, seed)
        self.reuse_ms = float(reuse_ms)
        self.resources = set(topology.nodes)
        self.jobs: dict[int, Job] = {}
        self._next = 1

    def spawn(self, program: str, nodes=None, mode: str = "shell", name: str = "job") -> Job:
        nodes = sorted(self.resources) if nodes is None else list(nodes)
        outside = sorted(set(nodes) - self.resources)
        if outside:
            raise ResourceViolation(f"nodes not held by the shell: {', '.join(outside)}")
        job_id = self._next
        app = self.runtime.deploy(program, nodes, app_name=f"{name}-{job_id}")
        self._next += 1
        t0 = self.runtime.now
        starts = spawn_schedule(self.topology, nodes, mode, t0, self.reuse_ms)
        done = t0 + spawn_cost(self.topology, nodes, mode, self.reuse_ms)
        job = Job(job_id, app.name, app.namespace, tuple(sorted(nodes)), mode, start_ms=starts,
                  ready_ms=done, app=app)
        self.jobs[job_id] = job
        for n, t in sorted(starts.items(), key=lambda kv: (kv[1], kv[0])):
            self.runtime.sim.schedule(t, "spawn", n, app.name)

        def running():
            if job.state == "Spawning":
                job.state = "Running"

        self.runtime.sim.schedule(done, "job_up", None, app.name, running)
        self.runtime.run_until(done)
        return job

    def kill(self, job_id: int) -> Job:
        job = self._job(job_id)
        if job.state in ("Running", "Spawning"):
            self.runtime.undeploy(job.app)
            job.state = "Stopped"
        return job

    def pipe(self, a: int, b: int, level: str):
        ja, jb = self._job(a), self._job(b)
        for j in (ja, jb):
            if j.state != "Running":
                raise ShellError(f"job {j.job_id} is not running")
        return self.runtime.flow_connect(ja.app, jb.app, level)

    def _job(self, job_id) -> Job:
        try:
            return self.jobs[int(job_id)]
        except (KeyError, ValueError):
            raise ShellError(f"no such job: {job_id}") from None

    def occupancy(self) -> dict[str, list[int]]:
        occ = {n: [] for n in self.topology.nodes}
        for job in self.jobs.values():
            if job.state == "Running":
                for n in job.nodes:
                    occ[n].append(job.job_id)
        return occ

    def tree_lines(self) -> list[str]:
        occ = self.occupancy()
        out = []

        def walk(node, depth):
            spec = self.topology.nodes[node]
            jobs = ",".join(str(j) for j in occ[node]) or "-"
            out.append(f"{'  ' * depth}{node} [{spec.level.label}] jobs={jobs}")
            for c in self.topology.children(node):
                walk(c, depth + 1)

        walk(self.topology.cloud, 0)
        return out

    def job_lines(self) -> list[str]:
        return [f"[{j.job_id}] {j.state:<8} {j.app_name} {j.namespace} mode={j.mode} "
                f"ready={j.ready_ms:.1f}ms nodes={','.join(j.nodes)}"
                for j in self.jobs.values()]


class ShellRepl(cmd.Cmd):
    prompt = "dsh> "

    def __init__(self, shell: DShell, stdout=None, echo: bool = False, base_dir: Path | None = None):
        super().__init__(stdout=stdout)
        self.shell = shell
        self.echo = echo
        self.base_dir = base_dir or Path.cwd()
        self.use_rawinput = stdout is None

    def say(self, text: str):
        self.stdout.write(text + "\n")

    def precmd(self, line):
        if self.echo:
            self.say(self.prompt + line.rstrip("\n"))
        return line

    def onecmd(self, line):
        try:
            return super().onecmd(line)
        except (ShellError, RuntimeErrorBase, OSError, ValueError) as e:
            self.say(f"error: {type(e).__name__}: {e}")
            return False

    def emptyline(self):
        return False

    def default(self, line):
        self.say(f"unknown command: {line.split()[0]}")
        self.say(USAGE)

    def do_run(self, arg):
        parts = shlex.split(arg)
        if not parts:
            self.say("usage: run <file> [nodes=a,b] [mode=shell|cold]")
            return
        opts = dict(p.split("=", 1) for p in parts[1:] if "=" in p)
        path = Path(parts[0])
        if not path.is_absolute():
            path = self.base_dir / path
        text = path.read_text()
        nodes = opts["nodes"].split(",") if "nodes" in opts else None
        job = self.shell.spawn(text, nodes, opts.get("mode", "shell"), opts.get("name", path.stem))
        self.say(f"[{job.job_id}] {job.state} {job.app_name} ready at {job.ready_ms:.1f}ms")

    def do_jobs(self, arg):
        for line in self.shell.job_lines():
            self.say(line)

    def do_kill(self, arg):
        job = self.shell.kill(arg.strip())
        self.say(f"[{job.job_id}] {job.state}")

    def do_pipe(self, arg):
        parts = arg.split()
        if len(parts) != 3:
            self.say("usage: pipe <job_a> <job_b> <level>")
            return
        flow = self.shell.pipe(parts[0], parts[1], parts[2])
        self.say(f"flow{flow.flow_id} {flow.source} -> {flow.sink} at {flow.level} on {','.join(flow.nodes)}")

    def do_tree(self, arg):
        for line in self.shell.tree_lines():
            self.say(line)

    def do_quit(self, arg):
        return True

    do_exit = do_quit

    def do_EOF(self, arg):
        return True


def run_script(shell: DShell, lines, out, base_dir: Path | None = None):
    """Feed commands to the shell, echoing each with the prompt."""
    repl = ShellRepl(shell, stdout=out, echo=True, base_dir=base_dir)
    for line in lines:
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        line = repl.precmd(line)
        if repl.onecmd(line):
            break
