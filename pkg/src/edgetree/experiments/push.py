"""Work items pushed from devices to randomly assigned fogs."""
from __future__ import annotations

from ..allocator.router import RandomPolicy
from ..runtime import Runtime
from ..topology import LatencyModel, NodeLevel, NodeSpec, Topology
from ..topology import substream
from .common import ScenarioResult

WORKER_SRC = """
jdata {
    int work as logger;
}
jcond {
    fogOnly: sys.type == "fog";
}
jasync function {fogOnly} process() {
}
"""

SINK_SRC = """
jasync function collect() {
}
"""


def push_topology(devices: int, fogs: int, latency: LatencyModel | None = None, seed: int = 0) -> Topology:
    nodes = [NodeSpec("cloud", NodeLevel.CLOUD)]
    nodes += [NodeSpec(f"f{j}", NodeLevel.FOG, "cloud", capacity=max(1, devices)) for j in range(1, fogs + 1)]
    nodes += [NodeSpec(f"d{i}", NodeLevel.DEVICE, "cloud") for i in range(1, devices + 1)]
    return Topology(nodes, latency, seed=seed)


def run_parallel_push(config: dict | None = None) -> ScenarioResult:
    """Mean completion time of device work items processed at the fogs.

    Config keys: ``devices`` (24), ``fogs`` (2), ``tasks_per_device`` (10),
    ``service_time_ms`` (50), ``seed`` (0), ``balanced`` (True),
    ``latency``.  Every item is logged at t=0, which saturates the fogs.
    """
    cfg = dict(config or {})
    n_dev = int(cfg.get("devices", 24))
    n_fog = int(cfg.get("fogs", 2))
    tasks = int(cfg.get("tasks_per_device", 10))
    service = float(cfg.get("service_time_ms", 50.0))
    seed = int(cfg.get("seed", 0))
    topo = push_topology(n_dev, n_fog, LatencyModel.from_dict(cfg.get("latency")), seed)
    rt = Runtime(topo, seed)
    worker = rt.deploy(WORKER_SRC, app_name="worker")
    sink = rt.deploy(SINK_SRC, nodes=["cloud"] + topo.fogs, app_name="sink")
    worker.register_handler("process", lambda inv: inv.args[0], service)
    sink.register_handler("collect", "noop")
    flow = rt.flow_connect(worker, sink, "fog")
    policy = RandomPolicy(substream(seed, "push-assign").getrandbits(32), bool(cfg.get("balanced", True)))
    for d in topo.devices:
        rt.attach_device(d, policy)

    samples: list[float] = []
    tags: list[str] = []
    started: dict[tuple, float] = {}

    def on_item(fog, rec):
        worker.invoke_local(fog, "process", (rec.value,), lambda item: rt.flow_write(flow, item, fog))

    def on_result(fog, item):
        samples.append(rt.now - started[item])
        tags.append(fog)

    worker.on_log("work", on_item)
    flow.subscribe(on_result)
    for d in topo.devices:
        for k in range(tasks):
            started[(d, k)] = rt.now
            worker.logger_write(d, "work", (d, k))
    rt.run()
    assignment = {d: topo.parent(d) for d in topo.devices}
    return ScenarioResult(f"push_{n_fog}fogs", samples, list(rt.trace.lines()), tags,
                          {"fogs": n_fog, "devices": n_dev, "seed": seed,
                           "per_fog": {f: sum(1 for p in assignment.values() if p == f) for f in topo.fogs}})
