"""Primary fog crash with checkpoint recovery through the cloud."""
from __future__ import annotations

from ..allocator import AllocationInstance, RouterState, solve_exact
from ..runtime import Runtime
from ..topology import LatencyModel, NodeLevel, NodeSpec, Topology, substream
from .common import ScenarioResult

# progress is kept in a cloud logger; recoveryState flows back down
FAILOVER_SRC = """
jdata {
    int saveState as logger(cloud);
    int recoveryState as broadcaster;
}
jcond {
    fogRun: sys.type == "fog";
    cloudRun: sys.type == "cloud";
}
jasync function {fogRun} fogCompute() {
}
jasync function {cloudRun} cloudCheck() {
}
"""


def failover_topology(fogs: int, latency: LatencyModel | None, seed: int) -> Topology:
    nodes = [NodeSpec("cloud", NodeLevel.CLOUD)]
    nodes += [NodeSpec(f"f{j}", NodeLevel.FOG, "cloud", capacity=1) for j in range(1, fogs + 1)]
    nodes.append(NodeSpec("d1", NodeLevel.DEVICE, "f1"))
    return Topology(nodes, latency, seed=seed)


def build_router(topo: Topology, devices: list[str]) -> RouterState:
    """Primary and shadows from the allocator, costed by mean link latencies."""
    fogs = topo.fogs
    df = topo.latency["device_fog"].mean_ms
    ff = topo.latency["fog_fog"].mean_ms
    inst = AllocationInstance(
        list(devices), list(fogs),
        [[df] * len(fogs) for _ in devices],
        [[ff] * len(fogs) for _ in fogs],
        [100.0] * len(fogs),
        [max(1, len(devices))] * len(fogs),
    )
    alloc = solve_exact(inst)
    return RouterState.from_allocation(inst, alloc, topo.cloud, 3.0 * df)


def audit_loggers(app) -> dict:
    """Per (source, var): records written versus sequence numbers held at the declared level."""
    lost, dup, order = 0, 0, 0
    for (source, var), n in app.written.items():
        level = app.program.data(var).level
        seqs = []
        for (node, v), per_source in app.logs.items():
            if v == var and app.level_of(node) == level:
                seqs.extend(r.seq for r in per_source.get(source, []))
        held = set(seqs)
        lost += sum(1 for k in range(n) if k not in held)
        dup += len(seqs) - len(held)
        for (node, v), per_source in app.logs.items():
            got = [r.seq for r in per_source.get(source, [])] if v == var else []
            order += sum(1 for a, b in zip(got, got[1:]) if b <= a)
    return {"lost": lost, "duplicates": dup, "out_of_order": order}


def run_failover_scenario(config: dict | None = None) -> ScenarioResult:
    """Kill the device's primary fog mid-run and measure the recovery.

    Config keys: ``seed`` (0), ``fogs`` (3), ``tick_ms`` (10),
    ``fail_at_ms`` (random in [200, 800] when absent), ``heal_after_ms``
    (500), ``duration_ms`` (3000), ``inject`` (True), ``shadow_down``
    (also crash the first shadow for the whole run), ``latency``.
    """
    cfg = dict(config or {})
    seed = int(cfg.get("seed", 0))
    n_fogs = max(2, int(cfg.get("fogs", 3)))
    tick = float(cfg.get("tick_ms", 10.0))
    duration = float(cfg.get("duration_ms", 3000.0))
    inject = bool(cfg.get("inject", True))
    fail_at = cfg.get("fail_at_ms")
    if fail_at is None:
        fail_at = substream(seed, "failover", "fail_at").uniform(200.0, 800.0)
    fail_at = float(fail_at)
    heal_after = float(cfg.get("heal_after_ms", 500.0))

    topo = failover_topology(n_fogs, LatencyModel.from_dict(cfg.get("latency")), seed)
    rt = Runtime(topo, seed)
    app = rt.deploy(FAILOVER_SRC, app_name="failover")
    router = build_router(topo, ["d1"])
    primary = router.primary["d1"]
    if cfg.get("shadow_down"):
        rt.inject_failure(router.shadows["d1"][0], 0.0)
    if inject:
        rt.inject_failure(primary, fail_at, fail_at + heal_after)
    rt.attach_device("d1", router)

    writes: list[tuple[float, str, int]] = []
    adopted: list[tuple[float, str, int]] = []
    computed: list[tuple[float, str, int]] = []

    def fog_compute(inv):
        state = app.node_state(inv.node)
        computation = state.get("computation", 0) + 1
        computed.append((rt.now, inv.node, computation))
        app.logger_write(inv.node, "saveState", computation)
        writes.append((rt.now, inv.node, computation))
        cell = app.broadcaster_value(inv.node, "recoveryState")
        if cell is not None and cell[1] > computation:
            computation = cell[1]
            adopted.append((rt.now, inv.node, computation))
        state["computation"] = computation

    def cloud_check(inv):
        entries = app.logger_view(inv.node, "saveState")
        if not entries:
            return
        new_update = max(entries, key=lambda e: (e[1], str(e[0])))[2]
        state = app.node_state(inv.node)
        last = state.get("saveStateLog")
        if last is not None and new_update < last:
            app.broadcast(inv.node, "recoveryState", last)
        else:
            state["saveStateLog"] = new_update

    app.register_handler("fogCompute", fog_compute, 1.0)
    app.register_handler("cloudCheck", cloud_check, 1.0)
    app.on_log("saveState", lambda node, rec: app.invoke_local(node, "cloudCheck")
               if node == topo.cloud else None)

    reattach = {"pending": False, "at": None, "to": None}

    def device_tick():
        if rt.now >= duration:
            return
        parent = topo.parent("d1")
        if parent is not None and topo.is_down(parent, rt.now):
            if not reattach["pending"]:
                reattach["pending"] = True

                def move():
                    reattach["to"] = rt.reattach_on_failure("d1")
                    reattach["at"] = rt.now
                    reattach["pending"] = False

                rt.sim.after(router.timeout_threshold_ms, "missed_reply", "d1", parent, move)
        elif parent is not None:
            app.call_async("d1", "fogCompute", from_worker=True)
        rt.sim.after(tick, "tick", "d1", "", device_tick)

    rt.sim.after(0.0, "tick", "d1", "", device_tick)
    rt.run()

    before = [w for w in writes if w[1] == primary and w[0] < fail_at]
    last_checkpoint = before[-1][2] if before else 0
    new_fog = reattach["to"]
    after = [a for a in adopted if a[1] == new_fog]
    fresh = [c for c in computed if c[1] == new_fog]
    if not inject:
        gap, resumed, recomputed = 0.0, last_checkpoint, 0
    elif after:
        gap = after[0][0] - fail_at
        resumed = after[0][2]
        recomputed = sum(1 for c in fresh if c[0] < after[0][0])
    elif fresh:
        # nothing to recover: progress restarts from zero on the new fog
        gap = fresh[0][0] - fail_at
        resumed = fresh[0][2] - 1
        recomputed = 0
    else:
        gap, resumed, recomputed = float("nan"), None, 0
    audit = audit_loggers(app)
    samples = [gap] if inject else [0.0]
    return ScenarioResult("failover", samples, list(rt.trace.lines()), [], {
        "seed": seed,
        "primary": primary,
        "shadows": list(router.shadows["d1"]),
        "fail_at_ms": fail_at if inject else None,
        "reattached_to": new_fog,
        "last_checkpoint": last_checkpoint,
        "resumed_from": resumed,
        "recomputed": recomputed,
        "recovery_gap_ms": samples[0],
        "final_progress": max((c[2] for c in computed), default=0),
        **{f"audit_{k}": v for k, v in audit.items()},
    })
