"""Parking spot manager: Car, Sensing and Allocating apps joined by fog flows."""
from __future__ import annotations

from ..runtime import Runtime
from ..topology import LatencyModel, NodeLevel, NodeSpec, Topology, substream
from .common import ScenarioResult

CAR_SRC = """
jdata {
    string requests as logger;
}
"""

SENSING_SRC = """
jdata {
    int occupancy as logger;
}
"""

ALLOCATING_SRC = """
jdata {
    int zoneFree as logger(cloud);
    string escalations as logger(cloud);
    string offers as broadcaster;
}
jcond {
    fogOnly: sys.type == "fog";
    cloudOnly: sys.type == "cloud";
}
jasync function {fogOnly} allocate() {
}
jasync function {cloudOnly} suggest() {
}
"""


def parking_topology(zones: int, cars: int, spots: int, latency, seed) -> Topology:
    nodes = [NodeSpec("cloud", NodeLevel.CLOUD)]
    for z in range(1, zones + 1):
        nodes.append(NodeSpec(f"f{z}", NodeLevel.FOG, "cloud", capacity=cars + spots))
    for z in range(1, zones + 1):
        nodes += [NodeSpec(f"car{z}.{k}", NodeLevel.DEVICE, f"f{z}") for k in range(1, cars + 1)]
        nodes += [NodeSpec(f"s{z}.{k}", NodeLevel.DEVICE, f"f{z}") for k in range(1, spots + 1)]
    return Topology(nodes, latency, seed=seed)


def run_parking_scenario(config: dict | None = None) -> ScenarioResult:
    """Request-to-allocation latency; tags are ``local`` or ``escalated``.

    Config keys: ``zones`` (2), ``cars_per_zone`` (4), ``spots_per_zone``
    (6), ``requests`` (200), ``full_zones`` (zone indices whose spots all
    start occupied, default [2]), ``request_interval_ms`` (50),
    ``hold_ms`` (spot occupancy time, 400), ``seed``, ``latency``.
    """
    cfg = dict(config or {})
    seed = int(cfg.get("seed", 0))
    zones = int(cfg.get("zones", 2))
    cars = int(cfg.get("cars_per_zone", 4))
    spots = int(cfg.get("spots_per_zone", 6))
    n_req = int(cfg.get("requests", 200))
    full = {int(z) for z in cfg.get("full_zones", [2])}
    interval = float(cfg.get("request_interval_ms", 50.0))
    hold = float(cfg.get("hold_ms", 400.0))
    topo = parking_topology(zones, cars, spots, LatencyModel.from_dict(cfg.get("latency")), seed)
    rt = Runtime(topo, seed)
    fogs = topo.fogs
    car_nodes = ["cloud"] + fogs + [n for n in topo.devices if n.startswith("car")]
    sensor_nodes = ["cloud"] + fogs + [n for n in topo.devices if n.startswith("s")]
    car = rt.deploy(CAR_SRC, nodes=car_nodes, app_name="Car")
    sensing = rt.deploy(SENSING_SRC, nodes=sensor_nodes, app_name="Sensing")
    alloc = rt.deploy(ALLOCATING_SRC, nodes=["cloud"] + fogs, app_name="Allocating")
    sense_flow = rt.flow_connect(sensing, alloc, "fog")
    req_flow = rt.flow_connect(car, alloc, "fog")
    reply_flow = rt.flow_connect(alloc, car, "fog")

    free: dict[str, set] = {f: set() for f in fogs}
    started: dict[str, float] = {}
    samples: list[float] = []
    tags: list[str] = []

    # Sensing: sensors log occupancy, the fog J forwards it to Allocating
    sensing.on_log("occupancy", lambda fog, rec: rt.flow_write(sense_flow, (rec.source, rec.value), fog))

    def on_sense(fog, msg):
        spot, occupied = msg
        (free[fog].discard if occupied else free[fog].add)(spot)
        alloc.logger_write(fog, "zoneFree", len(free[fog]))

    sense_flow.subscribe(on_sense)

    # Car: cars log requests, the fog J forwards them to Allocating
    car.on_log("requests", lambda fog, rec: rt.flow_write(req_flow, rec.value, fog))
    req_flow.subscribe(lambda fog, req: alloc.invoke_local(fog, "allocate", (req,)))

    def allocate(inv):
        fog, req = inv.node, inv.args[0]
        if free[fog]:
            spot = min(free[fog])
            free[fog].discard(spot)
            alloc.logger_write(fog, "zoneFree", len(free[fog]))
            rt.flow_write(reply_flow, (req, fog, spot, "local"), fog)
        else:
            alloc.logger_write(fog, "escalations", f"{req}@{fog}")

    def suggest(inv):
        req, origin = inv.args[0].split("@")
        views = {src: val for src, _, val in alloc.logger_view("cloud", "zoneFree")}
        options = sorted((-v, z) for z, v in views.items() if z != origin and v > 0)
        target = options[0][1] if options else None
        alloc.broadcast("cloud", "offers", f"{req}@{origin}>{target}")

    alloc.register_handler("allocate", allocate, 1.0)
    alloc.register_handler("suggest", suggest, 1.0)
    alloc.on_log("escalations", lambda node, rec: alloc.invoke_local(node, "suggest", (rec.value,))
                 if node == "cloud" else None)

    def on_offer(node, version, value):
        if node not in fogs:
            return
        head, target = value.split(">")
        req, origin = head.split("@")
        if node == origin:
            rt.flow_write(reply_flow, (req, origin, target, "escalated"), node)

    alloc.on_broadcast("offers", on_offer)

    def on_reply(fog, msg):
        req, _, spot, tag = msg
        device = req.split("#")[0]
        if spot is not None and tag == "local":
            rt.sim.after(hold, "release", fog, spot, lambda: _release(fog, spot))

        def done():
            samples.append(rt.now - started[req])
            tags.append(tag)

        rt.send_message(fog, device, "allocation", done, f"{req}->{spot}")

    def _release(fog, spot):
        if spot in free[fog]:
            return
        free[fog].add(spot)
        alloc.logger_write(fog, "zoneFree", len(free[fog]))

    reply_flow.subscribe(on_reply)

    # initial occupancy reports
    for z, fog in enumerate(fogs, start=1):
        for k in range(1, spots + 1):
            sensing.logger_write(f"s{z}.{k}", "occupancy", 1 if z in full else 0)

    rng = substream(seed, "parking", "requests")
    car_ids = [n for n in topo.devices if n.startswith("car")]
    warmup = 100.0
    for i in range(n_req):
        device = rng.choice(car_ids)
        req = f"{device}#{i}"
        t = warmup + i * interval

        def send(device=device, req=req):
            started[req] = rt.now
            car.logger_write(device, "requests", req)

        rt.sim.schedule(t, "request", device, req, send)
    rt.run()
    esc = sum(1 for t in tags if t == "escalated")
    return ScenarioResult("parking", samples, list(rt.trace.lines()), tags, {
        "seed": seed,
        "requests": n_req,
        "escalation_rate": esc / len(tags) if tags else 0.0,
        "local_mean": _mean([s for s, t in zip(samples, tags) if t == "local"]),
        "escalated_mean": _mean([s for s, t in zip(samples, tags) if t == "escalated"]),
    })


def _mean(vals):
    return sum(vals) / len(vals) if vals else None
