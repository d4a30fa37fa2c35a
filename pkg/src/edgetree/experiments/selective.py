"""Anomaly detection: filtered reactive logging against periodic batch drains."""
from __future__ import annotations

from ..runtime import Runtime
from ..topology import LatencyModel, make_tree, substream
from .common import ScenarioResult

REACTIVE_SRC = """
jdata {
    int alerts as logger;
}
"""

BATCH_SRC = """
jdata {
    int beats as logger;
}
"""


def heart_stream(seed: int, devices: list[str], cadence_ms: float, anomaly_rate: float,
                 min_anomalies: int, max_duration_ms: float):
    """Per-device samples ``(t, device, bpm, anomalous)`` in time order.

    Baseline beats are uniform in [60, 100]; anomalies are uniform in
    (100, 180].  Generation stops at the first tick after enough anomalies.
    """
    rngs = {d: substream(seed, d, "heart") for d in devices}
    out = []
    anomalies = 0
    t = 0.0
    while t < max_duration_ms and (anomaly_rate <= 0 or anomalies < min_anomalies):
        for d in devices:
            r = rngs[d]
            if r.random() < anomaly_rate:
                out.append((t, d, r.randint(101, 180), True))
                anomalies += 1
            else:
                out.append((t, d, r.randint(60, 100), False))
        t += cadence_ms
    return out


def run_selective_logging(config: dict | None = None) -> tuple[ScenarioResult, ScenarioResult]:
    """Detection latency of anomalous heart-rate samples.

    Reactive: the device filters and logs only readings above the
    threshold; latency is generation to arrival at the fog.  Batch: every
    reading is logged and the fog inspects its queue every
    ``batch_interval_ms``, spending ``drain_cost_ms`` per record.
    """
    cfg = dict(config or {})
    seed = int(cfg.get("seed", 0))
    n_dev = int(cfg.get("devices", 10))
    cadence = float(cfg.get("cadence_ms", 100.0))
    rate = float(cfg.get("anomaly_rate", 0.05))
    threshold = float(cfg.get("threshold", 100))
    interval = float(cfg.get("batch_interval_ms", 5000.0))
    drain_cost = float(cfg.get("drain_cost_ms", 0.1))
    min_anom = int(cfg.get("min_anomalies", 1000))
    max_dur = float(cfg.get("max_duration_ms", 600_000.0))
    latency = LatencyModel.from_dict(cfg.get("latency"))

    devices = [f"d1.{i}" for i in range(1, n_dev + 1)]
    stream = heart_stream(seed, devices, cadence, rate, min_anom, max_dur)
    end = (stream[-1][0] if stream else 0.0) + cadence

    # reactive
    rt = Runtime(make_tree(1, n_dev, latency=latency, seed=seed), seed)
    app = rt.deploy(REACTIVE_SRC, app_name="reactive")
    reactive: list[float] = []
    app.on_log("alerts", lambda node, rec: reactive.append(rt.now - rec.value[0]))
    for t, d, bpm, _ in stream:
        if bpm > threshold:
            rt.sim.schedule(t, "sample", d, str(bpm),
                            lambda t=t, d=d, bpm=bpm: app.logger_write(d, "alerts", (t, bpm)))
    rt.run()
    r_res = ScenarioResult("selective_reactive", reactive, list(rt.trace.lines()), [], {"seed": seed})

    # batch
    rt = Runtime(make_tree(1, n_dev, latency=latency, seed=seed), seed)
    app = rt.deploy(BATCH_SRC, app_name="batch")
    queue: list = []
    batch: list[float] = []
    app.on_log("beats", lambda node, rec: queue.append(rec.value))

    def drain():
        pending = list(queue)
        queue.clear()
        for k, (t0, bpm) in enumerate(pending):
            if bpm > threshold:
                batch.append(rt.now + drain_cost * (k + 1) - t0)
        rt.sim.note("drain", "f1", str(len(pending)))
        if rt.now < end or queue:
            rt.sim.after(interval, "drain_tick", "f1", "", drain)

    for t, d, bpm, _ in stream:
        rt.sim.schedule(t, "sample", d, str(bpm),
                        lambda t=t, d=d, bpm=bpm: app.logger_write(d, "beats", (t, bpm)))
    if stream:
        rt.sim.schedule(interval, "drain_tick", "f1", "", drain)
    rt.run()
    b_res = ScenarioResult("selective_batch", batch, list(rt.trace.lines()), [], {"seed": seed})
    anomalies = sum(1 for s in stream if s[2] > threshold)
    r_res.extra["anomalies"] = b_res.extra["anomalies"] = anomalies
    return r_res, b_res
