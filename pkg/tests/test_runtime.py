from pathlib import Path

import pytest

from edgetree.allocator import RouterState
from edgetree.dsl import parse_program
from edgetree.runtime import (
    TIMEOUT,
    AlreadyBound,
    DeploymentError,
    KindMismatch,
    LevelViolation,
    NONE_ELIGIBLE,
    Runtime,
    SameAppViolation,
    SubtreeViolation,
    UnboundHandler,
    UnknownFunction,
    select_execution_level,
)
from edgetree.dsl import NodeContext
from edgetree.topology import LatencyModel, make_tree

from oracles import sync_resume_ms

LISTINGS = Path(__file__).parent / "listings"
EXACT = LatencyModel().with_stddev(0.0)

DEVICE_FN = 'jcond { dev: sys.type == "device"; } jsync function {dev} work(): int { }'


def listing(name):
    return (LISTINGS / f"{name}.jd").read_text()


def rt_tree(fogs=1, per_fog=2, exact=True, seed=1, **kw):
    return Runtime(make_tree(fogs, per_fog, latency=EXACT if exact else None, seed=seed, **kw), seed)


# deployment

def test_deploy_full_tree_roles():
    rt = rt_tree(2, 2)
    app = rt.deploy(listing("placement_deviceonly"), app_name="p")
    roles = app.roles()
    assert roles["cloud"] == "J" and roles["f1"] == "J" and roles["d2.2"] == "J+C"
    assert app.root == "cloud"


def test_deploy_single_device_standalone():
    rt = rt_tree()
    app = rt.deploy(listing("placement_deviceonly"), nodes=["d1.1"], app_name="solo")
    assert app.root == "d1.1" and app.roles() == {"d1.1": "J+C"}
    app.register_handler("deviceOnly", "noop")
    app.call_async("d1.1", "deviceOnly")
    rt.run()
    assert [r[3] for r in rt.trace.kinds("exec")] == ["d1.1"]


def test_deploy_under_single_fog():
    rt = rt_tree()
    app = rt.deploy(listing("placement_deviceonly"), nodes=["f1", "d1.1", "d1.2"], app_name="p")
    assert app.root == "f1"
    assert app.children("f1") == ["d1.1", "d1.2"]


def test_deploy_errors():
    rt = rt_tree(2, 1)
    with pytest.raises(DeploymentError):
        rt.deploy(listing("placement_deviceonly"), nodes=["d1.1", "d2.1"], app_name="x")
    with pytest.raises(DeploymentError):
        rt.deploy(listing("placement_deviceonly"), nodes=[], app_name="y")
    with pytest.raises(DeploymentError):
        rt.deploy("jasync {nope} function f() { }", app_name="z")


def test_namespaces_are_distinct():
    rt = rt_tree()
    a = rt.deploy(listing("logger_decl"), app_name="a")
    b = rt.deploy(listing("logger_decl"), app_name="b")
    assert a.namespace != b.namespace


# handlers and calls

def test_register_handler_errors():
    rt = rt_tree()
    app = rt.deploy(DEVICE_FN, app_name="a")
    app.register_handler("work", "rank", 2.0)
    with pytest.raises(UnknownFunction):
        app.register_handler("ghost", "noop")
    with pytest.raises(AlreadyBound):
        app.register_handler("work", "noop")


def test_service_time_consumed():
    rt = rt_tree(1, 1)
    app = rt.deploy(DEVICE_FN, nodes=["d1.1"], app_name="a")
    app.register_handler("work", "now", 2.0)
    got = []
    app.invoke_local("d1.1", "work", on_result=got.append)
    rt.run()
    assert got == [2.0]


def test_ctrl2wrk_reaches_all_devices():
    rt = Runtime(make_tree(1, 3, latency=EXACT), 0)
    app = rt.deploy(listing("placement_deviceonly"), app_name="a")
    app.register_handler("deviceOnly", "noop")
    app.call_async("cloud", "deviceOnly")
    rt.run()
    assert sorted(r[3] for r in rt.trace.kinds("exec")) == ["d1.1", "d1.2", "d1.3"]


def test_upward_ctrl2ctrl_rejected():
    rt = rt_tree()
    app = rt.deploy(listing("placement_loadbalanced"), app_name="a")
    app.register_handler("loadBalanced", "noop")
    with pytest.raises(SubtreeViolation):
        app.call_async("f1", "loadBalanced", target="cloud")


def test_unbound_handler():
    rt = rt_tree()
    app = rt.deploy(DEVICE_FN, app_name="a")
    with pytest.raises(UnboundHandler):
        app.call_async("cloud", "work")


def test_blocked_gate_waits_for_broadcast():
    rt = rt_tree(1, 1)
    app = rt.deploy(listing("broadcast_pickpe"), app_name="a")
    app.register_handler("fname", "noop")
    app.call_async("cloud", "fname")
    rt.run_until(100)
    assert rt.trace.kinds("exec") == []
    assert [r[3] for r in rt.trace.kinds("blocked")] == ["d1.1"]
    app.broadcast("cloud", "pe", -1.0)
    rt.run_until(200)
    execs = rt.trace.kinds("exec")
    assert [r[3] for r in execs] == ["d1.1"]
    delivered = [r[0] for r in rt.trace.kinds("bcast_deliver") if r[3] == "d1.1"]
    assert execs[0][0] >= delivered[0]


def test_sync_closed_form():
    rt = rt_tree(1, 2)
    app = rt.deploy(DEVICE_FN, nodes=["f1", "d1.1", "d1.2"], app_name="a")
    app.register_handler("work", "rank", 2.0)
    sc = app.call_sync("f1", "work")
    rt.run()
    assert sc.resume_ms == sync_resume_ms(5.0, 2.0, 5.0)
    assert sorted(n for n, _ in sc.results) == ["d1.1", "d1.2"]


def test_sync_no_match_resumes_immediately():
    rt = rt_tree()
    src = 'jcond { never: sys.type == "moon"; } jsync function {never} work(): int { }'
    app = rt.deploy(src, app_name="a")
    app.register_handler("work", "noop")
    sc = app.call_sync("cloud", "work")
    rt.run()
    assert sc.results == [] and sc.resume_ms == 0.0


def test_sync_down_device_times_out():
    rt = rt_tree(1, 2)
    app = rt.deploy(DEVICE_FN, nodes=["f1", "d1.1", "d1.2"], app_name="a")
    app.register_handler("work", "rank", 2.0)
    rt.inject_failure("d1.2", 0.0, 10_000.0)
    sc = app.call_sync("f1", "work")
    rt.run()
    assert sc.timed_out and sc.resume_ms == rt.timeout_ms == 300.0
    assert dict(sc.results)["d1.2"] is TIMEOUT and dict(sc.results)["d1.1"] is not TIMEOUT


# loggers

def test_logger_write_arrives_after_one_hop():
    rt = rt_tree(1, 1)
    app = rt.deploy(listing("thermostat_lowtemp"), app_name="a")
    app.logger_write("d1.1", "temp", 32)
    rt.run()
    (rec,) = app.logger_records("f1", "temp")["d1.1"]
    assert rec.value == 32
    assert [r[0] for r in rt.trace.kinds("log_deliver")] == [5.0]


def test_logger_staged_during_fog_downtime():
    rt = rt_tree(1, 1)
    app = rt.deploy(listing("thermostat_lowtemp"), app_name="a")
    rt.inject_failure("f1", 10.0, 200.0)
    for k in range(5):
        rt.sim.schedule(20.0 + 10 * k, "w", "d1.1", "", lambda k=k: app.logger_write("d1.1", "temp", k))
    rt.run_until(150)
    assert not app.logger_records("f1", "temp")
    rt.run()
    assert [r.value for r in app.logger_records("f1", "temp")["d1.1"]] == [0, 1, 2, 3, 4]


def test_logger_kind_mismatch():
    rt = rt_tree()
    app = rt.deploy(listing("broadcaster_decl"), app_name="a")
    with pytest.raises(KindMismatch):
        app.logger_write("d1.1", "x", 1.0)


def test_snapshot_min_selection():
    rt = Runtime(make_tree(1, 3, latency=EXACT), 0)
    app = rt.deploy(listing("filtering_vehicletemps"), app_name="a")
    assert app.logger_snapshot("f1", "vehicleTemps") == []
    for dev, v in zip(["d1.1", "d1.2", "d1.3"], [21, 19, 23]):
        app.logger_write(dev, "vehicleTemps", v)
    rt.run()
    snap = app.logger_snapshot("f1", "vehicleTemps")
    assert len(snap) == 3
    lowest = min(v for _, v, _ in snap)
    app.logger_write("f1", "areaAverage", lowest)
    rt.run()
    assert app.logger_snapshot("cloud", "areaAverage") == [("f1", 19, pytest.approx(rt.now, abs=100))]


def test_snapshot_wrong_level():
    rt = rt_tree()
    app = rt.deploy(listing("filtering_vehicletemps"), app_name="a")
    with pytest.raises(LevelViolation):
        app.logger_snapshot("d1.1", "areaAverage")


def test_device_level_logger_read_on_device():
    rt = rt_tree()
    app = rt.deploy(listing("filtering_vehicletemps"), app_name="a")
    app.logger_write("d1.1", "tempSensors", 7)
    rt.run()
    assert [v for _, v, _ in app.logger_snapshot("d1.1", "tempSensors")] == [7]


# broadcasters

def test_broadcast_versions_and_reorder():
    rt = rt_tree(1, 1)
    app = rt.deploy(listing("broadcast_fogonly"), app_name="a")
    assert app.broadcaster_value("d1.1", "x") is None
    assert [app.broadcast("f1", "x", v) for v in (1.0, 2.0, 3.0)] == [1, 2, 3]
    rt.run()
    assert app.broadcaster_value("d1.1", "x") == (3, 3.0)
    app._bcast_arrive("d1.1", "x", 2, 2.0)
    assert app.broadcaster_value("d1.1", "x") == (3, 3.0)


def test_broadcast_from_device_rejected():
    rt = rt_tree()
    app = rt.deploy(listing("broadcast_fogonly"), app_name="a")
    with pytest.raises(LevelViolation):
        app.broadcast("d1.1", "x", 1.0)


# flows

LIGHTING = 'jdata { int light as broadcaster; }'
PHONE = 'jdata { int presence as logger; }'


def test_flow_triggers_broadcast_in_other_app():
    rt = rt_tree(1, 2)
    lighting = rt.deploy(LIGHTING, app_name="lighting")
    phone = rt.deploy(PHONE, nodes=["cloud", "f1", "d1.2"], app_name="phone")
    flow = rt.flow_connect(phone, lighting, "fog")
    phone.on_log("presence", lambda node, rec: rt.flow_write(flow, rec.value, node))
    flow.subscribe(lambda node, msg: lighting.broadcast(node, "light", msg))
    phone.logger_write("d1.2", "presence", 1)
    rt.run()
    assert lighting.broadcaster_value("d1.1", "light") == (1, 1)
    assert phone.broadcaster_value("d1.1", "light") is None
    assert rt.trace.kinds("flow_msg")


def test_flow_errors_and_empty_read():
    rt = rt_tree()
    a = rt.deploy(LIGHTING, app_name="a")
    b = rt.deploy(PHONE, nodes=["d1.1"], app_name="b")
    with pytest.raises(SameAppViolation):
        rt.flow_connect(a, a, "fog")
    with pytest.raises(LevelViolation):
        rt.flow_connect(a, b, "fog")
    flow = rt.flow_connect(a, b, "device")
    assert rt.flow_read(flow) is None
    rt.flow_write(flow, "hi")
    rt.run()
    assert rt.flow_read(flow) == "hi" and rt.flow_read(flow) is None


# placement

def level_ctx(level, load=None):
    logs = {"load": [("d", 0.0, load)]} if load is not None else {}
    return NodeContext(level, 0, {"load": "logger"}, {}, logs)


def test_select_level_fog_then_cloud():
    prog = parse_program(listing("placement_loadbalanced"))
    gate = prog.func("loadBalanced").gate
    conds = {c.name: c.expr for c in prog.cond_decls}

    def levels(load):
        return [("device", [("d", level_ctx("device", load))]),
                ("fog", [("f", level_ctx("fog", load))]),
                ("cloud", [("c", level_ctx("cloud", load))])]

    assert select_execution_level(gate, conds, levels(30)).level == "fog"
    assert select_execution_level(gate, conds, levels(80)).level == "cloud"
    assert select_execution_level(gate, conds, levels(80)[:2]) == NONE_ELIGIBLE


def test_runtime_placement_follows_fog_load():
    rt = rt_tree(1, 1)
    app = rt.deploy(listing("placement_loadbalanced"), app_name="a")
    app.register_handler("loadBalanced", "noop")
    app.logger_write("f1", "load", 30)
    rt.run()
    assert app.select_execution_level("loadBalanced", "cloud").level == "fog"
    app.logger_write("f1", "load", 80)
    rt.run()
    assert app.select_execution_level("loadBalanced", "cloud").level == "cloud"


# attachment and fail-over

def router(primary="f1", shadows=("f3", "f4")):
    return RouterState({"d1.1": primary}, {"d1.1": list(shadows)}, "cloud", 15.0)


def test_attach_primary_alive():
    rt = rt_tree(4, 1)
    assert rt.attach_device("d1.1", router()) == "f1"


def test_reattach_skips_down_shadow():
    rt = rt_tree(4, 1)
    rt.attach_device("d1.1", router())
    rt.inject_failure("f1", 10.0)
    rt.inject_failure("f3", 10.0)
    rt.run_until(20)
    assert rt.reattach_on_failure("d1.1") == "f4"


def test_all_fogs_down_falls_back_to_cloud_without_loss():
    rt = rt_tree(2, 1)
    app = rt.deploy("jdata { int v as logger(cloud); }", app_name="a")
    r = RouterState({"d1.1": "f1"}, {"d1.1": ["f2"]}, "cloud", 15.0)
    rt.attach_device("d1.1", r)
    for f in ("f1", "f2"):
        rt.inject_failure(f, 10.0)
    for k in range(4):
        rt.sim.schedule(5.0 + 3 * k, "w", "d1.1", "", lambda k=k: app.logger_write("d1.1", "v", k))
    rt.run_until(30)
    assert rt.reattach_on_failure("d1.1") == "cloud"
    rt.run()
    assert [r.value for r in app.logger_records("cloud", "v")["d1.1"]] == [0, 1, 2, 3]


def test_nothing_reachable_detaches():
    rt = rt_tree(1, 1)
    rt.inject_failure("f1", 0.0)
    rt.inject_failure("cloud", 0.0)
    rt.run_until(1)
    assert rt.reattach_on_failure("d1.1") is None
    assert rt.topology.parent("d1.1") is None


def test_shadow_replication_and_promotion():
    rt = rt_tree(3, 1)
    app = rt.deploy(listing("thermostat_lowtemp"), app_name="a")
    rt.set_shadows({"f1": ["f2", "f3"]})
    rt.attach_device("d1.1", router("f1", ("f2", "f3")))
    for k in range(10):
        rt.sim.schedule(10.0 * k, "w", "d1.1", "", lambda k=k: app.logger_write("d1.1", "temp", k))
    rt.run_until(500)
    primary = [r.value for r in app.logger_records("f1", "temp")["d1.1"]]
    assert [r.value for r in rt.replica(app, "temp", "f2", "f1")["d1.1"]] == primary
    rt.inject_failure("f1", 600.0)
    rt.run_until(610)
    assert rt.reattach_on_failure("d1.1") == "f2"
    app.logger_write("d1.1", "temp", 10)
    rt.run()
    assert [r.value for r in app.logger_records("f2", "temp")["d1.1"]] == list(range(11))


def test_zero_writes_zero_replication():
    rt = rt_tree(3, 1)
    rt.deploy(listing("thermostat_lowtemp"), app_name="a")
    rt.set_shadows({"f1": ["f2", "f3"]})
    rt.run_until(1000)
    assert not [r for r in rt.trace if r[2].startswith("repl")]
