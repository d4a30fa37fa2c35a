"""Randomized semantics checks, 1000 cases each."""
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from edgetree.dsl import NodeContext, parse_program
from edgetree.runtime import LevelViolation, Runtime, SameAppViolation, SubtreeViolation, select_execution_level
from edgetree.topology import make_tree

LISTINGS = Path(__file__).parent / "listings"
CASES = settings(max_examples=1000, deadline=None, suppress_health_check=list(HealthCheck))

BALANCED = parse_program((LISTINGS / "placement_loadbalanced.jd").read_text())
GATE = BALANCED.func("loadBalanced").gate
CONDS = {c.name: c.expr for c in BALANCED.cond_decls}

# cases actually executed per property, read back by the acceptance check
COUNTS = {}


def count(name):
    COUNTS[name] = COUNTS.get(name, 0) + 1


def load_ctx(level, rank, load):
    logs = {"load": [("d", 0.0, load)]} if load is not None else {}
    return NodeContext(level, rank, {"load": "logger"}, {}, logs)


@CASES
@given(st.lists(st.one_of(st.none(), st.integers(0, 100)), min_size=1, max_size=4),
       st.one_of(st.none(), st.integers(0, 100)))
def test_level_minimality(fog_loads, cloud_load):
    count("level")
    levels = [
        ("device", [("d", load_ctx("device", 0, 10))]),
        ("fog", [(f"f{i}", load_ctx("fog", i + 1, v)) for i, v in enumerate(fog_loads)]),
        ("cloud", [("c", load_ctx("cloud", 9, cloud_load))]),
    ]
    placement = select_execution_level(GATE, CONDS, levels)
    passing = [f"f{i}" for i, v in enumerate(fog_loads) if v is not None and v < 50]
    if passing:
        assert placement.level == "fog" and list(placement.ready) == passing
    elif any(v is None for v in fog_loads):
        # a fog without any load record cannot decide yet
        assert placement.level == "fog" and placement.deferred
    else:
        assert placement.level == "cloud"


@CASES
@given(st.permutations(list(range(1, 9))), st.integers(1, 8))
def test_broadcaster_monotone_reads(order, prefix):
    count("bcast_reads")
    rt = Runtime(make_tree(1, 1), 0)
    app = rt.deploy("jdata { int x as broadcaster; }", app_name="a")
    reads = []
    for v in order[:prefix]:
        app._bcast_arrive("d1.1", "x", v, v * 10)
        reads.append(app.broadcaster_value("d1.1", "x"))
    versions = [r[0] for r in reads]
    assert versions == sorted(versions)
    assert reads[-1] == (max(order[:prefix]), max(order[:prefix]) * 10)


@CASES
@given(st.integers(0, 2**16), st.lists(st.floats(0, 400), min_size=1, max_size=6),
       st.lists(st.tuples(st.sampled_from(["f1", "d1.1", "cloud"]), st.floats(0, 400), st.floats(1, 150)),
                max_size=3))
def test_broadcaster_monotone_under_failures(seed, times, outages):
    count("bcast_failures")
    rt = Runtime(make_tree(1, 1, seed=seed), seed)
    app = rt.deploy("jdata { int x as broadcaster; }", app_name="a")
    for node, start, length in _disjoint(outages):
        rt.inject_failure(node, start, start + length)
    seen = []
    app.on_broadcast("x", lambda node, ver, val: node == "d1.1" and seen.append(app.broadcaster_value(node, "x")[0]))
    for t in sorted(times):
        rt.sim.schedule(t, "w", "cloud", "", lambda: app.broadcast("cloud", "x", rt.now))
    rt.run()
    assert seen == sorted(seen)
    # every outage heals, so the device converges on the latest version
    assert app.broadcaster_value("d1.1", "x") == app.broadcaster_value("cloud", "x")


def _disjoint(outages):
    """Keep outages that do not overlap an earlier one on the same node."""
    kept, busy = [], {}
    for node, start, length in outages:
        end = start + length
        if any(not (end <= a or start >= b) for a, b in busy.get(node, [])):
            continue
        busy.setdefault(node, []).append((start, end))
        kept.append((node, start, end - start))
    return kept


@CASES
@given(st.integers(0, 2**16), st.lists(st.floats(0, 300), min_size=1, max_size=10),
       st.lists(st.tuples(st.sampled_from(["f1", "d1.1", "d1.2"]), st.floats(0, 300), st.floats(1, 200)),
                max_size=4))
def test_logger_fifo_under_fail_heal(seed, times, outages):
    count("logger_fifo")
    rt = Runtime(make_tree(1, 2, seed=seed), seed)
    app = rt.deploy("jdata { int v as logger; }", app_name="a")
    for node, start, length in _disjoint(outages):
        rt.inject_failure(node, start, start + length)
    written = {"d1.1": [], "d1.2": []}

    def write(dev, k):
        app.logger_write(dev, "v", k)
        written[dev].append(k)

    for k, t in enumerate(times):
        dev = "d1.1" if k % 2 == 0 else "d1.2"
        rt.sim.schedule(t, "w", dev, "", lambda dev=dev, k=k: write(dev, k))
    rt.run()
    got = app.logger_records("f1", "v")
    for dev, values in written.items():
        recs = got.get(dev, [])
        assert [r.value for r in recs] == values
        assert [r.seq for r in recs] == sorted(r.seq for r in recs)


def connected_subset(data, topo):
    """Random connected node set: a root plus a random down-closed part of its subtree."""
    root = data.draw(st.sampled_from(sorted(topo.nodes)))
    keep, frontier = [root], [root]
    while frontier:
        node = frontier.pop(0)
        for child in topo.children(node):
            if data.draw(st.booleans()):
                keep.append(child)
                frontier.append(child)
    return keep


@CASES
@given(st.integers(1, 3), st.integers(1, 3), st.data())
def test_ctrl2ctrl_subtree_only(fogs, per_fog, data):
    count("ctrl2ctrl")
    rt = Runtime(make_tree(fogs, per_fog), 0)
    app = rt.deploy("jasync function f() { }", nodes=connected_subset(data, rt.topology), app_name="a")
    app.register_handler("f", "noop")
    nodes = sorted(app.nodes)
    caller = data.draw(st.sampled_from(nodes))
    target = data.draw(st.sampled_from(nodes))
    if target in app.ancestry(caller)[1:]:
        with pytest.raises(SubtreeViolation):
            app.call_async(caller, "f", target=target)
    elif target in app.subtree(caller):
        app.call_async(caller, "f", target=target)
    else:
        with pytest.raises(SubtreeViolation):
            app.call_async(caller, "f", target=target)


@CASES
@given(st.integers(1, 3), st.integers(1, 3), st.sampled_from(["device", "fog", "cloud"]), st.booleans(),
       st.data())
def test_flow_restrictions(fogs, per_fog, level, same, data):
    count("flow")
    rt = Runtime(make_tree(fogs, per_fog), 0)
    na = connected_subset(data, rt.topology)
    nb = na if same else connected_subset(data, rt.topology)
    a = rt.deploy("jdata { int x as logger; }", nodes=na, app_name="a")
    b = a if same else rt.deploy("jdata { int x as logger; }", nodes=nb, app_name="b")
    shared = sorted(n for n in set(na) & set(nb) if rt.topology.level(n).label == level)
    if same:
        with pytest.raises(SameAppViolation):
            rt.flow_connect(a, b, level)
    elif not shared:
        with pytest.raises(LevelViolation):
            rt.flow_connect(a, b, level)
    else:
        assert sorted(rt.flow_connect(a, b, level).nodes) == shared
