from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgetree.dsl import (
    Blocked,
    DslError,
    EvaluationError,
    NodeContext,
    Ready,
    ast,
    check_source,
    evaluate_condition,
    evaluate_gate,
    format_program,
    parse_program,
    validate_program,
)

LISTINGS = Path(__file__).parent / "listings"
CORPUS = ["broadcast_fogonly", "broadcast_cloudonly", "broadcast_pickpe", "thermostat_lowtemp",
          "placement_deviceonly", "placement_loadbalanced", "filtering_vehicletemps", "failover_savestate"]


def listing(name):
    return (LISTINGS / f"{name}.jd").read_text()


def cond_expr(text):
    prog = parse_program("jcond { c: " + text + "; }")
    return prog.cond_decls[0].expr


def test_thermostat_structure():
    prog = parse_program(listing("thermostat_lowtemp"))
    (temp,) = prog.data_decls
    assert (temp.name, temp.kind, temp.level, temp.scalar_type) == ("temp", "logger", "fog", "double")
    assert [c.name for c in prog.cond_decls] == ["lowtemp"]
    (fn,) = prog.func_decls
    assert fn.call_kind == "jasync" and ast.gate_names(fn.gate) == ["lowtemp"]


def test_broadcaster_only():
    prog = parse_program("jdata { double x as broadcaster; }")
    assert [(d.name, d.kind, d.level) for d in prog.data_decls] == [("x", "broadcaster", None)]
    assert not prog.cond_decls and not prog.func_decls


def test_empty_program():
    prog = parse_program("")
    assert prog.items == []


def test_unknown_level_located():
    with pytest.raises(DslError) as e:
        parse_program("jdata { double x as logger(moon); }")
    assert e.value.kind == "UnknownLevel"
    assert (e.value.loc.line, e.value.loc.col) == (1, 28)


def test_logger_levels():
    prog = parse_program(listing("logger_decl"))
    d = prog.data_decls[0]
    assert d.levels == ("cloud", "fog") and d.level == "cloud"
    assert parse_program("jdata { int y as logger; }").data_decls[0].level == "fog"


@pytest.mark.parametrize("name", CORPUS + ["logger_decl", "broadcaster_decl"])
def test_corpus_validates_and_round_trips(name):
    prog, diags = check_source(listing(name))
    assert diags == []
    again = parse_program(format_program(prog))
    assert again.structure() == prog.structure()


def test_both_gate_placements():
    a = parse_program('jcond { g: sys.type == "fog"; } jasync {g} function f() { }').func_decls[0]
    b = parse_program('jcond { g: sys.type == "fog"; } jasync function {g} f() { }').func_decls[0]
    assert a.gate == b.gate
    assert not a.gate_after_keyword and b.gate_after_keyword


def test_unresolved_cond():
    prog = parse_program("jasync {foo} function f() { }")
    diags = validate_program(prog)
    assert [d.kind for d in diags] == ["UnresolvedCond"]
    assert "foo" in diags[0].message


def test_type_mismatch():
    prog = parse_program('jdata { int t as logger; } jcond { c: t == "hot"; }')
    assert [d.kind for d in validate_program(prog)] == ["TypeMismatch"]


def test_unresolved_var_and_sync_return():
    prog = parse_program("jcond { c: ghost < 3; } jsync function f() { }")
    assert sorted(d.kind for d in validate_program(prog)) == ["MissingReturnType", "UnresolvedVar"]
    assert validate_program(parse_program("jsync int f() { }")) == []


def test_duplicate_names():
    prog = parse_program("jdata { int a as logger; int a as broadcaster; }")
    assert [d.kind for d in validate_program(prog)] == ["DuplicateName"]


def test_diagnostic_format():
    _, diags = check_source("jdata { double x as logger(moon); }")
    assert diags[0].format("x.jd") == "x.jd:1:28: UnknownLevel: unknown logger level 'moon'"


# evaluation

def ctx(sys_type="fog", rank=0, brd=None, logs=None, kinds=None):
    kinds = dict(kinds or {})
    for k in brd or {}:
        kinds.setdefault(k, "broadcaster")
    for k in logs or {}:
        kinds.setdefault(k, "logger")
    return NodeContext(sys_type, rank, kinds, brd or {}, logs or {})


def test_load_check_ready_true():
    expr = cond_expr('sys.type == "fog" && load < 50')
    assert evaluate_condition(expr, ctx("fog", logs={"load": [("d1", 1.0, 30)]})) == Ready(True)


def test_pickpe_blocked_without_delivery():
    prog = parse_program(listing("broadcast_pickpe"))
    expr = prog.cond("pickpe").expr
    assert evaluate_condition(expr, ctx("device", 3, kinds={"pe": "broadcaster"})) == Blocked("pe")
    assert evaluate_condition(expr, ctx("device", 3, brd={"pe": 2.0})) == Ready(True)


def test_latest_among_latest():
    expr = cond_expr("temp < 18.5")
    c = ctx("fog", logs={"temp": [("d1", 5.0, 20.1), ("d2", 9.0, 17.0)]})
    assert evaluate_condition(expr, c) == Ready(True)


def test_dev_alias():
    expr = parse_program(listing("thermostat_lowtemp")).cond("lowtemp").expr
    assert evaluate_condition(expr, ctx("device", logs={"temp": [("d", 0.0, 10.0)]})) == Ready(True)


def test_unknown_variable_is_error():
    with pytest.raises(EvaluationError):
        evaluate_condition(cond_expr("x < 1"), ctx())


def test_false_and_blocked_short_circuits():
    c = ctx("device", kinds={"pe": "broadcaster"})
    assert evaluate_condition(cond_expr('sys.type == "fog" && pe < 1'), c) == Ready(False)
    assert evaluate_condition(cond_expr('sys.type == "device" || pe < 1'), c) == Ready(True)
    assert evaluate_condition(cond_expr('pe < 1 && sys.type == "fog"'), c) == Ready(False)
    assert evaluate_condition(cond_expr('pe < 1 || sys.type == "fog"'), c) == Blocked("pe")


def test_gate_none_is_ready():
    assert evaluate_gate(None, {}, ctx()) == Ready(True)


# three-valued logic over random expressions

ATOMS = {
    "t": ('sys.type == "fog"', Ready(True)),
    "f": ('sys.type == "cloud"', Ready(False)),
    "b": ("pe < 1", Blocked("pe")),
}


def exprs():
    leaf = st.sampled_from(sorted(ATOMS))
    return st.recursive(leaf, lambda inner: st.tuples(st.sampled_from(["&&", "||"]), inner, inner), max_leaves=8)


def render(e):
    if isinstance(e, str):
        return ATOMS[e][0]
    op, a, b = e
    return f"({render(a)}) {op} ({render(b)})"


def kleene(e):
    if isinstance(e, str):
        v = ATOMS[e][1]
        return None if isinstance(v, Blocked) else v.value
    op, a, b = e
    x, y = kleene(a), kleene(b)
    if op == "&&":
        if x is False or y is False:
            return False
        return None if None in (x, y) else True
    if x is True or y is True:
        return True
    return None if None in (x, y) else False


@settings(max_examples=300, deadline=None)
@given(exprs())
def test_three_valued_semantics(e):
    text = render(e)
    res = evaluate_condition(cond_expr(text), ctx("fog", kinds={"pe": "broadcaster"}))
    want = kleene(e)
    if want is None:
        assert res == Blocked("pe")
    else:
        assert res == Ready(want)


@settings(max_examples=300, deadline=None)
@given(exprs())
def test_complete_context_never_blocks(e):
    res = evaluate_condition(cond_expr(render(e)), ctx("fog", brd={"pe": 0.5}))
    assert isinstance(res, Ready)
