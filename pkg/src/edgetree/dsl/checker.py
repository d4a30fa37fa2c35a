"""Static checks and runtime evaluation of conditions and gates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import ast
from .parser import DslError, parse_program

SYS_ATTRS = {"type": "string", "rank": "number"}
TYPE_ALIASES = {"dev": "device"}


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str
    loc: ast.Loc

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.loc.line}:{self.loc.col}: {self.kind}: {self.message}"


def _operand_type(node, program: ast.ProgramDecl, diags: list) -> str | None:
    if isinstance(node, ast.Literal):
        return "string" if node.type == "string" else "number"
    if isinstance(node, ast.SysRef):
        if node.attr not in SYS_ATTRS:
            diags.append(Diagnostic("UnknownSysAttr", f"unknown system attribute sys.{node.attr}", node.loc))
            return None
        return SYS_ATTRS[node.attr]
    if isinstance(node, ast.VarRef):
        decl = program.data(node.name)
        if decl is None:
            diags.append(Diagnostic("UnresolvedVar", f"{node.name!r} is not a declared jdata variable", node.loc))
            return None
        return "string" if decl.scalar_type == "string" else "number"
    return None


def _check_expr(expr, program, diags):
    if isinstance(expr, ast.Logical):
        _check_expr(expr.left, program, diags)
        _check_expr(expr.right, program, diags)
    elif isinstance(expr, ast.Compare):
        lt = _operand_type(expr.left, program, diags)
        rt = _operand_type(expr.right, program, diags)
        if lt and rt and lt != rt:
            diags.append(Diagnostic("TypeMismatch", f"cannot compare {lt} with {rt}", expr.loc))


def validate_program(decl: ast.ProgramDecl) -> list[Diagnostic]:
    """Empty list iff every reference resolves and every comparison type-checks."""
    diags: list[Diagnostic] = []
    for space, items in (("data", decl.data_decls), ("cond", decl.cond_decls), ("function", decl.func_decls)):
        seen = set()
        for it in items:
            if it.name in seen:
                diags.append(Diagnostic("DuplicateName", f"{space} name {it.name!r} declared twice", it.loc))
            seen.add(it.name)
    for cond in decl.cond_decls:
        _check_expr(cond.expr, decl, diags)
    conds = {c.name for c in decl.cond_decls}
    for fn in decl.func_decls:
        for ref in _gate_refs(fn.gate):
            if ref.name not in conds:
                diags.append(Diagnostic("UnresolvedCond", f"gate references undeclared condition {ref.name!r}", ref.loc))
        if fn.call_kind == "jsync" and fn.return_type in (None, "void"):
            diags.append(Diagnostic("MissingReturnType", f"jsync function {fn.name!r} must declare a return type", fn.loc))
        if fn.call_kind == "jasync" and fn.return_type not in (None, "void"):
            diags.append(Diagnostic("UnexpectedReturnType", f"jasync function {fn.name!r} cannot return a value", fn.loc))
    return diags


def _gate_refs(gate) -> list[ast.GateRef]:
    if gate is None:
        return []
    if isinstance(gate, ast.GateRef):
        return [gate]
    return _gate_refs(gate.left) + _gate_refs(gate.right)


def check_source(text: str, app_name: str = "app") -> tuple[ast.ProgramDecl | None, list[Diagnostic]]:
    """Parse and validate; parse failures come back as a single diagnostic."""
    try:
        prog = parse_program(text, app_name)
    except DslError as e:
        return None, [Diagnostic(e.kind, e.message, e.loc)]
    return prog, validate_program(prog)


# evaluation

@dataclass(frozen=True)
class Ready:
    value: bool


@dataclass(frozen=True)
class Blocked:
    missing_var: str


class EvaluationError(LookupError):
    """A condition referenced a variable the context knows nothing about."""


@dataclass
class NodeContext:
    """What a node can see when it evaluates a condition.

    ``loggers`` maps a logger name to its per-source latest entries
    ``(source, timestamp_ms, value)``; ``broadcasters`` holds only values
    actually delivered to this node.
    """
    sys_type: str
    sys_rank: int = 0
    kinds: Mapping[str, str] = field(default_factory=dict)
    broadcasters: Mapping[str, object] = field(default_factory=dict)
    loggers: Mapping[str, Sequence[tuple]] = field(default_factory=dict)


def logger_value(entries: Sequence[tuple]):
    """Latest value among the per-source latest values."""
    return max(entries, key=lambda e: (e[1], str(e[0])))[2]


def _canon_type(value: str) -> str:
    return TYPE_ALIASES.get(value, value)


def _operand(node, ctx: NodeContext):
    if isinstance(node, ast.Literal):
        return node.value
    if isinstance(node, ast.SysRef):
        if node.attr == "type":
            return _canon_type(ctx.sys_type)
        if node.attr == "rank":
            return ctx.sys_rank
        raise EvaluationError(f"unknown system attribute sys.{node.attr}")
    name = node.name
    kind = ctx.kinds.get(name)
    if kind == "broadcaster":
        if name not in ctx.broadcasters:
            return Blocked(name)
        return ctx.broadcasters[name]
    if kind == "logger":
        entries = ctx.loggers.get(name) or ()
        if not entries:
            return Blocked(name)
        return logger_value(entries)
    raise EvaluationError(f"variable {name!r} is not in the evaluation context")


_CMP = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _compare(expr: ast.Compare, ctx: NodeContext):
    a = _operand(expr.left, ctx)
    if isinstance(a, Blocked):
        return a
    b = _operand(expr.right, ctx)
    if isinstance(b, Blocked):
        return b
    # "dev" and "device" name the same level
    if isinstance(expr.left, ast.SysRef) and expr.left.attr == "type" and isinstance(b, str):
        b = _canon_type(b)
    if isinstance(expr.right, ast.SysRef) and expr.right.attr == "type" and isinstance(a, str):
        a = _canon_type(a)
    return Ready(bool(_CMP[expr.op](a, b)))


def _combine(op: str, left_fn, right_fn):
    # Kleene three-valued logic, evaluated left to right
    decisive = op == "||"
    left = left_fn()
    if isinstance(left, Ready) and left.value is decisive:
        return left
    right = right_fn()
    if isinstance(right, Ready) and right.value is decisive:
        return right
    if isinstance(left, Blocked):
        return left
    if isinstance(right, Blocked):
        return right
    return Ready(not decisive)


def evaluate_condition(expr, ctx: NodeContext):
    """Ready(bool) or Blocked(var) when a needed value has not arrived."""
    if isinstance(expr, ast.Compare):
        return _compare(expr, ctx)
    if isinstance(expr, ast.Logical):
        return _combine(expr.op, lambda: evaluate_condition(expr.left, ctx),
                        lambda: evaluate_condition(expr.right, ctx))
    raise TypeError(f"not a condition expression: {expr!r}")


def evaluate_gate(gate, conds: Mapping[str, object], ctx: NodeContext):
    """Evaluate a gate over named conditions; no gate means always Ready(True)."""
    if gate is None:
        return Ready(True)
    if isinstance(gate, ast.GateRef):
        return evaluate_condition(conds[gate.name], ctx)
    return _combine(gate.op, lambda: evaluate_gate(gate.left, conds, ctx),
                    lambda: evaluate_gate(gate.right, conds, ctx))
