"""Canonical source rendering of a parsed program."""
from __future__ import annotations

from . import ast

_PREC = {"||": 1, "&&": 2}


def _literal(lit: ast.Literal) -> str:
    if lit.type == "string":
        return f'"{lit.value}"'
    return repr(lit.value)


def format_expr(expr) -> str:
    if isinstance(expr, ast.Literal):
        return _literal(expr)
    if isinstance(expr, ast.VarRef):
        return expr.name
    if isinstance(expr, ast.SysRef):
        return f"sys.{expr.attr}"
    if isinstance(expr, ast.Compare):
        return f"{format_expr(expr.left)} {expr.op} {format_expr(expr.right)}"
    if isinstance(expr, (ast.Logical, ast.GateOp)):
        return f"{_side(expr.left, expr.op, False)} {expr.op} {_side(expr.right, expr.op, True)}"
    if isinstance(expr, ast.GateRef):
        return expr.name
    raise TypeError(expr)


def _side(child, op: str, right: bool) -> str:
    text = format_expr(child)
    if isinstance(child, (ast.Logical, ast.GateOp)):
        if _PREC[child.op] < _PREC[op] or (right and _PREC[child.op] == _PREC[op]):
            return f"({text})"
    return text


def format_gate(gate) -> str:
    # gates print without spaces, matching `{loadCheck||cloudRun}`
    return "{" + format_expr(gate).replace(" ", "") + "}"


def format_program(prog: ast.ProgramDecl) -> str:
    out: list[str] = []
    for item in prog.items:
        if isinstance(item, ast.DataBlock):
            out.append("jdata {")
            for d in item.decls:
                kind = d.kind
                if d.kind == "logger" and d.levels:
                    kind += "(" + "|".join(d.levels) + ")"
                out.append(f"    {d.scalar_type} {d.name} as {kind};")
            out.append("}")
        elif isinstance(item, ast.CondBlock):
            out.append("jcond {")
            for c in item.decls:
                out.append(f"    {c.name}: {format_expr(c.expr)};")
            out.append("}")
        elif isinstance(item, ast.FuncDecl):
            out.append(_format_func(item))
        else:
            out.append(item.text)
    return "\n".join(out) + ("\n" if out else "")


def _format_func(fn: ast.FuncDecl) -> str:
    parts = [fn.call_kind]
    gate = format_gate(fn.gate) if fn.gate is not None else None
    if gate and not fn.gate_after_keyword:
        parts.append(gate)
    parts.append("function" if fn.style == "js" else fn.return_type)
    if gate and fn.gate_after_keyword:
        parts.append(gate)
    head = " ".join(parts) + " " + fn.name
    if fn.has_parens:
        head += "(" + ", ".join(f"{p.type} {p.name}" if p.type else p.name for p in fn.params) + ")"
    if fn.style == "js" and fn.return_type:
        head += f": {fn.return_type}"
    return head + " {" + fn.body + "}"
