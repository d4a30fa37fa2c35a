"""Syntax tree for the declaration language.

Locations are excluded from equality so that two parses of the same
program text, or of its pretty-printed form, compare equal.
"""
from __future__ import annotations

from dataclasses import dataclass, field

LEVELS = ("device", "fog", "cloud")
SCALAR_TYPES = ("int", "double", "string")


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


NOLOC = Loc(0, 0)


def _loc():
    return field(default=NOLOC, compare=False, repr=False)


# condition expressions

@dataclass(frozen=True)
class Literal:
    value: object
    type: str  # int | double | string
    loc: Loc = _loc()


@dataclass(frozen=True)
class VarRef:
    name: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class SysRef:
    attr: str  # type | rank
    loc: Loc = _loc()


@dataclass(frozen=True)
class Compare:
    op: str
    left: object
    right: object
    loc: Loc = _loc()


@dataclass(frozen=True)
class Logical:
    op: str  # && | ||
    left: object
    right: object
    loc: Loc = _loc()


# gates: boolean combinations of condition names

@dataclass(frozen=True)
class GateRef:
    name: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class GateOp:
    op: str
    left: object
    right: object
    loc: Loc = _loc()


# declarations

@dataclass(frozen=True)
class DataDecl:
    name: str
    scalar_type: str
    kind: str  # logger | broadcaster
    levels: tuple = ()
    loc: Loc = _loc()

    @property
    def level(self) -> str | None:
        """Storage level of a logger; fog when the declaration names none."""
        if self.kind != "logger":
            return None
        return self.levels[0] if self.levels else "fog"


@dataclass(frozen=True)
class CondDecl:
    name: str
    expr: object
    loc: Loc = _loc()


@dataclass(frozen=True)
class Param:
    name: str
    type: str | None = None


@dataclass(frozen=True)
class FuncDecl:
    name: str
    call_kind: str  # jsync | jasync
    gate: object = None
    gate_after_keyword: bool = False  # `jasync function {g} f` rather than `jasync {g} function f`
    params: tuple = ()
    has_parens: bool = True
    return_type: str | None = None
    style: str = "js"  # js: `function f()`, c: `int f()`
    body: str = ""
    loc: Loc = _loc()


@dataclass(frozen=True)
class Opaque:
    """Host-language text between declarations, kept verbatim."""
    text: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class DataBlock:
    decls: tuple
    loc: Loc = _loc()


@dataclass(frozen=True)
class CondBlock:
    decls: tuple
    loc: Loc = _loc()


@dataclass
class ProgramDecl:
    app_name: str = "app"
    items: list = field(default_factory=list)

    @property
    def data_decls(self) -> list[DataDecl]:
        return [d for it in self.items if isinstance(it, DataBlock) for d in it.decls]

    @property
    def cond_decls(self) -> list[CondDecl]:
        return [d for it in self.items if isinstance(it, CondBlock) for d in it.decls]

    @property
    def func_decls(self) -> list[FuncDecl]:
        return [it for it in self.items if isinstance(it, FuncDecl)]

    def data(self, name: str) -> DataDecl | None:
        return next((d for d in self.data_decls if d.name == name), None)

    def cond(self, name: str) -> CondDecl | None:
        return next((c for c in self.cond_decls if c.name == name), None)

    def func(self, name: str) -> FuncDecl | None:
        return next((f for f in self.func_decls if f.name == name), None)

    def structure(self):
        """Location-free comparable form."""
        return (self.app_name, tuple(self.items))


def gate_names(gate) -> list[str]:
    if gate is None:
        return []
    if isinstance(gate, GateRef):
        return [gate.name]
    return gate_names(gate.left) + gate_names(gate.right)


def expr_vars(expr) -> list[VarRef]:
    if isinstance(expr, VarRef):
        return [expr]
    if isinstance(expr, (Compare, Logical)):
        return expr_vars(expr.left) + expr_vars(expr.right)
    return []


def to_json(node):
    """Plain-data rendering used by the ``parse`` subcommand."""
    if isinstance(node, ProgramDecl):
        return {"app_name": node.app_name, "items": [to_json(i) for i in node.items]}
    if isinstance(node, (list, tuple)):
        return [to_json(i) for i in node]
    if hasattr(node, "__dataclass_fields__"):
        out = {"node": type(node).__name__}
        for name in node.__dataclass_fields__:
            val = getattr(node, name)
            out[name] = str(val) if isinstance(val, Loc) else to_json(val)
        return out
    return node
