"""Recursive-descent parser for jdata / jcond / gated function declarations.

Only the added constructs are parsed.  Function bodies and any other
host-language text are captured verbatim and never interpreted.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import ast

KEYWORDS = {"jdata", "jcond", "jsync", "jasync"}
TWO_CHAR = {"==", "!=", "<=", ">=", "&&", "||"}
CMP_OPS = {"==", "!=", "<", "<=", ">", ">="}


class DslError(Exception):
    """Located failure raised while reading a program."""

    def __init__(self, kind: str, message: str, loc: ast.Loc):
        super().__init__(f"{loc}: {kind}: {message}")
        self.kind = kind
        self.message = message
        self.loc = loc


@dataclass
class Token:
    kind: str  # ident | number | string | op | eof
    text: str
    pos: int
    loc: ast.Loc


class Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _advance(self, n: int = 1):
        for _ in range(n):
            if self.pos >= len(self.text):
                return
            if self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _skip_trivia(self):
        t = self.text
        while self.pos < len(t):
            c = t[self.pos]
            if c.isspace():
                self._advance()
            elif t.startswith("//", self.pos):
                while self.pos < len(t) and t[self.pos] != "\n":
                    self._advance()
            elif t.startswith("/*", self.pos):
                loc = ast.Loc(self.line, self.col)
                end = t.find("*/", self.pos + 2)
                if end < 0:
                    raise DslError("SyntaxError", "unterminated comment", loc)
                self._advance(end + 2 - self.pos)
            else:
                return

    def next(self) -> Token:
        self._skip_trivia()
        t = self.text
        loc = ast.Loc(self.line, self.col)
        start = self.pos
        if self.pos >= len(t):
            return Token("eof", "", start, loc)
        c = t[self.pos]
        if c.isalpha() or c == "_":
            while self.pos < len(t) and (t[self.pos].isalnum() or t[self.pos] == "_"):
                self._advance()
            return Token("ident", t[start:self.pos], start, loc)
        if c.isdigit():
            while self.pos < len(t) and t[self.pos].isdigit():
                self._advance()
            if self.pos + 1 < len(t) and t[self.pos] == "." and t[self.pos + 1].isdigit():
                self._advance()
                while self.pos < len(t) and t[self.pos].isdigit():
                    self._advance()
            return Token("number", t[start:self.pos], start, loc)
        if c in "\"'":
            self._advance()
            while self.pos < len(t) and t[self.pos] != c:
                if t[self.pos] == "\n":
                    break
                if t[self.pos] == "\\":
                    self._advance()
                self._advance()
            if self.pos >= len(t) or t[self.pos] != c:
                raise DslError("SyntaxError", "unterminated string literal", loc)
            self._advance()
            return Token("string", t[start:self.pos], start, loc)
        if t[self.pos:self.pos + 2] in TWO_CHAR:
            self._advance(2)
            return Token("op", t[start:self.pos], start, loc)
        self._advance()
        return Token("op", c, start, loc)

    def skip_block(self, open_tok: Token) -> str:
        """Consume a brace block whose '{' is ``open_tok``; return its inner text."""
        self.pos, self.line, self.col = open_tok.pos, open_tok.loc.line, open_tok.loc.col
        self._advance()
        depth = 1
        inner_start = self.pos
        t = self.text
        while self.pos < len(t):
            c = t[self.pos]
            if t.startswith("//", self.pos) or t.startswith("/*", self.pos):
                self._skip_trivia()
                continue
            if c in "\"'`":
                self._advance()
                while self.pos < len(t) and t[self.pos] != c:
                    if t[self.pos] == "\\":
                        self._advance()
                    self._advance()
                self._advance()
                continue
            if c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    inner = t[inner_start:self.pos]
                    self._advance()
                    return inner
            self._advance()
        raise DslError("UnterminatedBlock", "no matching '}' for this block", open_tok.loc)


class Parser:
    def __init__(self, text: str, app_name: str = "app"):
        self.lexer = Lexer(text)
        self.text = text
        self.app_name = app_name
        self.tok = self.lexer.next()

    # token helpers

    def _next(self) -> Token:
        cur = self.tok
        self.tok = self.lexer.next()
        return cur

    def _is(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def _expect(self, text: str, what: str | None = None) -> Token:
        if not self._is(text):
            self._fail(f"expected {what or repr(text)}")
        return self._next()

    def _ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            self._fail(f"expected {what}")
        return self._next()

    def _fail(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise DslError("SyntaxError", f"{msg}, found {found}", tok.loc)

    def _block(self) -> str:
        if not self._is("{"):
            self._fail("expected '{'")
        body = self.lexer.skip_block(self.tok)
        self.tok = self.lexer.next()
        return body

    # program

    def parse(self) -> ast.ProgramDecl:
        prog = ast.ProgramDecl(self.app_name)
        while self.tok.kind != "eof":
            if self._is("jdata"):
                prog.items.append(self._data_block())
            elif self._is("jcond"):
                prog.items.append(self._cond_block())
            elif self._is("jsync") or self._is("jasync"):
                prog.items.append(self._function())
            else:
                prog.items.append(self._opaque())
        return prog

    def _opaque(self) -> ast.Opaque:
        first = self.tok
        end = first.pos
        while self.tok.kind != "eof":
            tok = self.tok
            if tok.kind == "op" and tok.text == "{":
                # `int f() { ... }` ends at its closing brace
                self.lexer.skip_block(tok)
                end = self.lexer.pos
                self.tok = self.lexer.next()
                break
            self._next()
            end = tok.pos + len(tok.text)
            if tok.kind == "op" and tok.text == ";":
                break
        return ast.Opaque(self.text[first.pos:end], first.loc)

    def _data_block(self) -> ast.DataBlock:
        kw = self._next()
        self._expect("{")
        decls = []
        while not self._is("}"):
            if self.tok.kind == "eof":
                raise DslError("UnterminatedBlock", "no matching '}' for jdata block", kw.loc)
            decls.append(self._data_decl())
        self._next()
        return ast.DataBlock(tuple(decls), kw.loc)

    def _data_decl(self) -> ast.DataDecl:
        ty = self._ident("scalar type")
        if ty.text not in ast.SCALAR_TYPES:
            raise DslError("UnknownType", f"unknown scalar type {ty.text!r}", ty.loc)
        name = self._ident("variable name")
        self._expect("as")
        kind = self._ident("data kind")
        levels: list[str] = []
        if kind.text == "logger":
            if self._is("("):
                self._next()
                while True:
                    lv = self._ident("logger level")
                    text = "device" if lv.text == "dev" else lv.text
                    if text not in ast.LEVELS:
                        raise DslError("UnknownLevel", f"unknown logger level {lv.text!r}", lv.loc)
                    levels.append(text)
                    if self._is("|"):
                        self._next()
                        continue
                    break
                self._expect(")")
        elif kind.text != "broadcaster":
            raise DslError("UnknownKind", f"unknown jdata kind {kind.text!r}", kind.loc)
        self._expect(";")
        return ast.DataDecl(name.text, ty.text, kind.text, tuple(levels), ty.loc)

    def _cond_block(self) -> ast.CondBlock:
        kw = self._next()
        self._expect("{")
        decls = []
        while not self._is("}"):
            if self.tok.kind == "eof":
                raise DslError("UnterminatedBlock", "no matching '}' for jcond block", kw.loc)
            name = self._ident("condition name")
            self._expect(":")
            expr = self._or()
            self._expect(";")
            decls.append(ast.CondDecl(name.text, expr, name.loc))
        self._next()
        return ast.CondBlock(tuple(decls), kw.loc)

    # condition expressions

    def _or(self):
        left = self._and()
        while self._is("||"):
            op = self._next()
            left = ast.Logical("||", left, self._and(), op.loc)
        return left

    def _and(self):
        left = self._unary()
        while self._is("&&"):
            op = self._next()
            left = ast.Logical("&&", left, self._unary(), op.loc)
        return left

    def _unary(self):
        if self._is("("):
            self._next()
            inner = self._or()
            self._expect(")")
            return inner
        left = self._operand()
        if not (self.tok.kind == "op" and self.tok.text in CMP_OPS):
            self._fail("expected comparison operator")
        op = self._next()
        right = self._operand()
        return ast.Compare(op.text, left, right, op.loc)

    def _operand(self):
        tok = self.tok
        if tok.kind == "number":
            self._next()
            if "." in tok.text:
                return ast.Literal(float(tok.text), "double", tok.loc)
            return ast.Literal(int(tok.text), "int", tok.loc)
        if tok.kind == "string":
            if tok.text[0] != '"':
                self._fail("expected double-quoted string")
            self._next()
            return ast.Literal(tok.text[1:-1], "string", tok.loc)
        if tok.kind == "op" and tok.text == "-":
            self._next()
            num = self.tok
            if num.kind != "number":
                self._fail("expected number after '-'")
            lit = self._operand()
            return ast.Literal(-lit.value, lit.type, tok.loc)
        if tok.kind == "ident":
            self._next()
            if tok.text == "sys" and self._is("."):
                self._next()
                attr = self._ident("system attribute")
                return ast.SysRef(attr.text, tok.loc)
            return ast.VarRef(tok.text, tok.loc)
        self._fail("expected operand")

    # gates and functions

    def _gate(self):
        self._expect("{")
        g = self._gate_or()
        self._expect("}")
        return g

    def _gate_or(self):
        left = self._gate_and()
        while self._is("||"):
            op = self._next()
            left = ast.GateOp("||", left, self._gate_and(), op.loc)
        return left

    def _gate_and(self):
        left = self._gate_atom()
        while self._is("&&"):
            op = self._next()
            left = ast.GateOp("&&", left, self._gate_atom(), op.loc)
        return left

    def _gate_atom(self):
        if self._is("("):
            self._next()
            g = self._gate_or()
            self._expect(")")
            return g
        name = self._ident("condition name")
        return ast.GateRef(name.text, name.loc)

    def _function(self) -> ast.FuncDecl:
        kw = self._next()
        gate = None
        after = False
        if self._is("{"):
            gate = self._gate()
        ret = None
        if self._is("function"):
            style = "js"
            self._next()
            if self._is("{"):
                if gate is not None:
                    self._fail("function already has a gate")
                gate = self._gate()
                after = True
            name = self._ident("function name")
        else:
            style = "c"
            ret_tok = self._ident("'function' or return type")
            ret = ret_tok.text
            if self._is("{"):
                if gate is not None:
                    self._fail("function already has a gate")
                gate = self._gate()
                after = True
            name = self._ident("function name")
        params: list[ast.Param] = []
        has_parens = False
        if self._is("("):
            has_parens = True
            self._next()
            while not self._is(")"):
                first = self._ident("parameter")
                if self.tok.kind == "ident":
                    params.append(ast.Param(self._next().text, first.text))
                else:
                    params.append(ast.Param(first.text, None))
                if self._is(","):
                    self._next()
                elif not self._is(")"):
                    self._fail("expected ',' or ')'")
            self._next()
        if style == "js" and self._is(":"):
            self._next()
            ret = self._ident("return type").text
        if style == "c" and ret == "void":
            ret = "void"
        body = self._block()
        return ast.FuncDecl(name.text, kw.text, gate, after, tuple(params), has_parens, ret, style, body, kw.loc)


def parse_program(source_text: str, app_name: str = "app") -> ast.ProgramDecl:
    return Parser(source_text, app_name).parse()
