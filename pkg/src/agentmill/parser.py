"""Recursive-descent parser producing ScriptAst from a token stream."""

from __future__ import annotations

from .ast_nodes import (
    Binary, Call, ConstDecl, FieldDecl, Foreach, If, Literal, LocalEffectAssign,
    MemberAccess, NameRef, Pos, RemoteEffectAssign, ScriptAst, SpawnInit, ThisRef,
    Unary,
)
from .errors import ParseError
from .lexer import ScriptSource, Token, tokenize

BUILTIN_CALLS = {"abs", "rand", "min", "max"}
COMBINATORS = {"sum", "min", "max"}

_BINOPS_BY_LEVEL = [
    ("||",),
    ("&&",),
    ("==", "!=", "<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/"),
]


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0

    # -- token helpers --

    def cur(self) -> Token:
        return self.toks[self.pos]

    def peek(self, offset=1) -> Token:
        i = min(self.pos + offset, len(self.toks) - 1)
        return self.toks[i]

    def advance(self) -> Token:
        t = self.cur()
        if t.kind != "eof":
            self.pos += 1
        return t

    def at_op(self, op: str) -> bool:
        t = self.cur()
        return t.kind == "op" and t.value == op

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            t = self.cur()
            raise ParseError(f"expected {op!r}, got {t.value!r}", t.line, t.col, (op,))
        return self.advance()

    def expect_kind(self, kind: str) -> Token:
        t = self.cur()
        if t.kind != kind:
            raise ParseError(f"expected {kind}, got {t.value!r}", t.line, t.col, (kind,))
        return self.advance()

    def _pos(self) -> Pos:
        t = self.cur()
        return Pos(t.line, t.col)

    # -- grammar --

    def script(self) -> ScriptAst:
        self.expect_kind("class")
        name = self.expect_kind("ident").value
        self.expect_op("{")
        fields = []
        run_body = None
        die_when = None
        spawn_when = None
        spawn_inits = ()
        while not self.at_op("}"):
            t = self.cur()
            if t.kind in ("public", "private"):
                if self.peek().kind == "void":
                    if run_body is not None:
                        raise ParseError("duplicate run() method", t.line, t.col)
                    run_body = self.run_method()
                else:
                    fields.append(self.field_decl())
            elif t.kind == "die":
                if die_when is not None:
                    raise ParseError("duplicate die clause", t.line, t.col)
                die_when = self.die_clause()
            elif t.kind == "spawn":
                if spawn_when is not None:
                    raise ParseError("duplicate spawn clause", t.line, t.col)
                spawn_when, spawn_inits = self.spawn_clause()
            else:
                raise ParseError(
                    f"expected field, run(), die, or spawn declaration, got {t.value!r}",
                    t.line, t.col, ("public", "private", "die", "spawn"))
        self.expect_op("}")
        if run_body is None:
            t = self.cur()
            raise ParseError("class has no run() method", t.line, t.col)
        return ScriptAst(class_name=name, fields=tuple(fields), run_body=tuple(run_body),
                         die_when=die_when, spawn_when=spawn_when,
                         spawn_inits=tuple(spawn_inits))

    def type_name(self) -> str:
        t = self.cur()
        if t.kind in ("float", "int"):
            return self.advance().value
        if t.kind == "ident":
            return self.advance().value  # agent class reference type
        raise ParseError(f"expected a type, got {t.value!r}", t.line, t.col,
                         ("float", "int", "ident"))

    def field_decl(self) -> FieldDecl:
        pos = self._pos()
        visibility = self.advance().kind          # public | private
        t = self.cur()
        if t.kind not in ("state", "effect"):
            raise ParseError(f"expected 'state' or 'effect', got {t.value!r}",
                             t.line, t.col, ("state", "effect"))
        kind = self.advance().kind
        value_type = self.type_name()
        name = self.expect_kind("ident").value
        update_expr = None
        combinator = None
        if self.at_op(":"):
            self.advance()
            if kind == "effect":
                ct = self.expect_kind("ident")
                if ct.value not in COMBINATORS:
                    raise ParseError(f"unknown combinator {ct.value!r}", ct.line, ct.col,
                                     tuple(COMBINATORS))
                combinator = ct.value
            else:
                update_expr = self.expr()
        self.expect_op(";")
        range_constraint = None
        if self.at_op("#range"):
            self.advance()
            self.expect_op("[")
            lo = self.signed_number()
            self.expect_op(",")
            hi = self.signed_number()
            self.expect_op("]")
            self.expect_op(";")
            range_constraint = (lo, hi)
        return FieldDecl(visibility=visibility, kind=kind, value_type=value_type,
                         name=name, update_expr=update_expr, combinator=combinator,
                         range_constraint=range_constraint, pos=pos)

    def signed_number(self) -> float:
        neg = False
        if self.at_op("-"):
            self.advance()
            neg = True
        t = self.cur()
        if t.kind not in ("int", "float"):
            raise ParseError(f"expected a number, got {t.value!r}", t.line, t.col,
                             ("int", "float"))
        self.advance()
        v = float(t.value)
        return -v if neg else v

    def run_method(self) -> list:
        self.advance()                      # public/private
        self.expect_kind("void")
        name = self.expect_kind("ident")
        if name.value != "run":
            raise ParseError(f"only run() is supported, got {name.value!r}",
                             name.line, name.col, ("run",))
        self.expect_op("(")
        self.expect_op(")")
        return self.block()

    def die_clause(self):
        self.expect_kind("die")
        self.expect_kind("when")
        self.expect_op("(")
        e = self.expr()
        self.expect_op(")")
        self.expect_op(";")
        return e

    def spawn_clause(self):
        self.expect_kind("spawn")
        self.expect_kind("when")
        self.expect_op("(")
        cond = self.expr()
        self.expect_op(")")
        inits = []
        if self.at_op("{"):
            self.advance()
            while not self.at_op("}"):
                pos = self._pos()
                name = self.expect_kind("ident").value
                self.expect_op("=")
                e = self.expr()
                self.expect_op(";")
                inits.append(SpawnInit(name=name, expr=e, pos=pos))
            self.expect_op("}")
        else:
            self.expect_op(";")
        return cond, inits

    def block(self) -> list:
        self.expect_op("{")
        stmts = []
        while not self.at_op("}"):
            stmts.append(self.stmt())
        self.expect_op("}")
        return stmts

    def stmt(self):
        t = self.cur()
        pos = Pos(t.line, t.col)
        if t.kind == "const":
            self.advance()
            value_type = self.type_name()
            name = self.expect_kind("ident").value
            self.expect_op("=")
            e = self.expr()
            self.expect_op(";")
            return ConstDecl(value_type=value_type, name=name, expr=e, pos=pos)
        if t.kind == "if":
            return self.if_stmt()
        if t.kind == "foreach":
            return self.foreach_stmt()
        # effect assignment: postfix expression followed by <- (or a rejected '=')
        target = self.postfix()
        if self.at_op("<-"):
            arrow = True
        elif self.at_op("="):
            arrow = False  # parsed so semantic analysis can reject it with R1/R3
        else:
            tt = self.cur()
            raise ParseError(f"expected '<-', got {tt.value!r}", tt.line, tt.col, ("<-",))
        self.advance()
        e = self.expr()
        self.expect_op(";")
        if isinstance(target, NameRef):
            return LocalEffectAssign(name=target.name, expr=e, arrow=arrow, pos=pos)
        if isinstance(target, MemberAccess):
            return RemoteEffectAssign(target=target.target, name=target.name, expr=e,
                                      arrow=arrow, pos=pos)
        raise ParseError("assignment target must be a field or a member access",
                         pos.line, pos.col)

    def if_stmt(self):
        pos = self._pos()
        self.expect_kind("if")
        self.expect_op("(")
        cond = self.expr()
        self.expect_op(")")
        then_body = self.block()
        else_body = []
        if self.cur().kind == "else":
            self.advance()
            if self.cur().kind == "if":
                else_body = [self.if_stmt()]
            else:
                else_body = self.block()
        return If(cond=cond, then_body=tuple(then_body), else_body=tuple(else_body), pos=pos)

    def foreach_stmt(self):
        pos = self._pos()
        self.expect_kind("foreach")
        self.expect_op("(")
        class_name = self.expect_kind("ident").value
        var = self.expect_kind("ident").value
        self.expect_op(":")
        self.expect_kind("Extent")
        self.expect_op("<")
        extent_class = self.expect_kind("ident").value
        self.expect_op(">")
        self.expect_op(")")
        if extent_class != class_name:
            raise ParseError(
                f"foreach variable type {class_name!r} must match Extent<{extent_class}>",
                pos.line, pos.col)
        body = self.block()
        return Foreach(class_name=class_name, var=var, body=tuple(body), pos=pos)

    # -- expressions (precedence climbing) --

    def expr(self):
        return self._binary(0)

    def _binary(self, level: int):
        if level >= len(_BINOPS_BY_LEVEL):
            return self.unary()
        ops = _BINOPS_BY_LEVEL[level]
        left = self._binary(level + 1)
        while self.cur().kind == "op" and self.cur().value in ops:
            pos = self._pos()
            op = self.advance().value
            right = self._binary(level + 1)
            left = Binary(op=op, left=left, right=right, pos=pos)
        return left

    def unary(self):
        t = self.cur()
        if t.kind == "op" and t.value in ("-", "!"):
            pos = self._pos()
            self.advance()
            return Unary(op=t.value, operand=self.unary(), pos=pos)
        return self.postfix()

    def postfix(self):
        e = self.primary()
        while self.at_op("."):
            pos = self._pos()
            self.advance()
            name = self.expect_kind("ident").value
            e = MemberAccess(target=e, name=name, pos=pos)
        return e

    def primary(self):
        t = self.cur()
        pos = Pos(t.line, t.col)
        if t.kind == "int":
            self.advance()
            return Literal(value=int(t.value), is_int=True, pos=pos)
        if t.kind == "float":
            self.advance()
            return Literal(value=float(t.value), is_int=False, pos=pos)
        if t.kind == "this":
            self.advance()
            return ThisRef(pos=pos)
        if t.kind == "ident":
            if t.value in BUILTIN_CALLS and self.peek().kind == "op" and self.peek().value == "(":
                self.advance()
                self.advance()
                args = []
                if not self.at_op(")"):
                    args.append(self.expr())
                    while self.at_op(","):
                        self.advance()
                        args.append(self.expr())
                self.expect_op(")")
                return Call(fn=t.value, args=tuple(args), pos=pos)
            self.advance()
            return NameRef(name=t.value, pos=pos)
        if self.at_op("("):
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        raise ParseError(f"expected an expression, got {t.value!r}", t.line, t.col,
                         ("expression",))


def parse_script(tokens: list[Token]) -> ScriptAst:
    p = _Parser(tokens)
    ast = p.script()
    t = p.cur()
    if t.kind != "eof":
        raise ParseError(f"trailing input after class body: {t.value!r}", t.line, t.col)
    return ast


def parse_source(src) -> ScriptAst:
    if isinstance(src, str):
        src = ScriptSource(text=src)
    return parse_script(tokenize(src))
