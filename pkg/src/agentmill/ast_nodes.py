"""AST for agent scripts, plus the canonical pretty printer.

Node equality ignores source positions, so parse(pretty_print(ast)) == ast is
the round-trip contract the parser tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Pos:
    line: int = 0
    col: int = 0


def _pos_field():
    return field(default=Pos(), compare=False, repr=False)


# --- expressions ---

@dataclass(frozen=True)
class Literal:
    value: Union[int, float]
    is_int: bool
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class NameRef:
    """Unresolved identifier: a field, a const, or a loop variable."""
    name: str
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class ThisRef:
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class MemberAccess:
    target: "Expr"
    name: str
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class Unary:
    op: str  # '-' | '!'
    operand: "Expr"
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / == != < <= > >= && ||
    left: "Expr"
    right: "Expr"
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class Call:
    fn: str  # abs | rand | min | max
    args: tuple
    pos: Pos = _pos_field()


Expr = Union[Literal, NameRef, ThisRef, MemberAccess, Unary, Binary, Call]


# --- statements ---

@dataclass(frozen=True)
class ConstDecl:
    value_type: str  # 'float' | 'int' | class name (agent reference)
    name: str
    expr: Expr
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class LocalEffectAssign:
    name: str
    expr: Expr
    arrow: bool = True  # False when written with '=', which semantic analysis rejects
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class RemoteEffectAssign:
    target: Expr
    name: str
    expr: Expr
    arrow: bool = True
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class If:
    cond: Expr
    then_body: tuple
    else_body: tuple
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class Foreach:
    class_name: str
    var: str
    body: tuple
    pos: Pos = _pos_field()


Stmt = Union[ConstDecl, LocalEffectAssign, RemoteEffectAssign, If, Foreach]


# --- declarations ---

@dataclass(frozen=True)
class FieldDecl:
    visibility: str                      # 'public' | 'private'
    kind: str                            # 'state' | 'effect'
    value_type: str                      # 'float' | 'int' | class name
    name: str
    update_expr: Optional[Expr] = None   # state fields only
    combinator: Optional[str] = None     # effect fields only: sum | min | max
    range_constraint: Optional[tuple] = None  # (lo, hi), float state fields only
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class SpawnInit:
    name: str
    expr: Expr
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class ScriptAst:
    class_name: str
    fields: tuple                        # ordered FieldDecl; order defines effect ids
    run_body: tuple                      # ordered Stmt
    die_when: Optional[Expr] = None      # lifecycle extension (update phase)
    spawn_when: Optional[Expr] = None
    spawn_inits: tuple = ()

    def state_fields(self):
        return tuple(f for f in self.fields if f.kind == "state")

    def effect_fields(self):
        return tuple(f for f in self.fields if f.kind == "effect")


# --- pretty printer ---

_PRECEDENCE = {
    "||": 1, "&&": 2,
    "==": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
    "+": 4, "-": 4,
    "*": 5, "/": 5,
}


def _fmt_number(value, is_int: bool) -> str:
    if is_int:
        return str(int(value))
    return repr(float(value))


def pretty_expr(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, Literal):
        return _fmt_number(e.value, e.is_int)
    if isinstance(e, NameRef):
        return e.name
    if isinstance(e, ThisRef):
        return "this"
    if isinstance(e, MemberAccess):
        return f"{pretty_expr(e.target, 6)}.{e.name}"
    if isinstance(e, Unary):
        return f"{e.op}{pretty_expr(e.operand, 6)}"
    if isinstance(e, Binary):
        prec = _PRECEDENCE[e.op]
        # left-assoc: right child needs parens at equal precedence
        s = f"{pretty_expr(e.left, prec)} {e.op} {pretty_expr(e.right, prec + 1)}"
        return f"({s})" if prec < parent_prec else s
    if isinstance(e, Call):
        args = ", ".join(pretty_expr(a) for a in e.args)
        return f"{e.fn}({args})"
    raise TypeError(f"not an expression node: {e!r}")


def _pretty_stmt(s: Stmt, indent: int, out: list):
    pad = "  " * indent
    if isinstance(s, ConstDecl):
        out.append(f"{pad}const {s.value_type} {s.name} = {pretty_expr(s.expr)};")
    elif isinstance(s, LocalEffectAssign):
        op = "<-" if s.arrow else "="
        out.append(f"{pad}{s.name} {op} {pretty_expr(s.expr)};")
    elif isinstance(s, RemoteEffectAssign):
        op = "<-" if s.arrow else "="
        out.append(f"{pad}{pretty_expr(s.target, 6)}.{s.name} {op} {pretty_expr(s.expr)};")
    elif isinstance(s, If):
        out.append(f"{pad}if ({pretty_expr(s.cond)}) {{")
        for t in s.then_body:
            _pretty_stmt(t, indent + 1, out)
        if s.else_body:
            out.append(f"{pad}}} else {{")
            for t in s.else_body:
                _pretty_stmt(t, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, Foreach):
        out.append(f"{pad}foreach ({s.class_name} {s.var} : Extent<{s.class_name}>) {{")
        for t in s.body:
            _pretty_stmt(t, indent + 1, out)
        out.append(f"{pad}}}")
    else:
        raise TypeError(f"not a statement node: {s!r}")


def pretty_print(ast: ScriptAst) -> str:
    out = [f"class {ast.class_name} {{"]
    for f in ast.fields:
        parts = [f.visibility, f.kind, f.value_type, f.name]
        line = "  " + " ".join(parts)
        if f.kind == "state" and f.update_expr is not None:
            line += f" : ({pretty_expr(f.update_expr)})"
        if f.kind == "effect":
            line += f" : {f.combinator}"
        line += ";"
        if f.range_constraint is not None:
            lo, hi = f.range_constraint
            line += f" #range[{_fmt_number(lo, False)},{_fmt_number(hi, False)}];"
        out.append(line)
    out.append("  public void run() {")
    for s in ast.run_body:
        _pretty_stmt(s, 2, out)
    out.append("  }")
    if ast.die_when is not None:
        out.append(f"  die when ({pretty_expr(ast.die_when)});")
    if ast.spawn_when is not None:
        if ast.spawn_inits:
            out.append(f"  spawn when ({pretty_expr(ast.spawn_when)}) {{")
            for init in ast.spawn_inits:
                out.append(f"    {init.name} = {pretty_expr(init.expr)};")
            out.append("  }")
        else:
            out.append(f"  spawn when ({pretty_expr(ast.spawn_when)});")
    out.append("}")
    return "\n".join(out) + "\n"
