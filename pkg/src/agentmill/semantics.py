"""Semantic analysis: state-effect read/write discipline and well-formedness.

Rules enforced on the run body:
  R1  state fields are never assigned
  R2  effect fields are read only outside foreach loops (and never on other agents)
  R3  effect assignment uses the '<-' operator
  R4  update/lifecycle expressions read only the agent's own fields
  R5  range constraints appear only on float state fields
  R6  member-access targets are the foreach variable, 'this', or an agent-typed const
plus structural codes: S_DUP (duplicate names), S_NAME (unknown names),
S_CLASS (wrong agent class), S_COMB (bad combinator usage), S_CALL (bad call arity).

Diagnostics are collected exhaustively; analyze() never aborts mid-way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

from .ast_nodes import (
    Binary, Call, ConstDecl, FieldDecl, Foreach, If, Literal, LocalEffectAssign,
    MemberAccess, NameRef, Pos, RemoteEffectAssign, ScriptAst, ThisRef, Unary,
)
from .errors import SemanticError

LOCAL_ONLY = "local-only"
HAS_NON_LOCAL = "has-non-local"


def idempotent_value(combinator: str) -> float:
    """Identity of the effect combinator; effects reset to these each tick."""
    if combinator == "sum":
        return 0.0
    if combinator == "min":
        return math.inf
    if combinator == "max":
        return -math.inf
    raise ValueError(f"unknown combinator {combinator!r}")


@dataclass(frozen=True)
class SemanticDiagnostic:
    rule_id: str
    pos: Pos
    message: str

    def __str__(self):
        return f"[{self.rule_id}] line {self.pos.line}:{self.pos.col}: {self.message}"


@dataclass(frozen=True)
class EffectInfo:
    name: str
    rho: int                  # declaration index among effect fields
    combinator: str
    value_type: str           # 'float' | 'int'
    theta: float | int

    @staticmethod
    def for_field(f: FieldDecl, rho: int) -> "EffectInfo":
        theta = idempotent_value(f.combinator)
        if f.value_type == "int" and f.combinator == "sum":
            theta = 0
        return EffectInfo(name=f.name, rho=rho, combinator=f.combinator,
                          value_type=f.value_type, theta=theta)


@dataclass(frozen=True)
class CheckedScript:
    ast: ScriptAst
    state_fields: tuple          # FieldDecl, declaration order (state vector layout)
    effect_table: dict           # name -> EffectInfo (rho order = declaration order)
    spatial_fields: tuple        # (FieldDecl, (lo, hi)) for range-constrained floats
    locality: str                # LOCAL_ONLY | HAS_NON_LOCAL
    state_index: dict = dc_field(default_factory=dict)
    uses_agent_lookup: bool = False

    @property
    def class_name(self) -> str:
        return self.ast.class_name

    def effects_in_rho_order(self):
        return sorted(self.effect_table.values(), key=lambda e: e.rho)

    def thetas(self):
        return [e.theta for e in self.effects_in_rho_order()]

    def spatial_axes(self):
        """(state index, (lo, hi)) per spatial axis, declaration order."""
        return [(self.state_index[f.name], rng) for f, rng in self.spatial_fields]


class _Analyzer:
    def __init__(self, ast: ScriptAst):
        self.ast = ast
        self.diags: list[SemanticDiagnostic] = []
        self.state: dict[str, FieldDecl] = {}
        self.effects: dict[str, FieldDecl] = {}
        self.has_non_local = False
        self.uses_agent_lookup = False

    def diag(self, rule: str, pos: Pos, msg: str):
        self.diags.append(SemanticDiagnostic(rule_id=rule, pos=pos, message=msg))

    # -- declarations --

    def collect_fields(self):
        seen = set()
        for f in self.ast.fields:
            if f.name in seen:
                self.diag("S_DUP", f.pos, f"duplicate field {f.name!r}")
                continue
            seen.add(f.name)
            if f.kind == "state":
                if f.combinator is not None:
                    self.diag("S_COMB", f.pos, f"state field {f.name!r} has a combinator")
                if f.range_constraint is not None:
                    lo, hi = f.range_constraint
                    if f.value_type != "float":
                        self.diag("R5", f.pos,
                                  f"range constraint on non-float field {f.name!r}")
                    elif lo > hi:
                        self.diag("R5", f.pos, f"empty range on {f.name!r}")
                self.state[f.name] = f
            else:
                if f.combinator is None:
                    self.diag("S_COMB", f.pos, f"effect field {f.name!r} needs a combinator")
                if f.range_constraint is not None:
                    self.diag("R5", f.pos, f"range constraint on effect field {f.name!r}")
                if f.value_type not in ("float", "int"):
                    self.diag("S_COMB", f.pos,
                              f"effect field {f.name!r} must be float or int")
                self.effects[f.name] = f

    # -- expressions --

    def check_expr(self, e, scope: dict, in_foreach: bool):
        if isinstance(e, Literal):
            return
        if isinstance(e, ThisRef):
            return
        if isinstance(e, NameRef):
            if e.name in scope:
                return
            if e.name in self.state:
                return
            if e.name in self.effects:
                if in_foreach:
                    self.diag("R2", e.pos,
                              f"effect field {e.name!r} read inside a foreach loop")
                return
            self.diag("S_NAME", e.pos, f"unknown name {e.name!r}")
            return
        if isinstance(e, MemberAccess):
            self.check_member_target(e.target, scope)
            if e.name in self.effects:
                self.diag("R2", e.pos,
                          f"effect field {e.name!r} read through an agent reference")
            elif e.name not in self.state:
                self.diag("S_NAME", e.pos, f"unknown field {e.name!r} in member access")
            return
        if isinstance(e, Unary):
            self.check_expr(e.operand, scope, in_foreach)
            return
        if isinstance(e, Binary):
            self.check_expr(e.left, scope, in_foreach)
            self.check_expr(e.right, scope, in_foreach)
            return
        if isinstance(e, Call):
            arity = {"abs": 1, "rand": 0, "min": 2, "max": 2}[e.fn]
            if len(e.args) != arity:
                self.diag("S_CALL", e.pos,
                          f"{e.fn}() takes {arity} argument(s), got {len(e.args)}")
            for a in e.args:
                self.check_expr(a, scope, in_foreach)
            return
        raise TypeError(f"unexpected expression node {e!r}")

    def check_member_target(self, target, scope: dict):
        """R6: member access goes through the loop var, this, or an agent const."""
        if isinstance(target, ThisRef):
            return
        if isinstance(target, NameRef):
            binding = scope.get(target.name)
            if binding in ("loopvar", "agentconst"):
                if binding == "agentconst":
                    self.uses_agent_lookup = True
                return
            self.diag("R6", target.pos,
                      f"member access through {target.name!r}, which is not a foreach "
                      "variable, 'this', or an agent-typed const")
            return
        self.diag("R6", getattr(target, "pos", Pos()),
                  "member access target must be a simple agent reference")

    def agent_valued(self, e, scope: dict) -> bool:
        if isinstance(e, ThisRef):
            return True
        return isinstance(e, NameRef) and scope.get(e.name) in ("loopvar", "agentconst")

    # -- run body --

    def check_stmt(self, s, scope: dict, in_foreach: bool):
        if isinstance(s, ConstDecl):
            self.check_expr(s.expr, scope, in_foreach)
            if s.name in scope or s.name in self.state or s.name in self.effects:
                self.diag("S_DUP", s.pos, f"const {s.name!r} shadows an existing name")
            if s.value_type in ("float", "int"):
                scope[s.name] = "const"
            elif s.value_type == self.ast.class_name:
                scope[s.name] = "agentconst"
                if not self.agent_valued(s.expr, scope) and not isinstance(s.expr, MemberAccess):
                    self.diag("S_CLASS", s.pos,
                              f"const {s.name!r} of agent type must be initialized from "
                              "an agent reference")
            else:
                self.diag("S_CLASS", s.pos, f"unknown type {s.value_type!r}")
            return
        if isinstance(s, LocalEffectAssign):
            if not getattr(s, "arrow", True):
                self.diag("R3", s.pos, f"effect assignment to {s.name!r} must use '<-'")
            if s.name in self.state:
                self.diag("R1", s.pos, f"state field {s.name!r} assigned in run body")
            elif s.name not in self.effects:
                self.diag("S_NAME", s.pos, f"assignment to unknown field {s.name!r}")
            self.check_expr(s.expr, scope, in_foreach)
            return
        if isinstance(s, RemoteEffectAssign):
            if not getattr(s, "arrow", True):
                self.diag("R3", s.pos, f"effect assignment to {s.name!r} must use '<-'")
            if s.name in self.state:
                self.diag("R1", s.pos,
                          f"state field {s.name!r} assigned through an agent reference")
            elif s.name not in self.effects:
                self.diag("S_NAME", s.pos, f"assignment to unknown field {s.name!r}")
            if not isinstance(s.target, ThisRef):
                self.check_member_target(s.target, scope)
                self.has_non_local = True
            self.check_expr(s.expr, scope, in_foreach)
            return
        if isinstance(s, If):
            self.check_expr(s.cond, scope, in_foreach)
            for t in s.then_body:
                self.check_stmt(t, dict(scope), in_foreach)
            for t in s.else_body:
                self.check_stmt(t, dict(scope), in_foreach)
            return
        if isinstance(s, Foreach):
            if s.class_name != self.ast.class_name:
                self.diag("S_CLASS", s.pos,
                          f"foreach iterates Extent<{s.class_name}>, but the script "
                          f"defines class {self.ast.class_name!r}")
            if s.var in scope or s.var in self.state or s.var in self.effects:
                self.diag("S_DUP", s.pos, f"loop variable {s.var!r} shadows an existing name")
            inner = dict(scope)
            inner[s.var] = "loopvar"
            for t in s.body:
                self.check_stmt(t, inner, True)
            return
        raise TypeError(f"unexpected statement node {s!r}")

    # -- update phase --

    def check_own_expr(self, e, what: str):
        """R4: update rules and lifecycle clauses read own fields only."""
        if isinstance(e, Literal):
            return
        if isinstance(e, (ThisRef, MemberAccess)):
            self.diag("R4", getattr(e, "pos", Pos()),
                      f"{what} may read only the agent's own fields")
            if isinstance(e, MemberAccess):
                self.check_own_expr(e.target, what)
            return
        if isinstance(e, NameRef):
            if e.name not in self.state and e.name not in self.effects:
                self.diag("S_NAME", e.pos, f"unknown field {e.name!r} in {what}")
            return
        if isinstance(e, Unary):
            self.check_own_expr(e.operand, what)
            return
        if isinstance(e, Binary):
            self.check_own_expr(e.left, what)
            self.check_own_expr(e.right, what)
            return
        if isinstance(e, Call):
            arity = {"abs": 1, "rand": 0, "min": 2, "max": 2}[e.fn]
            if len(e.args) != arity:
                self.diag("S_CALL", e.pos,
                          f"{e.fn}() takes {arity} argument(s), got {len(e.args)}")
            for a in e.args:
                self.check_own_expr(a, what)
            return
        raise TypeError(f"unexpected expression node {e!r}")

    def run(self):
        self.collect_fields()
        for f in self.ast.fields:
            if f.kind == "state" and f.update_expr is not None:
                self.check_own_expr(f.update_expr, f"update rule for {f.name!r}")
        scope: dict[str, str] = {}
        for s in self.ast.run_body:
            self.check_stmt(s, scope, False)
        if self.ast.die_when is not None:
            self.check_own_expr(self.ast.die_when, "die clause")
        if self.ast.spawn_when is not None:
            self.check_own_expr(self.ast.spawn_when, "spawn clause")
        for init in self.ast.spawn_inits:
            if init.name not in self.state:
                self.diag("S_NAME", init.pos,
                          f"spawn init must set a state field, got {init.name!r}")
            self.check_own_expr(init.expr, "spawn init")


def _normalize_this_remotes(stmts):
    """A remote assign whose target is syntactically 'this' is local."""
    out = []
    for s in stmts:
        if isinstance(s, RemoteEffectAssign) and isinstance(s.target, ThisRef):
            out.append(LocalEffectAssign(name=s.name, expr=s.expr, pos=s.pos))
        elif isinstance(s, If):
            out.append(If(cond=s.cond, then_body=_normalize_this_remotes(s.then_body),
                          else_body=_normalize_this_remotes(s.else_body), pos=s.pos))
        elif isinstance(s, Foreach):
            out.append(Foreach(class_name=s.class_name, var=s.var,
                               body=_normalize_this_remotes(s.body), pos=s.pos))
        else:
            out.append(s)
    return tuple(out)


def analyze(ast: ScriptAst):
    """Total analysis: (CheckedScript | None, diagnostics)."""
    a = _Analyzer(ast)
    a.run()
    if a.diags:
        return None, a.diags

    normalized = ScriptAst(class_name=ast.class_name, fields=ast.fields,
                           run_body=_normalize_this_remotes(ast.run_body),
                           die_when=ast.die_when, spawn_when=ast.spawn_when,
                           spawn_inits=ast.spawn_inits)
    state_fields = normalized.state_fields()
    effect_table = {f.name: EffectInfo.for_field(f, i)
                    for i, f in enumerate(normalized.effect_fields())}
    spatial = tuple((f, f.range_constraint) for f in state_fields
                    if f.range_constraint is not None)
    state_index = {f.name: i for i, f in enumerate(state_fields)}
    checked = CheckedScript(
        ast=normalized,
        state_fields=state_fields,
        effect_table=effect_table,
        spatial_fields=spatial,
        locality=HAS_NON_LOCAL if a.has_non_local else LOCAL_ONLY,
        state_index=state_index,
        uses_agent_lookup=a.uses_agent_lookup,
    )
    return checked, []


def check(ast: ScriptAst) -> CheckedScript:
    checked, diags = analyze(ast)
    if checked is None:
        raise SemanticError(diags)
    return checked
