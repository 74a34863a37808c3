"""Lowering from CheckedScript to the dataflow plan IR.

The run body lowers to a plan over the triple ⟨1: agent tuple, 2: extent set,
3: effect set⟩.  Consts and loop variables become attributes of component 1;
effect assignments append contribution tuples {k, e, v, src} to component 3;
member access resolves the referenced agent by key inside component 2, which
is what gives weak references their NIL behavior.

Visibility modes:
  restricted  component 2 is pre-filtered to the visible region by the driver
  weakref     component 2 holds all other agents; every reference resolution
              and remote write carries an explicit visibility test
  none        no visibility constraints at all
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast_nodes import (
    Binary, Call, ConstDecl, Foreach, If, Literal, LocalEffectAssign,
    MemberAccess, NameRef, RemoteEffectAssign, ThisRef, Unary,
)
from .errors import LoweringError
from .plan import (
    Agg, Arith, Const, EffectId, EffectUnion, Extend, FlatMap, Flatten, Get, Id,
    MapN, PairWith, Proj, Select, Sng, compose, mk_tuple,
)
from .semantics import CheckedScript

RESTRICTED = "restricted"
WEAKREF = "weakref"
NOVIS = "none"

_BINOP = {"+": "add", "-": "sub", "*": "mul", "/": "div",
          "==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge",
          "&&": "and", "||": "or"}


@dataclass(frozen=True)
class QueryPhasePlan:
    q: object               # run body: triple -> triple
    q_hat: object           # triple -> ⟨1: agent, 2: generated effects⟩
    effect_gen: object      # agent set -> pairs ⟨1: agent, 2: generated effects⟩
    redistribute: object    # pairs -> ⟨1: agent, 2: effects targeting it⟩
    inline: object          # pairs -> agent tuples with folded effect attrs
    update: object          # inlined tuples -> next-tick state tuples
    whole_tick: object
    die_plan: object        # update-context plans for the lifecycle extension
    spawn_cond_plan: object
    spawn_init_plans: tuple  # ((state name, plan), ...)
    locality: str
    visibility: str


def _own(name):
    return compose(Proj(1), Proj(name))


def _own_key():
    return compose(Proj(1), Proj("key"))


class _Lowerer:
    def __init__(self, checked: CheckedScript, visibility: str):
        self.checked = checked
        self.visibility = visibility
        self.effect_table = checked.effect_table
        self.state_names = {f.name for f in checked.state_fields}

    # -- helpers --

    def visible_pred(self, reader_plan, cand_plan):
        """Per-axis offset containment: cand inside reader's visibility rect."""
        terms = []
        for f, (lo, hi) in self.checked.spatial_fields:
            delta = Arith("sub", (compose(cand_plan, Proj(f.name)),
                                  compose(reader_plan, Proj(f.name))))
            terms.append(Arith("and", (Arith("le", (Const(float(lo)), delta)),
                                       Arith("le", (delta, Const(float(hi)))))))
        if not terms:
            return Const(1)
        pred = terms[0]
        for t in terms[1:]:
            pred = Arith("and", (pred, t))
        return pred

    def lookup(self, ref_plan):
        """Resolve an agent reference by key inside component 2 (GET of the
        singleton match); misses and non-singletons yield NIL."""
        if self.visibility == WEAKREF:
            paired = compose(mk_tuple({1: ref_plan, 2: Proj(2), 3: Proj(1)}),
                             PairWith(2))
            match = Arith("and", (
                Arith("key_eq", (compose(Proj(2), Proj("key")), Proj(1))),
                self.visible_pred(Proj(3), Proj(2))))
        else:
            paired = compose(mk_tuple({1: ref_plan, 2: Proj(2)}), PairWith(2))
            match = Arith("key_eq", (compose(Proj(2), Proj("key")), Proj(1)))
        return compose(paired, Select(match), MapN(Proj(2)), Get())

    def effect_read(self, name):
        """Canonical fold of the contributions generated so far to self."""
        info = self.effect_table[name]
        match = Arith("and", (
            Arith("key_eq", (compose(Proj(2), Proj("k")), Proj(1))),
            Arith("eq", (compose(Proj(2), Proj("e")), EffectId(name, info.rho)))))
        fold = compose(
            mk_tuple({1: _own_key(), 2: Proj(3)}),
            PairWith(2),
            Select(match),
            MapN(Proj(2)),
            Agg(info.combinator))
        return Arith("coalesce", (fold, Const(info.theta)))

    def coerce_effect(self, plan, info):
        op = "trunc_int" if info.value_type == "int" else "to_float"
        return Arith(op, (plan,))

    # -- expressions on the run-body triple --

    def expr(self, e, scope: dict):
        if isinstance(e, Literal):
            return Const(e.value)
        if isinstance(e, ThisRef):
            return _own_key()
        if isinstance(e, NameRef):
            if e.name in scope or e.name in self.state_names:
                return _own(e.name)
            if e.name in self.effect_table:
                return self.effect_read(e.name)
            raise LoweringError(f"unresolved name {e.name!r}")
        if isinstance(e, MemberAccess):
            if isinstance(e.target, ThisRef):
                if e.name in self.effect_table:
                    return self.effect_read(e.name)
                return _own(e.name)
            found = self.lookup(self.expr(e.target, scope))
            return compose(found, Proj(e.name))
        if isinstance(e, Unary):
            op = "neg" if e.op == "-" else "not"
            return Arith(op, (self.expr(e.operand, scope),))
        if isinstance(e, Binary):
            return Arith(_BINOP[e.op],
                         (self.expr(e.left, scope), self.expr(e.right, scope)))
        if isinstance(e, Call):
            if e.fn == "rand":
                return Arith("rand", ())
            return Arith(e.fn, tuple(self.expr(a, scope) for a in e.args))
        raise LoweringError(f"cannot lower expression {e!r}")

    # -- statements --

    def append_effect(self, key_plan, name, value_plan):
        info = self.effect_table[name]
        contrib = mk_tuple({
            "k": key_plan,
            "e": EffectId(name, info.rho),
            "v": self.coerce_effect(value_plan, info),
            "src": _own_key(),
        })
        return mk_tuple({1: Proj(1), 2: Proj(2),
                         3: EffectUnion((Proj(3), compose(contrib, Sng())))})

    def block_effects(self, stmts, scope: dict):
        """Lower a block to: triple -> effect set added by the block."""
        start = mk_tuple({1: Proj(1), 2: Proj(2), 3: Const([])})
        return compose(start, *[self.stmt(s, scope) for s in stmts], Proj(3))

    def stmt(self, s, scope: dict):
        if isinstance(s, ConstDecl):
            value = self.expr(s.expr, scope)
            if s.value_type == self.checked.class_name:
                value = Arith("as_key", (value,))
                scope[s.name] = "agentconst"
            else:
                scope[s.name] = "const"
            return Extend(s.name, value)
        if isinstance(s, LocalEffectAssign):
            return self.append_effect(_own_key(), s.name, self.expr(s.expr, scope))
        if isinstance(s, RemoteEffectAssign):
            target = compose(self.lookup(self.expr(s.target, scope)), Proj("key"))
            return self.append_effect(target, s.name, self.expr(s.expr, scope))
        if isinstance(s, If):
            cond = self.expr(s.cond, scope)
            then_eff = compose(Sng(), Select(cond), Get(),
                               self.block_effects(s.then_body, dict(scope)))
            else_eff = compose(Sng(), Select(Arith("not_truthy", (cond,))), Get(),
                               self.block_effects(s.else_body, dict(scope)))
            return mk_tuple({1: Proj(1), 2: Proj(2),
                             3: EffectUnion((Proj(3), then_eff, else_eff))})
        if isinstance(s, Foreach):
            inner_scope = dict(scope)
            inner_scope[s.var] = "loopvar"
            # bind the loop element into component 1, then run the body from an
            # empty effect set and collect what it adds
            bind = compose(
                mk_tuple({1: compose(Proj(1), Proj(1)),
                          2: compose(Proj(1), Proj(2)),
                          3: Proj(2)}),
                Extend(s.var, Proj(3)),
                mk_tuple({1: Proj(1), 2: Proj(2), 3: Const([])}))
            per_elem = compose(bind, *[self.stmt(t, inner_scope) for t in s.body],
                               Proj(3))
            loop = compose(mk_tuple({1: Id(), 2: Proj(2)}),
                           PairWith(2),
                           FlatMap(per_elem))
            return mk_tuple({1: Proj(1), 2: Proj(2),
                             3: EffectUnion((Proj(3), loop))})
        raise LoweringError(f"cannot lower statement {s!r}")

    # -- update phase (flat inlined tuple context) --

    def update_expr(self, e):
        if isinstance(e, Literal):
            return Const(e.value)
        if isinstance(e, NameRef):
            return Proj(e.name)
        if isinstance(e, Unary):
            return Arith("neg" if e.op == "-" else "not",
                         (self.update_expr(e.operand),))
        if isinstance(e, Binary):
            return Arith(_BINOP[e.op],
                         (self.update_expr(e.left), self.update_expr(e.right)))
        if isinstance(e, Call):
            if e.fn == "rand":
                return Arith("rand", ())
            return Arith(e.fn, tuple(self.update_expr(a) for a in e.args))
        raise LoweringError(f"update expressions read own fields only: {e!r}")

    def state_update_plan(self, f):
        if f.update_expr is None:
            return Proj(f.name)
        new = self.update_expr(f.update_expr)
        if f.range_constraint is not None:
            lo, hi = f.range_constraint
            # reachability crop: clamp(new, old + lo, old + hi)
            new = Arith("min", (
                Arith("max", (new, Arith("add", (Proj(f.name), Const(float(lo)))))),
                Arith("add", (Proj(f.name), Const(float(hi))))))
        if f.value_type == "int":
            new = Arith("trunc_int", (new,))
        # a NIL update leaves the state unchanged for this tick
        return Arith("coalesce", (new, Proj(f.name)))


def lower(checked: CheckedScript, visibility: str = RESTRICTED) -> QueryPhasePlan:
    """Lower a checked script to its query-phase plan bundle."""
    if visibility not in (RESTRICTED, WEAKREF, NOVIS):
        raise LoweringError(f"unknown visibility mode {visibility!r}")
    lw = _Lowerer(checked, visibility)

    scope: dict = {}
    stmt_plans = [lw.stmt(s, scope) for s in checked.ast.run_body]
    q = compose(*stmt_plans) if stmt_plans else Id()

    q_hat = compose(
        mk_tuple({1: Proj(1), 2: Proj(2), 3: Const([])}),
        q,
        mk_tuple({1: Proj(1), 2: Proj(3)}))

    # extent for one agent out of the whole set: all others, additionally
    # visibility-filtered in restricted mode
    not_self = Arith("not", (Arith("key_eq", (
        compose(Proj(2), Proj("key")), compose(Proj(1), Proj("key")))),))
    member = not_self
    if visibility == RESTRICTED:
        member = Arith("and", (not_self, lw.visible_pred(Proj(1), Proj(2))))
    others_of = compose(
        mk_tuple({1: Proj(2), 2: Proj(1)}),   # ⟨1: the agent, 2: full set⟩
        PairWith(2),                           # ⟨1: agent, 2: candidate⟩ each
        Select(member),
        MapN(Proj(2)))

    mk_triple = mk_tuple({1: Proj(2), 2: others_of, 3: Const([])})
    effect_gen = compose(
        mk_tuple({1: Id(), 2: Id()}),
        PairWith(2),
        MapN(compose(mk_triple, q_hat)))

    # all generated effects, regrouped under the agent owning the target key
    all_effects = compose(Proj(1), MapN(Proj(2)), Flatten())
    for_me = compose(
        mk_tuple({1: compose(Proj(2), Proj(1), Proj("key")), 2: all_effects}),
        PairWith(2),
        Select(Arith("key_eq", (compose(Proj(2), Proj("k")), Proj(1)))),
        MapN(Proj(2)))
    redistribute = compose(
        mk_tuple({1: Id(), 2: Id()}),
        PairWith(2),
        MapN(mk_tuple({1: compose(Proj(2), Proj(1)), 2: for_me})))

    # fold each agent's incoming contributions and inline them as attributes
    inline_attrs = {"key": compose(Proj(1), Proj("key"))}
    for f in checked.state_fields:
        inline_attrs[f.name] = compose(Proj(1), Proj(f.name))
    for info in checked.effects_in_rho_order():
        mine = compose(
            mk_tuple({1: Const(info.rho), 2: Proj(2)}),
            PairWith(2),
            Select(Arith("eq", (compose(Proj(2), Proj("e")), Proj(1)))),
            MapN(Proj(2)),
            Agg(info.combinator))
        inline_attrs[info.name] = Arith("coalesce", (mine, Const(info.theta)))
    inline = MapN(mk_tuple(inline_attrs))

    update_attrs = {"key": Proj("key")}
    for f in checked.state_fields:
        update_attrs[f.name] = lw.state_update_plan(f)
    update = MapN(mk_tuple(update_attrs))

    if checked.locality == "has-non-local":
        whole = compose(effect_gen, redistribute, inline, update)
    else:
        whole = compose(effect_gen, inline, update)

    ast = checked.ast
    die_plan = lw.update_expr(ast.die_when) if ast.die_when is not None else None
    spawn_cond = lw.update_expr(ast.spawn_when) if ast.spawn_when is not None else None
    spawn_inits = tuple((i.name, lw.update_expr(i.expr)) for i in ast.spawn_inits)

    return QueryPhasePlan(q=q, q_hat=q_hat, effect_gen=effect_gen,
                          redistribute=redistribute, inline=inline, update=update,
                          whole_tick=whole, die_plan=die_plan,
                          spawn_cond_plan=spawn_cond, spawn_init_plans=spawn_inits,
                          locality=checked.locality, visibility=visibility)
