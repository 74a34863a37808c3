"""Dataflow plan IR and its reference evaluator.

Values are numbers, NIL (None), tuples (dicts keyed by int or str), multisets
(lists), and agent keys.  NIL propagates through arithmetic, is ignored by
aggregates, and results from projecting a missing attribute or GET on a
non-singleton.  Structural misuse (e.g. FLATTEN of a number) raises
EvalTypeError instead.

Composition is read left to right: COMPOSE(f, g)(x) = g(f(x)).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Any, Optional

from .errors import EvalTypeError

NIL = None


@dataclass(frozen=True)
class AgentKey:
    oid: int


# ---------------------------------------------------------------------------
# nodes

@dataclass(frozen=True)
class Id:
    pass


@dataclass(frozen=True)
class Compose:
    parts: tuple

    def __post_init__(self):
        assert all(not isinstance(p, Compose) for p in self.parts)


def compose(*parts):
    flat = []
    for p in parts:
        if isinstance(p, Compose):
            flat.extend(p.parts)
        elif isinstance(p, Id):
            continue
        else:
            flat.append(p)
    if not flat:
        return Id()
    if len(flat) == 1:
        return flat[0]
    return Compose(parts=tuple(flat))


@dataclass(frozen=True)
class Tuple_:
    attrs: tuple  # ((key, plan), ...) sorted by key text


def mk_tuple(mapping: dict) -> Tuple_:
    items = sorted(mapping.items(), key=lambda kv: (isinstance(kv[0], str), str(kv[0])))
    return Tuple_(attrs=tuple(items))


@dataclass(frozen=True)
class Proj:
    attr: Any


@dataclass(frozen=True)
class MapN:
    f: Any


@dataclass(frozen=True)
class FlatMap:
    f: Any


@dataclass(frozen=True)
class PairWith:
    attr: Any


@dataclass(frozen=True)
class Sng:
    pass


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Nest:
    attr: Any


@dataclass(frozen=True)
class Select:
    pred: Any


@dataclass(frozen=True)
class Get:
    pass


@dataclass(frozen=True)
class Const:
    value: Any

    def __post_init__(self):
        if isinstance(self.value, list):
            object.__setattr__(self, "value", tuple(self.value))


@dataclass(frozen=True)
class Arith:
    op: str
    args: tuple


@dataclass(frozen=True)
class Agg:
    kind: str  # sum | count | min | max


@dataclass(frozen=True)
class Extend:
    """χ_attr(f): extends component 1 of a ⟨1,2,3⟩ triple with attr = f(triple)."""
    attr: str
    f: Any


@dataclass(frozen=True)
class EffectUnion:
    """⊕: concatenates effect multisets, dropping NIL operands and
    contributions whose target key or value is NIL."""
    parts: tuple


@dataclass(frozen=True)
class EffectId:
    """ρ(x): the effect identifier of a field (its declaration index)."""
    name: str
    rho: int


# ---------------------------------------------------------------------------
# evaluation

class EvalContext:
    """Per-agent evaluation context (rand stream); plans are otherwise pure."""

    def __init__(self, rand=None):
        self.rand = rand

    def draw(self):
        if self.rand is None:
            raise EvalTypeError("rand() evaluated outside an agent context")
        return self.rand()


def _is_set(v):
    return isinstance(v, (list, tuple))


def _is_tuple(v):
    return isinstance(v, dict)


def _num(v, op):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise EvalTypeError(f"{op} applied to non-number {v!r}")
    return v


def value_sort_key(v):
    """Total order over contribution values; float order is by IEEE bits."""
    if v is NIL:
        return (0, b"")
    if isinstance(v, int) and not isinstance(v, bool):
        return (1, v.to_bytes(16, "big", signed=True))
    if isinstance(v, float):
        return (2, struct.pack(">d", v))
    if isinstance(v, AgentKey):
        return (3, v.oid.to_bytes(16, "big", signed=True))
    if isinstance(v, dict):
        return (4, repr(sorted((str(k), value_sort_key(x)) for k, x in v.items())))
    return (5, repr(v))


def contribution_sort_key(c):
    """Canonical fold order: (source oid, effect id, value bits)."""
    if _is_tuple(c) and "src" in c:
        src = c.get("src")
        src_oid = src.oid if isinstance(src, AgentKey) else -1
        return (src_oid, c.get("e", -1), value_sort_key(c.get("v")))
    return (-1, -1, value_sort_key(c))


def fold_sorted(kind: str, vals):
    """Fold an already canonically ordered list of numbers."""
    if kind == "count":
        return len(vals)
    if not vals:
        return NIL
    acc = vals[0]
    if kind == "sum":
        for v in vals[1:]:
            acc = acc + v
    elif kind == "min":
        for v in vals[1:]:
            acc = v if v < acc else acc
    elif kind == "max":
        for v in vals[1:]:
            acc = v if v > acc else acc
    else:
        raise EvalTypeError(f"unknown aggregate {kind!r}")
    return acc


def fold_values(kind: str, values):
    """Fold numbers with a combinator; NIL skipped; empty fold yields NIL."""
    vals = [v for v in values if v is not NIL]
    vals.sort(key=value_sort_key)
    return fold_sorted(kind, vals)


def fold_contributions(kind: str, contribs):
    """Canonical effect fold: sort by (source oid, effect id, value bits).

    This ordering is the semantics contract shared by the plan evaluator, the
    sequential tick, and the distributed runtime; it makes float sums
    bit-reproducible regardless of how contributions were enumerated.
    """
    ordered = sorted(contribs, key=contribution_sort_key)
    return fold_sorted(kind, [c["v"] for c in ordered if c["v"] is not NIL])


def _as_key(v):
    if isinstance(v, AgentKey):
        return v
    if _is_tuple(v) and "key" in v:
        return v["key"]
    return NIL


def _truthy(v) -> bool:
    return v is not NIL and v != 0


def _arith(op, vals, ctx):
    if op == "rand":
        return ctx.draw() if ctx else EvalContext().draw()
    if op == "coalesce":
        a, b = vals
        return b if a is NIL else a
    if op == "not_truthy":
        return 0 if _truthy(vals[0]) else 1
    if op == "key_eq":
        a, b = _as_key(vals[0]), _as_key(vals[1])
        if a is NIL or b is NIL:
            return NIL
        return 1 if a.oid == b.oid else 0
    if op == "as_key":
        return _as_key(vals[0])
    if any(v is NIL for v in vals):
        return NIL
    if op == "and":
        return 1 if (_truthy(vals[0]) and _truthy(vals[1])) else 0
    if op == "or":
        return 1 if (_truthy(vals[0]) or _truthy(vals[1])) else 0
    if op == "not":
        return 0 if _truthy(vals[0]) else 1
    if op in ("eq", "ne"):
        a, b = vals
        if isinstance(a, AgentKey) or isinstance(b, AgentKey):
            ka, kb = _as_key(a), _as_key(b)
            same = ka is not NIL and kb is not NIL and ka.oid == kb.oid
        else:
            same = a == b
        return (1 if same else 0) if op == "eq" else (0 if same else 1)
    if op == "to_float":
        return float(_num(vals[0], op))
    if op == "trunc_int":
        return math.trunc(_num(vals[0], op))
    if op == "neg":
        return -_num(vals[0], op)
    if op == "abs":
        return abs(_num(vals[0], op))
    a = _num(vals[0], op)
    if op == "floor_unused":
        raise EvalTypeError(op)
    b = _num(vals[1], op)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if b == 0:
            return NIL
        if isinstance(a, int) and isinstance(b, int):
            return math.trunc(a / b)  # integer division truncates toward zero
        return a / b
    if op == "lt":
        return 1 if a < b else 0
    if op == "le":
        return 1 if a <= b else 0
    if op == "gt":
        return 1 if a > b else 0
    if op == "ge":
        return 1 if a >= b else 0
    if op == "min":
        return a if a <= b else b
    if op == "max":
        return a if a >= b else b
    raise EvalTypeError(f"unknown arithmetic op {op!r}")


def _freeze(v):
    if isinstance(v, dict):
        return ("t",) + tuple((k, _freeze(x)) for k, x in
                              sorted(v.items(), key=lambda kv: str(kv[0])))
    if isinstance(v, (list, tuple)):
        return ("s",) + tuple(sorted(_freeze(x) for x in v))
    return v


def eval_plan(p, v, ctx: Optional[EvalContext] = None):
    """Evaluate plan p on value v; deterministic given (p, v, ctx seed)."""
    if isinstance(p, Id):
        return v
    if isinstance(p, Const):
        val = p.value
        return list(val) if isinstance(val, tuple) else val
    if isinstance(p, Compose):
        for part in p.parts:
            v = eval_plan(part, v, ctx)
        return v
    if isinstance(p, Arith):
        vals = [eval_plan(a, v, ctx) for a in p.args]
        return _arith(p.op, vals, ctx)
    if isinstance(p, EffectId):
        return p.rho
    if isinstance(p, Tuple_):
        if v is NIL:
            return NIL
        return {k: eval_plan(f, v, ctx) for k, f in p.attrs}
    if v is NIL:
        return NIL
    if isinstance(p, Proj):
        if not _is_tuple(v):
            raise EvalTypeError(f"PROJ({p.attr!r}) of non-tuple {type(v).__name__}")
        return v.get(p.attr, NIL)
    if isinstance(p, MapN):
        if not _is_set(v):
            raise EvalTypeError("MAP of non-set")
        return [eval_plan(p.f, e, ctx) for e in v]
    if isinstance(p, FlatMap):
        if not _is_set(v):
            raise EvalTypeError("FLATMAP of non-set")
        out = []
        for e in v:
            r = eval_plan(p.f, e, ctx)
            if r is NIL:
                continue
            if not _is_set(r):
                raise EvalTypeError("FLATMAP body must return a set")
            out.extend(r)
        return out
    if isinstance(p, PairWith):
        if not _is_tuple(v):
            raise EvalTypeError("PAIRWITH of non-tuple")
        s = v.get(p.attr, NIL)
        if s is NIL:
            return NIL
        if not _is_set(s):
            raise EvalTypeError(f"PAIRWITH({p.attr!r}) attribute is not a set")
        return [{**v, p.attr: e} for e in s]
    if isinstance(p, Sng):
        return [v]
    if isinstance(p, Flatten):
        if not _is_set(v):
            raise EvalTypeError("FLATTEN of non-set")
        out = []
        for e in v:
            if e is NIL:
                continue
            if not _is_set(e):
                raise EvalTypeError("FLATTEN of a set with non-set elements")
            out.extend(e)
        return out
    if isinstance(p, Nest):
        if not _is_set(v):
            raise EvalTypeError("NEST of non-set")
        groups: dict = {}
        order = []
        for e in v:
            if not _is_tuple(e):
                raise EvalTypeError("NEST of a set with non-tuple elements")
            rest = {k: x for k, x in e.items() if k != p.attr}
            fk = _freeze(rest)
            if fk not in groups:
                groups[fk] = (rest, [])
                order.append(fk)
            groups[fk][1].append(e.get(p.attr, NIL))
        return [{**rest, p.attr: vals} for rest, vals in (groups[k] for k in order)]
    if isinstance(p, Select):
        if not _is_set(v):
            raise EvalTypeError("SELECT of non-set")
        return [e for e in v if _truthy(eval_plan(p.pred, e, ctx))]
    if isinstance(p, Get):
        if not _is_set(v):
            raise EvalTypeError("GET of non-set")
        return v[0] if len(v) == 1 else NIL
    if isinstance(p, Agg):
        if not _is_set(v):
            raise EvalTypeError("AGG of non-set")
        elems = [e for e in v if e is not NIL]
        if elems and all(_is_tuple(e) and "v" in e for e in elems):
            return fold_contributions(p.kind, elems)
        for e in elems:
            if not isinstance(e, (int, float)) or isinstance(e, bool):
                raise EvalTypeError("AGG over non-numeric elements")
        return fold_values(p.kind, elems)
    if isinstance(p, Extend):
        if not (_is_tuple(v) and 1 in v):
            raise EvalTypeError("EXTEND of a non-triple")
        inner = v[1]
        if not _is_tuple(inner):
            raise EvalTypeError("EXTEND: component 1 is not a tuple")
        val = eval_plan(p.f, v, ctx)
        return {**v, 1: {**inner, p.attr: val}}
    if isinstance(p, EffectUnion):
        out = []
        for part in p.parts:
            r = eval_plan(part, v, ctx)
            if r is NIL:
                continue
            if not _is_set(r):
                raise EvalTypeError("EFFECT_UNION operand is not a set")
            for c in r:
                if c is NIL:
                    continue
                if _is_tuple(c) and (c.get("k") is NIL or c.get("v") is NIL):
                    continue  # NIL contributions are dropped at source
                out.append(c)
        return out
    raise EvalTypeError(f"unknown plan node {p!r}")


# ---------------------------------------------------------------------------
# utilities

def count_nodes(p) -> int:
    if isinstance(p, Compose):
        return 1 + sum(count_nodes(x) for x in p.parts)
    if isinstance(p, Tuple_):
        return 1 + sum(count_nodes(f) for _, f in p.attrs)
    if isinstance(p, (MapN, FlatMap)):
        return 1 + count_nodes(p.f)
    if isinstance(p, Select):
        return 1 + count_nodes(p.pred)
    if isinstance(p, Arith):
        return 1 + sum(count_nodes(a) for a in p.args)
    if isinstance(p, Extend):
        return 1 + count_nodes(p.f)
    if isinstance(p, EffectUnion):
        return 1 + sum(count_nodes(x) for x in p.parts)
    return 1


def _fmt_const(v) -> str:
    if v is NIL:
        return "nil"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "{" + " ".join(_fmt_const(x) for x in v) + "}"
    if isinstance(v, dict):
        items = sorted(v.items(), key=lambda kv: str(kv[0]))
        return "<" + " ".join(f"{k}:{_fmt_const(x)}" for k, x in items) + ">"
    if isinstance(v, AgentKey):
        return f"key#{v.oid}"
    return repr(v)


def pretty_plan(p, indent: int = 0) -> str:
    """Stable textual form; byte-identical across runs for equal plans."""
    pad = "  " * indent

    def line(s):
        return pad + s

    if isinstance(p, Id):
        return line("id")
    if isinstance(p, Const):
        return line(f"(const {_fmt_const(p.value)})")
    if isinstance(p, Proj):
        return line(f"(proj {p.attr})")
    if isinstance(p, PairWith):
        return line(f"(pairwith {p.attr})")
    if isinstance(p, Sng):
        return line("sng")
    if isinstance(p, Flatten):
        return line("flatten")
    if isinstance(p, Get):
        return line("get")
    if isinstance(p, Nest):
        return line(f"(nest {p.attr})")
    if isinstance(p, Agg):
        return line(f"(agg {p.kind})")
    if isinstance(p, EffectId):
        return line(f"(rho {p.name} {p.rho})")
    if isinstance(p, Compose):
        body = "\n".join(pretty_plan(x, indent + 1) for x in p.parts)
        return line("(compose") + "\n" + body + ")"
    if isinstance(p, Tuple_):
        body = "\n".join(
            line(f"  ({k}") + "\n" + pretty_plan(f, indent + 2) + ")"
            for k, f in p.attrs)
        return line("(tuple") + "\n" + body + ")"
    if isinstance(p, MapN):
        return line("(map") + "\n" + pretty_plan(p.f, indent + 1) + ")"
    if isinstance(p, FlatMap):
        return line("(flatmap") + "\n" + pretty_plan(p.f, indent + 1) + ")"
    if isinstance(p, Select):
        return line("(select") + "\n" + pretty_plan(p.pred, indent + 1) + ")"
    if isinstance(p, Arith):
        if not p.args:
            return line(f"({p.op})")
        body = "\n".join(pretty_plan(a, indent + 1) for a in p.args)
        return line(f"({p.op}") + "\n" + body + ")"
    if isinstance(p, Extend):
        return line(f"(extend {p.attr}") + "\n" + pretty_plan(p.f, indent + 1) + ")"
    if isinstance(p, EffectUnion):
        body = "\n".join(pretty_plan(x, indent + 1) for x in p.parts)
        return line("(effect-union") + "\n" + body + ")"
    raise EvalTypeError(f"unknown plan node {p!r}")
