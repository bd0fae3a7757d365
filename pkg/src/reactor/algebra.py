"""Event expressions and their declarative occurrence semantics.

Two evaluators live here:

* ``occurrences``: interval semantics. A composite occurrence is valid over
  the whole span of its components (the cover of their intervals), and
  sequence requires the left operand's interval to end strictly before the
  right operand's interval starts. This evaluator is deliberately brute
  force: it enumerates candidate component combinations straight from the
  definitions and serves as the reference the incremental detector is
  checked against.

* ``occurrences_point``: the classic detection-time semantics, where each
  result is stamped with the time of its latest component and sequence only
  compares those stamps. Kept side by side because composing sequences under
  it is not associative; the interval evaluator repairs exactly that.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import InvalidExpression, UnsortedHistory
from .model import (
    EventInstance,
    EventTypeId,
    Interval,
    TimePoint,
    interval_cover,
    strictly_before,
)

# =========================================================================
# Expression tree
# =========================================================================


class EventExpr:
    """Base class for event expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Atomic(EventExpr):
    """A single event of the given type; optionally binds the instance."""

    type: EventTypeId
    var: Optional[str] = None


@dataclass(frozen=True)
class Seq(EventExpr):
    """Left strictly before right (interval end < interval start)."""

    left: EventExpr
    right: EventExpr


@dataclass(frozen=True)
class And(EventExpr):
    """Both operands, any temporal order, disjoint components."""

    left: EventExpr
    right: EventExpr


@dataclass(frozen=True)
class Or(EventExpr):
    """Either operand."""

    left: EventExpr
    right: EventExpr


@dataclass(frozen=True)
class Not(EventExpr):
    """opener then closer with no absent occurrence strictly between them."""

    absent: EventExpr
    opener: EventExpr
    closer: EventExpr


@dataclass(frozen=True)
class Any(EventExpr):
    """count instances of pairwise-distinct types drawn from the list."""

    count: int
    types: tuple[EventTypeId, ...]


@dataclass(frozen=True)
class Times(EventExpr):
    """count component-disjoint occurrences of the operand; bindings drop."""

    count: int
    of: EventExpr


def validate_expr(expr: EventExpr) -> None:
    """Check structural invariants; raises InvalidExpression."""
    seen_vars: set[str] = set()

    def walk(node: EventExpr) -> None:
        if isinstance(node, Atomic):
            if node.var is not None:
                if node.var in seen_vars:
                    raise InvalidExpression(f"binding ?{node.var} appears twice")
                seen_vars.add(node.var)
        elif isinstance(node, (Seq, And, Or)):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Not):
            walk(node.absent)
            walk(node.opener)
            walk(node.closer)
        elif isinstance(node, Any):
            if node.count < 1:
                raise InvalidExpression(f"any needs count >= 1, got {node.count}")
            names = [t.name for t in node.types]
            if len(set(names)) != len(names):
                raise InvalidExpression("any type list contains duplicates")
            if node.count > len(node.types):
                raise InvalidExpression(
                    f"any count {node.count} exceeds {len(node.types)} listed types"
                )
        elif isinstance(node, Times):
            if node.count < 1:
                raise InvalidExpression(f"times needs count >= 1, got {node.count}")
            walk(node.of)
        else:
            raise InvalidExpression(f"unknown expression node {node!r}")

    walk(expr)


def expr_leaf_types(expr: EventExpr) -> set[str]:
    """Every event type name mentioned anywhere in the expression."""
    out: set[str] = set()

    def walk(node: EventExpr) -> None:
        if isinstance(node, Atomic):
            out.add(node.type.name)
        elif isinstance(node, (Seq, And, Or)):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Not):
            walk(node.absent)
            walk(node.opener)
            walk(node.closer)
        elif isinstance(node, Any):
            out.update(t.name for t in node.types)
        elif isinstance(node, Times):
            walk(node.of)

    walk(expr)
    return out


# =========================================================================
# Occurrences
# =========================================================================


@dataclass(frozen=True)
class Occurrence:
    """One detected occurrence of an expression.

    components are instance ids; initiator/terminator are the earliest and
    latest components by (time, id). The interval is always the cover of the
    component intervals.
    """

    interval: Interval
    bindings: Mapping[str, EventInstance]
    components: frozenset[int]
    initiator_time: TimePoint
    terminator_time: TimePoint
    initiator_id: int
    terminator_id: int

    def __hash__(self):
        return hash(
            (
                self.interval,
                self.components,
                tuple(sorted((v, e.id) for v, e in self.bindings.items())),
            )
        )

    def __repr__(self):
        return f"<{self.interval} {sorted(self.components)}>"


def occurrence_of(inst: EventInstance, var: Optional[str] = None) -> Occurrence:
    """Atomic occurrence of one instance."""
    return Occurrence(
        interval=inst.span,
        bindings={var: inst} if var else {},
        components=frozenset((inst.id,)),
        initiator_time=inst.time,
        terminator_time=inst.time,
        initiator_id=inst.id,
        terminator_id=inst.id,
    )


def merge_occurrences(a: Occurrence, b: Occurrence) -> Optional[Occurrence]:
    """Combine two occurrences; None when they bind the same variable."""
    if a.bindings and b.bindings and (set(a.bindings) & set(b.bindings)):
        return None
    if (a.initiator_time, a.initiator_id) <= (b.initiator_time, b.initiator_id):
        init_t, init_id = a.initiator_time, a.initiator_id
    else:
        init_t, init_id = b.initiator_time, b.initiator_id
    if (a.terminator_time, a.terminator_id) >= (b.terminator_time, b.terminator_id):
        term_t, term_id = a.terminator_time, a.terminator_id
    else:
        term_t, term_id = b.terminator_time, b.terminator_id
    return Occurrence(
        interval=interval_cover(a.interval, b.interval),
        bindings={**a.bindings, **b.bindings},
        components=a.components | b.components,
        initiator_time=init_t,
        terminator_time=term_t,
        initiator_id=init_id,
        terminator_id=term_id,
    )


def _strip_bindings(o: Occurrence) -> Occurrence:
    if not o.bindings:
        return o
    return Occurrence(
        interval=o.interval,
        bindings={},
        components=o.components,
        initiator_time=o.initiator_time,
        terminator_time=o.terminator_time,
        initiator_id=o.initiator_id,
        terminator_id=o.terminator_id,
    )


def merge_group(occs: Sequence[Occurrence]) -> Occurrence:
    """Merge pairwise component-disjoint occurrences; bindings are dropped
    (the grouping operators do not expose inner bindings)."""
    merged = _strip_bindings(occs[0])
    for o in occs[1:]:
        nxt = merge_occurrences(merged, _strip_bindings(o))
        assert nxt is not None  # stripped bindings cannot clash
        merged = nxt
    return merged


def occurrence_sort_key(o: Occurrence):
    """Total deterministic order for reporting."""
    return (
        o.initiator_time,
        o.initiator_id,
        o.terminator_time,
        o.terminator_id,
        tuple(sorted(o.components)),
        tuple(sorted((v, e.id) for v, e in o.bindings.items())),
    )


def check_sorted(history: Sequence[EventInstance]) -> None:
    for prev, cur in zip(history, history[1:]):
        if (cur.time, cur.id) < (prev.time, prev.id):
            raise UnsortedHistory(
                f"history regresses from {prev!r} to {cur!r}; sort by (time, id)"
            )


# -------------------------------------------------------- interval semantics


def occurrences(expr: EventExpr, history: Sequence[EventInstance]) -> frozenset[Occurrence]:
    """All occurrences of expr over the (sorted) history, interval semantics.

    Exponential in the worst case by design; this is the reference
    evaluator, not the streaming one.
    """
    check_sorted(history)
    return frozenset(_eval(expr, list(history)))


def _eval(expr: EventExpr, history: list[EventInstance]) -> set[Occurrence]:
    if isinstance(expr, Atomic):
        return {
            occurrence_of(e, expr.var) for e in history if e.type.name == expr.type.name
        }

    if isinstance(expr, Seq):
        lefts = _eval(expr.left, history)
        rights = _eval(expr.right, history)
        out = set()
        for l in lefts:
            for r in rights:
                if strictly_before(l.interval, r.interval):
                    merged = merge_occurrences(l, r)
                    if merged is not None:
                        out.add(merged)
        return out

    if isinstance(expr, And):
        lefts = _eval(expr.left, history)
        rights = _eval(expr.right, history)
        out = set()
        for l in lefts:
            for r in rights:
                if l.components & r.components:
                    continue
                merged = merge_occurrences(l, r)
                if merged is not None:
                    out.add(merged)
        return out

    if isinstance(expr, Or):
        return _eval(expr.left, history) | _eval(expr.right, history)

    if isinstance(expr, Not):
        absents = _eval(expr.absent, history)
        openers = _eval(expr.opener, history)
        closers = _eval(expr.closer, history)
        out = set()
        for o in openers:
            for c in closers:
                if not strictly_before(o.interval, c.interval):
                    continue
                blocked = any(
                    strictly_before(o.interval, a.interval)
                    and strictly_before(a.interval, c.interval)
                    for a in absents
                )
                if blocked:
                    continue
                merged = merge_occurrences(o, c)
                if merged is not None:
                    out.add(merged)
        return out

    if isinstance(expr, Any):
        names = {t.name for t in expr.types}
        pool = [e for e in history if e.type.name in names]
        out = set()
        for combo in itertools.combinations(pool, expr.count):
            types_used = {e.type.name for e in combo}
            if len(types_used) != len(combo):
                continue
            out.add(merge_group([occurrence_of(e) for e in combo]))
        return out

    if isinstance(expr, Times):
        inner = sorted(_eval(expr.of, history), key=occurrence_sort_key)
        out = set()
        for combo in itertools.combinations(inner, expr.count):
            if combo and _pairwise_disjoint(combo):
                out.add(merge_group(list(combo)))
        return out

    raise InvalidExpression(f"unknown expression node {expr!r}")


def _pairwise_disjoint(occs: Iterable[Occurrence]) -> bool:
    seen: set[int] = set()
    for o in occs:
        if seen & o.components:
            return False
        seen |= o.components
    return True


# ------------------------------------------------------- detection-time view


def occurrences_point(
    expr: EventExpr, history: Sequence[EventInstance]
) -> frozenset[tuple[TimePoint, frozenset[int]]]:
    """Occurrences under terminator-point semantics.

    Each result is (detection time, component ids) where the detection time
    is the latest component's timestamp and ordering constraints compare
    detection times only. Exists to demonstrate the composition anomaly that
    interval semantics avoids.
    """
    check_sorted(history)
    return frozenset(_eval_point(expr, list(history)))


def _eval_point(expr: EventExpr, history: list[EventInstance]) -> set:
    if isinstance(expr, Atomic):
        return {
            (e.time, frozenset((e.id,)))
            for e in history
            if e.type.name == expr.type.name
        }

    if isinstance(expr, Seq):
        lefts = _eval_point(expr.left, history)
        rights = _eval_point(expr.right, history)
        return {
            (rt, lc | rc)
            for (lt, lc) in lefts
            for (rt, rc) in rights
            if lt < rt
        }

    if isinstance(expr, And):
        lefts = _eval_point(expr.left, history)
        rights = _eval_point(expr.right, history)
        return {
            (max(lt, rt), lc | rc)
            for (lt, lc) in lefts
            for (rt, rc) in rights
            if not (lc & rc)
        }

    if isinstance(expr, Or):
        return _eval_point(expr.left, history) | _eval_point(expr.right, history)

    if isinstance(expr, Not):
        absents = _eval_point(expr.absent, history)
        openers = _eval_point(expr.opener, history)
        closers = _eval_point(expr.closer, history)
        out = set()
        for (ot, oc) in openers:
            for (ct, cc) in closers:
                if not ot < ct:
                    continue
                if any(ot < at < ct for (at, _) in absents):
                    continue
                out.add((ct, oc | cc))
        return out

    if isinstance(expr, Any):
        names = {t.name for t in expr.types}
        pool = [e for e in history if e.type.name in names]
        out = set()
        for combo in itertools.combinations(pool, expr.count):
            if len({e.type.name for e in combo}) != len(combo):
                continue
            out.add(
                (max(e.time for e in combo), frozenset(e.id for e in combo))
            )
        return out

    if isinstance(expr, Times):
        inner = sorted(_eval_point(expr.of, history))
        out = set()
        for combo in itertools.combinations(inner, expr.count):
            if not combo:
                continue
            comps: set[int] = set()
            ok = True
            for (_, cc) in combo:
                if comps & cc:
                    ok = False
                    break
                comps |= cc
            if ok:
                out.add((max(t for (t, _) in combo), frozenset(comps)))
        return out

    raise InvalidExpression(f"unknown expression node {expr!r}")
