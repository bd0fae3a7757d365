"""Incremental event detection with selection, consumption, and windowing.

The detector mirrors the expression tree with one state node per operator.
New events enter at the atomic leaves and new partial occurrences propagate
upward, so each feed touches only combinations the new event completes. The
set of occurrences this accumulates under {all, multiple, no window} is
exactly what the declarative evaluator produces over the same history; that
equivalence is the engine's correctness contract and is enforced in tests.

Policies:
* selection picks which same-terminator candidates fire (first / last / all
  by initiator position),
* consumption decides whether fired components stay available (multiple) or
  are removed from the retained set and all partial state (single),
* an optional window expires events too old to take part in any future
  detection.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .algebra import (
    And,
    Any,
    Atomic,
    EventExpr,
    Not,
    Occurrence,
    Or,
    Seq,
    Times,
    expr_leaf_types,
    merge_group,
    merge_occurrences,
    occurrence_of,
    occurrence_sort_key,
    validate_expr,
)
from .errors import InvalidExpression, NoWindow, OutOfOrderEvent, StaleDetection
from .model import EventInstance, TimePoint, strictly_before


class SelectionPolicy(Enum):
    FIRST = "first"
    LAST = "last"
    ALL = "all"


class ConsumptionPolicy(Enum):
    SINGLE = "single"
    MULTIPLE = "multiple"


@dataclass(frozen=True)
class DetectorConfig:
    selection: SelectionPolicy = SelectionPolicy.FIRST
    consumption: ConsumptionPolicy = ConsumptionPolicy.SINGLE
    window: Optional[int] = None

    def __post_init__(self):
        if self.window is not None and self.window <= 0:
            raise ValueError(f"window must be positive, got {self.window}")


@dataclass(frozen=True)
class Detection:
    """A candidate that survived selection (and, under single, consumption)."""

    occurrence: Occurrence
    fired: bool = True


def select_candidates(
    cands: Sequence[Occurrence], policy: SelectionPolicy
) -> list[Occurrence]:
    """Order/filter same-terminator candidates per the selection policy.

    first -> the earliest initiator (ties to the smallest initiator id),
    last -> the latest initiator (ties to the largest id), all -> every
    candidate ordered by initiator position.
    """
    if not cands:
        return []
    ordered = sorted(cands, key=occurrence_sort_key)
    if policy is SelectionPolicy.FIRST:
        return [ordered[0]]
    if policy is SelectionPolicy.LAST:
        return [ordered[-1]]
    return ordered


# =========================================================================
# Per-operator incremental state
# =========================================================================


class _Node:
    """State node: the occurrence set of one subexpression so far."""

    __slots__ = ("occs",)

    def __init__(self):
        # dict used as an ordered set; iteration order = creation order
        self.occs: dict[Occurrence, None] = {}

    def feed(self, e: EventInstance) -> list[Occurrence]:
        raise NotImplementedError

    def prune(self, removed: set[int]) -> None:
        self.occs = {
            o: None for o in self.occs if not (o.components & removed)
        }

    def _admit(self, fresh: list[Occurrence]) -> list[Occurrence]:
        news = []
        for o in fresh:
            if o not in self.occs:
                self.occs[o] = None
                news.append(o)
        return news


class _AtomicNode(_Node):
    __slots__ = ("type_name", "var")

    def __init__(self, expr: Atomic):
        super().__init__()
        self.type_name = expr.type.name
        self.var = expr.var

    def feed(self, e: EventInstance) -> list[Occurrence]:
        if e.type.name != self.type_name:
            return []
        return self._admit([occurrence_of(e, self.var)])


class _PairNode(_Node):
    """Shared join logic for Seq and And."""

    __slots__ = ("left", "right", "ordered")

    def __init__(self, left: _Node, right: _Node, ordered: bool):
        super().__init__()
        self.left = left
        self.right = right
        self.ordered = ordered  # True: sequence, False: conjunction

    def _match(self, l: Occurrence, r: Occurrence) -> Optional[Occurrence]:
        if self.ordered:
            if not strictly_before(l.interval, r.interval):
                return None
        elif l.components & r.components:
            return None
        return merge_occurrences(l, r)

    def feed(self, e: EventInstance) -> list[Occurrence]:
        new_l = self.left.feed(e)
        new_r = self.right.feed(e)
        fresh: list[Occurrence] = []
        if new_r:
            new_r_set = set(new_r)
            for l in self.left.occs:
                for r in new_r:
                    m = self._match(l, r)
                    if m is not None:
                        fresh.append(m)
        else:
            new_r_set = set()
        if new_l:
            for l in new_l:
                for r in self.right.occs:
                    if r in new_r_set:
                        continue  # already joined above
                    m = self._match(l, r)
                    if m is not None:
                        fresh.append(m)
        return self._admit(fresh)

    def prune(self, removed: set[int]) -> None:
        self.left.prune(removed)
        self.right.prune(removed)
        super().prune(removed)


class _OrNode(_Node):
    __slots__ = ("left", "right")

    def __init__(self, left: _Node, right: _Node):
        super().__init__()
        self.left = left
        self.right = right

    def feed(self, e: EventInstance) -> list[Occurrence]:
        return self._admit(self.left.feed(e) + self.right.feed(e))

    def prune(self, removed: set[int]) -> None:
        self.left.prune(removed)
        self.right.prune(removed)
        super().prune(removed)


class _NotNode(_Node):
    __slots__ = ("absent", "opener", "closer")

    def __init__(self, absent: _Node, opener: _Node, closer: _Node):
        super().__init__()
        self.absent = absent
        self.opener = opener
        self.closer = closer

    def feed(self, e: EventInstance) -> list[Occurrence]:
        # absent first so same-feed blockers are visible to the pair check
        self.absent.feed(e)
        new_o = self.opener.feed(e)
        new_c = self.closer.feed(e)
        fresh: list[Occurrence] = []
        if new_c:
            new_c_set = set(new_c)
            for o in self.opener.occs:
                for c in new_c:
                    m = self._pair(o, c)
                    if m is not None:
                        fresh.append(m)
        else:
            new_c_set = set()
        if new_o:
            for o in new_o:
                for c in self.closer.occs:
                    if c in new_c_set:
                        continue
                    m = self._pair(o, c)
                    if m is not None:
                        fresh.append(m)
        return self._admit(fresh)

    def _pair(self, o: Occurrence, c: Occurrence) -> Optional[Occurrence]:
        if not strictly_before(o.interval, c.interval):
            return None
        for a in self.absent.occs:
            if strictly_before(o.interval, a.interval) and strictly_before(
                a.interval, c.interval
            ):
                return None
        return merge_occurrences(o, c)

    def prune(self, removed: set[int]) -> None:
        self.absent.prune(removed)
        self.opener.prune(removed)
        self.closer.prune(removed)
        super().prune(removed)


class _AnyNode(_Node):
    __slots__ = ("count", "names", "insts")

    def __init__(self, expr: Any):
        super().__init__()
        self.count = expr.count
        self.names = {t.name for t in expr.types}
        self.insts: list[EventInstance] = []

    def feed(self, e: EventInstance) -> list[Occurrence]:
        if e.type.name not in self.names:
            return []
        fresh: list[Occurrence] = []
        pool = [x for x in self.insts if x.type.name != e.type.name]
        for combo in itertools.combinations(pool, self.count - 1):
            if len({x.type.name for x in combo}) != len(combo):
                continue
            fresh.append(merge_group([occurrence_of(x) for x in (*combo, e)]))
        self.insts.append(e)
        return self._admit(fresh)

    def prune(self, removed: set[int]) -> None:
        self.insts = [x for x in self.insts if x.id not in removed]
        super().prune(removed)


class _TimesNode(_Node):
    __slots__ = ("count", "inner")

    def __init__(self, count: int, inner: _Node):
        super().__init__()
        self.count = count
        self.inner = inner

    def feed(self, e: EventInstance) -> list[Occurrence]:
        new_i = self.inner.feed(e)
        if not new_i:
            return []
        new_set = set(new_i)
        fresh: list[Occurrence] = []
        pool = list(self.inner.occs)
        for combo in itertools.combinations(pool, self.count):
            if not any(o in new_set for o in combo):
                continue
            comps: set[int] = set()
            ok = True
            for o in combo:
                if comps & o.components:
                    ok = False
                    break
                comps |= o.components
            if ok:
                fresh.append(merge_group(list(combo)))
        return self._admit(fresh)

    def prune(self, removed: set[int]) -> None:
        self.inner.prune(removed)
        super().prune(removed)


def _build(expr: EventExpr) -> _Node:
    if isinstance(expr, Atomic):
        return _AtomicNode(expr)
    if isinstance(expr, Seq):
        return _PairNode(_build(expr.left), _build(expr.right), ordered=True)
    if isinstance(expr, And):
        return _PairNode(_build(expr.left), _build(expr.right), ordered=False)
    if isinstance(expr, Or):
        return _OrNode(_build(expr.left), _build(expr.right))
    if isinstance(expr, Not):
        return _NotNode(_build(expr.absent), _build(expr.opener), _build(expr.closer))
    if isinstance(expr, Any):
        return _AnyNode(expr)
    if isinstance(expr, Times):
        return _TimesNode(expr.count, _build(expr.of))
    raise InvalidExpression(f"unknown expression node {expr!r}")


# =========================================================================
# Detector
# =========================================================================


class Detector:
    """Single-writer incremental detector for one event expression."""

    def __init__(self, expr: EventExpr, config: DetectorConfig | None = None):
        validate_expr(expr)  # InvalidExpression on malformed input
        self.expr = expr
        self.config = config or DetectorConfig()
        self.retained: dict[int, EventInstance] = {}
        self._root = _build(expr)
        self._leaf_types = expr_leaf_types(expr)
        self._order: deque[tuple[TimePoint, int]] = deque()  # (time, id) fed
        self._watermark: TimePoint = 0
        self._last_id = 0

    # ------------------------------------------------------------- feeding

    def feed(self, e: EventInstance) -> list[Detection]:
        """Ingest one event; returns the detections that fired on it."""
        if e.time < self._watermark:
            raise OutOfOrderEvent(
                f"event {e!r} precedes watermark {self._watermark}"
            )
        if e.id <= self._last_id:
            raise OutOfOrderEvent(
                f"event id {e.id} is not fresh (last was {self._last_id})"
            )
        self._watermark = e.time
        self._last_id = e.id

        if self.config.window is not None:
            self._expire_older_than(e.time - self.config.window)

        # a type no leaf mentions can never be a component; skip the tree
        if e.type.name not in self._leaf_types:
            return []

        self.retained[e.id] = e
        self._order.append((e.time, e.id))

        candidates = self._root.feed(e)
        selected = select_candidates(candidates, self.config.selection)

        fired: list[Detection] = []
        if self.config.consumption is ConsumptionPolicy.SINGLE:
            for occ in selected:
                if not all(cid in self.retained for cid in occ.components):
                    continue  # components taken by an earlier firing this batch
                self._remove(set(occ.components))
                fired.append(Detection(occ))
        else:
            fired = [Detection(occ) for occ in selected]
        return fired

    # ---------------------------------------------------------- consumption

    def consume(self, detection: Detection, policy: ConsumptionPolicy) -> None:
        """Apply a consumption policy to a fired detection's components."""
        if policy is ConsumptionPolicy.MULTIPLE:
            return
        comps = set(detection.occurrence.components)
        missing = [cid for cid in comps if cid not in self.retained]
        if missing:
            raise StaleDetection(
                f"components {sorted(missing)} are no longer retained"
            )
        self._remove(comps)

    def _remove(self, ids: set[int]) -> None:
        for cid in ids:
            self.retained.pop(cid, None)
        self._root.prune(ids)

    # -------------------------------------------------------------- windows

    def expire(self, now: TimePoint) -> int:
        """Drop retained events older than the window; returns the count."""
        if self.config.window is None:
            raise NoWindow("detector has no window configured")
        if now < self._watermark:
            raise OutOfOrderEvent(
                f"expire at {now} precedes watermark {self._watermark}"
            )
        self._watermark = now
        return self._expire_older_than(now - self.config.window)

    def _expire_older_than(self, threshold: TimePoint) -> int:
        removed: set[int] = set()
        while self._order and self._order[0][0] < threshold:
            _, eid = self._order.popleft()
            if eid in self.retained:
                removed.add(eid)
        if removed:
            for cid in removed:
                del self.retained[cid]
            self._root.prune(removed)
        return len(removed)


def new_detector(expr: EventExpr, config: DetectorConfig | None = None) -> Detector:
    """Validate the expression and build a fresh detector for it."""
    return Detector(expr, config)
