"""Rule dispatch: transactional actions, reaction chaining, cycle analysis.

Each firing runs its actions against a shadow copy of the fact base. Updates
are set-semantic: asserting a present fact or retracting an absent one is a
no-op and raises no event, which is what lets well-formed rule chains bottom
out. If the rule's postcondition is satisfiable on the shadow state the
transaction commits: the journal gets the effective ops, and one internal
event per op (assert:NAME / retract:NAME with the fact args as payload) plus
any emitted events join the dispatch queue. Otherwise everything is
discarded and the firing reports rolled_back with zero events.

Chaining is breadth-first at the triggering event's timestamp; the chain
depth counts queue generations and a configurable limit guards against
non-terminating rule interactions. The triggering graph gives the static
counterpart: no cycles there means no chain can run away.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

from .algebra import Occurrence, expr_leaf_types
from .detection import Detector, DetectorConfig, new_detector
from .errors import ChainLimitExceeded, MissingField, OutOfOrderEvent, TemplateError
from .fluents import FluentHistory
from .model import (
    ASSERT_PREFIX,
    RETRACT_PREFIX,
    EventInstance,
    Scalar,
    TimePoint,
    event_type,
    make_event,
)
from .rules import (
    Action,
    AssertAction,
    Binding,
    Condition,
    EmitAction,
    Fact,
    FactTemplate,
    KnowledgeBase,
    NoopAction,
    RetractAction,
    Rule,
    RuleSet,
    UnboundVariable,
    eval_term,
    evaluate_condition,
)


class TxnOutcome(Enum):
    COMMITTED = "committed"
    ROLLED_BACK = "rolled_back"


@dataclass(frozen=True)
class ReactionRecord:
    """One rule firing: what triggered it, what it did, how it ended."""

    rule_id: str
    occurrence: Occurrence
    bindings: dict[str, Binding]
    actions: tuple[tuple, ...]
    outcome: TxnOutcome
    events: tuple[EventInstance, ...]
    depth: int
    error: Optional[str] = None


# =========================================================================
# Transactional action application
# =========================================================================


def instantiate_fact(tpl: FactTemplate, bindings: dict[str, Binding]) -> Fact:
    """Ground a fact template; raises TemplateError when it cannot be."""
    try:
        args = tuple(eval_term(t, bindings) for t in tpl.terms)
    except (MissingField, UnboundVariable) as err:
        raise TemplateError(f"cannot instantiate {tpl.name} template: {err}") from err
    return Fact(tpl.name, args)


def _fact_payload(fact: Fact) -> dict[str, Scalar]:
    # positional fact args ride along as arg0, arg1, ...
    return {f"arg{i}": v for i, v in enumerate(fact.args)}


def _run_actions(
    actions: Sequence[Action],
    bindings: dict[str, Binding],
    kb: KnowledgeBase,
    post: Optional[Condition],
    fluents: Optional[FluentHistory],
    at: TimePoint,
    id_source: Optional[Callable[[], int]],
):
    """Full transaction: returns (outcome, events, ops, action descriptions).

    Commits to kb on success; touches nothing on rollback.
    """
    shadow: dict[Fact, None] = {f: None for f in kb.facts()}
    ops: list[tuple[str, Fact]] = []
    pending: list[tuple[str, TimePoint, dict[str, Scalar]]] = []  # event specs
    done: list[tuple] = []

    for act in actions:
        if isinstance(act, AssertAction):
            fact = instantiate_fact(act.fact, bindings)
            done.append(("assert", fact))
            if fact not in shadow:
                shadow[fact] = None
                ops.append(("assert", fact))
                pending.append((ASSERT_PREFIX + fact.name, at, _fact_payload(fact)))
        elif isinstance(act, RetractAction):
            fact = instantiate_fact(act.fact, bindings)
            done.append(("retract", fact))
            if fact in shadow:
                del shadow[fact]
                ops.append(("retract", fact))
                pending.append((RETRACT_PREFIX + fact.name, at, _fact_payload(fact)))
        elif isinstance(act, EmitAction):
            try:
                payload = {k: eval_term(t, bindings) for k, t in act.payload}
            except (MissingField, UnboundVariable) as err:
                raise TemplateError(
                    f"cannot instantiate emit({act.type_name}) payload: {err}"
                ) from err
            done.append(("emit", act.type_name, payload))
            pending.append((act.type_name, at, payload))
        elif isinstance(act, NoopAction):
            done.append(("noop",))
        else:
            raise TypeError(f"not an action: {act!r}")

    if post is not None:
        shadow_kb = KnowledgeBase(list(shadow))
        if not evaluate_condition(post, bindings, shadow_kb, at, fluents):
            return TxnOutcome.ROLLED_BACK, [], [], tuple(done)

    kb.commit(ops)
    counter = iter(range(1, len(pending) + 1))
    mint = id_source if id_source is not None else (lambda: next(counter))
    events = [
        make_event(event_type(name), t, payload, mint())
        for (name, t, payload) in pending
    ]
    return TxnOutcome.COMMITTED, events, ops, tuple(done)


def apply_actions_txn(
    actions: Sequence[Action],
    bindings: dict[str, Binding],
    kb: KnowledgeBase,
    post: Optional[Condition] = None,
    fluents: Optional[FluentHistory] = None,
    at: TimePoint = 0,
    id_source: Optional[Callable[[], int]] = None,
) -> tuple[TxnOutcome, list[EventInstance]]:
    """Run one rule firing's actions transactionally.

    Returns (outcome, produced events); rolled-back firings produce none.
    """
    outcome, events, _, _ = _run_actions(
        actions, bindings, kb, post, fluents, at, id_source
    )
    return outcome, events


# =========================================================================
# Engine
# =========================================================================


def _solution_order_key(sol: dict[str, Binding]) -> str:
    scalars = {
        k: v for k, v in sol.items() if not isinstance(v, EventInstance)
    }
    return json.dumps(scalars, sort_keys=True, default=str)


class Engine:
    """Rule set + knowledge base + fluent history, fed one event at a time."""

    def __init__(
        self,
        ruleset: RuleSet,
        initial_facts: Sequence[Fact] = (),
        chain_limit: int = 1000,
    ):
        if chain_limit < 1:
            raise ValueError(f"chain limit must be >= 1, got {chain_limit}")
        self.ruleset = ruleset
        self.kb = KnowledgeBase(initial_facts)
        self.fluents = FluentHistory()
        for eff in ruleset.effects:
            self.fluents.declare_effect(eff.type_name, eff.mode, eff.fluent)
        self.chain_limit = chain_limit
        self.detectors: list[tuple[Rule, Detector]] = [
            (
                rule,
                new_detector(
                    rule.on,
                    DetectorConfig(rule.selection, rule.consumption, rule.window),
                ),
            )
            for rule in ruleset.rules
        ]
        self._seq = 0  # last issued event id
        self._watermark: TimePoint = 0

    def next_id(self) -> int:
        self._seq += 1
        return self._seq

    def ingest(
        self, type_name: str, time: TimePoint, payload: dict | None = None
    ) -> list[ReactionRecord]:
        """Mint an id for a new event and dispatch it."""
        e = make_event(event_type(type_name), time, payload or {}, self.next_id())
        return self._dispatch_minted(e)

    def dispatch(self, e: EventInstance) -> list[ReactionRecord]:
        """Dispatch a caller-built event; its id must be fresh."""
        if e.id <= self._seq:
            raise OutOfOrderEvent(
                f"event id {e.id} is not fresh (last issued {self._seq})"
            )
        self._seq = e.id
        return self._dispatch_minted(e)

    def _dispatch_minted(self, e: EventInstance) -> list[ReactionRecord]:
        if e.time < self._watermark:
            raise OutOfOrderEvent(
                f"event {e!r} precedes engine watermark {self._watermark}"
            )
        self._watermark = e.time

        records: list[ReactionRecord] = []
        queue: deque[tuple[EventInstance, int]] = deque([(e, 0)])
        while queue:
            ev, depth = queue.popleft()
            self.fluents.record(ev)
            for rule, det in self.detectors:
                for det_hit in det.feed(ev):
                    occ = det_hit.occurrence
                    at = occ.terminator_time
                    base = dict(occ.bindings)
                    try:
                        sols = evaluate_condition(
                            rule.where, base, self.kb, at, self.fluents
                        )
                    except MissingField as err:
                        # fails closed, but leaves an audit record
                        records.append(
                            ReactionRecord(
                                rule.id, occ, base, (), TxnOutcome.ROLLED_BACK,
                                (), depth, error=str(err),
                            )
                        )
                        continue
                    sols.sort(key=_solution_order_key)
                    for sol in sols:
                        try:
                            outcome, events, _ops, acts = _run_actions(
                                rule.actions, sol, self.kb, rule.post,
                                self.fluents, at, self.next_id,
                            )
                        except TemplateError as err:
                            records.append(
                                ReactionRecord(
                                    rule.id, occ, sol, (),
                                    TxnOutcome.ROLLED_BACK, (), depth,
                                    error=str(err),
                                )
                            )
                            continue
                        records.append(
                            ReactionRecord(
                                rule.id, occ, sol, acts, outcome,
                                tuple(events), depth,
                            )
                        )
                        if events:
                            if depth + 1 > self.chain_limit:
                                raise ChainLimitExceeded(
                                    f"chain depth {depth + 1} exceeds limit "
                                    f"{self.chain_limit} at time {ev.time}",
                                    records=records,
                                )
                            for ie in events:
                                queue.append((ie, depth + 1))
        return records


# =========================================================================
# Static triggering analysis
# =========================================================================


@dataclass(frozen=True)
class TriggeringGraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    cycles: tuple[tuple[str, ...], ...]

    @property
    def acyclic(self) -> bool:
        return not self.cycles


def _raised_types(rule: Rule) -> set[str]:
    out: set[str] = set()
    for act in rule.actions:
        if isinstance(act, AssertAction):
            out.add(ASSERT_PREFIX + act.fact.name)
        elif isinstance(act, RetractAction):
            out.add(RETRACT_PREFIX + act.fact.name)
        elif isinstance(act, EmitAction):
            out.add(act.type_name)
    return out


def triggering_graph(ruleset: RuleSet) -> TriggeringGraph:
    """Edges r -> s when an action of r can raise an event s listens for.

    Listening is judged conservatively over every type name in s's event
    expression, so an empty cycle list certifies that no reaction chain can
    loop.
    """
    order = {rule.id: i for i, rule in enumerate(ruleset.rules)}
    listens = {rule.id: expr_leaf_types(rule.on) for rule in ruleset.rules}
    edges: list[tuple[str, str]] = []
    adj: dict[str, list[str]] = {rule.id: [] for rule in ruleset.rules}
    for r in ruleset.rules:
        raised = _raised_types(r)
        if not raised:
            continue
        for s in ruleset.rules:
            if raised & listens[s.id]:
                edges.append((r.id, s.id))
                adj[r.id].append(s.id)

    cycles = _cyclic_components(list(order), adj, order)
    return TriggeringGraph(tuple(order), tuple(edges), tuple(cycles))


def _cyclic_components(
    nodes: list[str], adj: dict[str, list[str]], order: dict[str, int]
) -> list[tuple[str, ...]]:
    """Tarjan SCC; returns components that actually contain a cycle."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = [0]
    found: list[tuple[str, ...]] = []

    def strongconnect(v: str) -> None:
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        for w in adj[v]:
            if w not in index:
                strongconnect(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.append(w)
                if w == v:
                    break
            if len(comp) > 1 or v in adj[v]:
                found.append(tuple(sorted(comp, key=lambda n: order[n])))

    for v in nodes:
        if v not in index:
            strongconnect(v)
    found.sort(key=lambda comp: order[comp[0]])
    return found
