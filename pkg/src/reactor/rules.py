"""Rule definitions, the extensional knowledge base, and condition evaluation.

A rule reacts to an event expression, optionally guarded by a condition over
the triggering bindings, the fact base, and currently holding fluents.
Conditions are conjunctions evaluated left to right; positive fact lookups
unify and may introduce new variable bindings (one solution per matching
fact), negated lookups require all their variables to be bound already and
succeed only when nothing in the fact base matches.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .algebra import EventExpr
from .detection import ConsumptionPolicy, SelectionPolicy
from .errors import DuplicateRuleId, MissingField, UnboundVariable
from .fluents import EffectMode, FluentHistory
from .model import EventInstance, Scalar

# =========================================================================
# Terms
# =========================================================================


@dataclass(frozen=True)
class Lit:
    value: Scalar


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class FieldRef:
    """?var.field, a payload field of a bound event instance."""

    var: str
    fieldname: str


Term = Union[Lit, VarRef, FieldRef]

# Binding values are event instances (from the event expression) or scalars
# (from fact unification).
Binding = Union[EventInstance, Scalar]


def eval_term(term: Term, bindings: dict[str, Binding]) -> Scalar:
    """Resolve a term to a scalar; raises MissingField / UnboundVariable."""
    if isinstance(term, Lit):
        return term.value
    if isinstance(term, VarRef):
        if term.name not in bindings:
            raise UnboundVariable(f"?{term.name} is not bound")
        value = bindings[term.name]
        if isinstance(value, EventInstance):
            raise MissingField(
                f"?{term.name} is an event binding; use ?{term.name}.<field>"
            )
        return value
    if isinstance(term, FieldRef):
        if term.var not in bindings:
            raise UnboundVariable(f"?{term.var} is not bound")
        inst = bindings[term.var]
        if not isinstance(inst, EventInstance):
            raise MissingField(f"?{term.var} is not an event binding")
        if term.fieldname not in inst.payload:
            raise MissingField(
                f"event {inst!r} has no payload field {term.fieldname!r}"
            )
        return inst.payload[term.fieldname]
    raise TypeError(f"not a term: {term!r}")


def term_vars(term: Term) -> set[str]:
    if isinstance(term, VarRef):
        return {term.name}
    if isinstance(term, FieldRef):
        return {term.var}
    return set()


# =========================================================================
# Condition atoms
# =========================================================================

COMPARE_OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Comparison:
    lhs: Term
    op: str
    rhs: Term


@dataclass(frozen=True)
class FactLookup:
    name: str
    terms: tuple[Term, ...]
    negated: bool = False


@dataclass(frozen=True)
class HoldsAtom:
    fluent: str


Atom = Union[Comparison, FactLookup, HoldsAtom]


@dataclass(frozen=True)
class Condition:
    atoms: tuple[Atom, ...]


# =========================================================================
# Actions
# =========================================================================


@dataclass(frozen=True)
class FactTemplate:
    name: str
    terms: tuple[Term, ...]


@dataclass(frozen=True)
class AssertAction:
    fact: FactTemplate


@dataclass(frozen=True)
class RetractAction:
    fact: FactTemplate


@dataclass(frozen=True)
class EmitAction:
    type_name: str
    payload: tuple[tuple[str, Term], ...]


@dataclass(frozen=True)
class NoopAction:
    pass


Action = Union[AssertAction, RetractAction, EmitAction, NoopAction]


# =========================================================================
# Rules
# =========================================================================


@dataclass(frozen=True)
class Rule:
    id: str
    on: EventExpr
    where: Optional[Condition] = None
    actions: tuple[Action, ...] = ()
    post: Optional[Condition] = None
    selection: SelectionPolicy = SelectionPolicy.FIRST
    consumption: ConsumptionPolicy = ConsumptionPolicy.SINGLE
    window: Optional[int] = None


@dataclass(frozen=True)
class EffectDecl:
    type_name: str
    mode: EffectMode
    fluent: str


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    effects: tuple[EffectDecl, ...] = ()

    def __post_init__(self):
        seen = set()
        for r in self.rules:
            if r.id in seen:
                raise DuplicateRuleId(f"rule id {r.id!r} defined twice")
            seen.add(r.id)

    def __iter__(self):
        return iter(self.rules)


# =========================================================================
# Knowledge base
# =========================================================================


@dataclass(frozen=True)
class Fact:
    name: str
    args: tuple[Scalar, ...] = ()

    def __repr__(self):
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(map(repr, self.args))})"


def fact_sort_key(f: Fact):
    return (f.name, len(f.args), tuple((type(a).__name__, str(a)) for a in f.args))


class KnowledgeBase:
    """Extensional fact store with a committed-transaction journal.

    Facts are a set: re-asserting an existing fact or retracting an absent
    one changes nothing and journals nothing. The journal records, per
    committed transaction, the ops that actually changed state, so replaying
    it over the initial facts reproduces the current state exactly.
    """

    def __init__(self, initial_facts: Sequence[Fact] = ()):
        self.initial: tuple[Fact, ...] = tuple(initial_facts)
        self._facts: dict[Fact, None] = {f: None for f in self.initial}
        self.journal: list[tuple[tuple[str, Fact], ...]] = []

    def __contains__(self, fact: Fact) -> bool:
        return fact in self._facts

    def __len__(self) -> int:
        return len(self._facts)

    def facts(self) -> list[Fact]:
        return list(self._facts)

    def snapshot(self) -> frozenset[Fact]:
        return frozenset(self._facts)

    def commit(self, ops: Sequence[tuple[str, Fact]]) -> None:
        """Apply a transaction's effective ops and journal them."""
        for op, fact in ops:
            if op == "assert":
                self._facts[fact] = None
            elif op == "retract":
                del self._facts[fact]
            else:
                raise ValueError(f"unknown journal op {op!r}")
        self.journal.append(tuple(ops))

    def replay_journal(self) -> frozenset[Fact]:
        """Reconstruct the current state from initial facts + journal."""
        facts: dict[Fact, None] = {f: None for f in self.initial}
        for txn in self.journal:
            for op, fact in txn:
                if op == "assert":
                    facts[fact] = None
                else:
                    facts.pop(fact, None)
        return frozenset(facts)


# =========================================================================
# Condition evaluation
# =========================================================================


def _compare(a: Scalar, op: str, b: Scalar) -> bool:
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    # ordering comparisons fail closed across incompatible types
    numeric = (int, float)
    if isinstance(a, numeric) and isinstance(b, numeric):
        pass
    elif isinstance(a, str) and isinstance(b, str):
        pass
    else:
        return False
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise ValueError(f"unknown comparison op {op!r}")


def _unify_fact(
    lookup: FactLookup, fact: Fact, bindings: dict[str, Binding]
) -> Optional[dict[str, Binding]]:
    if fact.name != lookup.name or len(fact.args) != len(lookup.terms):
        return None
    extended = dict(bindings)
    for term, arg in zip(lookup.terms, fact.args):
        if isinstance(term, VarRef) and term.name not in extended:
            extended[term.name] = arg
            continue
        value = eval_term(term, extended)
        if value != arg:
            return None
    return extended


def evaluate_condition(
    cond: Optional[Condition],
    bindings: dict[str, Binding],
    kb: KnowledgeBase,
    at: int,
    fluents: Optional[FluentHistory] = None,
) -> list[dict[str, Binding]]:
    """All ways the conjunction holds; each solution extends `bindings`.

    An absent/None condition is vacuously true (one solution: the input
    bindings). holds() atoms are judged at time `at`.
    """
    solutions = [dict(bindings)]
    if cond is None:
        return solutions
    for atom in cond.atoms:
        nxt: list[dict[str, Binding]] = []
        for sol in solutions:
            if isinstance(atom, Comparison):
                if _compare(
                    eval_term(atom.lhs, sol), atom.op, eval_term(atom.rhs, sol)
                ):
                    nxt.append(sol)
            elif isinstance(atom, HoldsAtom):
                if fluents is not None and fluents.holds_at(atom.fluent, at):
                    nxt.append(sol)
            elif isinstance(atom, FactLookup):
                if atom.negated:
                    hit = any(
                        _unify_fact(atom, f, sol) is not None for f in kb.facts()
                    )
                    if not hit:
                        nxt.append(sol)
                else:
                    for f in kb.facts():
                        extended = _unify_fact(atom, f, sol)
                        if extended is not None:
                            nxt.append(extended)
            else:
                raise TypeError(f"not a condition atom: {atom!r}")
        solutions = nxt
        if not solutions:
            break
    return solutions
