"""Trace loading and deterministic replay.

A trace file is line-delimited JSON, one stimulus per line:

    {"type": "outage", "time": 3, "payload": {"host": "w1"}}

Times must be non-decreasing and types must not be reserved (``assert:*``,
``retract:*``, ``timer``). load_trace numbers instances 1..n in line order;
replay re-mints ids on ingestion so that events raised mid-dispatch get
interleaved, globally fresh ids (a pre-numbered merged stream could not stay
monotone around them).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Optional, Sequence, Union

from .engine import Engine, ReactionRecord
from .errors import (
    ChainLimitExceeded,
    InvalidPeriod,
    OutOfOrderTrace,
    ReservedType,
    TraceError,
)
from .model import TIMER_TYPE, EventInstance, is_reserved_type, make_event
from .rules import Fact, RuleSet, fact_sort_key

_SCALARS = (str, int, float, bool)


def _canon(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def load_trace(source: Union[str, IO[str], Iterable[str]]) -> list[EventInstance]:
    """Read a line-delimited JSON trace.

    ``source`` is a path or an iterable of lines. Blank lines are skipped.
    Returns instances with ids 1..n in line order. Raises TraceError (or a
    subclass) carrying the offending 1-based line number.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            return _parse_lines(fh)
    return _parse_lines(source)


def _parse_lines(lines: Iterable[str]) -> list[EventInstance]:
    out: list[EventInstance] = []
    last_time: Optional[int] = None
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            raise TraceError(f"invalid JSON: {e.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise TraceError("each line must be a JSON object", lineno)
        if "type" not in obj or "time" not in obj:
            raise TraceError("record needs 'type' and 'time' fields", lineno)
        tname = obj["type"]
        if not isinstance(tname, str) or not tname:
            raise TraceError("'type' must be a non-empty string", lineno)
        if is_reserved_type(tname):
            raise ReservedType(f"type {tname!r} is reserved", lineno)
        t = obj["time"]
        if isinstance(t, bool) or not isinstance(t, int) or t < 0:
            raise TraceError("'time' must be a non-negative integer", lineno)
        payload = obj.get("payload", {})
        if payload is None:
            payload = {}
        if not isinstance(payload, dict):
            raise TraceError("'payload' must be a JSON object", lineno)
        for k, v in payload.items():
            if not isinstance(v, _SCALARS):
                raise TraceError(f"payload field {k!r} must be a scalar", lineno)
        extra = set(obj) - {"type", "time", "payload"}
        if extra:
            raise TraceError(f"unknown field {sorted(extra)[0]!r}", lineno)
        if last_time is not None and t < last_time:
            raise OutOfOrderTrace(
                f"time {t} is earlier than preceding time {last_time}", lineno
            )
        last_time = t
        out.append(make_event(tname, t, payload, id=len(out) + 1))
    return out


def synth_ticks(span: tuple[int, int], period: int) -> list[EventInstance]:
    """Timer events at t0+period, t0+2*period, ... up to and including t1.

    Ids number the ticks 1..k; replay re-mints ids when merging anyway.
    """
    if period <= 0:
        raise InvalidPeriod(f"tick period must be positive, got {period}")
    t0, t1 = span
    return [
        make_event(TIMER_TYPE, t, {}, id=i)
        for i, t in enumerate(range(t0 + period, t1 + 1, period), start=1)
    ]


def merge_stream(
    trace: Sequence[EventInstance], ticks: Sequence[EventInstance]
) -> list[EventInstance]:
    """Interleave ticks into a trace; at equal times stimuli precede ticks."""
    tagged = [(ev.time, 0, i) for i, ev in enumerate(trace)]
    tagged += [(ev.time, 1, i) for i, ev in enumerate(ticks)]
    tagged.sort()
    pools = (trace, ticks)
    return [pools[src][i] for _, src, i in tagged]


@dataclass(frozen=True)
class RunReport:
    """Everything a replay produced, serializable to canonical JSONL."""

    records: tuple[ReactionRecord, ...]
    dispatched: int
    facts: tuple[Fact, ...]
    fluents: dict
    error: Optional[str] = None

    def to_jsonl(self) -> str:
        lines = [_canon(_record_json(r)) for r in self.records]
        summary = {
            "dispatched": self.dispatched,
            "records": len(self.records),
            "facts": [{"name": f.name, "args": list(f.args)} for f in self.facts],
            "fluents": {
                name: [[iv.start, iv.end] for iv in ivs]
                for name, ivs in self.fluents.items()
            },
            "error": self.error,
        }
        lines.append(_canon({"summary": summary}))
        return "\n".join(lines) + "\n"


def _event_json(e: EventInstance) -> dict:
    return {
        "id": e.id,
        "type": e.type.name,
        "time": e.time,
        "payload": dict(e.payload),
    }


def _binding_json(value):
    if isinstance(value, EventInstance):
        return _event_json(value)
    return value


def _record_json(r: ReactionRecord) -> dict:
    occ = r.occurrence
    return {
        "rule": r.rule_id,
        "interval": [occ.interval.start, occ.interval.end],
        "events": sorted(occ.components),
        "bindings": {k: _binding_json(v) for k, v in r.bindings.items()},
        "outcome": r.outcome.value,
        "raised": [_event_json(e) for e in r.events],
        "depth": r.depth,
        "error": r.error,
    }


def run_replay(
    ruleset: RuleSet,
    trace: Sequence[EventInstance],
    *,
    tick: Optional[int] = None,
    chain_limit: int = 1000,
    initial_facts: Sequence[Fact] = (),
) -> RunReport:
    """Feed a trace through an engine built from ``ruleset``.

    With ``tick`` set, timer events are synthesized over [0, last stimulus
    time] and merged in (after stimuli at equal times). Incoming ids are
    ignored; the engine re-mints them in dispatch order. A chain-limit abort
    is reported, not raised: the report carries the partial records and an
    error message.
    """
    engine = Engine(ruleset, initial_facts=initial_facts, chain_limit=chain_limit)
    stream = list(trace)
    if tick is not None:
        horizon = max((ev.time for ev in stream), default=0)
        stream = merge_stream(stream, synth_ticks((0, horizon), tick))

    records: list[ReactionRecord] = []
    dispatched = 0
    error: Optional[str] = None
    for ev in stream:
        dispatched += 1
        try:
            records.extend(engine.ingest(ev.type.name, ev.time, ev.payload))
        except ChainLimitExceeded as exc:
            records.extend(exc.records)
            error = str(exc)
            break
    return RunReport(
        records=tuple(records),
        dispatched=dispatched,
        facts=tuple(sorted(engine.kb.facts(), key=fact_sort_key)),
        fluents={
            name: tuple(engine.fluents.fluent_intervals(name))
            for name in sorted(engine.fluents.fluents)
        },
        error=error,
    )
