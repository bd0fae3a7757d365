"""Core value types: time points, validity intervals, event types, instances.

Everything here is immutable. Times are non-negative integers (milliseconds
on an abstract timeline); an atomic event's validity interval is the
degenerate [time, time]. Complex detections get the cover of their
components' intervals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Union

from .errors import UnboundedInterval

# Timeline positions. Plain ints; the alias marks intent in signatures.
TimePoint = int

# Payload values are flat scalars only (JSON-compatible).
Scalar = Union[str, int, float, bool]

ASSERT_PREFIX = "assert:"
RETRACT_PREFIX = "retract:"
TIMER_TYPE = "timer"


# =========================================================================
# Intervals
# =========================================================================


@dataclass(frozen=True, order=True)
class Interval:
    """Closed interval [start, end] of time points.

    end=None means the interval is open on the right (used only for fluent
    validity that no terminating event has closed yet).
    """

    start: TimePoint
    end: Optional[TimePoint]

    def __post_init__(self):
        if self.start < 0:
            raise ValueError(f"interval start must be non-negative, got {self.start}")
        if self.end is not None and self.end < self.start:
            raise ValueError(f"interval end {self.end} precedes start {self.start}")

    @property
    def bounded(self) -> bool:
        return self.end is not None

    def __repr__(self):
        hi = "OPEN" if self.end is None else self.end
        return f"[{self.start},{hi}]"


def interval_cover(a: Interval, b: Interval) -> Interval:
    """Smallest interval containing both a and b. Requires bounded inputs."""
    if not a.bounded or not b.bounded:
        raise UnboundedInterval(f"cover needs bounded intervals, got {a} and {b}")
    return Interval(min(a.start, b.start), max(a.end, b.end))


def strictly_before(a: Interval, b: Interval) -> bool:
    """True iff a ends before b starts. Requires bounded inputs."""
    if not a.bounded or not b.bounded:
        raise UnboundedInterval(f"ordering needs bounded intervals, got {a} and {b}")
    return a.end < b.start


# =========================================================================
# Event types
# =========================================================================


class EventKind(Enum):
    EXTERNAL = "external"
    INTERNAL_ASSERT = "internal-assert"
    INTERNAL_RETRACT = "internal-retract"
    TIMER = "timer"


@dataclass(frozen=True)
class EventTypeId:
    """An event type. The kind is fully determined by the name's shape:
    assert:NAME / retract:NAME are knowledge-base update events, "timer" is
    the synthesized tick, anything else is external.
    """

    name: str
    kind: EventKind

    def __post_init__(self):
        if not self.name:
            raise ValueError("event type name must be non-empty")

    def __repr__(self):
        return self.name


def event_type(name: str) -> EventTypeId:
    """Build an EventTypeId, deriving the kind from the name."""
    if name.startswith(ASSERT_PREFIX):
        kind = EventKind.INTERNAL_ASSERT
    elif name.startswith(RETRACT_PREFIX):
        kind = EventKind.INTERNAL_RETRACT
    elif name == TIMER_TYPE:
        kind = EventKind.TIMER
    else:
        kind = EventKind.EXTERNAL
    return EventTypeId(name, kind)


def is_reserved_type(name: str) -> bool:
    """Types only the engine itself may mint."""
    return (
        name.startswith(ASSERT_PREFIX)
        or name.startswith(RETRACT_PREFIX)
        or name == TIMER_TYPE
    )


# =========================================================================
# Event instances
# =========================================================================


@dataclass(frozen=True)
class EventInstance:
    """One concrete event on the timeline.

    ids are unique within an engine run and increase in arrival order; they
    break reporting ties between simultaneous events but never affect the
    algebra itself.
    """

    id: int
    type: EventTypeId
    time: TimePoint
    payload: Mapping[str, Scalar] = field(default_factory=dict)

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"event id must be >= 1, got {self.id}")
        if self.time < 0:
            raise ValueError(f"event time must be non-negative, got {self.time}")
        for key, value in self.payload.items():
            if not isinstance(key, str):
                raise ValueError(f"payload key {key!r} is not a string")
            if not isinstance(value, (str, int, float, bool)):
                raise ValueError(f"payload value {key}={value!r} is not a scalar")

    # payload is a plain dict, so hashing must not touch it
    def __hash__(self):
        return hash((self.id, self.type, self.time))

    @property
    def span(self) -> Interval:
        """The point interval an atomic occurrence is valid over."""
        return Interval(self.time, self.time)

    def __repr__(self):
        return f"{self.type.name}@{self.time}#{self.id}"


def make_event(
    type: EventTypeId | str,
    time: TimePoint,
    payload: Mapping[str, Scalar] | None = None,
    id: int = 1,
) -> EventInstance:
    """Construct an event instance. The caller owns id freshness.

    A plain string type is coerced with event_type, so reserved prefixes
    still yield internal-kind events.
    """
    if isinstance(type, str):
        type = event_type(type)
    return EventInstance(id=id, type=type, time=time, payload=dict(payload or {}))
