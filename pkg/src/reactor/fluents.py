"""Fluent tracking: which named state predicates hold, and when.

Events initiate or terminate fluents according to declared effects. A fluent
holds on half-open intervals [t_init, t_term): initiation is inclusive,
termination takes effect at its own timestamp, and an initiation and a
termination landing on the same instant cancel to not-holding from that
instant onward regardless of arrival order within it.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import DuplicateEffect, OutOfOrderEvent
from .model import EventInstance, Interval, TimePoint


class EffectMode(Enum):
    INITIATES = "initiates"
    TERMINATES = "terminates"


@dataclass(frozen=True)
class EffectRule:
    """Event type `type_name` initiates or terminates fluent `fluent`."""

    type_name: str
    mode: EffectMode
    fluent: str


class _FluentTrack:
    """Maximal validity intervals of one fluent, built incrementally.

    Appends arrive in (time, id) order. `closed` holds finished [start, end)
    pairs; `open_since` is the start of the unfinished interval, if any.
    Same-instant handling: a termination at time t wins over any initiation
    at t, so an interval opened at t and terminated at t is dropped as empty
    and an initiation arriving after a termination at the same t is void.
    """

    __slots__ = ("closed", "open_since", "last_term_time")

    def __init__(self):
        self.closed: list[tuple[TimePoint, TimePoint]] = []
        self.open_since: Optional[TimePoint] = None
        self.last_term_time: Optional[TimePoint] = None

    def apply(self, mode: EffectMode, t: TimePoint) -> None:
        if mode is EffectMode.TERMINATES:
            if self.open_since is not None:
                if self.open_since < t:
                    self.closed.append((self.open_since, t))
                # opened at t itself: empty interval, drop it
                self.open_since = None
            self.last_term_time = t
        else:
            if self.open_since is not None:
                return  # already holding, re-initiation is absorbed
            if self.last_term_time == t:
                return  # terminate wins the tie at this instant
            self.open_since = t

    def holds_at(self, t: TimePoint) -> bool:
        if self.open_since is not None and t >= self.open_since:
            return True
        i = bisect.bisect_right(self.closed, (t, float("inf"))) - 1
        if i >= 0:
            start, end = self.closed[i]
            return start <= t < end
        return False

    def intervals(self) -> list[Interval]:
        out = [Interval(s, e) for (s, e) in self.closed]
        if self.open_since is not None:
            out.append(Interval(self.open_since, None))
        return out


class FluentHistory:
    """Declared effects plus the chronological effect log of a run."""

    def __init__(self):
        self._effects: dict[str, list[EffectRule]] = {}  # by event type name
        self._declared: set[EffectRule] = set()
        self._tracks: dict[str, _FluentTrack] = {}
        self._log: list[tuple[EventInstance, tuple[EffectRule, ...]]] = []
        self._last_key: tuple[TimePoint, int] = (0, 0)

    def declare_effect(self, type_name: str, mode: EffectMode, fluent: str) -> None:
        rule = EffectRule(type_name, mode, fluent)
        if rule in self._declared:
            raise DuplicateEffect(
                f"effect {type_name} {mode.value} {fluent} declared twice"
            )
        self._declared.add(rule)
        self._effects.setdefault(type_name, []).append(rule)
        self._tracks.setdefault(fluent, _FluentTrack())

    @property
    def effects(self) -> list[EffectRule]:
        return [r for rules in self._effects.values() for r in rules]

    def record(self, e: EventInstance) -> tuple[EffectRule, ...]:
        """Apply the event's declared effects; returns the matched rules."""
        key = (e.time, e.id)
        if key < self._last_key:
            raise OutOfOrderEvent(
                f"effect log regresses: {e!r} after {self._last_key}"
            )
        self._last_key = key
        matched = tuple(self._effects.get(e.type.name, ()))
        if matched:
            self._log.append((e, matched))
            for rule in matched:
                self._tracks[rule.fluent].apply(rule.mode, e.time)
        return matched

    def holds_at(self, fluent: str, t: TimePoint) -> bool:
        track = self._tracks.get(fluent)
        return track.holds_at(t) if track is not None else False

    def fluent_intervals(self, fluent: str) -> list[Interval]:
        """Maximal disjoint validity intervals, in order; open tail last."""
        track = self._tracks.get(fluent)
        return track.intervals() if track is not None else []

    @property
    def fluents(self) -> list[str]:
        return sorted(self._tracks)

    @property
    def log(self) -> list[tuple[EventInstance, tuple[EffectRule, ...]]]:
        return list(self._log)
