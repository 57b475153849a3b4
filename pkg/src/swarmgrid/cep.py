"""Minimal complex-event-processing engine.

Typed location/detection events are ingested into sliding time windows and
joined on arrival by three fixed proximity predicates (drone-drone,
drone-static, drone-moving). Matches are returned to the caller and fanned
out to registered sinks.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

from .world import Cell

# Window retentions in milliseconds.
DRONE_RETENTION_MS = 1_000
MOBS_RETENTION_MS = 1_000
SOBS_RETENTION_MS = 3_600_000


@dataclass(frozen=True)
class DroneLocEvent:
    drone_id: int
    cell: Cell
    t: int  # ms


@dataclass(frozen=True)
class SObsEvent:
    obstacle_id: int
    cell: Cell


@dataclass(frozen=True)
class MObsEvent:
    obstacle_id: int
    cell: Cell
    t: int  # ms


class MatchKind(enum.Enum):
    DRONE_DRONE = "drone-drone"
    DRONE_STATIC = "drone-static"
    DRONE_MOVING = "drone-moving"


@dataclass(frozen=True)
class ProximityMatch:
    """One join row; the subject is always the drone."""

    kind: MatchKind
    subject_id: int
    other_id: int
    subject_cell: Cell
    other_cell: Cell


def _near(a: Cell, b: Cell, r: int) -> bool:
    # Closed-interval box test plus the shared-axis clause.
    return (
        abs(a[0] - b[0]) <= r
        and abs(a[1] - b[1]) <= r
        and abs(a[2] - b[2]) <= r
        and (a[0] == b[0] or a[1] == b[1] or a[2] == b[2])
    )


def match_drone_drone(a: DroneLocEvent, b: DroneLocEvent) -> bool:
    return a.drone_id != b.drone_id and _near(a.cell, b.cell, 2)


def match_drone_static(a: DroneLocEvent, o: SObsEvent) -> bool:
    return _near(a.cell, o.cell, 1)


def match_drone_moving(a: DroneLocEvent, o: MObsEvent) -> bool:
    return _near(a.cell, o.cell, 2)


def _offsets(r: int) -> tuple[Cell, ...]:
    out = []
    for dx in range(-r, r + 1):
        for dy in range(-r, r + 1):
            for dz in range(-r, r + 1):
                if dx == 0 or dy == 0 or dz == 0:
                    out.append((dx, dy, dz))
    return tuple(out)


# Cells that can satisfy the box-plus-axis predicate: 61 for r=2, 19 for r=1.
_OFFSETS_R2 = _offsets(2)
_OFFSETS_R1 = _offsets(1)


class _Stream:
    """One event buffer with time-based eviction and a cell index."""

    def __init__(self, retention_ms: int):
        self.retention_ms = retention_ms
        self._events: deque = deque()  # (arrival_ms, event), arrival-ordered
        self._by_cell: dict[Cell, deque] = {}

    def evict(self, now_ms: int) -> None:
        ev = self._events
        while ev and now_ms - ev[0][0] > self.retention_ms:
            _, old = ev.popleft()
            bucket = self._by_cell[old.cell]
            bucket.popleft()
            if not bucket:
                del self._by_cell[old.cell]

    def append(self, event, arrival_ms: int) -> None:
        self._events.append((arrival_ms, event))
        self._by_cell.setdefault(event.cell, deque()).append((arrival_ms, event))

    def at_cell(self, cell: Cell):
        return self._by_cell.get(cell, ())

    def __len__(self) -> int:
        return len(self._events)


Sink = Callable[[ProximityMatch], None]


class WindowStore:
    """Sliding windows over the three event streams with on-arrival joins.

    Each `ingest` returns only the matches in which the arriving event
    participates, mirroring on-arrival join-row emission; the same live pair
    is not re-reported on unrelated arrivals.
    """

    def __init__(self, trace: Optional[Callable[[str], None]] = None):
        self._drones = _Stream(DRONE_RETENTION_MS)
        self._statics = _Stream(SOBS_RETENTION_MS)
        self._movings = _Stream(MOBS_RETENTION_MS)
        self._sinks: dict[int, tuple[MatchKind, Sink]] = {}
        self._next_handle = 0
        self._trace = trace

    def register_sink(self, kind: MatchKind, callback: Sink) -> int:
        handle = self._next_handle
        self._next_handle += 1
        self._sinks[handle] = (kind, callback)
        return handle

    def unregister_sink(self, handle: int) -> None:
        self._sinks.pop(handle, None)

    def ingest(self, event, now_ms: int) -> list[ProximityMatch]:
        t = getattr(event, "t", now_ms)
        if t > now_ms:
            raise ValueError("event time is ahead of ingestion time")
        for stream in (self._drones, self._statics, self._movings):
            stream.evict(now_ms)

        if isinstance(event, DroneLocEvent):
            matches = self._join_drone(event)
            self._drones.append(event, now_ms)
        elif isinstance(event, SObsEvent):
            matches = self._join_obstacle(
                event, _OFFSETS_R1, MatchKind.DRONE_STATIC
            )
            self._statics.append(event, now_ms)
        elif isinstance(event, MObsEvent):
            matches = self._join_obstacle(
                event, _OFFSETS_R2, MatchKind.DRONE_MOVING
            )
            self._movings.append(event, now_ms)
        else:
            raise TypeError(f"unknown event type: {type(event).__name__}")

        for m in matches:
            if self._trace is not None:
                self._trace(
                    f"{now_ms}\t{m.kind.value}\t{m.subject_id}\t{m.other_id}"
                    f"\t{m.subject_cell}\t{m.other_cell}"
                )
            for kind, callback in list(self._sinks.values()):
                if kind == m.kind:
                    callback(m)
        return matches

    def _join_drone(self, event: DroneLocEvent) -> list[ProximityMatch]:
        x, y, z = event.cell
        matches = []
        for dx, dy, dz in _OFFSETS_R2:
            cell = (x + dx, y + dy, z + dz)
            for _, other in self._drones.at_cell(cell):
                if other.drone_id != event.drone_id:
                    matches.append(
                        ProximityMatch(
                            MatchKind.DRONE_DRONE,
                            event.drone_id, other.drone_id,
                            event.cell, other.cell,
                        )
                    )
        for dx, dy, dz in _OFFSETS_R1:
            cell = (x + dx, y + dy, z + dz)
            for _, other in self._statics.at_cell(cell):
                matches.append(
                    ProximityMatch(
                        MatchKind.DRONE_STATIC,
                        event.drone_id, other.obstacle_id,
                        event.cell, other.cell,
                    )
                )
        for dx, dy, dz in _OFFSETS_R2:
            cell = (x + dx, y + dy, z + dz)
            for _, other in self._movings.at_cell(cell):
                matches.append(
                    ProximityMatch(
                        MatchKind.DRONE_MOVING,
                        event.drone_id, other.obstacle_id,
                        event.cell, other.cell,
                    )
                )
        return matches

    def _join_obstacle(self, event, offsets, kind: MatchKind) -> list[ProximityMatch]:
        x, y, z = event.cell
        matches = []
        for dx, dy, dz in offsets:
            cell = (x + dx, y + dy, z + dz)
            for _, drone_ev in self._drones.at_cell(cell):
                matches.append(
                    ProximityMatch(
                        kind,
                        drone_ev.drone_id, event.obstacle_id,
                        drone_ev.cell, event.cell,
                    )
                )
        return matches
