"""Drones, obstacles, and route bookkeeping."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

from .world import Area, Cell, DIRECTIONS, manhattan


class IllegalMove(ValueError):
    """A drone move that is neither a hover nor an axis-adjacent step."""


class Mode(enum.Enum):
    NORMAL = "normal"
    HOVER = "hover"
    BACKTRACK = "backtrack"


@dataclass
class Drone:
    """A swarm member and its accumulated route.

    The route starts at the start cell and records every tick's position,
    including hovers (repeated cells). `current` is always the last entry.
    """

    id: int
    start: Cell
    dest: Cell
    current: Cell = None  # type: ignore[assignment]
    mode: Mode = Mode.NORMAL
    route: list[Cell] = field(default_factory=list)
    hover_streak: int = 0
    bt_steps_done: int = 0
    bt_attempts: int = 0
    best_dist: int = 0
    stall_ticks: int = 0
    arrived: bool = False

    def __post_init__(self) -> None:
        if self.current is None:
            self.current = self.start
        if not self.route:
            self.route = [self.start]
        self.best_dist = manhattan(self.current, self.dest)


@dataclass(frozen=True)
class StaticObstacle:
    id: int
    cell: Cell


@dataclass
class MovingObstacle:
    """Occupies one cell and takes one axis step every `cadence` ticks.

    May wander out of the area, after which it is gone for good (alive=False).
    spawn_tick > 0 models obstacles that appear mid-mission.
    """

    id: int
    cell: Cell
    cadence: int = 5
    spawn_tick: int = 0
    alive: bool = True

    def __post_init__(self) -> None:
        if self.cadence < 1:
            raise ValueError("cadence must be a positive tick count")


@dataclass
class Swarm:
    drones: list[Drone]

    def __post_init__(self) -> None:
        ids = [d.id for d in self.drones]
        if len(set(ids)) != len(ids):
            raise ValueError("drone ids must be unique")

    def assert_distinct_cells(self) -> None:
        cells = [d.current for d in self.drones]
        if len(set(cells)) != len(cells):
            raise AssertionError("two drones share a cell")


def record_move(d: Drone, nxt: Cell) -> Drone:
    """Append the next cell to the drone's route and update hover bookkeeping."""
    if nxt == d.current:
        d.hover_streak += 1
    elif manhattan(nxt, d.current) == 1:
        d.hover_streak = 0
    else:
        raise IllegalMove(f"drone {d.id}: {d.current} -> {nxt}")
    d.route.append(nxt)
    d.current = nxt
    return d


def step_moving_obstacle(
    o: MovingObstacle,
    tick: int,
    rng: random.Random,
    area: Area,
    occupied_drone_cells: set[Cell],
    avoid_drones: bool = True,
) -> MovingObstacle:
    """Advance a moving obstacle for one tick.

    Off-cadence ticks leave it in place. On cadence it takes one uniformly
    random axis step; a step beyond the boundary removes it from the zone.
    With avoid_drones, drone-occupied targets are re-sampled among the free
    directions, hovering if every direction is occupied.
    """
    if not o.alive or tick < o.spawn_tick:
        return o
    if (tick - o.spawn_tick) % o.cadence != 0:
        return o
    x, y, z = o.cell
    dx, dy, dz = rng.choice(DIRECTIONS)
    target = (x + dx, y + dy, z + dz)
    if avoid_drones and target in occupied_drone_cells:
        free = [
            (x + ex, y + ey, z + ez)
            for ex, ey, ez in DIRECTIONS
            if (x + ex, y + ey, z + ez) not in occupied_drone_cells
        ]
        if not free:
            return o
        target = rng.choice(free)
    if target in area:
        o.cell = target
    else:
        o.alive = False
    return o
