"""Collision avoidance: redirect, hover-in-place, and backtracking.

The cascade is ordered: try redirecting into another direction first, hover
when no safe direction exists, and switch to backtrack mode once the drone
has hovered or stalled for too long.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .coordination import LockTable
from .entities import Drone, Mode
from .world import Area, Cell, manhattan, neighbors


@dataclass(frozen=True)
class Redirect:
    next: Cell


@dataclass(frozen=True)
class Hover:
    pass


@dataclass(frozen=True)
class EnterBacktrack:
    pass


AvoidanceAction = Redirect | Hover | EnterBacktrack


@dataclass(frozen=True)
class BacktrackConfig:
    required_steps: int = 3
    max_attempts: int = 10
    hover_threshold: int = 5   # ticks hovering before backtrack kicks in
    stall_threshold: int = 15  # ticks without distance progress

    def __post_init__(self) -> None:
        for v in (self.required_steps, self.max_attempts,
                  self.hover_threshold, self.stall_threshold):
            if v < 1:
                raise ValueError("backtrack parameters must be positive")


@dataclass
class DecisionContext:
    """Everything a single drone's avoidance decision may look at.

    blocked_cells: known obstacle cells plus other drones' current cells.
    reserved_cells: next cells already committed by drones earlier in this
    tick's arbitration order.
    """

    area: Area
    blocked_cells: set[Cell]
    reserved_cells: set[Cell]
    locks: LockTable


def cell_is_safe(ctx: DecisionContext, drone_id: int, cell: Cell) -> bool:
    if cell in ctx.blocked_cells or cell in ctx.reserved_cells:
        return False
    holder = ctx.locks.holder(cell)
    return holder is None or holder == drone_id


def avoid(
    drone: Drone,
    ctx: DecisionContext,
    rng: random.Random,
    cfg: BacktrackConfig,
) -> AvoidanceAction:
    """Pick an avoidance action for a drone whose intent was flagged.

    Preference: distance-reducing safe neighbors, then any other safe
    neighbor (a sidestep or retreat beats standing in a moving crowd), then
    hover. Persistent hovering or stalling escalates to backtrack mode.
    """
    if drone.hover_streak >= cfg.hover_threshold or drone.stall_ticks >= cfg.stall_threshold:
        return EnterBacktrack()
    candidates = [
        n for n in neighbors(ctx.area, drone.current)
        if cell_is_safe(ctx, drone.id, n)
    ]
    if not candidates:
        return Hover()
    dist_now = manhattan(drone.current, drone.dest)
    reducing = [n for n in candidates if manhattan(n, drone.dest) < dist_now]
    return Redirect(rng.choice(reducing if reducing else candidates))


def backtrack_step(
    drone: Drone,
    ctx: DecisionContext,
    rng: random.Random,
) -> Cell | None:
    """One backtrack-mode iteration; None means hover-in-place.

    Picks a random dimension and the one-step move that increases distance
    to the destination. Already-aligned dimensions have no away direction
    and count as a failed attempt.
    """
    if drone.mode is not Mode.BACKTRACK:
        raise ValueError("backtrack_step requires backtrack mode")
    drone.bt_attempts += 1
    dim = rng.randrange(3)
    if drone.current[dim] == drone.dest[dim]:
        return None
    delta = 1 if drone.current[dim] > drone.dest[dim] else -1
    target = list(drone.current)
    target[dim] += delta
    cell: Cell = tuple(target)  # type: ignore[assignment]
    if cell not in ctx.area or not cell_is_safe(ctx, drone.id, cell):
        return None
    drone.bt_steps_done += 1
    return cell


def backtrack_exit_check(drone: Drone, cfg: BacktrackConfig) -> bool:
    """Leave backtrack mode once enough steps are done or attempts exhausted."""
    if drone.bt_steps_done >= cfg.required_steps or drone.bt_attempts >= cfg.max_attempts:
        drone.bt_steps_done = 0
        drone.bt_attempts = 0
        drone.hover_streak = 0
        drone.stall_ticks = 0
        drone.mode = Mode.NORMAL
        return True
    return False
