"""Collision prediction: proximity matches + intents -> concrete conflicts.

Rule 1 flags a drone whose desired next cell is another drone's current or
desired next cell. Rules 2 and 3 flag a drone about to enter a static or
moving obstacle's cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .cep import MatchKind, ProximityMatch
from .world import Cell

IntentTable = dict[int, Cell]  # drone_id -> desired next cell


@dataclass(frozen=True)
class Prediction:
    kind: MatchKind
    drone_id: int
    conflicting_id: int
    conflict_cell: Cell


@dataclass(frozen=True)
class WorldSnapshot:
    """Current cells of drones and of the known obstacles, by id."""

    drone_cells: Mapping[int, Cell]
    static_cells: Mapping[int, Cell] = field(default_factory=dict)
    moving_cells: Mapping[int, Cell] = field(default_factory=dict)


def rule1(
    i: int, j: int, cur_i: Cell, next_i: Cell, cur_j: Cell, next_j: Cell
) -> Optional[Prediction]:
    """Drone-drone conflict for drone i against drone j."""
    if i == j:
        raise ValueError("rule1 requires two distinct drones")
    if next_i == cur_j or next_i == next_j:
        return Prediction(MatchKind.DRONE_DRONE, i, j, next_i)
    if next_j == cur_i:
        return Prediction(MatchKind.DRONE_DRONE, i, j, cur_i)
    return None


def rule2(i: int, next_i: Cell, so_id: int, static_cell: Cell) -> Optional[Prediction]:
    if next_i == static_cell:
        return Prediction(MatchKind.DRONE_STATIC, i, so_id, static_cell)
    return None


def rule3(i: int, next_i: Cell, mo_id: int, moving_cell: Cell) -> Optional[Prediction]:
    if next_i == moving_cell:
        return Prediction(MatchKind.DRONE_MOVING, i, mo_id, moving_cell)
    return None


def predict_all(
    matches: list[ProximityMatch],
    intents: IntentTable,
    snapshot: WorldSnapshot,
) -> list[Prediction]:
    """Apply the three rules to every match, plus a full intent-conflict sweep.

    The sweep over all drone pairs closes the proximity queries' diagonal
    blind spot: two drones converging on one cell are flagged even when no
    match row paired them. A drone without an intent is treated as hovering.
    Output is deduplicated and deterministically ordered.
    """
    out: set[Prediction] = set()

    def drone_next(d: int) -> Cell:
        return intents.get(d, snapshot.drone_cells[d])

    for m in matches:
        if m.kind == MatchKind.DRONE_DRONE:
            i, j = m.subject_id, m.other_id
            if i not in snapshot.drone_cells or j not in snapshot.drone_cells:
                continue
            cur_i, cur_j = snapshot.drone_cells[i], snapshot.drone_cells[j]
            for p in (
                rule1(i, j, cur_i, drone_next(i), cur_j, drone_next(j)),
                rule1(j, i, cur_j, drone_next(j), cur_i, drone_next(i)),
            ):
                if p is not None:
                    out.add(p)
        elif m.kind == MatchKind.DRONE_STATIC:
            if m.subject_id not in snapshot.drone_cells:
                continue
            cell = snapshot.static_cells.get(m.other_id, m.other_cell)
            p = rule2(m.subject_id, drone_next(m.subject_id), m.other_id, cell)
            if p is not None:
                out.add(p)
        else:
            if m.subject_id not in snapshot.drone_cells:
                continue
            cell = snapshot.moving_cells.get(m.other_id, m.other_cell)
            p = rule3(m.subject_id, drone_next(m.subject_id), m.other_id, cell)
            if p is not None:
                out.add(p)

    drone_ids = sorted(snapshot.drone_cells)
    for a_pos, i in enumerate(drone_ids):
        for j in drone_ids[a_pos + 1:]:
            cur_i, cur_j = snapshot.drone_cells[i], snapshot.drone_cells[j]
            for p in (
                rule1(i, j, cur_i, drone_next(i), cur_j, drone_next(j)),
                rule1(j, i, cur_j, drone_next(j), cur_i, drone_next(i)),
            ):
                if p is not None:
                    out.add(p)

    return sorted(
        out, key=lambda p: (p.kind.value, p.drone_id, p.conflicting_id, p.conflict_cell)
    )
