"""Conflict prediction rules and the pairwise intent sweep."""

import random

import pytest

from swarmgrid.cep import MatchKind, ProximityMatch
from swarmgrid.prediction import (
    Prediction,
    WorldSnapshot,
    predict_all,
    rule1,
    rule2,
    rule3,
)


def test_rule1_flags_entering_anothers_cell():
    p = rule1(1, 2, (0, 0, 0), (1, 0, 0), (1, 0, 0), (1, 1, 0))
    assert p == Prediction(MatchKind.DRONE_DRONE, 1, 2, (1, 0, 0))


def test_rule1_flags_shared_next_cell():
    p = rule1(1, 2, (0, 0, 0), (1, 0, 0), (2, 0, 0), (1, 0, 0))
    assert p is not None and p.conflict_cell == (1, 0, 0)


def test_rule1_flags_being_entered():
    # drone 2 is heading into drone 1's current cell
    p = rule1(1, 2, (0, 0, 0), (0, 1, 0), (1, 0, 0), (0, 0, 0))
    assert p == Prediction(MatchKind.DRONE_DRONE, 1, 2, (0, 0, 0))


def test_rule1_no_conflict():
    assert rule1(1, 2, (0, 0, 0), (0, 1, 0), (5, 5, 5), (5, 4, 5)) is None


def test_rule1_rejects_same_drone():
    with pytest.raises(ValueError):
        rule1(3, 3, (0, 0, 0), (1, 0, 0), (0, 0, 0), (1, 0, 0))


def test_rule2_and_rule3_obstacle_cells():
    assert rule2(1, (4, 4, 4), 7, (4, 4, 4)) == Prediction(
        MatchKind.DRONE_STATIC, 1, 7, (4, 4, 4)
    )
    assert rule2(1, (4, 4, 5), 7, (4, 4, 4)) is None
    assert rule3(1, (2, 2, 2), 5, (2, 2, 2)) == Prediction(
        MatchKind.DRONE_MOVING, 1, 5, (2, 2, 2)
    )
    assert rule3(1, (2, 2, 3), 5, (2, 2, 2)) is None


def test_predict_all_from_matches():
    snap = WorldSnapshot(
        drone_cells={1: (0, 0, 0), 2: (2, 0, 0)},
        static_cells={7: (1, 1, 0)},
    )
    matches = [
        ProximityMatch(MatchKind.DRONE_DRONE, 1, 2, (0, 0, 0), (2, 0, 0)),
        ProximityMatch(MatchKind.DRONE_STATIC, 1, 7, (0, 0, 0), (1, 1, 0)),
    ]
    intents = {1: (1, 0, 0), 2: (1, 0, 0)}
    preds = predict_all(matches, intents, snap)
    kinds = {(p.kind, p.drone_id) for p in preds}
    # both drones head for (1,0,0); neither is about to hit the static
    assert (MatchKind.DRONE_DRONE, 1) in kinds
    assert (MatchKind.DRONE_DRONE, 2) in kinds
    assert all(p.kind is not MatchKind.DRONE_STATIC for p in preds)


def test_intent_sweep_covers_pairs_without_matches():
    # Diagonal approach: the proximity join would never pair these two, but
    # both want the same cell next tick.
    snap = WorldSnapshot(drone_cells={1: (0, 0, 0), 2: (1, 1, 1)})
    intents = {1: (1, 0, 0), 2: (1, 0, 0)}
    preds = predict_all([], intents, snap)
    assert any(p.conflict_cell == (1, 0, 0) for p in preds)


def test_missing_intent_means_hover():
    # drone 2 has no intent, so its next cell is its current cell; drone 1
    # stepping into it must be flagged.
    snap = WorldSnapshot(drone_cells={1: (0, 0, 0), 2: (1, 0, 0)})
    preds = predict_all([], {1: (1, 0, 0)}, snap)
    assert any(
        p.drone_id == 1 and p.conflict_cell == (1, 0, 0) for p in preds
    )


def test_predict_all_deduplicates_and_orders():
    snap = WorldSnapshot(drone_cells={1: (0, 0, 0), 2: (1, 0, 0)})
    m = ProximityMatch(MatchKind.DRONE_DRONE, 1, 2, (0, 0, 0), (1, 0, 0))
    intents = {1: (1, 0, 0), 2: (1, 1, 0)}
    once = predict_all([m], intents, snap)
    thrice = predict_all([m, m, m], intents, snap)
    assert once == thrice
    # order is stable under match shuffling
    rng = random.Random(0)
    ms = [m] * 5
    rng.shuffle(ms)
    assert predict_all(ms, intents, snap) == once


def test_stale_match_ids_are_ignored():
    snap = WorldSnapshot(drone_cells={1: (0, 0, 0)})
    m = ProximityMatch(MatchKind.DRONE_DRONE, 1, 99, (0, 0, 0), (1, 0, 0))
    assert predict_all([m], {1: (1, 0, 0)}, snap) == []
