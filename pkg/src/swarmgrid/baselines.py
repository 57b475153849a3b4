"""Grid-adapted RRT and RRT* planners with open-loop execution.

Both planners know the static obstacles and nothing else; the resulting
routes are flown open loop (no locking, prediction, or avoidance), which is
what makes them collide where the online navigator does not.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import numpy as np

from .engine import CollisionRecord, SimConfig, SimResult, detect_collisions_ground_truth
from .entities import MovingObstacle, step_moving_obstacle
from .world import Area, Cell, manhattan

GOAL_BIAS = 0.05
REWIRE_RADIUS = 3
DEFAULT_MAX_ITERS = 100_000


class PlanFailure(RuntimeError):
    """Planner exhausted its iteration budget without reaching the goal."""


@dataclass
class PlannerTree:
    """Search tree over grid cells; root is the start cell."""

    cells: list[Cell] = field(default_factory=list)
    parent: list[int] = field(default_factory=list)
    cost: list[int] = field(default_factory=list)
    # Axis-step expansion of the edge from parent[i] to i (excludes parent cell).
    edge: list[list[Cell]] = field(default_factory=list)
    index: dict[Cell, int] = field(default_factory=dict)
    children: list[set[int]] = field(default_factory=list)

    def add(self, cell: Cell, parent: int, cost: int, edge: list[Cell]) -> int:
        i = len(self.cells)
        self.cells.append(cell)
        self.parent.append(parent)
        self.cost.append(cost)
        self.edge.append(edge)
        self.children.append(set())
        self.index[cell] = i
        if parent >= 0:
            self.children[parent].add(i)
        return i

    def path_to(self, i: int) -> list[Cell]:
        chunks: list[list[Cell]] = []
        while i >= 0:
            chunks.append(self.edge[i])
            i = self.parent[i]
        route: list[Cell] = []
        for chunk in reversed(chunks):
            route.extend(chunk)
        return route


def _sample(area: Area, dest: Cell, obstacles: set[Cell], rng: random.Random) -> Cell:
    if rng.random() < GOAL_BIAS:
        return dest
    while True:
        c = (
            rng.randrange(area.dim_x),
            rng.randrange(area.dim_y),
            rng.randrange(area.dim_z),
        )
        if c not in obstacles:
            return c


class _NearestIndex:
    """Manhattan nearest-neighbor over a growing set of cells."""

    def __init__(self, capacity: int):
        self._coords = np.empty((capacity, 3), dtype=np.int64)
        self._n = 0

    def add(self, cell: Cell) -> None:
        if self._n == len(self._coords):
            self._coords = np.concatenate([self._coords, np.empty_like(self._coords)])
        self._coords[self._n] = cell
        self._n += 1

    def nearest(self, cell: Cell) -> int:
        d = np.abs(self._coords[: self._n] - np.asarray(cell)).sum(axis=1)
        return int(d.argmin())

    def within(self, cell: Cell, radius: int) -> np.ndarray:
        d = np.abs(self._coords[: self._n] - np.asarray(cell)).sum(axis=1)
        return np.nonzero(d <= radius)[0]


def _step_toward(frm: Cell, to: Cell, rng: random.Random) -> Cell:
    dims = [k for k in range(3) if frm[k] != to[k]]
    k = rng.choice(dims)
    out = list(frm)
    out[k] += 1 if to[k] > frm[k] else -1
    return tuple(out)  # type: ignore[return-value]


def _straight_edge(frm: Cell, to: Cell, obstacles: set[Cell]) -> list[Cell] | None:
    """Obstacle-free axis-by-axis walk from frm to to, trying axis orders."""
    for order in itertools.permutations(range(3)):
        path = []
        cur = list(frm)
        ok = True
        for k in order:
            step = 1 if to[k] > cur[k] else -1
            while cur[k] != to[k]:
                cur[k] += step
                cell = tuple(cur)
                if cell in obstacles:
                    ok = False
                    break
                path.append(cell)
            if not ok:
                break
        if ok:
            return path  # excludes frm, ends at to
    return None


def rrt_plan(
    start: Cell,
    dest: Cell,
    static_obstacles: list[Cell],
    area: Area,
    rng: random.Random,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> list[Cell]:
    """Single-step RRT over the grid; returns the route start..dest."""
    obstacles = set(static_obstacles)
    if start == dest or start in obstacles or dest in obstacles:
        raise ValueError("start and dest must be distinct free cells")
    tree = PlannerTree()
    nn = _NearestIndex(1024)
    tree.add(start, -1, 0, [start])
    nn.add(start)
    for _ in range(max_iters):
        sample = _sample(area, dest, obstacles, rng)
        near = nn.nearest(sample)
        near_cell = tree.cells[near]
        if near_cell == sample:
            continue
        new = _step_toward(near_cell, sample, rng)
        if new in obstacles or new in tree.index or new not in area:
            continue
        i = tree.add(new, near, tree.cost[near] + 1, [new])
        nn.add(new)
        if new == dest:
            return tree.path_to(i)
    raise PlanFailure(f"no route to {dest} within {max_iters} iterations")


def _propagate_cost(tree: PlannerTree, root: int) -> None:
    stack = [root]
    while stack:
        i = stack.pop()
        for c in tree.children[i]:
            tree.cost[c] = tree.cost[i] + len(tree.edge[c])
            stack.append(c)


def rrt_star_plan(
    start: Cell,
    dest: Cell,
    static_obstacles: list[Cell],
    area: Area,
    rng: random.Random,
    max_iters: int = DEFAULT_MAX_ITERS,
    refine_iters: int = 2_000,
) -> list[Cell]:
    """RRT with choose-parent and rewiring in a Manhattan-radius-3 ball.

    After the goal first connects, growth continues for refine_iters more
    iterations so rewiring can shorten the incumbent path.
    """
    obstacles = set(static_obstacles)
    if start == dest or start in obstacles or dest in obstacles:
        raise ValueError("start and dest must be distinct free cells")
    tree = PlannerTree()
    nn = _NearestIndex(1024)
    tree.add(start, -1, 0, [start])
    nn.add(start)
    goal_index = -1
    budget = max_iters
    it = 0
    while it < budget:
        it += 1
        sample = _sample(area, dest, obstacles, rng)
        near = nn.nearest(sample)
        near_cell = tree.cells[near]
        if near_cell == sample:
            continue
        new = _step_toward(near_cell, sample, rng)
        if new in obstacles or new in tree.index or new not in area:
            continue

        neighborhood = [
            int(j) for j in nn.within(new, REWIRE_RADIUS) if int(j) != near
        ]
        best_parent, best_cost, best_edge = near, tree.cost[near] + 1, [new]
        for j in sorted(neighborhood, key=lambda j: tree.cost[j]):
            d = manhattan(tree.cells[j], new)
            if tree.cost[j] + d >= best_cost:
                continue
            edge = _straight_edge(tree.cells[j], new, obstacles)
            if edge is not None:
                best_parent, best_cost, best_edge = j, tree.cost[j] + d, edge
        i = tree.add(new, best_parent, best_cost, best_edge)
        nn.add(new)

        for j in neighborhood:
            d = manhattan(new, tree.cells[j])
            if tree.cost[i] + d < tree.cost[j]:
                edge = _straight_edge(new, tree.cells[j], obstacles)
                if edge is None:
                    continue
                old_parent = tree.parent[j]
                if old_parent >= 0:
                    tree.children[old_parent].discard(j)
                tree.parent[j] = i
                tree.children[i].add(j)
                tree.edge[j] = edge
                tree.cost[j] = tree.cost[i] + d
                _propagate_cost(tree, j)

        if new == dest and goal_index < 0:
            goal_index = i
            budget = min(max_iters, it + refine_iters)
    if goal_index < 0:
        raise PlanFailure(f"no route to {dest} within {max_iters} iterations")
    return tree.path_to(goal_index)


def execute_open_loop(routes: dict[int, list[Cell]], cfg: SimConfig) -> SimResult:
    """Fly precomputed routes simultaneously, one step per tick, no safeguards.

    Moving obstacles wander per their cadence and do not dodge drones; the
    same ground-truth collision scan as the engine's records the damage.
    """
    rng = random.Random(cfg.seed)
    area = cfg.area()
    movings = [
        MovingObstacle(id=i, cell=c, cadence=cad, spawn_tick=sp)
        for i, (c, cad, sp) in enumerate(cfg.moving_obstacles)
    ]
    statics = {f"s{i}": c for i, c in enumerate(cfg.static_obstacles)}
    total_ticks = max((len(r) - 1 for r in routes.values()), default=0)
    collisions: list[CollisionRecord] = []
    positions = {i: r[0] for i, r in routes.items()}
    for tick in range(total_ticks):
        before = dict(positions)
        for o in movings:
            step_moving_obstacle(o, tick, rng, area, set(), avoid_drones=False)
        for i, r in routes.items():
            positions[i] = r[min(tick + 1, len(r) - 1)]
        obstacle_cells = dict(statics)
        for o in movings:
            if o.alive and tick >= o.spawn_tick:
                obstacle_cells[f"m{o.id}"] = o.cell
        collisions += detect_collisions_ground_truth(
            before, positions, obstacle_cells, tick
        )
    return SimResult(
        routes={i: list(r) for i, r in routes.items()},
        collisions=collisions,
        ticks=total_ticks,
        wall_ms=0.0,
        arrived={i: True for i in routes},
        timed_out=False,
    )
