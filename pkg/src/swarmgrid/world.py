"""Discretized 3D flying zone: cells, areas, and grid distances."""

from __future__ import annotations

from dataclasses import dataclass

Cell = tuple[int, int, int]

# Axis-aligned unit moves; 6-connected grid.
DIRECTIONS: tuple[Cell, ...] = (
    (-1, 0, 0), (1, 0, 0),
    (0, -1, 0), (0, 1, 0),
    (0, 0, -1), (0, 0, 1),
)


class SpacingViolation(ValueError):
    """Grid spacing is below the safe distance or beyond the sensing range."""


class OutOfBounds(ValueError):
    """A cell lies outside the area."""


@dataclass(frozen=True)
class SafetyParams:
    """Vehicle parameters that determine the minimum safe grid spacing.

    max_speed is in meters/second; comm_latency and processing_time in seconds.
    """

    max_speed: float
    comm_latency: float
    processing_time: float

    def __post_init__(self) -> None:
        if self.max_speed < 0 or self.comm_latency < 0 or self.processing_time < 0:
            raise ValueError("safety parameters must be non-negative")


def safe_distance(p: SafetyParams) -> float:
    """Minimum spacing in meters for two vehicles closing head-on."""
    return 2.0 * p.max_speed * (2.0 * p.comm_latency + p.processing_time)


@dataclass(frozen=True)
class Area:
    """A finite 3D grid. Physical position of a cell is index * spacing meters."""

    dim_x: int
    dim_y: int
    dim_z: int
    spacing: float        # meters between adjacent cells
    sensing_range: float  # meters
    safe_dist: float      # meters

    def __post_init__(self) -> None:
        if min(self.dim_x, self.dim_y, self.dim_z) < 2:
            raise ValueError("every area dimension must be >= 2")
        if not (self.safe_dist <= self.spacing <= self.sensing_range):
            raise SpacingViolation(
                f"need safe_dist <= spacing <= sensing_range, got "
                f"{self.safe_dist} / {self.spacing} / {self.sensing_range}"
            )

    @property
    def dims(self) -> Cell:
        return (self.dim_x, self.dim_y, self.dim_z)

    @property
    def cell_count(self) -> int:
        return self.dim_x * self.dim_y * self.dim_z

    def __contains__(self, c: Cell) -> bool:
        x, y, z = c
        return 0 <= x < self.dim_x and 0 <= y < self.dim_y and 0 <= z < self.dim_z


def new_area(
    dims: Cell, spacing: float, sensing_range: float, params: SafetyParams
) -> Area:
    """Build an Area, validating spacing against the derived safe distance."""
    dx, dy, dz = dims
    if min(dx, dy, dz) < 1:
        raise ValueError("area dimensions must be positive")
    return Area(dx, dy, dz, spacing, sensing_range, safe_distance(params))


def neighbors(area: Area, c: Cell) -> list[Cell]:
    """In-bounds axis-adjacent cells of c, in a fixed deterministic order."""
    if c not in area:
        raise OutOfBounds(f"{c} outside {area.dims}")
    x, y, z = c
    out = []
    for dx, dy, dz in DIRECTIONS:
        n = (x + dx, y + dy, z + dz)
        if n in area:
            out.append(n)
    return out


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) + abs(a[2] - b[2])


def chebyshev(a: Cell, b: Cell) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]), abs(a[2] - b[2]))
