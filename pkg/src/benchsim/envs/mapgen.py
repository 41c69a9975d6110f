"""Randomized multi-room floor plans: BSP room splits, doorways, furniture.

Rooms come from recursive axis-aligned splits of the bounding rectangle; each
interior wall carries one doorway gap. Split lines avoid landing inside an
existing door gap so doorways stay passable. Furniture rectangles keep a
clearance band to room walls for the same reason.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core.geometry import Segment, Vec2
from ..core.grid import GridMap

MIN_ROOM_SIDE = 1.6    # m, smallest room dimension the splitter will produce
DOOR_WIDTH_MIN = 0.8   # m
DOOR_WIDTH_MAX = 1.2   # m
DOOR_END_MARGIN = 0.2  # m, gap offset from wall ends
DOOR_JUNCTION_CLEARANCE = 0.2  # m, split lines keep this far from door gaps
FURNITURE_SIDE_MIN = 0.4  # m
FURNITURE_SIDE_MAX = 0.9  # m
FURNITURE_WALL_CLEARANCE = 0.7  # m, keeps doorways and corridors passable


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Vec2:
        return Vec2((self.xmin + self.xmax) / 2, (self.ymin + self.ymax) / 2)

    def contains(self, p: Vec2, margin: float = 0.0) -> bool:
        return (self.xmin + margin <= p.x <= self.xmax - margin
                and self.ymin + margin <= p.y <= self.ymax - margin)

    def edges(self) -> list[Segment]:
        a = Vec2(self.xmin, self.ymin)
        b = Vec2(self.xmax, self.ymin)
        c = Vec2(self.xmax, self.ymax)
        d = Vec2(self.xmin, self.ymax)
        return [Segment(a, b), Segment(b, c), Segment(c, d), Segment(d, a)]


@dataclass(frozen=True)
class Door:
    """Gap in an interior wall: `line` is the wall's fixed coordinate.

    horizontal=True means the wall runs along y=line and the gap spans
    x in [lo, hi]; horizontal=False is the transpose.
    """
    horizontal: bool
    line: float
    lo: float
    hi: float


@dataclass
class FloorPlan:
    bounds: Rect
    rooms: list[Rect]
    walls: list[Segment]       # outer boundary + interior partition pieces
    doors: list[Door]
    furniture: list[Rect] = field(default_factory=list)

    def segments(self) -> list[Segment]:
        segs = list(self.walls)
        for rect in self.furniture:
            segs.extend(rect.edges())
        return segs


def _door_conflict(doors: list[Door], horizontal_split: bool, coord: float,
                   leaf: Rect) -> bool:
    """True when a new split wall would T-junction inside a door gap."""
    lo_edge, hi_edge = ((leaf.xmin, leaf.xmax) if horizontal_split
                        else (leaf.ymin, leaf.ymax))
    for door in doors:
        if door.horizontal == horizontal_split:
            continue  # parallel walls cannot collide at a junction
        if not (math.isclose(door.line, lo_edge, abs_tol=1e-9)
                or math.isclose(door.line, hi_edge, abs_tol=1e-9)):
            continue
        if door.lo - DOOR_JUNCTION_CLEARANCE < coord < door.hi + DOOR_JUNCTION_CLEARANCE:
            return True
    return False


def _split_leaf(leaf: Rect, doors: list[Door], rng: np.random.Generator
                ) -> tuple[Rect, Rect, list[Segment], Door] | None:
    horizontal = leaf.height >= leaf.width  # split the longer axis
    lo, hi = (leaf.ymin, leaf.ymax) if horizontal else (leaf.xmin, leaf.xmax)
    if hi - lo < 2 * MIN_ROOM_SIDE:
        return None
    coord = None
    for _ in range(10):
        c = float(rng.uniform(lo + MIN_ROOM_SIDE, hi - MIN_ROOM_SIDE))
        if not _door_conflict(doors, horizontal, c, leaf):
            coord = c
            break
    if coord is None:
        return None

    span_lo, span_hi = ((leaf.xmin, leaf.xmax) if horizontal
                        else (leaf.ymin, leaf.ymax))
    width = min(float(rng.uniform(DOOR_WIDTH_MIN, DOOR_WIDTH_MAX)),
                span_hi - span_lo - 2 * DOOR_END_MARGIN)
    gap_lo = float(rng.uniform(span_lo + DOOR_END_MARGIN,
                               span_hi - DOOR_END_MARGIN - width))
    gap_hi = gap_lo + width

    def wall_point(along: float) -> Vec2:
        return Vec2(along, coord) if horizontal else Vec2(coord, along)

    pieces = []
    if gap_lo > span_lo + 1e-9:
        pieces.append(Segment(wall_point(span_lo), wall_point(gap_lo)))
    if gap_hi < span_hi - 1e-9:
        pieces.append(Segment(wall_point(gap_hi), wall_point(span_hi)))
    door = Door(horizontal=horizontal, line=coord, lo=gap_lo, hi=gap_hi)

    if horizontal:
        a = Rect(leaf.xmin, leaf.ymin, leaf.xmax, coord)
        b = Rect(leaf.xmin, coord, leaf.xmax, leaf.ymax)
    else:
        a = Rect(leaf.xmin, leaf.ymin, coord, leaf.ymax)
        b = Rect(coord, leaf.ymin, leaf.xmax, leaf.ymax)
    return a, b, pieces, door


def _place_furniture(rooms: list[Rect], furniture_max: int,
                     rng: np.random.Generator) -> list[Rect]:
    placed: list[Rect] = []
    for room in rooms:
        n = int(rng.integers(0, furniture_max + 1))
        for _ in range(n):
            for _ in range(8):
                w, h = rng.uniform(FURNITURE_SIDE_MIN, FURNITURE_SIDE_MAX, size=2)
                cx_lo = room.xmin + FURNITURE_WALL_CLEARANCE + w / 2
                cx_hi = room.xmax - FURNITURE_WALL_CLEARANCE - w / 2
                cy_lo = room.ymin + FURNITURE_WALL_CLEARANCE + h / 2
                cy_hi = room.ymax - FURNITURE_WALL_CLEARANCE - h / 2
                if cx_lo >= cx_hi or cy_lo >= cy_hi:
                    break
                cx = float(rng.uniform(cx_lo, cx_hi))
                cy = float(rng.uniform(cy_lo, cy_hi))
                rect = Rect(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)
                pad = 0.5  # m, furniture-furniture spacing
                if all(rect.xmax + pad < o.xmin or o.xmax + pad < rect.xmin
                       or rect.ymax + pad < o.ymin or o.ymax + pad < rect.ymin
                       for o in placed):
                    placed.append(rect)
                    break
    return placed


def generate_floor_plan(rng: np.random.Generator, width: float = 8.0,
                        height: float = 8.0, rooms_min: int = 3,
                        rooms_max: int = 5, furniture_max: int = 2) -> FloorPlan:
    """Random multi-room plan; deterministic for a given rng state."""
    if rooms_min < 1 or rooms_max < rooms_min:
        raise ValueError("need 1 <= rooms_min <= rooms_max")
    bounds = Rect(0.0, 0.0, width, height)
    target = int(rng.integers(rooms_min, rooms_max + 1))
    leaves = [bounds]
    walls = list(bounds.edges())
    doors: list[Door] = []
    sealed: set[int] = set()  # leaf ids whose split attempts were exhausted
    while len(leaves) < target:
        order = sorted(range(len(leaves)), key=lambda i: -leaves[i].area)
        idx = next((i for i in order if id(leaves[i]) not in sealed), None)
        if idx is None:
            break
        result = _split_leaf(leaves[idx], doors, rng)
        if result is None:
            sealed.add(id(leaves[idx]))
            continue
        a, b, pieces, door = result
        leaves[idx:idx + 1] = [a, b]
        walls.extend(pieces)
        doors.append(door)
    furniture = _place_furniture(leaves, furniture_max, rng)
    return FloorPlan(bounds=bounds, rooms=leaves, walls=walls, doors=doors,
                     furniture=furniture)


def fill_rect(grid: GridMap, rect: Rect) -> None:
    """Mark every grid cell whose area overlaps the rectangle as occupied."""
    cs = grid.cell_size
    ix_lo = max(0, int(math.floor((rect.xmin - grid.origin.x) / cs)))
    iy_lo = max(0, int(math.floor((rect.ymin - grid.origin.y) / cs)))
    ix_hi = min(grid.width - 1, int(math.floor((rect.xmax - grid.origin.x) / cs)))
    iy_hi = min(grid.height - 1, int(math.floor((rect.ymax - grid.origin.y) / cs)))
    if ix_lo <= ix_hi and iy_lo <= iy_hi:
        grid.occupancy[iy_lo:iy_hi + 1, ix_lo:ix_hi + 1] = True
