"""A* grid planner: 8-connected, octile heuristic, deterministic tie-breaks."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from ..core.geometry import Vec2
from ..core.grid import GridMap

SQRT2 = math.sqrt(2.0)


class PlannerError(Exception):
    pass


class Unreachable(PlannerError):
    """No path exists between the requested cells."""


@dataclass
class Path:
    """Planned route: world-frame waypoints at cell centers."""

    waypoints: list[Vec2]
    cells: list[tuple[int, int]]
    total_length: float  # m, sum of waypoint segment lengths

    def __len__(self) -> int:
        return len(self.waypoints)


# (dx, dy, step cost); diagonals cost sqrt(2)
_MOVES = ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
          (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2))


def octile(a: tuple[int, int], b: tuple[int, int]) -> float:
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    return (dx + dy) + (SQRT2 - 2.0) * min(dx, dy)


def neighbors(grid: GridMap, cell: tuple[int, int]):
    """Free 8-neighbors; diagonal steps require both adjacent cardinals free
    (no corner cutting)."""
    x, y = cell
    for dx, dy, cost in _MOVES:
        nx, ny = x + dx, y + dy
        if not grid.is_free(nx, ny):
            continue
        if dx != 0 and dy != 0:
            if not (grid.is_free(x + dx, y) and grid.is_free(x, y + dy)):
                continue
        yield (nx, ny), cost


def astar(grid: GridMap, start_cell: tuple[int, int],
          goal_cell: tuple[int, int]) -> Path:
    """Minimal-cost 8-connected path (straight 1, diagonal sqrt(2)).

    Ties on f are broken by heap-insertion order, so the result is
    deterministic for a given grid.
    """
    start = (int(start_cell[0]), int(start_cell[1]))
    goal = (int(goal_cell[0]), int(goal_cell[1]))
    for name, cell in (("start", start), ("goal", goal)):
        if not grid.in_bounds(*cell):
            raise PlannerError(f"{name} cell {cell} out of grid bounds")
        if not grid.is_free(*cell):
            raise PlannerError(f"{name} cell {cell} is occupied")

    counter = 0
    open_heap: list[tuple[float, int, tuple[int, int]]] = [(octile(start, goal), counter, start)]
    g_cost: dict[tuple[int, int], float] = {start: 0.0}
    came_from: dict[tuple[int, int], tuple[int, int]] = {}
    closed: set[tuple[int, int]] = set()

    while open_heap:
        _, _, cur = heapq.heappop(open_heap)
        if cur in closed:
            continue
        if cur == goal:
            cells = [cur]
            while cur in came_from:
                cur = came_from[cur]
                cells.append(cur)
            cells.reverse()
            waypoints = [grid.cell_center(ix, iy) for ix, iy in cells]
            length = g_cost[goal] * grid.cell_size
            return Path(waypoints=waypoints, cells=cells, total_length=length)
        closed.add(cur)
        base = g_cost[cur]
        for nxt, cost in neighbors(grid, cur):
            if nxt in closed:
                continue
            cand = base + cost
            if cand < g_cost.get(nxt, math.inf):
                g_cost[nxt] = cand
                came_from[nxt] = cur
                counter += 1
                heapq.heappush(open_heap, (cand + octile(nxt, goal), counter, nxt))

    raise Unreachable(f"no path from {start} to {goal}")
