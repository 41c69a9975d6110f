"""Occupancy grids: rasterization, inflation, components, egocentric patches."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import Vec2, circle_overlaps_rect, segment_intersects_rect
from .world import EntityClass, WorldState

# 4-connectivity: free-space components must be traversable by a planner that
# forbids corner-cutting diagonals.
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass
class GridMap:
    """Boolean occupancy raster. occupancy[iy, ix]; cell (ix, iy) spans
    [origin + ix*cell, origin + (ix+1)*cell) x [... iy ...)."""

    origin: Vec2
    cell_size: float
    occupancy: np.ndarray  # (height, width) bool

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    def world_to_cell(self, p: Vec2) -> tuple[int, int]:
        return (int(math.floor((p.x - self.origin.x) / self.cell_size)),
                int(math.floor((p.y - self.origin.y) / self.cell_size)))

    def cell_center(self, ix: int, iy: int) -> Vec2:
        return Vec2(self.origin.x + (ix + 0.5) * self.cell_size,
                    self.origin.y + (iy + 0.5) * self.cell_size)

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def is_free(self, ix: int, iy: int) -> bool:
        return self.in_bounds(ix, iy) and not self.occupancy[iy, ix]


def rasterize(world: WorldState, cell_size: float,
              bounds: tuple[float, float, float, float]) -> GridMap:
    """Mark every cell overlapped by an obstacle segment or static obstacle body.

    bounds = (xmin, ymin, xmax, ymax).
    """
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    xmin, ymin, xmax, ymax = bounds
    if xmax <= xmin or ymax <= ymin:
        raise ValueError("bounds must be non-empty")
    width = max(1, int(math.ceil((xmax - xmin) / cell_size)))
    height = max(1, int(math.ceil((ymax - ymin) / cell_size)))
    occ = np.zeros((height, width), dtype=bool)
    origin = Vec2(xmin, ymin)

    def cell_rect(ix: int, iy: int) -> tuple[float, float, float, float]:
        x0 = xmin + ix * cell_size
        y0 = ymin + iy * cell_size
        return x0, y0, x0 + cell_size, y0 + cell_size

    def bbox_cells(x0: float, y0: float, x1: float, y1: float):
        ix0 = max(0, int(math.floor((x0 - xmin) / cell_size)))
        iy0 = max(0, int(math.floor((y0 - ymin) / cell_size)))
        ix1 = min(width - 1, int(math.floor((x1 - xmin) / cell_size)))
        iy1 = min(height - 1, int(math.floor((y1 - ymin) / cell_size)))
        for iy in range(iy0, iy1 + 1):
            for ix in range(ix0, ix1 + 1):
                yield ix, iy

    for seg in world.obstacles:
        sx0, sx1 = sorted((seg.a.x, seg.b.x))
        sy0, sy1 = sorted((seg.a.y, seg.b.y))
        for ix, iy in bbox_cells(sx0, sy0, sx1, sy1):
            if occ[iy, ix]:
                continue
            rx0, ry0, rx1, ry1 = cell_rect(ix, iy)
            if segment_intersects_rect(seg, rx0, ry0, rx1, ry1):
                occ[iy, ix] = True

    for body in world.bodies:
        if body.entity_class is not EntityClass.OBSTACLE:
            continue
        c = body.pose.position
        r = body.radius
        for ix, iy in bbox_cells(c.x - r, c.y - r, c.x + r, c.y + r):
            if occ[iy, ix]:
                continue
            rx0, ry0, rx1, ry1 = cell_rect(ix, iy)
            if circle_overlaps_rect(c, r, rx0, ry0, rx1, ry1):
                occ[iy, ix] = True

    return GridMap(origin=origin, cell_size=cell_size, occupancy=occ)


def inflate(grid: GridMap, radius: float) -> GridMap:
    """Dilate occupancy so free cell centers clear obstacles by >= radius.

    The dilation disk gets half a cell diagonal of slack: obstacle geometry
    inside an occupied cell can sit up to cell/sqrt(2) from that cell's center.
    """
    if radius <= 0:
        return GridMap(grid.origin, grid.cell_size, grid.occupancy.copy())
    k = int(math.ceil(radius / grid.cell_size + math.sqrt(0.5)))
    span = np.arange(-k, k + 1)
    disk = (span[:, None] ** 2 + span[None, :] ** 2) <= k * k
    occ = ndimage.binary_dilation(grid.occupancy, structure=disk)
    return GridMap(grid.origin, grid.cell_size, occ)


def free_components(grid: GridMap) -> np.ndarray:
    """Label 4-connected free regions; 0 = occupied, labels start at 1."""
    labels, _ = ndimage.label(~grid.occupancy, structure=_CROSS)
    return labels


def component_cells(grid: GridMap, seed_cell: tuple[int, int]) -> np.ndarray:
    """(n, 2) array of (ix, iy) cells in seed_cell's free component."""
    ix, iy = seed_cell
    if not grid.is_free(ix, iy):
        raise ValueError(f"seed cell {seed_cell} is not free")
    labels = free_components(grid)
    ys, xs = np.nonzero(labels == labels[iy, ix])
    return np.stack([xs, ys], axis=1)


def egocentric_patch(grid: GridMap, position: Vec2, heading: float,
                     patch_cells: int = 19, patch_extent: float = 2.08) -> np.ndarray:
    """Rotated occupancy patch centered on the agent.

    Row 0 is the far-forward edge, the center cell is the agent itself,
    column 0 is the agent's left. Sampling is nearest-cell lookup; points
    outside the grid read occupied.
    """
    if patch_cells % 2 != 1:
        raise ValueError("patch_cells must be odd (agent at center cell)")
    pcs = patch_extent / patch_cells
    half = patch_cells // 2
    offs = (half - np.arange(patch_cells)) * pcs
    fwd = np.array([math.cos(heading), math.sin(heading)])
    left = np.array([-math.sin(heading), math.cos(heading)])
    # rows sweep forward->backward, columns left->right
    pts = (np.array([position.x, position.y])[None, None, :]
           + offs[:, None, None] * fwd[None, None, :]
           + offs[None, :, None] * left[None, None, :])
    ix = np.floor((pts[..., 0] - grid.origin.x) / grid.cell_size).astype(int)
    iy = np.floor((pts[..., 1] - grid.origin.y) / grid.cell_size).astype(int)
    inb = (ix >= 0) & (ix < grid.width) & (iy >= 0) & (iy < grid.height)
    patch = np.ones((patch_cells, patch_cells), dtype=bool)
    patch[inb] = grid.occupancy[iy[inb], ix[inb]]
    return patch
