"""Occupancy-grid unsafe sets for ground-vehicle planning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HazardGrid:
    """Row-major boolean occupancy grid. True cells are untraversable.

    Cell (row i, col j) covers x in [origin_x + j*res, origin_x + (j+1)*res)
    and y in [origin_y + i*res, origin_y + (i+1)*res).
    """

    origin: np.ndarray       # (2,) meters
    resolution: float        # meters per cell
    cells: np.ndarray        # (rows, cols) bool

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        cells = np.asarray(self.cells, dtype=bool)
        if cells.ndim != 2:
            raise ValueError("cells must be a 2-D matrix")
        object.__setattr__(self, "cells", cells)
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")

    @property
    def rows(self) -> int:
        return self.cells.shape[0]

    @property
    def cols(self) -> int:
        return self.cells.shape[1]

    def blocked_at(self, x: float, y: float) -> bool:
        """True if (x, y) lies in a hazardous cell or off the grid."""
        j = int(np.floor((x - self.origin[0]) / self.resolution))
        i = int(np.floor((y - self.origin[1]) / self.resolution))
        if i < 0 or j < 0 or i >= self.rows or j >= self.cols:
            return True
        return bool(self.cells[i, j])

    def to_json_dict(self) -> dict:
        return {
            "origin": [float(self.origin[0]), float(self.origin[1])],
            "resolution": float(self.resolution),
            "rows": int(self.rows),
            "cols": int(self.cols),
            "data": [int(v) for v in self.cells.reshape(-1)],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "HazardGrid":
        rows, cols = int(obj["rows"]), int(obj["cols"])
        data = np.asarray(obj["data"], dtype=bool).reshape(rows, cols)
        return cls(origin=np.asarray(obj["origin"], dtype=float),
                   resolution=float(obj["resolution"]), cells=data)


def footprint_offsets(radius: float, resolution: float) -> np.ndarray:
    """Sample points of a disc footprint: center, boundary ring, and an
    interior grid at cell resolution for footprints spanning multiple cells."""
    if radius <= 0:
        return np.zeros((1, 2))
    pts = {(0.0, 0.0)}
    for k in range(8):
        angle = k * np.pi / 4
        pts.add((round(radius * np.cos(angle), 12), round(radius * np.sin(angle), 12)))
    ticks = np.arange(-radius, radius + 0.5 * resolution, resolution)
    for dx in ticks:
        for dy in ticks:
            if dx * dx + dy * dy <= radius * radius:
                pts.add((float(dx), float(dy)))
    return np.asarray(sorted(pts))
