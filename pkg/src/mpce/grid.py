"""Spatial grids for field realizations.

A grid is a tensor product of uniformly spaced points per axis. Fields are
stored flattened in row-major order with the x axis varying fastest, i.e.
flat index p = j * nx + i for point (x_i, y_j).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform 1-D or 2-D point grid.

    extents holds one (lo, hi) interval per axis and points_per_axis the
    number of points along each axis.
    """

    dims: int
    extents: tuple[tuple[float, float], ...]
    points_per_axis: tuple[int, ...]

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise ValueError(f"dims must be 1 or 2, got {self.dims}")
        if len(self.extents) != self.dims or len(self.points_per_axis) != self.dims:
            raise ValueError("extents and points_per_axis must have one entry per axis")
        for (lo, hi) in self.extents:
            if not hi > lo:
                raise ValueError(f"empty extent ({lo}, {hi})")
        for n in self.points_per_axis:
            if n < 1:
                raise ValueError("points_per_axis entries must be positive")

    @property
    def n_points(self) -> int:
        return int(np.prod(self.points_per_axis))

    def axes(self) -> list[np.ndarray]:
        """Per-axis coordinate vectors."""
        return [
            np.linspace(lo, hi, n)
            for (lo, hi), n in zip(self.extents, self.points_per_axis)
        ]

    def points(self) -> np.ndarray:
        """All grid points, shape (n_points, dims), x fastest."""
        ax = self.axes()
        if self.dims == 1:
            return ax[0][:, None]
        xx, yy = np.meshgrid(ax[0], ax[1])  # default indexing='xy': rows vary in y
        return np.column_stack([xx.ravel(), yy.ravel()])

    def to_dict(self) -> dict:
        return {
            "dims": self.dims,
            "extents": [list(e) for e in self.extents],
            "points_per_axis": list(self.points_per_axis),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(
            dims=int(d["dims"]),
            extents=tuple(tuple(float(v) for v in e) for e in d["extents"]),
            points_per_axis=tuple(int(n) for n in d["points_per_axis"]),
        )


def line_grid(lo: float, hi: float, n: int) -> GridSpec:
    return GridSpec(dims=1, extents=((lo, hi),), points_per_axis=(n,))


def cell_center_grid(n: int, lo: float = 0.0, hi: float = 1.0) -> GridSpec:
    """n x n grid of cell centers of a uniformly partitioned square."""
    h = (hi - lo) / n
    return GridSpec(
        dims=2,
        extents=((lo + h / 2, hi - h / 2), (lo + h / 2, hi - h / 2)),
        points_per_axis=(n, n),
    )


def node_grid_2d(n: int, lo: float = 0.0, hi: float = 1.0) -> GridSpec:
    """n x n grid of mesh nodes including the boundary of the square."""
    return GridSpec(dims=2, extents=((lo, hi), (lo, hi)), points_per_axis=(n, n))
