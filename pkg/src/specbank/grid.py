"""Frequency grids: the common domain of every sweep and S-matrix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Ascending, strictly positive frequency points in Hz.

    Immutable; the backing array is read-only. Grids compare equal only
    when the points match exactly (cascading never resamples).
    """

    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("frequency grid must be a non-empty 1-D array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("frequency grid contains non-finite values")
        if pts[0] <= 0.0:
            raise ValueError("frequency grid points must be > 0")
        if pts.size > 1 and not np.all(np.diff(pts) > 0):
            raise ValueError("frequency grid must be strictly increasing")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_ghz(cls, start_ghz: float, stop_ghz: float, n_points: int) -> "FrequencyGrid":
        return cls(np.linspace(start_ghz * 1e9, stop_ghz * 1e9, n_points))

    @property
    def ghz(self) -> np.ndarray:
        return self.points / 1e9

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.points.size, float(self.points[0]), float(self.points[-1])))

    def __repr__(self) -> str:
        p = self.points
        return f"FrequencyGrid({p[0]:.6g}..{p[-1]:.6g} Hz, {p.size} points)"
