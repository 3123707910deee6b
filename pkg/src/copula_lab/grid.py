"""Evaluation lattices in the unit cube."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True, eq=False)
class Grid:
    """Product lattice of per-axis points, optionally augmented with margin points.

    Margin points are ``(1, ..., 1, a, 1, ..., 1)`` for every value ``a`` of
    every axis, plus the corner ``(1, ..., 1)``; they are needed to evaluate
    the margin corrections of the copula Gaussian process. Points are unique; product points come first in
    C order, followed by any margin points not already present.
    """

    axes: tuple
    include_margin_points: bool = False
    _extra: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        axes = []
        for a in self.axes:
            a = np.unique(np.asarray(a, dtype=float))
            if a.size == 0:
                raise ValueError("grid axes must be non-empty")
            if a[0] < 0.0 or a[-1] > 1.0:
                raise ValueError("grid axes must lie in [0, 1]")
            a.setflags(write=False)
            axes.append(a)
        if not axes:
            raise ValueError("grid needs at least one axis")
        object.__setattr__(self, "axes", tuple(axes))
        extra = np.empty((0, len(axes)))
        if self.include_margin_points:
            have = {tuple(p) for p in self._product_points()}
            rows = []
            # the margin points are themselves transformed, which needs the corner (1, .., 1)
            corner = np.ones(len(axes))
            if tuple(corner) not in have:
                have.add(tuple(corner))
                rows.append(corner)
            for j, a in enumerate(axes):
                for x in a:
                    p = np.ones(len(axes))
                    p[j] = x
                    if tuple(p) not in have:
                        have.add(tuple(p))
                        rows.append(p)
            if rows:
                extra = np.array(rows)
        object.__setattr__(self, "_extra", extra)

    @classmethod
    def regular(cls, m: int, d: int, include_margin_points: bool = False) -> "Grid":
        """``m`` equispaced points per axis including 0 and 1."""
        if m < 2:
            raise ValueError("regular grid needs at least 2 points per axis")
        return cls(tuple(np.linspace(0.0, 1.0, m) for _ in range(d)), include_margin_points)

    @classmethod
    def from_points(cls, points) -> "Grid":
        """A 1-point-per-axis grid for a single point."""
        return cls(tuple([x] for x in np.asarray(points, dtype=float)))

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(a.size for a in self.axes)

    @property
    def n_product(self) -> int:
        return int(np.prod(self.shape))

    def _product_points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    @cached_property
    def points(self) -> np.ndarray:
        pts = np.vstack([self._product_points(), self._extra])
        pts.setflags(write=False)
        return pts

    def __len__(self) -> int:
        return self.points.shape[0]

    @cached_property
    def _index(self) -> dict:
        return {tuple(p): k for k, p in enumerate(self.points)}

    def index_of(self, point, tol: float = 1e-12) -> int:
        """Row of ``point`` in ``points``; coordinates match within ``tol``."""
        key = tuple(float(x) for x in point)
        k = self._index.get(key)
        if k is not None:
            return k
        dist = np.max(np.abs(self.points - np.asarray(key)), axis=1)
        k = int(np.argmin(dist))
        if dist[k] <= tol:
            return k
        raise KeyError(f"point {key} is not on the grid")

    def margin_index(self) -> np.ndarray:
        """``(n_points, d)`` indices of the margin point ``(1, .., u_j, .., 1)`` for each point.

        Raises ``KeyError`` when a needed margin point is missing.
        """
        pts = self.points
        out = np.empty(pts.shape, dtype=np.int64)
        for k, p in enumerate(pts):
            for j in range(self.d):
                q = np.ones(self.d)
                q[j] = p[j]
                out[k, j] = self.index_of(q)
        return out

    def interior_mask(self, margin: float) -> np.ndarray:
        """Points whose coordinates all lie in ``[margin, 1 - margin]``."""
        pts = self.points
        eps = 1e-12
        return np.all((pts >= margin - eps) & (pts <= 1.0 - margin + eps), axis=-1)

    def describe(self) -> dict:
        return {
            "axes": [a.tolist() for a in self.axes],
            "include_margin_points": self.include_margin_points,
            "n_points": len(self),
        }
