"""Observation matrices and their ranks."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import TiesError


class SampleKind(str, enum.Enum):
    RAW = "raw"
    PSEUDO_UNIFORM = "pseudo_uniform"


def _has_ties(column: np.ndarray) -> bool:
    s = np.sort(column)
    return bool(np.any(s[1:] == s[:-1]))


@dataclass(frozen=True, eq=False)
class Sample:
    """An ``n x d`` matrix of observations with lazily computed ranks.

    Ranks are 1-based, per column. Columns with ties raise
    :class:`TiesError` when ranks are requested; use
    :meth:`from_array` with ``tie_policy="jitter"`` to break them.
    """

    data: np.ndarray
    kind: SampleKind = SampleKind.RAW
    approximate: bool = field(default=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=float, copy=True)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1:
            raise ValueError(f"sample must be a non-empty n x d matrix, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("sample contains non-finite values")
        kind = SampleKind(self.kind)
        if kind is SampleKind.PSEUDO_UNIFORM and (data.min() < 0.0 or data.max() > 1.0):
            raise ValueError("pseudo-uniform sample must lie in [0, 1]")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "kind", kind)

    @classmethod
    def from_array(cls, data, kind=SampleKind.RAW, tie_policy: str = "reject", seed: int = 0) -> "Sample":
        """Build a sample, optionally breaking ties with seeded jitter.

        The jitter is uniform with half-width ``1e-9`` times the column range.
        """
        data = np.array(data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if tie_policy not in ("reject", "jitter"):
            raise ValueError(f"unknown tie_policy {tie_policy!r}")
        if tie_policy == "jitter" and any(_has_ties(c) for c in data.T):
            rng = np.random.default_rng(seed)
            span = np.ptp(data, axis=0)
            span = np.where(span > 0, span, 1.0)
            data = data + rng.uniform(-1.0, 1.0, size=data.shape) * 1e-9 * span
            if SampleKind(kind) is SampleKind.PSEUDO_UNIFORM:
                data = np.clip(data, 0.0, 1.0)
        return cls(data, kind)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    @cached_property
    def ranks(self) -> np.ndarray:
        for j, column in enumerate(self.data.T):
            if _has_ties(column):
                raise TiesError(f"column {j} has ties; ingest with tie_policy='jitter'")
        r = np.empty(self.data.shape, dtype=np.int64)
        order = np.argsort(self.data, axis=0, kind="stable")
        for j in range(self.d):
            r[order[:, j], j] = np.arange(1, self.n + 1)
        r.setflags(write=False)
        return r

    def pseudo_observations(self) -> "Sample":
        """Rescaled ranks ``R / (n + 1)``; approximate stand-ins for the true uniforms."""
        return Sample(self.ranks / (self.n + 1.0), SampleKind.PSEUDO_UNIFORM, approximate=True)

    def head(self, m: int) -> "Sample":
        """The first ``m`` rows as a new sample (ranks recomputed)."""
        return Sample(self.data[:m], self.kind, self.approximate)
