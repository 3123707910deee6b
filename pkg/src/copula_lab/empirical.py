"""Empirical distribution functions, the empirical copula and its processes."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .sample import Sample

_CHUNK = 1 << 22  # elements per broadcast block


class ProcessTag(str, enum.Enum):
    AN = "A_n"
    ALPHA_N = "alpha_n"
    SMOOTHED_AN = "smoothed_A_n"


@dataclass(frozen=True, eq=False)
class ProcessEvaluation:
    grid: Grid
    values: np.ndarray
    process_tag: ProcessTag
    n: int

    def __post_init__(self):
        if self.values.shape != (len(self.grid),):
            raise ValueError("process values must align with grid points")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("process values must be finite")

    def sup(self, mask=None) -> float:
        v = self.values if mask is None else self.values[mask]
        return float(np.max(np.abs(v))) if v.size else 0.0


SNAP_ULPS = 8


def rank_threshold(n: int, u) -> np.ndarray:
    """``ceil(n * u)`` with ``n * u`` snapped to an integer when within rounding error.

    Without the snap, ``ceil(100 * 0.07)`` would be 8 because of binary
    representation. The window is a few ulps relative to ``n * u``, so tiny
    positive levels keep ``ceil(n * u) = 1``.
    """
    x = n * np.asarray(u, dtype=float)
    r = np.rint(x)
    snapped = np.abs(x - r) <= SNAP_ULPS * np.finfo(float).eps * np.abs(x)
    return np.where(snapped, r, np.ceil(x)).astype(np.int64)


def joint_ecdf(sample: Sample, x) -> np.ndarray | float:
    """Fraction of rows dominated componentwise by ``x`` (shape ``(..., d)``)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (sample.d,):
        raise ValueError(f"expected points with {sample.d} coordinates")
    return _count_dominated(sample.data, x) / sample.n


def marginal_ecdf(sample: Sample, j: int, x) -> np.ndarray | float:
    col = np.sort(sample.data[:, j])
    out = np.searchsorted(col, np.asarray(x, dtype=float), side="right") / sample.n
    return out[()] if np.ndim(out) == 0 else out


def marginal_quantile(sample: Sample, j: int, t) -> np.ndarray | float:
    """Generalized inverse of the marginal ECDF.

    For ``t`` in (0, 1] this is the ``ceil(n t)``-th order statistic; at
    ``t = 0`` it is the limit from the right, the column minimum.
    """
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise ValueError("quantile level must lie in [0, 1]")
    col = np.sort(sample.data[:, j])
    k = np.clip(rank_threshold(sample.n, t), 1, sample.n)
    out = col[k - 1]
    return out[()] if out.ndim == 0 else out


def _count_dominated(scores: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Number of rows ``i`` with ``scores[i] <= x`` componentwise, for each point in ``x``."""
    flat = x.reshape(-1, scores.shape[1])
    out = np.empty(flat.shape[0], dtype=np.int64)
    step = max(1, _CHUNK // max(1, scores.size))
    for a in range(0, flat.shape[0], step):
        blk = flat[a : a + step]
        out[a : a + step] = np.sum(np.all(scores[None, :, :] <= blk[:, None, :], axis=-1), axis=-1)
    out = out.reshape(x.shape[:-1])
    return out[()] if out.ndim == 0 else out


def lower_orthant_counts(scores: np.ndarray, thresholds) -> np.ndarray:
    """Counts of rows with ``scores[:, j] <= thresholds[j][a_j]`` for every product index.

    ``thresholds`` is a list of nondecreasing arrays, one per column. Runs in
    ``O(n + prod(len(t)))`` using a histogram and cumulative sums.
    """
    shape = tuple(len(t) for t in thresholds)
    bins = np.empty(scores.shape, dtype=np.int64)
    keep = np.ones(scores.shape[0], dtype=bool)
    for j, t in enumerate(thresholds):
        b = np.searchsorted(np.asarray(t), scores[:, j], side="left")
        keep &= b < len(t)
        bins[:, j] = b
    flat = np.ravel_multi_index(tuple(bins[keep].T), shape) if keep.any() else np.empty(0, dtype=np.int64)
    hist = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
    for j in range(len(shape)):
        hist = np.cumsum(hist, axis=j)
    return hist


def empirical_copula(sample: Sample, u) -> np.ndarray | float:
    """Rank-based empirical copula ``n^-1 sum_i prod_j 1{R_ji <= ceil(n u_j)}``.

    ``u`` has shape ``(..., d)``. This equals the uniform-sample empirical
    distribution evaluated at the marginal generalized inverses.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1:] != (sample.d,):
        raise ValueError(f"expected points with {sample.d} coordinates")
    if np.any((u < 0) | (u > 1)):
        raise ValueError("points must lie in the unit cube")
    k = rank_threshold(sample.n, u)
    return _count_dominated(sample.ranks, k) / sample.n


def empirical_copula_grid(sample: Sample, grid: Grid) -> np.ndarray:
    """Empirical copula at every grid point (fast histogram path for the product part)."""
    if grid.d != sample.d:
        raise ValueError("grid and sample dimensions differ")
    thr = [rank_threshold(sample.n, a) for a in grid.axes]
    prod_vals = lower_orthant_counts(sample.ranks, thr).ravel() / sample.n
    extra = grid.points[grid.n_product :]
    if extra.size:
        return np.concatenate([prod_vals, np.atleast_1d(empirical_copula(sample, extra))])
    return prod_vals


def uniform_ecdf_grid(sample: Sample, grid: Grid) -> np.ndarray:
    """Joint ECDF of the (pseudo-uniform) sample at every grid point."""
    if grid.d != sample.d:
        raise ValueError("grid and sample dimensions differ")
    prod_vals = lower_orthant_counts(sample.data, list(grid.axes)).ravel() / sample.n
    extra = grid.points[grid.n_product :]
    if extra.size:
        return np.concatenate([prod_vals, np.atleast_1d(joint_ecdf(sample, extra))])
    return prod_vals


def _check_model(model, grid: Grid):
    if model.dim != grid.d:
        raise ValueError(f"model dimension {model.dim} does not match grid dimension {grid.d}")


def copula_process(sample: Sample, model, grid: Grid) -> ProcessEvaluation:
    """``A_n(u) = sqrt(n) (C_n(u) - C(u))`` on the grid."""
    _check_model(model, grid)
    vals = np.sqrt(sample.n) * (empirical_copula_grid(sample, grid) - model.cdf(grid.points))
    return ProcessEvaluation(grid, vals, ProcessTag.AN, sample.n)


def alpha_process(uniform_sample: Sample, model, grid: Grid) -> ProcessEvaluation:
    """``alpha_n(u) = sqrt(n) (C~_n(u) - C(u))`` with ``C~_n`` the ECDF of the uniforms."""
    _check_model(model, grid)
    vals = np.sqrt(uniform_sample.n) * (uniform_ecdf_grid(uniform_sample, grid) - model.cdf(grid.points))
    return ProcessEvaluation(grid, vals, ProcessTag.ALPHA_N, uniform_sample.n)


def beta_process(uniform_sample: Sample, j: int, u) -> np.ndarray | float:
    """Uniform quantile process ``sqrt(n) (G_jn^-(u) - u)``."""
    u = np.asarray(u, dtype=float)
    return np.sqrt(uniform_sample.n) * (marginal_quantile(uniform_sample, j, u) - u)


def sup_deviation(sample: Sample, model, grid: Grid) -> float:
    """``max`` over the grid of ``|C_n - C|``."""
    _check_model(model, grid)
    return float(np.max(np.abs(empirical_copula_grid(sample, grid) - model.cdf(grid.points))))
