"""Grid simulation of the copula Brownian bridge, Kiefer field and K* process.

Everything is exact on a finite grid: the bridge covariance
``C(u ^ v) - C(u) C(v)`` is assembled, factorized once and reused for any
number of seeded draws.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .copulas import CopulaModel
from .errors import ConfigError, NumericalError
from .grid import Grid

logger = logging.getLogger(__name__)

JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8)
_DEGENERATE_TOL = 1e-14


class FieldTag(str, enum.Enum):
    BRIDGE = "bridge"
    KIEFER = "kiefer"
    KSTAR = "kstar"


@dataclass(frozen=True, eq=False)
class FieldSample:
    """Simulated field values, shape ``(reps, n_points)``."""

    grid: Grid
    values: np.ndarray
    time_index: int
    process_tag: FieldTag
    seed: object = None

    @property
    def reps(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class CovarianceFactor:
    grid: Grid
    model: CopulaModel
    matrix_factor: np.ndarray
    active_index: np.ndarray
    degenerate_index: np.ndarray
    jitter: float
    reconstruction_error: float = field(default=0.0)

    @property
    def n_active(self) -> int:
        return len(self.active_index)

    def covariance(self) -> np.ndarray:
        """Covariance implied by the factor on the full grid (degenerate rows are zero)."""
        n = len(self.grid)
        out = np.zeros((n, n))
        a = self.active_index
        out[np.ix_(a, a)] = self.matrix_factor @ self.matrix_factor.T
        return out


def bridge_covariance(model: CopulaModel, u, v):
    """``C(u ^ v) - C(u) C(v)``; broadcasts over leading axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return model.cdf(np.minimum(u, v)) - model.cdf(u) * model.cdf(v)


def bridge_covariance_matrix(model: CopulaModel, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    c = model.cdf(points)
    meet = np.minimum(points[:, None, :], points[None, :, :])
    sigma = model.cdf(meet) - np.outer(c, c)
    return 0.5 * (sigma + sigma.T)


def build_factor(model: CopulaModel, grid: Grid) -> CovarianceFactor:
    """Cholesky factor of the bridge covariance over the non-degenerate grid points.

    Points where ``C`` is 0 or 1 have zero variance and are pinned to zero.
    Diagonal jitter escalates through ``JITTER_LADDER`` when the plain
    factorization fails.
    """
    if len(grid) == 0:
        raise ConfigError("grid is empty")
    if grid.d != model.dim:
        raise ConfigError(f"grid dimension {grid.d} does not match model dimension {model.dim}")
    pts = grid.points
    c = np.atleast_1d(model.cdf(pts))
    var = c - c * c
    active = np.flatnonzero(var > _DEGENERATE_TOL)
    degenerate = np.flatnonzero(var <= _DEGENERATE_TOL)
    if len(active) == 0:
        return CovarianceFactor(grid, model, np.zeros((0, 0)), active, degenerate, 0.0)

    sigma = bridge_covariance_matrix(model, pts[active])
    eye = np.eye(len(active))
    for jitter in JITTER_LADDER:
        try:
            chol = np.linalg.cholesky(sigma + jitter * eye)
        except np.linalg.LinAlgError:
            continue
        err = np.linalg.norm(chol @ chol.T - sigma) / max(np.linalg.norm(sigma), 1e-300)
        if jitter > 0:
            logger.info("build_factor: used diagonal jitter %.0e on %d points", jitter, len(active))
        return CovarianceFactor(grid, model, chol, active, degenerate, jitter, float(err))
    lam = float(np.linalg.eigvalsh(sigma)[0])
    raise NumericalError(
        f"covariance factorization failed at jitter {JITTER_LADDER[-1]:.0e}; smallest eigenvalue {lam:.3e}"
    )


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _draw(factor: CovarianceFactor, rng: np.random.Generator, reps: int) -> np.ndarray:
    out = np.zeros((reps, len(factor.grid)))
    if factor.n_active:
        z = rng.standard_normal((reps, factor.n_active))
        out[:, factor.active_index] = z @ factor.matrix_factor.T
    return out


def sample_bridge(factor: CovarianceFactor, seed=None, reps: int = 1) -> FieldSample:
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    values = _draw(factor, _rng(seed), reps)
    return FieldSample(factor.grid, values, 1, FieldTag.BRIDGE, seed)


def sample_kiefer(factor: CovarianceFactor, t_max: int, seed=None, reps: int = 1) -> list[FieldSample]:
    """Kiefer field at integer times ``0..t_max`` as partial sums of independent bridges."""
    if t_max < 1:
        raise ConfigError("t_max must be at least 1")
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    rng = _rng(seed)
    total = np.zeros((reps, len(factor.grid)))
    out = [FieldSample(factor.grid, total.copy(), 0, FieldTag.KIEFER, seed)]
    for k in range(1, t_max + 1):
        total = total + _draw(factor, rng, reps)
        out.append(FieldSample(factor.grid, total.copy(), k, FieldTag.KIEFER, seed))
    return out


def _margin_index(grid: Grid) -> np.ndarray:
    try:
        return grid.margin_index()
    except KeyError as exc:
        raise ConfigError(f"grid lacks margin point {exc.args[0]}; build it with include_margin_points") from None


def partial_matrix(model: CopulaModel, points: np.ndarray) -> np.ndarray:
    """``(n_points, d)`` array of first partials."""
    points = np.asarray(points, dtype=float)
    return np.stack([np.atleast_1d(model.partial(points, j)) for j in range(model.dim)], axis=-1)


def kstar_transform(model: CopulaModel, grid: Grid, k_values: np.ndarray) -> np.ndarray:
    """``K(u) - sum_j K(1, .., u_j, .., 1) dC/du_j(u)`` applied row-wise to ``k_values``."""
    k_values = np.atleast_2d(np.asarray(k_values, dtype=float))
    idx = _margin_index(grid)
    grad = partial_matrix(model, grid.points)
    margins = k_values[:, idx]  # (reps, n_points, d)
    return k_values - np.einsum("rpj,pj->rp", margins, grad)


def sample_kstar(
    model: CopulaModel,
    grid: Grid,
    time: int = 1,
    seed=None,
    reps: int = 1,
    factor: CovarianceFactor | None = None,
) -> FieldSample:
    """K* field at integer ``time`` on a margin-augmented grid.

    ``K(., time)`` is a sum of ``time`` independent bridges, which is equal in
    law to ``sqrt(time)`` times a single bridge.
    """
    if time < 1:
        raise ConfigError("time must be at least 1")
    if grid.d != model.dim:
        raise ConfigError(f"grid dimension {grid.d} does not match model dimension {model.dim}")
    _margin_index(grid)
    if factor is None:
        factor = build_factor(model, grid)
    k = np.sqrt(time) * sample_bridge(factor, seed, reps).values
    return FieldSample(grid, kstar_transform(model, grid, k), time, FieldTag.KSTAR, seed)


def kstar_covariance(model: CopulaModel, u, v):
    """Covariance of ``K*(u, 1)`` and ``K*(v, 1)``; broadcasts over leading axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u, v = np.broadcast_arrays(u, v)
    d = model.dim
    gu = np.stack([np.asarray(model.partial(u, j)) for j in range(d)], axis=-1)
    gv = np.stack([np.asarray(model.partial(v, j)) for j in range(d)], axis=-1)
    cu = np.asarray(model.cdf(u))
    cv = np.asarray(model.cdf(v))
    meet = np.minimum(u, v)
    total = np.asarray(model.cdf(meet)) - cu * cv
    for j in range(d):
        uj = u.copy()
        uj[..., j] = meet[..., j]
        vj = v.copy()
        vj[..., j] = meet[..., j]
        total = total - gv[..., j] * (model.cdf(uj) - cu * v[..., j])
        total = total - gu[..., j] * (model.cdf(vj) - cv * u[..., j])
    for i in range(d):
        for j in range(d):
            if i == j:
                cross = meet[..., i] - u[..., i] * v[..., i]
            else:
                cross = model.bivariate_margin(i, j, u[..., i], v[..., j]) - u[..., i] * v[..., j]
            total = total + gu[..., i] * gv[..., j] * cross
    return total[()] if np.ndim(total) == 0 else total


def kstar_variance(model: CopulaModel, u):
    return kstar_covariance(model, u, u)


def kstar_variance_sup(model: CopulaModel, grid: Grid, start=None, tol: float = 1e-6):
    """``sup_u Var K*(u, 1)`` by grid argmax followed by coordinatewise step halving.

    Returns ``(value, argmax)``. ``start`` overrides the grid argmax as the
    starting point of the refinement.
    """
    pts = grid.points
    var = np.atleast_1d(kstar_variance(model, pts))
    best_k = int(np.argmax(var))
    x = pts[best_k].copy() if start is None else np.asarray(start, dtype=float).copy()
    best = float(var[best_k]) if start is None else float(kstar_variance(model, x))
    spacing = [np.min(np.diff(a)) if len(a) > 1 else 0.5 for a in grid.axes]
    step = float(max(spacing)) / 2
    while step >= tol:
        improved = False
        for j in range(model.dim):
            for sign in (1.0, -1.0):
                y = x.copy()
                y[j] = np.clip(y[j] + sign * step, 0.0, 1.0)
                val = float(kstar_variance(model, y))
                if val > best + 1e-15:
                    x, best, improved = y, val, True
                    break
        if not improved:
            step /= 2
    return max(best, float(var.max())), x
