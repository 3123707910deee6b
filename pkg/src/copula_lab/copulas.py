"""Parametric copula families.

Every model exposes the CDF, first partial derivatives, bivariate margins and
an i.i.d. sampler. All methods are vectorized over a trailing axis of length
``dim``; axes are 0-based.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import ConfigError
from .quadrature import gauss_legendre
from .sample import Sample, SampleKind

logger = logging.getLogger(__name__)

FD_STEP = 1e-5


class Family(str, enum.Enum):
    INDEPENDENCE = "independence"
    CLAYTON = "clayton"
    GUMBEL = "gumbel"
    FRANK = "frank"
    GAUSSIAN = "gaussian"
    FGM = "fgm"


# families whose second partials stay bounded on the closed cube
_SMOOTH_ON_CLOSED_CUBE = {Family.INDEPENDENCE, Family.FRANK, Family.FGM}

_N_PARAMS = {
    Family.INDEPENDENCE: 0,
    Family.CLAYTON: 1,
    Family.GUMBEL: 1,
    Family.FRANK: 1,
    Family.GAUSSIAN: 1,
    Family.FGM: 1,
}


@dataclass(frozen=True)
class CopulaModel:
    """An immutable parametric copula.

    Parameters
    ----------
    family : Family or str
        One of ``independence``, ``clayton`` (theta > 0), ``gumbel``
        (theta >= 1), ``frank`` (theta != 0; theta > 0 when dim > 2),
        ``gaussian`` (correlation in (-1, 1); exchangeable and in [0, 1)
        when dim > 2) and ``fgm`` (theta in [-1, 1], dim 2 only).
    dim : int
        Dimension ``d >= 2``.
    params : tuple of float
        Family parameters.
    """

    family: Family
    dim: int = 2
    params: tuple = ()

    def __post_init__(self):
        try:
            family = Family(str(self.family).lower() if not isinstance(self.family, Family) else self.family)
        except ValueError:
            raise ConfigError(f"unknown copula family {self.family!r}") from None
        object.__setattr__(self, "family", family)
        params = tuple(float(p) for p in np.atleast_1d(self.params)) if self.params is not None else ()
        object.__setattr__(self, "params", params)
        d = int(self.dim)
        object.__setattr__(self, "dim", d)
        if d < 2:
            raise ConfigError("copula dimension must be >= 2")
        if len(params) != _N_PARAMS[family]:
            raise ConfigError(f"{family.value} takes {_N_PARAMS[family]} parameter(s), got {len(params)}")
        if params and not np.isfinite(params[0]):
            raise ConfigError("copula parameter must be finite")
        theta = params[0] if params else None
        if family is Family.CLAYTON and not theta > 0:
            raise ConfigError("clayton requires theta > 0")
        if family is Family.GUMBEL and not theta >= 1:
            raise ConfigError("gumbel requires theta >= 1")
        if family is Family.FRANK:
            if theta == 0:
                raise ConfigError("frank requires theta != 0 (use independence)")
            if d > 2 and theta < 0:
                raise ConfigError("frank with dim > 2 requires theta > 0")
        if family is Family.GAUSSIAN:
            if not -1 < theta < 1:
                raise ConfigError("gaussian copula requires correlation in (-1, 1)")
            if d > 2 and theta < 0:
                raise ConfigError("gaussian copula with dim > 2 requires exchangeable correlation in [0, 1)")
        if family is Family.FGM:
            if d != 2:
                raise ConfigError("fgm copula is implemented for dim 2 only")
            if not -1 <= theta <= 1:
                raise ConfigError("fgm requires theta in [-1, 1]")

    @classmethod
    def create(cls, family: str, theta: float | None = None, dim: int = 2) -> "CopulaModel":
        params = () if theta is None or str(family).lower() == Family.INDEPENDENCE.value else (theta,)
        return cls(family, dim, params)

    @property
    def theta(self) -> float | None:
        return self.params[0] if self.params else None

    @property
    def smooth_on_closed_cube(self) -> bool:
        """False when second partials blow up at the cube boundary."""
        return self.family in _SMOOTH_ON_CLOSED_CUBE

    @property
    def has_analytic_partial(self) -> bool:
        return not (self.family is Family.GAUSSIAN and self.dim > 2)

    def describe(self) -> dict:
        return {"family": self.family.value, "dim": self.dim, "params": list(self.params)}

    # -- evaluation ---------------------------------------------------------

    def _check(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape[-1:] != (self.dim,):
            raise ValueError(f"expected points with {self.dim} coordinates, got shape {u.shape}")
        if np.any(u < 0.0) or np.any(u > 1.0) or np.any(np.isnan(u)):
            raise ValueError("points must lie in the unit cube")
        return u

    def cdf(self, u) -> np.ndarray | float:
        """Copula value ``C(u)``; ``u`` has shape ``(..., dim)``."""
        u = self._check(u)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = _CDF[self.family](self, u)
        out = np.where(np.any(u == 0.0, axis=-1), 0.0, out)
        out = np.clip(out, 0.0, 1.0)
        return out[()] if out.ndim == 0 else out

    def partial(self, u, j: int) -> np.ndarray | float:
        """First partial derivative ``dC/du_j``, clamped to [0, 1].

        Interior points use the analytic formula when the family has one;
        boundary points (and the d > 2 Gaussian copula) use finite
        differences with step ``FD_STEP``, one-sided at the boundary.
        """
        u = self._check(u)
        if not 0 <= j < self.dim:
            raise IndexError(f"axis {j} out of range for dim {self.dim}")
        interior = np.all((u > 0.0) & (u < 1.0), axis=-1)
        out = np.empty(u.shape[:-1])
        analytic = interior if self.has_analytic_partial else np.zeros_like(interior)
        if np.any(analytic):
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                out[analytic] = _PARTIAL[self.family](self, u[analytic], j)
        fd = ~analytic
        if np.any(fd):
            logger.debug("partial: finite-difference path at %d point(s), axis %d", int(np.sum(fd)), j)
            out[fd] = self._fd_partial(u[fd], j)
        out = np.clip(np.nan_to_num(out, nan=0.0), 0.0, 1.0)
        return out[()] if out.ndim == 0 else out

    def _fd_partial(self, u: np.ndarray, j: int) -> np.ndarray:
        h = FD_STEP
        x = u[..., j]
        lo = np.clip(x - h, 0.0, 1.0)
        hi = np.clip(x + h, 0.0, 1.0)
        up = u.copy()
        dn = u.copy()
        up[..., j] = hi
        dn[..., j] = lo
        return (self.cdf(up) - self.cdf(dn)) / (hi - lo)

    def bivariate_margin(self, i: int, j: int, s, t) -> np.ndarray | float:
        """``C`` at the point with coordinate i set to s, j set to t, all others 1."""
        if i == j:
            raise ValueError("bivariate margin needs two distinct axes")
        if not (0 <= i < self.dim and 0 <= j < self.dim):
            raise IndexError("axis out of range")
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        u = np.ones(s.shape + (self.dim,))
        u[..., i] = s
        u[..., j] = t
        return self.cdf(u)

    def conditional_inverse(self, u, w) -> np.ndarray:
        """Inverse in ``v`` of ``dC(u, v)/du = w`` for bivariate models."""
        if self.dim != 2:
            raise ValueError("conditional inverse is defined for dim 2 only")
        u, w = np.broadcast_arrays(np.asarray(u, float), np.asarray(w, float))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            v = _COND_INV[self.family](self, u, w)
        return np.clip(v, 0.0, 1.0)

    def sample(self, n: int, seed=None) -> Sample:
        """Draw ``n`` i.i.d. rows with joint law ``C`` (deterministic per seed)."""
        if n < 1:
            raise ValueError("sample size must be >= 1")
        rng = np.random.default_rng(seed)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            data = _SAMPLE[self.family](self, int(n), rng)
        return Sample(np.clip(data, 0.0, 1.0), SampleKind.PSEUDO_UNIFORM)

    def kendall_tau(self) -> float | None:
        """Closed-form Kendall tau where the family has one (dim 2)."""
        th = self.theta
        if self.family is Family.INDEPENDENCE:
            return 0.0
        if self.family is Family.CLAYTON:
            return th / (th + 2.0)
        if self.family is Family.GUMBEL:
            return 1.0 - 1.0 / th
        if self.family is Family.GAUSSIAN:
            return 2.0 / np.pi * np.arcsin(th)
        if self.family is Family.FGM:
            return 2.0 * th / 9.0
        return None


# -- independence -------------------------------------------------------------


def _indep_cdf(m, u):
    return np.prod(u, axis=-1)


def _indep_partial(m, u, j):
    return np.prod(np.delete(u, j, axis=-1), axis=-1)


def _indep_cond_inv(m, u, w):
    return w


def _indep_sample(m, n, rng):
    return rng.random((n, m.dim))


# -- clayton ------------------------------------------------------------------


def _clayton_cdf(m, u):
    th = m.theta
    s = np.sum(u ** (-th), axis=-1) - m.dim + 1.0
    return s ** (-1.0 / th)


def _clayton_partial(m, u, j):
    th = m.theta
    s = np.sum(u ** (-th), axis=-1) - m.dim + 1.0
    return u[..., j] ** (-th - 1.0) * s ** (-1.0 / th - 1.0)


def _clayton_cond_inv(m, u, w):
    th = m.theta
    return ((w ** (-th / (1.0 + th)) - 1.0) * u ** (-th) + 1.0) ** (-1.0 / th)


def _clayton_sample(m, n, rng):
    # Marshall-Olkin: gamma frailty, generator (1 + t)^(-1/theta)
    th = m.theta
    v = rng.gamma(1.0 / th, 1.0, size=(n, 1))
    e = rng.exponential(1.0, size=(n, m.dim))
    return (1.0 + e / v) ** (-1.0 / th)


# -- gumbel -------------------------------------------------------------------


def _gumbel_cdf(m, u):
    th = m.theta
    s = np.sum((-np.log(u)) ** th, axis=-1)
    return np.exp(-(s ** (1.0 / th)))


def _gumbel_partial(m, u, j):
    th = m.theta
    lu = -np.log(u)
    s = np.sum(lu**th, axis=-1)
    c = np.exp(-(s ** (1.0 / th)))
    return c * s ** (1.0 / th - 1.0) * lu[..., j] ** (th - 1.0) / u[..., j]


def _gumbel_cond_inv(m, u, w):
    # dC/du is increasing in v; vectorized bisection
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    uc = np.clip(u, 1e-300, 1.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        pts = np.stack([uc, np.clip(mid, 1e-300, 1.0)], axis=-1)
        val = np.where((uc < 1.0) & (mid < 1.0), _gumbel_partial(m, pts, 0), mid)
        below = val < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _positive_stable(alpha, size, rng):
    # Laplace transform exp(-t^alpha), Chambers-Mallows-Stuck / Kanter form
    if alpha == 1.0:
        return np.ones(size)
    a = rng.uniform(0.0, np.pi, size=size)
    w = rng.exponential(1.0, size=size)
    return (
        np.sin(alpha * a) / np.sin(a) ** (1.0 / alpha) * (np.sin((1.0 - alpha) * a) / w) ** ((1.0 - alpha) / alpha)
    )


def _gumbel_sample(m, n, rng):
    th = m.theta
    v = _positive_stable(1.0 / th, (n, 1), rng)
    e = rng.exponential(1.0, size=(n, m.dim))
    return np.exp(-((e / v) ** (1.0 / th)))


# -- frank --------------------------------------------------------------------


def _frank_cdf(m, u):
    th = m.theta
    num = np.prod(np.expm1(-th * u), axis=-1)
    den = np.expm1(-th) ** (m.dim - 1)
    return -np.log1p(num / den) / th


def _frank_partial(m, u, j):
    th = m.theta
    g = np.expm1(-th * u)
    others = np.prod(np.delete(g, j, axis=-1), axis=-1)
    den = np.expm1(-th) ** (m.dim - 1)
    return np.exp(-th * u[..., j]) * others / (den + np.prod(g, axis=-1))


def _frank_cond_inv(m, u, w):
    th = m.theta
    return -np.log1p(w * np.expm1(-th) / (w + (1.0 - w) * np.exp(-th * u))) / th


def _frank_sample(m, n, rng):
    if m.dim == 2:
        return _conditional_sample(m, n, rng)
    # Marshall-Olkin with logarithmic frailty (theta > 0 enforced)
    th = m.theta
    v = rng.logseries(-np.expm1(-th), size=(n, 1)).astype(float)
    e = rng.exponential(1.0, size=(n, m.dim))
    return -np.log1p(-(-np.expm1(-th)) * np.exp(-e / v)) / th


# -- gaussian -----------------------------------------------------------------

_BVN_NODES = 48


def _bvn_cdf(x, y, rho):
    """Standard bivariate normal CDF by Gauss-Legendre on the arcsine form."""
    base = special.ndtr(x) * special.ndtr(y)
    if rho == 0.0:
        return base
    t, w = gauss_legendre(_BVN_NODES, 0.0, np.arcsin(rho))
    x = np.asarray(x)[..., None]
    y = np.asarray(y)[..., None]
    st = np.sin(t)
    ct2 = np.cos(t) ** 2
    integrand = np.exp(-(x * x + y * y - 2.0 * x * y * st) / (2.0 * ct2))
    return base + np.sum(w * integrand, axis=-1) / (2.0 * np.pi)


_GH_NODES = 96


def _exchangeable_gauss_cdf(q, rho):
    # one-factor representation: X_j = sqrt(rho) Z + sqrt(1 - rho) E_j
    z, w = np.polynomial.hermite_e.hermegauss(_GH_NODES)
    w = w / np.sqrt(2.0 * np.pi)
    arg = (q[..., None, :] - np.sqrt(rho) * z[:, None]) / np.sqrt(1.0 - rho)
    return np.sum(w * np.prod(special.ndtr(arg), axis=-1), axis=-1)


def _gauss_cdf(m, u):
    rho = m.theta
    out = np.zeros(u.shape[:-1])
    zero = np.any(u == 0.0, axis=-1)
    ones = u == 1.0
    if m.dim == 2:
        a, b = u[..., 0], u[..., 1]
        interior = ~zero & ~np.any(ones, axis=-1)
        out = np.where(ones[..., 0], b, out)
        out = np.where(ones[..., 1], a, out)
        if np.any(interior):
            q = special.ndtri(u[interior])
            out[interior] = _bvn_cdf(q[:, 0], q[:, 1], rho)
        return out
    ok = ~zero
    if np.any(ok):
        q = special.ndtri(u[ok])  # +inf at coordinate 1 is handled by ndtr
        out[ok] = _exchangeable_gauss_cdf(q, rho)
    return out


def _gauss_partial(m, u, j):
    rho = m.theta
    q = special.ndtri(u)
    k = 1 - j
    return special.ndtr((q[..., k] - rho * q[..., j]) / np.sqrt(1.0 - rho * rho))


def _gauss_cond_inv(m, u, w):
    rho = m.theta
    return special.ndtr(rho * special.ndtri(u) + np.sqrt(1.0 - rho * rho) * special.ndtri(w))


def _gauss_sample(m, n, rng):
    rho = m.theta
    corr = np.full((m.dim, m.dim), rho)
    np.fill_diagonal(corr, 1.0)
    chol = np.linalg.cholesky(corr)
    z = rng.standard_normal((n, m.dim)) @ chol.T
    return special.ndtr(z)


# -- FGM ----------------------------------------------------------------------


def _fgm_cdf(m, u):
    a, b = u[..., 0], u[..., 1]
    return a * b * (1.0 + m.theta * (1.0 - a) * (1.0 - b))


def _fgm_partial(m, u, j):
    x, y = u[..., j], u[..., 1 - j]
    return y + m.theta * y * (1.0 - y) * (1.0 - 2.0 * x)


def _fgm_cond_inv(m, u, w):
    # solve v + a v (1 - v) = w, a = theta (1 - 2u)
    a = m.theta * (1.0 - 2.0 * u)
    small = np.abs(a) < 1e-12
    a_safe = np.where(small, 1.0, a)
    disc = np.sqrt(np.maximum((1.0 + a_safe) ** 2 - 4.0 * a_safe * w, 0.0))
    v = 2.0 * w / ((1.0 + a_safe) + disc)
    return np.where(small, w, v)


def _conditional_sample(m, n, rng):
    u = rng.random(n)
    w = rng.random(n)
    return np.stack([u, m.conditional_inverse(u, w)], axis=-1)


_CDF = {
    Family.INDEPENDENCE: _indep_cdf,
    Family.CLAYTON: _clayton_cdf,
    Family.GUMBEL: _gumbel_cdf,
    Family.FRANK: _frank_cdf,
    Family.GAUSSIAN: _gauss_cdf,
    Family.FGM: _fgm_cdf,
}
_PARTIAL = {
    Family.INDEPENDENCE: _indep_partial,
    Family.CLAYTON: _clayton_partial,
    Family.GUMBEL: _gumbel_partial,
    Family.FRANK: _frank_partial,
    Family.GAUSSIAN: _gauss_partial,
    Family.FGM: _fgm_partial,
}
_COND_INV = {
    Family.INDEPENDENCE: _indep_cond_inv,
    Family.CLAYTON: _clayton_cond_inv,
    Family.GUMBEL: _gumbel_cond_inv,
    Family.FRANK: _frank_cond_inv,
    Family.GAUSSIAN: _gauss_cond_inv,
    Family.FGM: _fgm_cond_inv,
}
_SAMPLE = {
    Family.INDEPENDENCE: _indep_sample,
    Family.CLAYTON: _clayton_sample,
    Family.GUMBEL: _gumbel_sample,
    Family.FRANK: _frank_sample,
    Family.GAUSSIAN: _gauss_sample,
    Family.FGM: _conditional_sample,
}


def uniformity_ks(sample: Sample) -> np.ndarray:
    """One-sample KS statistic of each column against Uniform(0, 1)."""
    return np.array([stats.kstest(col, "uniform").statistic for col in sample.data.T])
