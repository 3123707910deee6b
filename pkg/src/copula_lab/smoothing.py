"""Product kernels of order s and the kernel-smoothed empirical copula.

The smoothed estimator is

    C^_n(u) = h^-1 int_[0,1]^d k((u - v) / h^(1/d)) C_n(v) dv,

so ``h`` is a volume scale and ``b = h^(1/d)`` is the per-axis scale. No
boundary correction is applied: near the faces of the cube the kernel mass
inside the cube is below one, and that deficit is reported by
:func:`decompose_smoothing_error` rather than hidden.
"""

from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy import special

from .empirical import ProcessEvaluation, ProcessTag, empirical_copula, empirical_copula_grid
from .errors import NumericalError
from .grid import Grid
from .quadrature import gauss_legendre, tensor_rule
from .sample import Sample

MOMENT_TOL = 1e-8


class KernelShape(str, enum.Enum):
    EPANECHNIKOV = "epanechnikov"
    QUARTIC = "quartic"
    GAUSSIAN_TRUNCATED = "gaussian"
    POLYNOMIAL = "polynomial"
    CUSTOM = "custom"


def _epanechnikov_order(s: int) -> Polynomial:
    """Order-``s`` polynomial kernel ``0.75 (1 - x^2) p(x)`` on [-1, 1], ``p`` even.

    The coefficients of ``p`` solve the moment conditions
    ``int x^(2b) k = [b == 0]`` for ``b < s / 2``.
    """
    if s < 2 or s % 2:
        raise ValueError("polynomial kernel order must be an even integer >= 2")
    weight = Polynomial([0.75, 0.0, -0.75])
    half = s // 2

    def mu(k):
        return (weight * Polynomial([0] * k + [1])).integ(lbnd=-1)(1.0)

    gram = np.array([[mu(2 * (a + b)) for a in range(half)] for b in range(half)])
    rhs = np.zeros(half)
    rhs[0] = 1.0
    c = np.linalg.solve(gram, rhs)
    coef = np.zeros(2 * half - 1)
    coef[::2] = c
    return weight * Polynomial(coef)


@dataclass(frozen=True, eq=False)
class Kernel:
    """Product kernel ``k(v) = prod_j k1(v_j)`` with compact support ``[-r, r]^d``.

    Use the constructors :meth:`epanechnikov`, :meth:`quartic`,
    :meth:`gaussian`, :meth:`higher_order` or :meth:`custom`.
    """

    shape: KernelShape
    order: int
    dim: int
    support_radius: float
    profile: Polynomial | None = field(default=None, repr=False)

    @classmethod
    def epanechnikov(cls, dim: int = 2) -> "Kernel":
        return cls(KernelShape.EPANECHNIKOV, 2, dim, 1.0, Polynomial([0.75, 0.0, -0.75]))

    @classmethod
    def quartic(cls, dim: int = 2) -> "Kernel":
        return cls(KernelShape.QUARTIC, 2, dim, 1.0, (15.0 / 16.0) * Polynomial([1.0, 0.0, -1.0]) ** 2)

    @classmethod
    def gaussian(cls, dim: int = 2, radius: float = 3.0) -> "Kernel":
        return cls(KernelShape.GAUSSIAN_TRUNCATED, 2, dim, float(radius))

    @classmethod
    def higher_order(cls, order: int, dim: int = 2) -> "Kernel":
        return cls(KernelShape.POLYNOMIAL, int(order), dim, 1.0, _epanechnikov_order(int(order)))

    @classmethod
    def custom(cls, coefficients, order: int, dim: int = 2, radius: float = 1.0) -> "Kernel":
        """Polynomial profile with the given power-basis coefficients on ``[-radius, radius]``."""
        return cls(KernelShape.CUSTOM, int(order), dim, float(radius), Polynomial(np.asarray(coefficients, float)))

    @classmethod
    def from_name(cls, name: str, order: int = 2, dim: int = 2) -> "Kernel":
        name = name.lower()
        if name == "epanechnikov":
            return cls.epanechnikov(dim) if order == 2 else cls.higher_order(order, dim)
        if name == "quartic":
            if order != 2:
                raise ValueError("quartic kernel is order 2; use 'polynomial' for higher orders")
            return cls.quartic(dim)
        if name == "gaussian":
            if order != 2:
                raise ValueError("truncated gaussian kernel is order 2")
            return cls.gaussian(dim)
        if name == "polynomial":
            return cls.higher_order(order, dim)
        raise ValueError(f"unknown kernel {name!r}")

    def describe(self) -> dict:
        return {
            "shape": self.shape.value,
            "order": self.order,
            "dim": self.dim,
            "support_radius": self.support_radius,
        }

    # -- univariate pieces --------------------------------------------------

    def k1(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = self.support_radius
        inside = np.abs(x) <= r
        if self.shape is KernelShape.GAUSSIAN_TRUNCATED:
            z = 2.0 * special.ndtr(r) - 1.0
            vals = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi) / z
        else:
            vals = self.profile(x)
        return np.where(inside, vals, 0.0)

    def cdf1(self, x) -> np.ndarray:
        """``int_{-r}^{x} k1``, constant outside the support."""
        r = self.support_radius
        x = np.clip(np.asarray(x, dtype=float), -r, r)
        if self.shape is KernelShape.GAUSSIAN_TRUNCATED:
            z = 2.0 * special.ndtr(r) - 1.0
            return (special.ndtr(x) - special.ndtr(-r)) / z
        return self.profile.integ(lbnd=-r)(x)

    def __call__(self, v) -> np.ndarray:
        """Product kernel value at ``v`` of shape ``(..., dim)``."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1:] != (self.dim,):
            raise ValueError(f"expected points with {self.dim} coordinates")
        return np.prod(self.k1(v), axis=-1)

    @property
    def nonnegative(self) -> bool:
        xs = np.linspace(-self.support_radius, self.support_radius, 2001)
        return bool(np.all(self.k1(xs) >= -1e-15))


def kernel_eval(kernel: Kernel, v) -> np.ndarray | float:
    out = kernel(v)
    return out[()] if np.ndim(out) == 0 else out


@dataclass
class MomentReport:
    order: int
    mass: float
    moments: dict
    abs_moments: dict
    quadrature_converged: bool
    normalized: bool
    vanishing_moments: bool
    finite_abs_moments: bool
    max_vanishing_residual: float

    @property
    def passed(self) -> bool:
        return self.quadrature_converged and self.normalized and self.vanishing_moments and self.finite_abs_moments

    def as_dict(self) -> dict:
        return {
            "order": self.order,
            "passed": self.passed,
            "mass": self.mass,
            "mass_residual": abs(self.mass - 1.0),
            "normalized": self.normalized,
            "vanishing_moments": self.vanishing_moments,
            "max_vanishing_residual": self.max_vanishing_residual,
            "finite_abs_moments": self.finite_abs_moments,
            "quadrature_converged": self.quadrature_converged,
            "moments": {",".join(map(str, k)): v for k, v in self.moments.items()},
            "abs_moments": {",".join(map(str, k)): v for k, v in self.abs_moments.items()},
        }


def _split_rule(kernel: Kernel, m: int):
    # panels break at 0 and at sign changes of the profile, where |v^j k| has kinks
    r = kernel.support_radius
    cuts = {-r, 0.0, r}
    if kernel.profile is not None:
        roots = kernel.profile.roots()
        cuts |= {float(z.real) for z in roots if abs(z.imag) < 1e-12 and -r < z.real < r}
    cuts = sorted(cuts)
    parts = [gauss_legendre(m, a, b) for a, b in zip(cuts[:-1], cuts[1:])]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _moments(kernel: Kernel, m: int, max_degree: int):
    x, w = _split_rule(kernel, m)
    d = kernel.dim
    mesh = np.meshgrid(*([x] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=-1)
    wts = np.prod(np.stack([g.ravel() for g in np.meshgrid(*([w] * d), indexing="ij")], axis=-1), axis=-1)
    kv = kernel(pts) * wts
    moments, abs_moments = {}, {}
    for total in range(0, max_degree + 1):
        for idx in itertools.product(range(total + 1), repeat=d):
            if sum(idx) != total:
                continue
            mono = np.prod(pts ** np.array(idx), axis=-1)
            if total < max_degree:
                moments[idx] = float(np.sum(mono * kv))
            else:
                abs_moments[idx] = float(np.sum(np.abs(mono) * np.abs(kv)))
    return moments, abs_moments


def verify_order(kernel: Kernel, nodes: int = 48, tol: float = MOMENT_TOL) -> MomentReport:
    """Check the order-``s`` moment conditions by tensor Gauss-Legendre quadrature.

    The integrals are computed with ``nodes`` and ``2 * nodes`` points per
    half-axis; disagreement beyond ``tol`` is reported as non-convergence
    (and therefore failure) instead of a silent pass.
    """
    s = kernel.order
    coarse, coarse_abs = _moments(kernel, nodes, s)
    fine, fine_abs = _moments(kernel, 2 * nodes, s)
    converged = all(abs(coarse[k] - fine[k]) <= tol for k in fine) and all(
        abs(coarse_abs[k] - fine_abs[k]) <= tol * max(1.0, abs(fine_abs[k])) for k in fine_abs
    )
    mass = fine[(0,) * kernel.dim]
    vanish = [abs(v) for k, v in fine.items() if sum(k) >= 1]
    max_res = max(vanish) if vanish else 0.0
    return MomentReport(
        order=s,
        mass=mass,
        moments=fine,
        abs_moments=fine_abs,
        quadrature_converged=converged,
        normalized=abs(mass - 1.0) < tol,
        vanishing_moments=max_res < tol,
        finite_abs_moments=all(np.isfinite(v) for v in fine_abs.values()),
        max_vanishing_residual=max_res,
    )


@dataclass(frozen=True)
class Bandwidth:
    """Volume bandwidth ``h`` for sample size ``n``, kernel order ``s``, dimension ``d``.

    The admissibility flags are finite-n proxies for ``h -> 0``,
    ``n h -> inf`` and ``sqrt(n) h^(s/d) -> 0``: ``h < 1``, ``n h > 1`` and
    ``sqrt(n) h^(s/d) < 1``.
    """

    h: float
    n: int
    s: int = 2
    d: int = 2

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("bandwidth must be positive")

    @classmethod
    def default(cls, n: int, s: int = 2, d: int = 2) -> "Bandwidth":
        """``h = n^(-d/(2s)) / log n``, for which ``sqrt(n) h^(s/d) = (log n)^(-s/d)``."""
        return cls(n ** (-d / (2.0 * s)) / np.log(n), n, s, d)

    @property
    def axis_scale(self) -> float:
        return self.h ** (1.0 / self.d)

    @property
    def bias_factor(self) -> float:
        return float(np.sqrt(self.n) * self.h ** (self.s / self.d))

    def flags(self) -> dict:
        return {
            "h_small": self.h < 1.0,
            "nh_large": self.n * self.h > 1.0,
            "bias_negligible": self.bias_factor < 1.0,
        }

    @property
    def admissible(self) -> bool:
        return all(self.flags().values())

    def describe(self) -> dict:
        return {"h": self.h, "n": self.n, "s": self.s, "d": self.d, "axis_scale": self.axis_scale, **self.flags()}


def _check_inputs(kernel: Kernel, bandwidth: Bandwidth, d: int):
    if kernel.dim != d:
        raise ValueError(f"kernel dimension {kernel.dim} does not match data dimension {d}")
    if not bandwidth.admissible:
        warnings.warn(f"bandwidth h={bandwidth.h:g} is not admissible: {bandwidth.flags()}", stacklevel=3)
    if bandwidth.axis_scale * kernel.support_radius > 0.5:
        warnings.warn("kernel support exceeds half the cube; most points lose kernel mass at the boundary", stacklevel=3)


def kernel_mass(kernel: Kernel, bandwidth: Bandwidth, u) -> np.ndarray:
    """Kernel mass inside the cube, ``int_[0,1]^d h^-1 k((u - v)/b) dv``."""
    u = np.asarray(u, dtype=float)
    b = bandwidth.axis_scale
    return np.prod(kernel.cdf1(u / b) - kernel.cdf1((u - 1.0) / b), axis=-1)


def smoothed_copula(
    sample: Sample,
    kernel: Kernel,
    bandwidth: Bandwidth,
    u,
    method: str = "exact",
    nodes: int = 32,
) -> np.ndarray | float:
    """Kernel-smoothed empirical copula at ``u`` (shape ``(..., d)``).

    ``method="exact"`` integrates the step function ``C_n`` cell by cell:
    since ``C_n(v) = n^-1 sum_i prod_j 1{v_j > (R_ji - 1)/n}``, the integral
    factors into differences of the univariate kernel CDF. ``"quadrature"``
    uses a tensor Gauss-Legendre rule with ``nodes`` points per axis on the
    kernel support intersected with the cube.
    """
    u = np.asarray(u, dtype=float)
    _check_inputs(kernel, bandwidth, sample.d)
    if np.any((u < 0) | (u > 1)):
        raise ValueError("points must lie in the unit cube")
    flat = u.reshape(-1, sample.d)
    b = bandwidth.axis_scale
    if method == "exact":
        lower = (sample.ranks - 1.0) / sample.n  # (n, d)
        out = np.empty(flat.shape[0])
        step = max(1, (1 << 21) // (sample.n * sample.d))
        for a in range(0, flat.shape[0], step):
            blk = flat[a : a + step][:, None, :]
            per_axis = kernel.cdf1((blk - lower[None]) / b) - kernel.cdf1((blk - 1.0) / b)
            out[a : a + step] = np.mean(np.prod(per_axis, axis=-1), axis=-1)
    elif method == "quadrature":
        out = np.array([_quad_point(lambda v: empirical_copula(sample, v), kernel, b, p, nodes) for p in flat])
    else:
        raise ValueError(f"unknown method {method!r}")
    out = out.reshape(u.shape[:-1])
    return out[()] if out.ndim == 0 else out


def _quad_point(func, kernel: Kernel, b: float, p: np.ndarray, nodes: int) -> float:
    r = kernel.support_radius
    lo = np.maximum(-r, (p - 1.0) / b)
    hi = np.minimum(r, p / b)
    if np.any(hi <= lo):
        return 0.0
    w_nodes, weights = tensor_rule(lo, hi, nodes)
    v = np.clip(p - b * w_nodes, 0.0, 1.0)
    return float(np.sum(weights * kernel(w_nodes) * func(v)))


def smoothed_model_cdf(model, kernel: Kernel, bandwidth: Bandwidth, u, nodes: int = 32) -> np.ndarray:
    """The smoothing operator applied to the true copula (tensor quadrature)."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    b = bandwidth.axis_scale
    return np.array([_quad_point(model.cdf, kernel, b, p, nodes) for p in u])


def smoothed_process(sample: Sample, kernel: Kernel, bandwidth: Bandwidth, model, grid: Grid) -> ProcessEvaluation:
    """``sqrt(n) (C^_n(u) - C(u))`` on the grid."""
    vals = np.sqrt(sample.n) * (smoothed_copula(sample, kernel, bandwidth, grid.points) - model.cdf(grid.points))
    return ProcessEvaluation(grid, np.atleast_1d(vals), ProcessTag.SMOOTHED_AN, sample.n)


@dataclass
class SmoothingDecomposition:
    """Sup-norms over the evaluated points of the four error terms and of ``A^_n - A_n``.

    Pointwise, ``A^_n - A_n = t1 + t2 + t3 + t4`` with

    * ``t1``: smoothing of ``A_n(u - b w) - A_n(u)`` (kernel modulus),
    * ``t2``: ``A_n(u) (mass(u) - 1)``,
    * ``t3``: ``sqrt(n)`` times the smoothing bias of the true copula,
    * ``t4``: ``sqrt(n) C(u) (mass(u) - 1)``.
    """

    nabla1: float
    nabla2: float
    nabla3: float
    nabla4: float
    sup_diff: float
    terms: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "nabla1": self.nabla1,
            "nabla2": self.nabla2,
            "nabla3": self.nabla3,
            "nabla4": self.nabla4,
            "sup_smoothed_minus_empirical": self.sup_diff,
        }


def decompose_smoothing_error(
    sample: Sample,
    kernel: Kernel,
    bandwidth: Bandwidth,
    model,
    grid: Grid,
    mask=None,
    nodes: int = 32,
    true_smoothed=None,
) -> SmoothingDecomposition:
    """Split ``sup |A^_n - A_n|`` into its four terms on the grid (optionally masked).

    ``true_smoothed`` may carry precomputed :func:`smoothed_model_cdf`
    values at the grid points; they depend only on model, kernel and
    bandwidth, not on the sample.
    """
    pts = grid.points
    rn = np.sqrt(sample.n)
    c_true = model.cdf(pts)
    c_emp = empirical_copula_grid(sample, grid)
    mass = kernel_mass(kernel, bandwidth, pts)
    c_hat = np.atleast_1d(smoothed_copula(sample, kernel, bandwidth, pts))
    c_smooth = smoothed_model_cdf(model, kernel, bandwidth, pts, nodes) if true_smoothed is None else true_smoothed
    if not np.all(np.isfinite(c_hat)) or not np.all(np.isfinite(c_smooth)):
        raise NumericalError("non-finite smoothed values")
    t1 = rn * ((c_hat - c_emp * mass) - (c_smooth - c_true * mass))
    t2 = rn * (c_emp - c_true) * (mass - 1.0)
    t3 = rn * (c_smooth - c_true * mass)
    t4 = rn * c_true * (mass - 1.0)
    diff = rn * (c_hat - c_emp)
    terms = np.stack([t1, t2, t3, t4])
    sel = np.ones(len(pts), dtype=bool) if mask is None else np.asarray(mask)
    sups = np.max(np.abs(terms[:, sel]), axis=1)
    return SmoothingDecomposition(*map(float, sups), float(np.max(np.abs(diff[sel]))), terms)
