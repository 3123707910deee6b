"""Spearman- and Kendall-type functionals, rank-order statistics and the LIL constant."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .copulas import CopulaModel
from .errors import ConfigError
from .fields import bridge_covariance_matrix, kstar_variance_sup, partial_matrix
from .grid import Grid
from .quadrature import gauss_legendre, tensor_rule
from .sample import Sample


class ScoreKind(str, enum.Enum):
    SPEARMAN = "spearman"
    KENDALL = "kendall"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class ScoreFunction:
    """Polynomial score ``J(u, v, z) = sum c_abg u^a v^b z^g``.

    ``coefficients`` maps exponent triples ``(a, b, g)`` to coefficients.
    """

    kind: ScoreKind
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        coeffs = {}
        for key, c in dict(self.coefficients).items():
            a, b, g = (int(k) for k in key)
            if min(a, b, g) < 0:
                raise ConfigError("score exponents must be nonnegative integers")
            if not np.isfinite(c):
                raise ConfigError("score coefficients must be finite")
            if c != 0:
                coeffs[(a, b, g)] = coeffs.get((a, b, g), 0.0) + float(c)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "kind", ScoreKind(self.kind))

    @classmethod
    def spearman(cls) -> "ScoreFunction":
        return cls(ScoreKind.SPEARMAN, {(0, 0, 1): 12.0, (0, 0, 0): -3.0})

    @classmethod
    def kendall(cls) -> "ScoreFunction":
        return cls(ScoreKind.KENDALL, {(0, 0, 1): 4.0, (0, 0, 0): -1.0})

    @classmethod
    def custom(cls, coefficients: dict) -> "ScoreFunction":
        return cls(ScoreKind.CUSTOM, coefficients)

    @classmethod
    def from_name(cls, name: str, coefficients: dict | None = None) -> "ScoreFunction":
        name = name.lower()
        if name == "spearman":
            return cls.spearman()
        if name == "kendall":
            return cls.kendall()
        if name == "custom":
            if not coefficients:
                raise ConfigError("custom score needs a coefficient table")
            return cls.custom(coefficients)
        raise ConfigError(f"unknown score {name!r}")

    @property
    def z_degree(self) -> int:
        return max((g for (_, _, g) in self.coefficients), default=0)

    def __call__(self, u, v, z):
        u, v, z = (np.asarray(x, dtype=float) for x in (u, v, z))
        out = np.zeros(np.broadcast(u, v, z).shape)
        for (a, b, g), c in self.coefficients.items():
            out = out + c * u**a * v**b * z**g
        return out

    def z_derivative(self, u, v, z):
        u, v, z = (np.asarray(x, dtype=float) for x in (u, v, z))
        out = np.zeros(np.broadcast(u, v, z).shape)
        for (a, b, g), c in self.coefficients.items():
            if g > 0:
                out = out + c * g * u**a * v**b * z ** (g - 1)
        return out

    @property
    def z_derivative_bound(self) -> float:
        """``sup |dJ/dz|`` over the unit cube, from a 41^3 lattice."""
        x = np.linspace(0.0, 1.0, 41)
        u, v, z = np.meshgrid(x, x, x, indexing="ij")
        return float(np.max(np.abs(self.z_derivative(u, v, z))))

    def describe(self) -> dict:
        return {"kind": self.kind.value, "coefficients": {",".join(map(str, k)): c for k, c in self.coefficients.items()}}


def _require_bivariate(d: int) -> None:
    if d != 2:
        raise ConfigError(f"rank functionals are defined for d = 2, got d = {d}")


def _cell_integrals(n: int, max_power: int) -> np.ndarray:
    """``I[p, a-1] = integral of x^p over ((a-1)/n, a/n]`` for a = 1..n."""
    edges = np.arange(n + 1) / n
    p = np.arange(max_power + 1)[:, None]
    hi = edges[None, 1:] ** (p + 1)
    lo = edges[None, :-1] ** (p + 1)
    return (hi - lo) / (p + 1)


def _empirical_spearman(sample: Sample, score: ScoreFunction) -> float:
    n = sample.n
    r = sample.ranks
    if score.z_degree <= 1:
        # C_n is an average of indicators 1{u > (R1 - 1)/n} 1{v > (R2 - 1)/n}
        lo1 = (r[:, 0] - 1) / n
        lo2 = (r[:, 1] - 1) / n
        total = 0.0
        for (a, b, g), c in score.coefficients.items():
            if g == 0:
                total += c / ((a + 1) * (b + 1))
            else:
                total += c * np.mean((1 - lo1 ** (a + 1)) / (a + 1) * (1 - lo2 ** (b + 1)) / (b + 1))
        return float(total)
    # general polynomial in z: C_n is constant on each of the n^2 cells
    max_pow = max(max(a, b) for (a, b, _) in score.coefficients)
    cell = _cell_integrals(n, max_pow)
    order = np.argsort(r[:, 0])
    col_rank = r[order, 1]
    counts = np.zeros(n)
    total = 0.0
    for a in range(n):
        counts[col_rank[a] - 1 :] += 1.0
        z = counts / n
        for (pa, pb, g), c in score.coefficients.items():
            total += c * cell[pa, a] * np.dot(cell[pb], z**g)
    return float(total)


def _model_spearman(model: CopulaModel, score: ScoreFunction, nodes: int) -> float:
    pts, w = tensor_rule(np.zeros(2), np.ones(2), nodes)
    z = model.cdf(pts)
    return float(np.dot(w, score(pts[:, 0], pts[:, 1], z)))


def spearman_functional(copula, score: ScoreFunction | None = None, nodes: int = 64) -> float:
    """``S(C) = int int J(u, v, C(u, v)) du dv`` for a model or the empirical copula of a sample."""
    score = score or ScoreFunction.spearman()
    if isinstance(copula, CopulaModel):
        _require_bivariate(copula.dim)
        return _model_spearman(copula, score, nodes)
    if isinstance(copula, Sample):
        _require_bivariate(copula.d)
        return _empirical_spearman(copula, score)
    raise TypeError("expected a CopulaModel or a Sample")


def atom_counts(ranks: np.ndarray) -> np.ndarray:
    """``#{k : R_1k <= R_1i, R_2k <= R_2i}`` for each row ``i`` (itself included).

    Fenwick tree sweep in the first coordinate, ``O(n log n)``.
    """
    n = ranks.shape[0]
    order = np.argsort(ranks[:, 0])
    tree = np.zeros(n + 1, dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    for i in order:
        k = int(ranks[i, 1])
        j = k
        while j <= n:
            tree[j] += 1
            j += j & -j
        s = 0
        j = k
        while j > 0:
            s += tree[j]
            j -= j & -j
        out[i] = s
    return out


@dataclass(frozen=True)
class FunctionalEstimate:
    value: float
    stderr: float
    method: str

    def __float__(self) -> float:
        return self.value


def kendall_functional(copula, score: ScoreFunction | None = None, points: int = 2**14, randomizations: int = 8, seed=0):
    """``T(C) = int int J(u, v, C(u, v)) dC(u, v)``.

    For a sample the integral against ``dC_n`` is the average over the
    sample atoms ``(R_1i / n, R_2i / n)`` with ``z = C_n`` at the atom. For a
    model the copula measure is sampled by scrambled Sobol points pushed
    through the conditional inverse; ``randomizations`` independent
    scramblings give the standard error.
    """
    score = score or ScoreFunction.kendall()
    if isinstance(copula, Sample):
        _require_bivariate(copula.d)
        n = copula.n
        r = copula.ranks
        z = atom_counts(r) / n
        val = float(np.mean(score(r[:, 0] / n, r[:, 1] / n, z)))
        return FunctionalEstimate(val, 0.0, "atoms")
    if isinstance(copula, CopulaModel):
        _require_bivariate(copula.dim)
        ss = np.random.SeedSequence(seed)
        means = []
        for child in ss.spawn(randomizations):
            x = qmc.Sobol(2, scramble=True, seed=np.random.default_rng(child)).random(points)
            u = x[:, 0]
            v = copula.conditional_inverse(u, x[:, 1])
            pts = np.stack([u, v], axis=-1)
            means.append(np.mean(score(u, v, copula.cdf(pts))))
        means = np.asarray(means)
        se = float(np.std(means, ddof=1) / np.sqrt(len(means))) if len(means) > 1 else float("nan")
        return FunctionalEstimate(float(np.mean(means)), se, "sobol")
    raise TypeError("expected a CopulaModel or a Sample")


def _delta_variance(score: ScoreFunction, model: CopulaModel, nodes: int) -> float:
    pts, w = tensor_rule(np.zeros(2), np.ones(2), nodes)
    x = gauss_legendre(nodes)[0]
    m = len(pts)
    ones = np.ones(nodes)
    margins = np.vstack([np.stack([x, ones], axis=-1), np.stack([ones, x], axis=-1)])
    allpts = np.vstack([pts, margins])
    sigma = bridge_covariance_matrix(model, allpts)
    # tensor nodes run with the first coordinate slowest
    i0 = np.repeat(np.arange(nodes), nodes)
    i1 = np.tile(np.arange(nodes), nodes)
    grad = partial_matrix(model, pts)
    t = np.zeros((m, len(allpts)))
    rows = np.arange(m)
    t[rows, rows] = 1.0
    t[rows, m + i0] -= grad[:, 0]
    t[rows, m + nodes + i1] -= grad[:, 1]
    g = w * score.z_derivative(pts[:, 0], pts[:, 1], model.cdf(pts))
    a = g @ t
    return float(a @ sigma @ a)


def delta_method_width(score: ScoreFunction, model: CopulaModel, nodes: int = 32, extrapolate: bool = True) -> float:
    """Asymptotic sd of ``sqrt(n) (S(C_n) - S(C))``.

    Computes ``Var int int J_z(u, v, C(u, v)) K*(u, v, 1) du dv`` from the K*
    covariance on a tensor Gauss-Legendre rule. The bridge covariance is
    assembled on the nodes plus their margin points and pushed through the
    K* transform, so no sampling is involved. The covariance has a kink on
    the diagonal, which makes the rule converge like ``nodes^-2``; with
    ``extrapolate`` the rules at ``nodes / 2`` and ``nodes`` are combined by
    Richardson extrapolation.
    """
    _require_bivariate(model.dim)
    bound = score.z_derivative_bound
    if not np.isfinite(bound):
        raise ConfigError("score has an unbounded z-derivative")
    if bound == 0.0:
        return 0.0
    var = _delta_variance(score, model, nodes)
    if extrapolate:
        coarse = _delta_variance(score, model, max(2, nodes // 2))
        ratio = (nodes / max(2, nodes // 2)) ** 2
        var = (ratio * var - coarse) / (ratio - 1)
    return float(np.sqrt(max(var, 0.0)))


def rank_statistic(sample: Sample, score) -> float:
    """``n^-1 sum_i J(R_1i / n, ..., R_di / n)`` for a callable ``J`` on ``(n, d)`` arrays."""
    u = sample.ranks / sample.n
    vals = np.asarray(score(u), dtype=float)
    if vals.shape != (sample.n,):
        raise ValueError("score must return one value per row")
    if not np.all(np.isfinite(vals)):
        raise ValueError("score is not finite on the sample")
    return float(np.mean(vals))


def lil_rho(model: CopulaModel, grid: Grid | None = None) -> float:
    """``rho = sqrt(sup_u Var K*(u, 1))``; a 21-point regular grid by default."""
    grid = grid or Grid.regular(21, model.dim)
    val, _ = kstar_variance_sup(model, grid)
    rho = float(np.sqrt(max(val, 0.0)))
    if not 0.0 < rho <= 0.5:
        warnings.warn(f"rho = {rho:.6g} falls outside (0, 1/2]", RuntimeWarning, stacklevel=2)
    return rho
