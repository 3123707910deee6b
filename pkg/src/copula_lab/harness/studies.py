"""Monte Carlo studies built on the estimators and Gaussian fields."""

from __future__ import annotations

import hashlib
import time
import warnings

import numpy as np
from scipy import stats

from .. import __version__
from ..empirical import copula_process, empirical_copula_grid
from ..errors import ConfigError
from ..fields import build_factor, sample_kstar
from ..grid import Grid
from ..rankstats import ScoreFunction, delta_method_width, kendall_functional, lil_rho, spearman_functional
from ..smoothing import Bandwidth, Kernel, decompose_smoothing_error, smoothed_model_cdf, verify_order
from .config import StudyConfig, StudyKind
from .parallel import replicate_rng, replicate_seed, run_tasks, worker_count
from .result import StudyResult, median_mad

FIELD_STREAM = 2**31 - 1
BOOT_STREAM = 2**31 - 2
QUANTILES = (0.5, 0.9, 0.95, 0.99)


def two_sample_ks(a, b) -> float:
    """Exact two-sample Kolmogorov-Smirnov statistic ``sup_x |F_a(x) - F_b(x)|``.

    Both ECDFs are evaluated at every point of the merged sorted sample,
    which is where the supremum is attained.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("two_sample_ks needs two nonempty samples")
    if np.isnan(a).any() or np.isnan(b).any():
        raise ValueError("samples contain NaN")
    merged = np.concatenate([a, b])
    fa = np.searchsorted(a, merged, side="right") / a.size
    fb = np.searchsorted(b, merged, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def _loglog_slope(ns, medians) -> float:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(medians, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _finish(config: StudyConfig, records, summary, warn, started, threads) -> StudyResult:
    model = config.model()
    summary["smooth_on_closed_cube"] = model.smooth_on_closed_cube
    if not model.smooth_on_closed_cube:
        warn = [*warn, f"{model.family.value}: second partial derivatives are unbounded near cube corners; "
                "the smoothness assumption behind the Gaussian approximation does not hold"]
    meta = {"version": __version__, "wall_time": time.perf_counter() - started, "threads": threads}
    return StudyResult(config.kind.value, config.to_dict(), records, summary, sorted(set(warn)), meta)


def _check_kind(config: StudyConfig, kind: StudyKind) -> None:
    if config.kind is not kind:
        raise ConfigError(f"config is for a {config.kind.value} study, not {kind.value}")


def run_convergence(config: StudyConfig, threads: int | None = None) -> StudyResult:
    """Median ``sup_grid |C_n - C|`` along the ladder and its log-log slope."""
    _check_kind(config, StudyKind.CONVERGENCE)
    started = time.perf_counter()
    model = config.model()
    grid = Grid.regular(config.grid, config.dim)
    c_true = model.cdf(grid.points)

    def one(key):
        i, r = key
        n = config.n_ladder[i]
        sample = model.sample(n, seed=replicate_seed(config.seed, i, r))
        sup = float(np.max(np.abs(empirical_copula_grid(sample, grid) - c_true)))
        return {"n": n, "replicate": r, "sup_deviation": sup}

    keys = [(i, r) for i in range(len(config.n_ladder)) for r in range(config.replicates)]
    nthreads = worker_count(threads)
    records = run_tasks(one, keys, nthreads)
    table = np.array([rec["sup_deviation"] for rec in records]).reshape(len(config.n_ladder), config.replicates)
    per_n = [{"n": n, **median_mad(table[i])} for i, n in enumerate(config.n_ladder)]
    summary = {"per_n": per_n, "statistic": "sup_grid |C_n - C|"}
    warn = []
    if len(config.n_ladder) < 2:
        summary["slope"] = None
        warn.append("slope not fitted: the ladder has a single sample size")
    else:
        slope = _loglog_slope(config.n_ladder, np.median(table, axis=1))
        if config.replicates > 1:
            rng = replicate_rng(config.seed, BOOT_STREAM)
            boots = []
            for _ in range(200):
                idx = rng.integers(0, config.replicates, size=table.shape)
                boots.append(_loglog_slope(config.n_ladder, np.median(np.take_along_axis(table, idx, axis=1), axis=1)))
            se = float(np.std(boots, ddof=1))
        else:
            se = None
            warn.append("slope standard error not available with one replicate")
        summary["slope"] = {"estimate": slope, "bootstrap_se": se, "target": -0.5}
    return _finish(config, records, summary, warn, started, nthreads)


def run_distribution_comparison(config: StudyConfig, threads: int | None = None) -> StudyResult:
    """Compare ``sup_grid |A_n|`` with ``sup_grid |K*(., 1)|`` by two-sample KS distances.

    The field draws of meta-replicate ``k`` are shared by every ``n`` of the
    ladder, so the KS trend along ``n`` is measured with common random
    numbers on the Gaussian side.
    """
    _check_kind(config, StudyKind.DISTRIBUTION)
    started = time.perf_counter()
    model = config.model()
    grid = Grid.regular(config.grid, config.dim, include_margin_points=True)
    factor = build_factor(model, grid)
    nthreads = worker_count(threads)

    def field_sups(k):
        s = sample_kstar(model, grid, 1, seed=replicate_seed(config.seed, FIELD_STREAM, k), reps=config.draws, factor=factor)
        return np.max(np.abs(s.values), axis=1)

    def one(key):
        k, i, r = key
        n = config.n_ladder[i]
        sample = model.sample(n, seed=replicate_seed(config.seed, i, r, k))
        sup = float(np.max(np.abs(copula_process(sample, model, grid).values)))
        return {"meta": k, "n": n, "replicate": r, "sup_an": sup}

    metas = range(config.meta_replicates)
    fields = run_tasks(field_sups, metas, nthreads)
    keys = [(k, i, r) for k in metas for i in range(len(config.n_ladder)) for r in range(config.replicates)]
    records = run_tasks(one, keys, nthreads)
    sups = np.array([rec["sup_an"] for rec in records]).reshape(
        config.meta_replicates, len(config.n_ladder), config.replicates
    )
    per_n = []
    for i, n in enumerate(config.n_ladder):
        ks = [two_sample_ks(sups[k, i], fields[k]) for k in metas]
        entry = {
            "n": n,
            "ks": median_mad(ks),
            "ks_values": ks,
            "sup_an_quantiles": dict(zip(map(str, QUANTILES), np.quantile(sups[0, i], QUANTILES))),
        }
        if config.calibration_bound is not None:
            entry["below_calibration_bound"] = entry["ks"]["median"] < config.calibration_bound
        per_n.append(entry)
    medians = [e["ks"]["median"] for e in per_n]
    summary = {
        "per_n": per_n,
        "field_quantiles": dict(zip(map(str, QUANTILES), np.quantile(fields[0], QUANTILES))),
        "field_sup_median": median_mad(np.concatenate(fields)),
        "ks_median_non_increasing": all(b <= a for a, b in zip(medians, medians[1:])),
        "calibration_bound": config.calibration_bound,
        "calibration_note": "finite-n bound from a calibration run, not an asymptotic guarantee",
        "jitter": factor.jitter,
    }
    return _finish(config, records, summary, [], started, nthreads)


def _prefix_hash(data: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(data).tobytes()).hexdigest()


def run_lil(config: StudyConfig, threads: int | None = None) -> StudyResult:
    """Running ratio ``(n / (2 log log n))^(1/2) sup_grid |C_n - C|`` along one growing path per replicate."""
    _check_kind(config, StudyKind.LIL)
    started = time.perf_counter()
    model = config.model()
    grids = {"grid": Grid.regular(config.grid, config.dim)}
    if config.grid_refine:
        grids["grid_refine"] = Grid.regular(config.grid_refine, config.dim)
    truth = {k: model.cdf(g.points) for k, g in grids.items()}
    rho = lil_rho(model, grids["grid"])
    nthreads = worker_count(threads)
    ladder = config.n_ladder

    def one(r):
        full = model.sample(ladder[-1], seed=replicate_seed(config.seed, 0, r))
        out = []
        prev_hash = None
        prefix_ok = True
        for i, n in enumerate(ladder):
            sample = full.head(n)
            if i > 0:
                prefix_ok &= _prefix_hash(sample.data[: ladder[i - 1]]) == prev_hash
            prev_hash = _prefix_hash(sample.data)
            scale = np.sqrt(n / (2.0 * np.log(np.log(n))))
            rec = {"n": n, "replicate": r, "prefix_hash": prev_hash[:16]}
            for key, g in grids.items():
                rec["ratio" if key == "grid" else "ratio_refine"] = float(
                    scale * np.max(np.abs(empirical_copula_grid(sample, g) - truth[key]))
                )
            out.append(rec)
        return out, prefix_ok

    results = run_tasks(one, range(config.replicates), nthreads)
    records = [rec for recs, _ in results for rec in recs]
    prefix_ok = all(ok for _, ok in results)
    ratios = np.array([rec["ratio"] for rec in records]).reshape(config.replicates, len(ladder))
    max_ratio = ratios.max(axis=1)
    inside = (max_ratio >= 0.5 * rho) & (max_ratio <= 2.0 * rho)
    summary = {
        "rho": rho,
        "max_ratio": median_mad(max_ratio),
        "max_ratio_values": max_ratio,
        "corridor": [0.5 * rho, 2.0 * rho],
        "fraction_in_corridor": float(np.mean(inside)),
        "all_finite_positive": bool(np.all(np.isfinite(ratios)) and np.all(ratios > 0)),
        "prefix_extension_verified": prefix_ok,
        "per_n": [{"n": n, **median_mad(ratios[:, i])} for i, n in enumerate(ladder)],
        "calibration_note": "corridor is a desk-scale regression bound; the almost-sure limsup is not reachable",
    }
    if config.grid_refine:
        fine = np.array([rec["ratio_refine"] for rec in records]).reshape(config.replicates, len(ladder))
        summary["max_ratio_refine_values"] = fine.max(axis=1)
        summary["refine_not_smaller"] = bool(np.all(fine.max(axis=1) >= max_ratio - 1e-12))
    return _finish(config, records, summary, [], started, nthreads)


TERMS = ("sup_diff", "nabla1", "nabla2", "nabla3", "nabla4")


def _trend(medians) -> str:
    m = np.asarray(medians, dtype=float)
    if np.all(m <= 1e-12):
        return "vanishing"
    if np.all(np.diff(m) < 0):
        return "decreasing"
    return "not_decreasing"


def smoothing_kernel(config: StudyConfig) -> Kernel:
    kernel = Kernel.from_name(config.kernel, config.order, config.dim)
    report = verify_order(kernel)
    if not report.passed:
        raise ConfigError(f"kernel fails the order check: {report.as_dict()}")
    return kernel


def run_smoothing(config: StudyConfig, threads: int | None = None) -> StudyResult:
    """Medians of ``sup |A^_n - A_n|`` and of its four terms along the ladder.

    Evaluation uses the trimmed grid ``[trim, 1 - trim]^d``: at the faces of
    the cube the kernel loses mass and ``A^_n - A_n`` does not vanish.
    """
    _check_kind(config, StudyKind.SMOOTHING)
    started = time.perf_counter()
    model = config.model()
    kernel = smoothing_kernel(config)
    axis = np.linspace(config.trim, 1.0 - config.trim, config.grid)
    grid = Grid(tuple(axis for _ in range(config.dim)))
    nthreads = worker_count(threads)
    warn = []
    bws = []
    for n in config.n_ladder:
        if config.bandwidth is None:
            bw = Bandwidth.default(n, s=config.order, d=config.dim)
        else:
            bw = Bandwidth(config.bandwidth, n, s=config.order, d=config.dim)
        if not bw.admissible:
            failed = [k for k, ok in bw.flags().items() if not ok]
            warn.append(f"n={n}: bandwidth h={bw.h:.6g} is not admissible ({', '.join(failed)})")
        if bw.axis_scale * kernel.support_radius > config.trim:
            warn.append(f"n={n}: kernel support reaches outside the trimmed grid")
        bws.append(bw)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        smoothed_truth = [smoothed_model_cdf(model, kernel, bw, grid.points) for bw in bws]

        def one(key):
            i, r = key
            n = config.n_ladder[i]
            sample = model.sample(n, seed=replicate_seed(config.seed, i, r))
            dec = decompose_smoothing_error(sample, kernel, bws[i], model, grid, true_smoothed=smoothed_truth[i])
            return {
                "n": n,
                "replicate": r,
                "h": bws[i].h,
                "sup_diff": dec.sup_diff,
                "nabla1": dec.nabla1,
                "nabla2": dec.nabla2,
                "nabla3": dec.nabla3,
                "nabla4": dec.nabla4,
            }

        keys = [(i, r) for i in range(len(config.n_ladder)) for r in range(config.replicates)]
        records = run_tasks(one, keys, nthreads)
    per_n = []
    for i, (n, bw) in enumerate(zip(config.n_ladder, bws)):
        rows = records[i * config.replicates : (i + 1) * config.replicates]
        per_n.append({"n": n, "h": bw.h, **{t: median_mad([row[t] for row in rows]) for t in TERMS}})
    trends = {t: _trend([e[t]["median"] for e in per_n]) for t in TERMS}
    summary = {
        "per_n": per_n,
        "trends": trends,
        "passed": all(v in ("decreasing", "vanishing") for v in trends.values()),
        "kernel": kernel.describe(),
        "trim": config.trim,
    }
    return _finish(config, records, summary, warn, started, nthreads)


def run_rank_normality(config: StudyConfig, threads: int | None = None) -> StudyResult:
    """Standardized rank statistics along the ladder with an Anderson-Darling normality check."""
    _check_kind(config, StudyKind.RANK_NORMALITY)
    started = time.perf_counter()
    model = config.model()
    nthreads = worker_count(threads)
    if config.statistic == "spearman":
        target = spearman_functional(model)
        width = delta_method_width(ScoreFunction.spearman(), model)
    else:
        target = kendall_functional(model).value
        width = None

    def one(key):
        i, r = key
        n = config.n_ladder[i]
        sample = model.sample(n, seed=replicate_seed(config.seed, i, r))
        if config.statistic == "spearman":
            val = spearman_functional(sample)
        else:
            val = kendall_functional(sample).value
        return {"n": n, "replicate": r, "statistic": val, "scaled": float(np.sqrt(n) * (val - target))}

    keys = [(i, r) for i in range(len(config.n_ladder)) for r in range(config.replicates)]
    records = run_tasks(one, keys, nthreads)
    per_n = []
    warn = []
    for i, n in enumerate(config.n_ladder):
        x = np.array([rec["scaled"] for rec in records[i * config.replicates : (i + 1) * config.replicates]])
        entry = {"n": n, "scaled": median_mad(x), "sd": float(np.std(x, ddof=1)) if x.size > 1 else None}
        if x.size >= 8:
            ad = stats.anderson(x, dist="norm")
            crit = float(ad.critical_values[list(ad.significance_level).index(5.0)])
            entry["anderson_darling"] = {"statistic": float(ad.statistic), "critical_5pct": crit}
            entry["normal_at_5pct"] = bool(ad.statistic < crit)
        else:
            warn.append(f"n={n}: too few replicates for the normality test")
        if width is not None and entry["sd"] is not None:
            entry["sd_over_delta_width"] = entry["sd"] / width
        per_n.append(entry)
    summary = {"target": target, "delta_width": width, "per_n": per_n, "statistic": config.statistic}
    return _finish(config, records, summary, warn, started, nthreads)


RUNNERS = {
    StudyKind.CONVERGENCE: run_convergence,
    StudyKind.DISTRIBUTION: run_distribution_comparison,
    StudyKind.LIL: run_lil,
    StudyKind.SMOOTHING: run_smoothing,
    StudyKind.RANK_NORMALITY: run_rank_normality,
}


def run_study(config: StudyConfig, threads: int | None = None) -> StudyResult:
    return RUNNERS[config.kind](config, threads)
