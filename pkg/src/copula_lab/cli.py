"""Command line interface: ``copula-lab <command> ...``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .copulas import CopulaModel
from .empirical import copula_process, empirical_copula_grid
from .errors import ConfigError, NumericalError, TiesError
from .fields import build_factor, sample_bridge, sample_kiefer, sample_kstar
from .grid import Grid
from .harness import StudyConfig, emit_report, run_study
from .harness.result import plain
from .rankstats import ScoreFunction, kendall_functional, spearman_functional
from .sample import Sample
from .smoothing import Bandwidth, Kernel, decompose_smoothing_error, smoothed_copula, verify_order

logger = logging.getLogger("copula_lab")

STUDY_HELP = """study config keys (INI sections):
  [study]          kind (convergence|distribution|lil|smoothing|rank_normality), seed,
                   n_ladder (comma separated, increasing), replicates, grid
  [model]          family, theta, dim
  [distribution]   field_draws, meta_replicates, calibration_bound
  [lil]            grid_refine
  [smoothing]      kernel, order, bandwidth (default or a number), trim
  [rank_normality] statistic (spearman|kendall)
  [output]         formats (json, csv, svg)
"""


def _read_matrix(path: str) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ConfigError(f"{path} is empty")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]  # header line
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.shape[0] == 0:
        raise ConfigError(f"{path}: expected a rectangular table of numbers")
    return data


def _load_sample(args) -> Sample:
    data = _read_matrix(args.input)
    return Sample.from_array(data, tie_policy=args.ties, seed=args.jitter_seed)


def _model(args, dim: int | None = None) -> CopulaModel:
    return CopulaModel.create(args.copula, args.theta, dim if dim is not None else args.dim)


def _emit_json(obj, out: str | None) -> None:
    text = json.dumps(plain(obj), indent=2, sort_keys=True) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def _open_out(out: str | None):
    if out in (None, "-"):
        return sys.stdout, False
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    return open(out, "w", newline="", encoding="utf-8"), True


def cmd_simulate(args) -> int:
    model = _model(args)
    sample = model.sample(args.n, seed=args.seed)
    fh, close = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"u{j + 1}" for j in range(model.dim)])
        for row in sample.data:
            writer.writerow([repr(float(x)) for x in row])
    finally:
        if close:
            fh.close()
    return 0


def cmd_estimate(args) -> int:
    sample = _load_sample(args)
    grid = Grid.regular(args.grid, sample.d)
    out = {
        "n": sample.n,
        "d": sample.d,
        "grid": grid.describe(),
        "points": grid.points.tolist(),
        "empirical_copula": empirical_copula_grid(sample, grid).tolist(),
    }
    if args.copula:
        model = _model(args, sample.d)
        proc = copula_process(sample, model, grid)
        out["model"] = model.describe()
        out["A_n"] = proc.values.tolist()
        out["sup_abs_A_n"] = proc.sup()
        out["sup_abs_deviation"] = proc.sup() / np.sqrt(sample.n)
    _emit_json(out, args.out)
    return 0


def cmd_smooth(args) -> int:
    sample = _load_sample(args)
    kernel = Kernel.from_name(args.kernel, args.order, sample.d)
    report = verify_order(kernel)
    if not report.passed:
        raise ConfigError(f"kernel fails the order check: {report.as_dict()}")
    if args.h == "default":
        bw = Bandwidth.default(sample.n, s=args.order, d=sample.d)
    else:
        try:
            bw = Bandwidth(float(args.h), sample.n, s=args.order, d=sample.d)
        except ValueError as exc:
            raise ConfigError(f"--h: {exc}") from None
    grid = Grid.regular(args.grid, sample.d)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        values = np.atleast_1d(smoothed_copula(sample, kernel, bw, grid.points))
        out = {
            "n": sample.n,
            "kernel": kernel.describe(),
            "moment_report": report.as_dict(),
            "bandwidth": bw.describe(),
            "points": grid.points.tolist(),
            "smoothed_copula": values.tolist(),
        }
        if args.copula:
            model = _model(args, sample.d)
            if not 0.0 <= args.trim < 0.5:
                raise ConfigError("--trim must lie in [0, 0.5)")
            dec = decompose_smoothing_error(sample, kernel, bw, model, grid, mask=grid.interior_mask(args.trim))
            out["trim"] = args.trim
            out["model"] = model.describe()
            out["terms"] = dec.as_dict()
    out["warnings"] = sorted({str(w.message) for w in caught})
    _emit_json(out, args.out)
    return 0


def cmd_field(args) -> int:
    model = _model(args)
    grid = Grid.regular(args.grid, model.dim, include_margin_points=args.process == "kstar")
    factor = build_factor(model, grid)
    if args.process == "bridge":
        fs = sample_bridge(factor, seed=args.seed, reps=args.reps)
    elif args.process == "kiefer":
        fs = sample_kiefer(factor, args.time, seed=args.seed, reps=args.reps)[-1]
    else:
        fs = sample_kstar(model, grid, args.time, seed=args.seed, reps=args.reps, factor=factor)
    fh, close = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["replicate", *[f"u{j + 1}" for j in range(model.dim)], "value"])
        pts = grid.points
        for r in range(fs.reps):
            for p, v in zip(pts, fs.values[r]):
                writer.writerow([r, *[repr(float(x)) for x in p], repr(float(v))])
    finally:
        if close:
            fh.close()
    logger.info("field: %d points, jitter %.0e", len(grid), factor.jitter)
    return 0


def _custom_score(path: str | None) -> ScoreFunction:
    """Coefficient table from a ``[score]`` section with keys ``a,b,g`` (powers of u, v, z)."""
    if not path:
        raise ConfigError("--stat custom needs --config with a [score] section")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read score table {path}: {exc}") from None
    if not parser.has_section("score"):
        raise ConfigError(f"{path} has no [score] section")
    coeffs = {}
    for key, raw in parser["score"].items():
        try:
            powers = tuple(int(x) for x in key.replace(" ", "").split(","))
            coeffs[powers] = float(raw)
        except ValueError:
            raise ConfigError(f"bad score entry {key} = {raw}") from None
        if len(powers) != 3:
            raise ConfigError(f"score key {key!r} needs three powers a,b,g")
    return ScoreFunction.custom(coeffs)


def cmd_rankstat(args) -> int:
    sample = _load_sample(args)
    if sample.d != 2:
        raise ConfigError("rank statistics need two columns")
    if args.stat == "custom":
        score = _custom_score(args.config)
        value = spearman_functional(sample, score)
        functional = "spearman_type"
    elif args.stat == "spearman":
        score = ScoreFunction.spearman()
        value = spearman_functional(sample, score)
        functional = "spearman_type"
    else:
        score = ScoreFunction.kendall()
        value = kendall_functional(sample, score).value
        functional = "kendall_type"
    _emit_json({"n": sample.n, "stat": args.stat, "functional": functional, "score": score.describe(), "value": value}, args.out)
    return 0


def cmd_study(args) -> int:
    config = StudyConfig.from_file(args.config)
    formats = config.formats
    if args.format:
        formats = tuple(f.strip().lower() for f in args.format.split(",") if f.strip())
        StudyConfig.from_dict({**config.to_dict(), "formats": list(formats)})
    result = run_study(config, threads=args.threads)
    written = [str(emit_report(result, fmt, args.out)) for fmt in formats]
    for path in written:
        print(path)
    return 0


def _add_input(p) -> None:
    p.add_argument("--input", required=True, help="CSV of observations, one row per observation")
    p.add_argument("--ties", choices=("reject", "jitter"), default="reject", help="tie policy (default: reject)")
    p.add_argument("--jitter-seed", type=int, default=0, help="seed for the tie-breaking jitter")


def _add_model(p, required: bool) -> None:
    p.add_argument("--copula", required=required, help="independence, clayton, gumbel, frank, gaussian or fgm")
    p.add_argument("--theta", type=float, default=None, help="family parameter")
    p.add_argument("--dim", type=int, default=2, help="dimension (default 2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="copula-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a pseudo-uniform sample from a copula")
    _add_model(p, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="empirical copula (and A_n when a model is given) on a grid")
    _add_input(p)
    _add_model(p, required=False)
    p.add_argument("--grid", type=int, default=21, help="points per axis")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("smooth", help="kernel-smoothed empirical copula on a grid")
    _add_input(p)
    _add_model(p, required=False)
    p.add_argument("--kernel", default="epanechnikov", help="epanechnikov, quartic, gaussian or polynomial")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--h", default="default", help="bandwidth h, or 'default' for n^(-d/2s) / log n")
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--trim", type=float, default=0.0, help="error terms use points in [trim, 1 - trim]^d")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("field", help="simulate the bridge, Kiefer or K* field on a grid")
    _add_model(p, required=True)
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--process", choices=("bridge", "kiefer", "kstar"), default="kstar")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--time", type=int, default=1, help="integer time index (kiefer, kstar)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("rankstat", help="Spearman- or Kendall-type rank functional of a bivariate sample")
    _add_input(p)
    p.add_argument("--stat", choices=("spearman", "kendall", "custom"), default="spearman")
    p.add_argument("--config", help="INI file with a [score] table 'a,b,g = coefficient' for --stat custom")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_rankstat)

    p = sub.add_parser(
        "study", help="run a Monte Carlo study", epilog=STUDY_HELP, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", help="comma separated subset of json,csv,svg (overrides the config)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: COPULA_LAB_THREADS or CPU count)")
    p.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, TiesError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
