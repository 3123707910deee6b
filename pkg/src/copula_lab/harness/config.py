"""Study configuration files.

A study file is INI-style with a ``[study]`` section, a ``[model]`` section
and optional per-kind sections::

    [study]
    kind = convergence          ; convergence | distribution | lil | smoothing | rank_normality
    seed = 42
    n_ladder = 100, 400, 1600, 6400
    replicates = 200
    grid = 21

    [model]
    family = independence
    theta =                     ; empty for the independence copula
    dim = 2

    [distribution]
    field_draws = 500           ; defaults to replicates
    meta_replicates = 1
    calibration_bound = 0.12

    [lil]
    grid_refine = 41            ; optional finer grid for the sup

    [smoothing]
    kernel = epanechnikov       ; epanechnikov | quartic | gaussian | polynomial
    order = 2
    bandwidth = default         ; default, or a fixed h
    trim = 0.1

    [rank_normality]
    statistic = spearman        ; spearman | kendall

    [output]
    formats = json, csv, svg
"""

from __future__ import annotations

import configparser
import enum
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..copulas import CopulaModel
from ..errors import ConfigError


class StudyKind(str, enum.Enum):
    CONVERGENCE = "convergence"
    DISTRIBUTION = "distribution"
    LIL = "lil"
    SMOOTHING = "smoothing"
    RANK_NORMALITY = "rank_normality"


FORMATS = ("json", "csv", "svg")


@dataclass(frozen=True)
class StudyConfig:
    kind: StudyKind
    seed: int
    n_ladder: tuple
    replicates: int
    family: str = "independence"
    theta: float | None = None
    dim: int = 2
    grid: int = 21
    field_draws: int | None = None
    meta_replicates: int = 1
    calibration_bound: float | None = None
    grid_refine: int | None = None
    kernel: str = "epanechnikov"
    order: int = 2
    bandwidth: float | None = None  # None selects the default sequence
    trim: float = 0.1
    statistic: str = "spearman"
    formats: tuple = ("json",)

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", StudyKind(self.kind))
        except ValueError:
            raise ConfigError(f"unknown study kind {self.kind!r}") from None
        object.__setattr__(self, "n_ladder", tuple(int(n) for n in self.n_ladder))
        object.__setattr__(self, "formats", tuple(self.formats))
        self.validate()

    def validate(self) -> None:
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if not self.n_ladder:
            raise ConfigError("n_ladder must not be empty")
        if any(n < 1 for n in self.n_ladder):
            raise ConfigError("sample sizes must be positive")
        if any(b <= a for a, b in zip(self.n_ladder, self.n_ladder[1:])):
            raise ConfigError("n_ladder must be strictly increasing")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if self.grid < 2:
            raise ConfigError("grid needs at least 2 points per axis")
        if self.field_draws is not None and self.field_draws < 1:
            raise ConfigError("field_draws must be at least 1")
        if self.meta_replicates < 1:
            raise ConfigError("meta_replicates must be at least 1")
        if self.grid_refine is not None and self.grid_refine < 2:
            raise ConfigError("grid_refine needs at least 2 points per axis")
        if self.bandwidth is not None and not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ConfigError("bandwidth must be positive")
        if not 0.0 <= self.trim < 0.5:
            raise ConfigError("trim must lie in [0, 0.5)")
        if self.statistic not in ("spearman", "kendall"):
            raise ConfigError(f"unknown statistic {self.statistic!r}")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ConfigError(f"unknown output formats {bad}")
        if self.kind is StudyKind.LIL and min(self.n_ladder) < 3:
            raise ConfigError("LIL ladder needs n >= 3 so that log log n is defined")
        if self.kind is StudyKind.RANK_NORMALITY and self.dim != 2:
            raise ConfigError("rank_normality studies need dim = 2")
        self.model()  # parameter validation

    def model(self) -> CopulaModel:
        return CopulaModel.create(self.family, self.theta, self.dim)

    @property
    def draws(self) -> int:
        return self.field_draws if self.field_draws is not None else self.replicates

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        d["n_ladder"] = list(self.n_ladder)
        d["formats"] = list(self.formats)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StudyConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "StudyConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        return cls.from_parser(parser)

    @classmethod
    def from_string(cls, text: str) -> "StudyConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        return cls.from_parser(parser)

    @classmethod
    def from_parser(cls, parser: configparser.ConfigParser) -> "StudyConfig":
        allowed = {
            "study": {"kind", "seed", "n_ladder", "replicates", "grid"},
            "model": {"family", "theta", "dim"},
            "distribution": {"field_draws", "meta_replicates", "calibration_bound"},
            "lil": {"grid_refine"},
            "smoothing": {"kernel", "order", "bandwidth", "trim"},
            "rank_normality": {"statistic"},
            "output": {"formats"},
        }
        for sec in parser.sections():
            if sec not in allowed:
                raise ConfigError(f"unknown section [{sec}]")
            extra = set(parser[sec]) - allowed[sec]
            if extra:
                raise ConfigError(f"unknown keys in [{sec}]: {sorted(extra)}")
        if not parser.has_section("study"):
            raise ConfigError("missing [study] section")
        st = parser["study"]
        for key in ("kind", "seed", "n_ladder", "replicates"):
            if not st.get(key, "").strip():
                raise ConfigError(f"[study] needs {key!r}")

        def get(sec, key, conv, default=None):
            if not parser.has_section(sec):
                return default
            raw = parser[sec].get(key, "").strip()
            if raw == "":
                return default
            try:
                return conv(raw)
            except ValueError:
                raise ConfigError(f"[{sec}] {key} = {raw!r} is not valid") from None

        def ints(raw):
            return tuple(int(x) for x in raw.replace(",", " ").split())

        def bandwidth(raw):
            return None if raw.lower() == "default" else float(raw)

        kw = dict(
            kind=st["kind"].strip().lower(),
            seed=get("study", "seed", int),
            n_ladder=get("study", "n_ladder", ints),
            replicates=get("study", "replicates", int),
            grid=get("study", "grid", int, 21),
            family=get("model", "family", str.lower, "independence"),
            theta=get("model", "theta", float),
            dim=get("model", "dim", int, 2),
            field_draws=get("distribution", "field_draws", int),
            meta_replicates=get("distribution", "meta_replicates", int, 1),
            calibration_bound=get("distribution", "calibration_bound", float),
            grid_refine=get("lil", "grid_refine", int),
            kernel=get("smoothing", "kernel", str.lower, "epanechnikov"),
            order=get("smoothing", "order", int, 2),
            bandwidth=get("smoothing", "bandwidth", bandwidth),
            trim=get("smoothing", "trim", float, 0.1),
            statistic=get("rank_normality", "statistic", str.lower, "spearman"),
            formats=get("output", "formats", lambda r: tuple(x.strip().lower() for x in r.split(",") if x.strip()), ("json",)),
        )
        return cls(**kw)


def load_config(path: str | Path) -> StudyConfig:
    return StudyConfig.from_file(path)
