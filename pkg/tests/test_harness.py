import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from copula_lab.errors import ConfigError
from copula_lab.harness import (
    StudyConfig,
    StudyKind,
    StudyResult,
    emit_report,
    render_svg,
    replicate_seed,
    run_convergence,
    run_distribution_comparison,
    run_lil,
    run_rank_normality,
    run_smoothing,
    run_study,
    run_tasks,
    two_sample_ks,
    worker_count,
)
from copula_lab.harness import studies
from copula_lab.harness.report import records_csv
from copula_lab.harness.result import plain
from copula_lab.smoothing import Kernel

from oracles import ks_two_sample

BASIC = """
[study]
kind = convergence
seed = 7
n_ladder = 50, 200
replicates = 4
grid = 6

[model]
family = clayton
theta = 2
"""


def small(kind, **kw):
    base = dict(kind=kind, seed=11, n_ladder=(60, 240), replicates=6, grid=6)
    base.update(kw)
    return StudyConfig(**base)


# -- configuration ------------------------------------------------------------


def test_config_from_string():
    cfg = StudyConfig.from_string(BASIC)
    assert cfg.kind is StudyKind.CONVERGENCE
    assert cfg.n_ladder == (50, 200)
    assert cfg.family == "clayton" and cfg.theta == 2.0 and cfg.dim == 2
    assert cfg.formats == ("json",)
    assert cfg.draws == cfg.replicates


def test_config_round_trip_dict_and_file(tmp_path):
    cfg = StudyConfig.from_string(BASIC + "\n[smoothing]\nbandwidth = 0.05\n[output]\nformats = json, svg\n")
    assert cfg.bandwidth == 0.05 and cfg.formats == ("json", "svg")
    assert StudyConfig.from_dict(cfg.to_dict()) == cfg
    path = tmp_path / "study.ini"
    path.write_text(BASIC)
    assert StudyConfig.from_file(path) == StudyConfig.from_string(BASIC)


@pytest.mark.parametrize(
    "patch, message",
    [
        ("n_ladder = 200, 50", "strictly increasing"),
        ("n_ladder = 50, 50", "strictly increasing"),
        ("replicates = 0", "replicates"),
        ("kind = bogus", "unknown study kind"),
        ("seed = -1", "seed"),
        ("seed = abc", "not valid"),
        ("colour = red", "unknown keys"),
    ],
)
def test_config_rejects_bad_study_section(patch, message):
    key = patch.split("=")[0].strip()
    lines = [ln for ln in BASIC.splitlines() if not ln.startswith(key + " ")]
    text = "\n".join(lines).replace("[study]", "[study]\n" + patch)
    with pytest.raises(ConfigError, match=message):
        StudyConfig.from_string(text)


def test_config_rejects_bad_model_and_sections():
    with pytest.raises(ConfigError):
        StudyConfig.from_string(BASIC.replace("theta = 2", "theta = -3"))
    with pytest.raises(ConfigError, match="unknown section"):
        StudyConfig.from_string(BASIC + "\n[extras]\nx = 1\n")
    with pytest.raises(ConfigError, match="missing"):
        StudyConfig.from_string("[model]\nfamily = clayton\n")
    with pytest.raises(ConfigError, match="malformed"):
        StudyConfig.from_string("kind = lil")
    with pytest.raises(ConfigError, match="cannot read"):
        StudyConfig.from_file("/nonexistent/study.ini")


def test_config_kind_specific_validation():
    with pytest.raises(ConfigError, match="n >= 3"):
        small("lil", n_ladder=(2, 100))
    with pytest.raises(ConfigError, match="field_draws"):
        small("distribution", field_draws=0)
    with pytest.raises(ConfigError, match="dim = 2"):
        small("rank_normality", dim=3)
    with pytest.raises(ConfigError, match="formats"):
        small("convergence", formats=("pdf",))
    with pytest.raises(ConfigError, match="trim"):
        small("smoothing", trim=0.5)
    with pytest.raises(ConfigError, match="unknown config keys"):
        StudyConfig.from_dict({**small("lil").to_dict(), "extra": 1})


def test_runner_checks_kind():
    with pytest.raises(ConfigError, match="not lil"):
        run_lil(small("convergence"))


# -- parallel helpers -----------------------------------------------------------


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("COPULA_LAB_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.setenv("COPULA_LAB_THREADS", "many")
    with pytest.raises(ConfigError):
        worker_count()
    with pytest.raises(ConfigError):
        worker_count(0)


def test_run_tasks_keeps_order():
    assert run_tasks(lambda x: x * x, range(50), threads=4) == [x * x for x in range(50)]


def test_replicate_seed_streams_differ():
    draws = {tuple(np.random.default_rng(replicate_seed(1, i, r)).integers(0, 2**31, 3)) for i in range(3) for r in range(3)}
    assert len(draws) == 9


# -- two-sample KS ------------------------------------------------------------


def test_two_sample_ks_examples():
    a = np.array([0.3, 0.1, 0.7])
    assert two_sample_ks(a, a) == 0.0
    assert two_sample_ks([0, 0, 0], [1, 1, 1]) == 1.0
    assert two_sample_ks([1, 2], [1.5, 2.5]) == 0.5
    with pytest.raises(ValueError):
        two_sample_ks([], [1.0])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # scipy's p-value, not the statistic
@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(0, 20), min_size=1, max_size=30),
    st.lists(st.integers(0, 20), min_size=1, max_size=30),
)
def test_two_sample_ks_matches_oracles(a, b):
    ours = two_sample_ks(a, b)
    assert ours == pytest.approx(float(ks_two_sample(a, b)), abs=1e-12)
    assert ours == pytest.approx(stats.ks_2samp(a, b, method="asymp").statistic, abs=1e-12)


# -- studies (small sizes) ----------------------------------------------------


def test_convergence_small():
    res = run_convergence(small("convergence", family="clayton", theta=2.0))
    assert len(res.records) == 12
    slope = res.summary["slope"]
    assert slope["target"] == -0.5 and slope["bootstrap_se"] > 0
    assert -1.5 < slope["estimate"] < 0.0


def test_convergence_single_n_has_no_slope():
    res = run_convergence(small("convergence", n_ladder=(100,)))
    assert res.summary["slope"] is None
    assert any("single sample size" in w for w in res.warnings)


def test_distribution_small():
    cfg = small("distribution", field_draws=40, meta_replicates=2, calibration_bound=0.9, replicates=40)
    res = run_distribution_comparison(cfg)
    per_n = res.summary["per_n"]
    assert [row["n"] for row in per_n] == [60, 240]
    assert all(0.0 <= row["ks"]["median"] <= 1.0 for row in per_n)
    assert isinstance(res.summary["ks_median_non_increasing"], bool)
    assert all(row["below_calibration_bound"] for row in per_n)


def test_lil_small():
    res = run_lil(small("lil", n_ladder=(100, 400, 1600), replicates=3, grid_refine=9))
    assert res.summary["rho"] == pytest.approx(0.25, abs=1e-4)
    assert res.summary["prefix_extension_verified"] is True
    assert 0.0 <= res.summary["fraction_in_corridor"] <= 1.0


def test_smoothing_small_records_terms():
    res = run_smoothing(small("smoothing", family="clayton", theta=2.0, replicates=3))
    assert set(res.summary["trends"]) == {"sup_diff", "nabla1", "nabla2", "nabla3", "nabla4"}
    assert all(t in ("decreasing", "vanishing", "not_decreasing") for t in res.summary["trends"].values())


def test_smoothing_refuses_kernel_failing_order_check(monkeypatch):
    bad = Kernel.custom([0.5, 0.0, -0.5], order=2)  # mass 2/3
    monkeypatch.setattr(studies.Kernel, "from_name", classmethod(lambda cls, *a, **k: bad))
    with pytest.raises(ConfigError, match="order check"):
        run_smoothing(small("smoothing"))


def test_smoothing_fixed_bandwidth_warns():
    res = run_smoothing(small("smoothing", bandwidth=0.5, replicates=2))
    assert any("not admissible" in w for w in res.warnings)


def test_rank_normality_small():
    res = run_rank_normality(small("rank_normality", family="fgm", theta=1.0, replicates=20, n_ladder=(200,)))
    row = res.summary["per_n"][0]
    assert row["n"] == 200
    assert res.summary["delta_width"] > 0
    assert 0.3 < row["sd_over_delta_width"] < 3.0


# -- determinism and reports ----------------------------------------------------


@pytest.mark.parametrize(
    "cfg",
    [
        small("convergence"),
        small("lil", replicates=3),
        small("distribution", field_draws=20, replicates=20),
    ],
    ids=lambda c: c.kind.value,
)
def test_payload_independent_of_threads(cfg):
    one = run_study(cfg, threads=1)
    four = run_study(cfg, threads=4)
    assert one.payload_bytes() == four.payload_bytes()
    assert one.metadata["threads"] == 1 and four.metadata["threads"] == 4


def test_result_json_round_trip():
    res = run_convergence(small("convergence"))
    back = StudyResult.from_json(res.to_json())
    assert back.payload_bytes() == res.payload_bytes()
    assert json.loads(res.to_json())["kind"] == "convergence"


def test_plain_converts_numpy():
    out = plain({"a": np.float64(np.inf), "b": np.arange(3), "c": np.bool_(True), 1: (np.int32(4),)})
    assert out == {"a": None, "b": [0, 1, 2], "c": True, "1": [4]}


@pytest.mark.parametrize("kind", ["convergence", "lil", "distribution", "smoothing", "rank_normality"])
def test_reports(tmp_path, kind):
    extra = {"n_ladder": (100,)} if kind == "rank_normality" else {}
    res = run_study(small(kind, replicates=3, field_draws=10, **extra), threads=1)
    rows = records_csv(res).strip().splitlines()
    assert len(rows) == len(res.records) + 1
    root = ET.fromstring(render_svg(res))
    assert root.tag.endswith("svg")
    for fmt in ("json", "csv", "svg"):
        path = emit_report(res, fmt, tmp_path)
        assert path.exists() and path.stat().st_size > 0
    with pytest.raises(ConfigError):
        emit_report(res, "pdf", tmp_path)


def test_hypothesis_flag_in_reports():
    flagged = run_convergence(small("convergence", family="clayton", theta=2.0, replicates=2))
    assert flagged.summary["smooth_on_closed_cube"] is False
    assert any("unbounded near cube corners" in w for w in flagged.warnings)
    clean = run_convergence(small("convergence", family="fgm", theta=0.5, replicates=2))
    assert clean.summary["smooth_on_closed_cube"] is True
    assert not any("cube corners" in w for w in clean.warnings)
