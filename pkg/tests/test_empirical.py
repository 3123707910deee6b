from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from copula_lab.copulas import CopulaModel
from copula_lab.empirical import (
    alpha_process,
    beta_process,
    copula_process,
    empirical_copula,
    empirical_copula_grid,
    joint_ecdf,
    marginal_ecdf,
    marginal_quantile,
    rank_threshold,
    uniform_ecdf_grid,
)
from copula_lab.errors import TiesError
from copula_lab.grid import Grid
from copula_lab.sample import Sample, SampleKind

import oracles


def test_joint_ecdf_examples():
    s = Sample([[0.0, 0.0], [1.0, 1.0]])
    assert joint_ecdf(s, [0.5, 0.5]) == 0.5
    assert joint_ecdf(s, [np.inf, np.inf]) == 1.0


def test_joint_ecdf_brute_force(rng):
    rows = rng.normal(size=(5, 3))
    s = Sample(rows)
    for _ in range(50):
        x = rng.normal(size=3)
        assert joint_ecdf(s, x) == float(oracles.ecdf_joint(rows.tolist(), x.tolist()))
    with pytest.raises(ValueError):
        joint_ecdf(s, [0.0, 0.0])


def test_joint_ecdf_right_continuous():
    s = Sample([[1.0, 2.0], [3.0, 4.0]])
    assert joint_ecdf(s, [1.0, 2.0]) == 0.5
    assert joint_ecdf(s, [1.0 - 1e-12, 2.0]) == 0.0


def test_marginal_ecdf():
    s = Sample([[3.0], [1.0], [2.0]])
    assert marginal_ecdf(s, 0, 2.0) == pytest.approx(2 / 3)
    assert marginal_ecdf(s, 0, 0.5) == 0.0


def test_marginal_ecdf_sort_oracle(rng):
    col = rng.normal(size=40)
    s = Sample(col)
    xs = rng.normal(size=100)
    expected = [sum(1 for c in sorted(col) if c <= x) / 40 for x in xs]
    np.testing.assert_array_equal(marginal_ecdf(s, 0, xs), expected)


def test_marginal_quantile_examples():
    s = Sample([[3.0], [1.0], [2.0]])
    assert marginal_quantile(s, 0, 0.5) == 2.0
    assert marginal_quantile(s, 0, 1.0) == 3.0
    assert marginal_quantile(s, 0, 0.0) == 1.0


def test_marginal_quantile_is_inf_over_data(rng):
    col = rng.normal(size=17)
    s = Sample(col)
    for t in np.linspace(0.01, 1.0, 60):
        # brute-force inf{x : F(x) >= t} over the candidate set of data points
        cands = [x for x in col if np.mean(col <= x) >= t - 1e-12]
        assert marginal_quantile(s, 0, t) == min(cands)


def test_rank_threshold_snaps_representation_error():
    assert rank_threshold(100, 0.07) == 7
    assert rank_threshold(100, 0.071) == 8
    assert rank_threshold(20, 0.05 * 3) == 3
    assert rank_threshold(10, 0.0) == 0


def test_empirical_copula_examples():
    ranks = np.array([[1, 2], [2, 1], [3, 4], [4, 3]], dtype=float)
    s = Sample(ranks)
    assert empirical_copula(s, [0.5, 0.5]) == 0.5
    assert empirical_copula(s, [0.0, 0.9]) == 0.0
    assert empirical_copula(s, [1.0, 1.0]) == 1.0


def test_ties_rejected_unless_jittered():
    data = [[1.0, 2.0], [1.0, 3.0], [2.0, 1.0]]
    with pytest.raises(TiesError):
        empirical_copula(Sample(data), [0.5, 0.5])
    s = Sample.from_array(data, tie_policy="jitter", seed=1)
    assert empirical_copula(s, [1.0, 1.0]) == 1.0
    s2 = Sample.from_array(data, tie_policy="jitter", seed=1)
    np.testing.assert_array_equal(s.data, s2.data)
    assert np.max(np.abs(s.data - np.array(data))) <= 1e-9 * 2.0


@settings(max_examples=150, deadline=None)
@given(
    n=st.integers(1, 30),
    d=st.integers(2, 3),
    m=st.integers(1, 12),
    data=st.data(),
)
def test_rank_version_equals_compositional_definition(n, d, m, data):
    seed = data.draw(st.integers(0, 2**32 - 1))
    rows = np.random.default_rng(seed).random((n, d))
    levels = [Fraction(data.draw(st.integers(0, m)), m) for _ in range(d)]
    s = Sample(rows, SampleKind.PSEUDO_UNIFORM)
    got = empirical_copula(s, [float(x) for x in levels])
    assert got == float(oracles.empirical_copula_compositional(rows.tolist(), levels))


def test_empirical_copula_margins_exact(rng):
    s = Sample(rng.random((37, 3)))
    for u in np.linspace(0, 1, 23):
        for j in range(3):
            p = np.ones(3)
            p[j] = u
            assert empirical_copula(s, p) == rank_threshold(37, u) / 37


def test_empirical_copula_monotone(rng):
    s = Sample(rng.random((50, 2)))
    u = rng.random((500, 2))
    v = u + (1 - u) * rng.random(u.shape)
    assert np.all(empirical_copula(s, v) >= empirical_copula(s, u))


def test_grid_fast_path_matches_pointwise(rng):
    s = Sample(rng.random((123, 2)), SampleKind.PSEUDO_UNIFORM)
    grid = Grid(([0.0, 0.13, 0.5, 0.77, 1.0], [0.05, 0.3, 0.9]), include_margin_points=True)
    np.testing.assert_array_equal(empirical_copula_grid(s, grid), empirical_copula(s, grid.points))
    np.testing.assert_array_equal(uniform_ecdf_grid(s, grid), joint_ecdf(s, grid.points))


def test_rank_invariance_under_monotone_transform(rng):
    model = CopulaModel.create("clayton", 2.0)
    base = model.sample(200, seed=4)
    raw = Sample(base.data)
    cubed = Sample(base.data**3 - 5.0)
    grid = Grid.regular(11, 2)
    np.testing.assert_array_equal(copula_process(raw, model, grid).values, copula_process(cubed, model, grid).values)


def test_copula_process_edges():
    model = CopulaModel.create("gumbel", 2.0)
    s = model.sample(300, seed=10)
    grid = Grid.regular(6, 2)
    vals = copula_process(s, model, grid).values
    pts = grid.points
    assert vals[grid.index_of([1.0, 1.0])] == 0.0
    assert np.all(vals[np.any(pts == 0.0, axis=1)] == 0.0)


def test_copula_process_dimension_mismatch():
    model = CopulaModel.create("independence", dim=3)
    s = CopulaModel.create("independence").sample(10, seed=0)
    with pytest.raises(ValueError):
        copula_process(s, model, Grid.regular(3, 2))


def test_alpha_process_examples():
    model = CopulaModel.create("independence")
    s = Sample([[0.3, 0.7]], SampleKind.PSEUDO_UNIFORM)
    grid = Grid(([0.5], [0.5]))
    assert alpha_process(s, model, grid).values[0] == pytest.approx(-0.25)
    grid1 = Grid(([1.0], [1.0]))
    assert alpha_process(s, model, grid1).values[0] == 0.0


def test_alpha_process_one_dimensional_reduction(rng):
    model = CopulaModel.create("clayton", 3.0)
    s = model.sample(400, seed=1)
    xs = np.linspace(0, 1, 41)
    grid = Grid((xs, [1.0]))
    classical = np.sqrt(400) * (np.array([np.mean(s.data[:, 0] <= x) for x in xs]) - xs)
    np.testing.assert_allclose(alpha_process(s, model, grid).values, classical, atol=1e-12)


def test_beta_process_examples():
    s = Sample([[0.2], [0.6]], SampleKind.PSEUDO_UNIFORM)
    assert beta_process(s, 0, 0.5) == pytest.approx(np.sqrt(2) * (0.2 - 0.5))
    assert beta_process(s, 0, 0.0) == pytest.approx(np.sqrt(2) * 0.2)
    assert beta_process(s, 0, 0.0) >= 0


def test_beta_process_chung_lil_sanity():
    n = 10_000
    u = np.linspace(0, 1, 2001)
    sups = []
    for rep in range(50):
        s = CopulaModel.create("independence").sample(n, seed=rep)
        # exact sup over u of |beta| is attained at jump points k/n; the dense grid is a proxy
        sups.append(np.max(np.abs(beta_process(s, 0, u))))
    target = np.sqrt(np.log(np.log(n)) / 2)
    med = np.median(sups)
    assert target / 2 < med < 2 * target


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 25), st.just(2)), elements=st.floats(-1e3, 1e3), unique=True))
def test_empirical_copula_bounds(arr):
    try:
        s = Sample(arr)
        _ = s.ranks
    except TiesError:
        return
    u = np.linspace(0, 1, 7)
    pts = np.stack(np.meshgrid(u, u, indexing="ij"), axis=-1).reshape(-1, 2)
    c = empirical_copula(s, pts)
    assert np.all(c >= 0) and np.all(c <= 1)
    assert np.all(c <= pts.min(axis=1) + 1.0 / s.n)


def test_rank_threshold_snaps_only_rounding_error():
    assert rank_threshold(100, 0.07) == 7
    assert rank_threshold(10, 0.3) == 3
    assert rank_threshold(1, 3.7e-289) == 1
    assert rank_threshold(50, 1e-12) == 1
    assert rank_threshold(7, 0.0) == 0
    assert rank_threshold(4, np.nextafter(0.5, 1.0) + 1e-12) == 3
