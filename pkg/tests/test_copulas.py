import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from copula_lab.copulas import CopulaModel, Family, uniformity_ks
from copula_lab.errors import ConfigError
from copula_lab.quadrature import gauss_legendre

from conftest import MODEL_SPECS


def test_independence_cdf():
    m = CopulaModel.create("independence")
    assert m.cdf([0.5, 0.5]) == pytest.approx(0.25, abs=1e-15)


def test_grounded_and_corner(any_model):
    d = any_model.dim
    u = np.full(d, 0.7)
    u[0] = 0.0
    assert any_model.cdf(u) == 0.0
    assert any_model.cdf(np.ones(d)) == pytest.approx(1.0, abs=1e-12)


def test_clayton_closed_form():
    m = CopulaModel.create("clayton", 2.0)
    assert m.cdf([0.5, 0.5]) == pytest.approx(7**-0.5, abs=1e-15)
    assert m.cdf([0.5, 0.5]) == pytest.approx(0.377964, abs=1e-6)


def test_clayton_cdf_monte_carlo_cross_check():
    m = CopulaModel.create("clayton", 2.0)
    s = m.sample(40000, seed=11).data
    emp = np.mean(np.all(s <= 0.5, axis=1))
    # binomial standard error ~ 0.0024
    assert abs(emp - 7**-0.5) < 0.01


def test_uniform_margins(any_model):
    d = any_model.dim
    for j in range(d):
        for x in (0.1, 0.37, 0.9):
            u = np.ones(d)
            u[j] = x
            assert any_model.cdf(u) == pytest.approx(x, abs=1e-9)


def test_frechet_hoeffding_bounds(any_model, rng):
    u = rng.random((10000, any_model.dim))
    c = any_model.cdf(u)
    lower = np.maximum(u.sum(axis=1) - any_model.dim + 1.0, 0.0)
    upper = u.min(axis=1)
    assert np.all(c >= lower - 1e-12)
    assert np.all(c <= upper + 1e-12)


def test_monotone_in_each_coordinate(any_model, rng):
    u = rng.random((2000, any_model.dim))
    v = u + (1.0 - u) * rng.random(u.shape)
    assert np.all(any_model.cdf(v) >= any_model.cdf(u) - 1e-12)


@pytest.mark.parametrize("spec", [s for s in MODEL_SPECS if s[2] == 2], ids=lambda s: f"{s[0]}-{s[1]}")
def test_two_increasing(spec, rng):
    m = CopulaModel.create(*spec)
    a = rng.random((5000, 2))
    b = a + (1.0 - a) * rng.random(a.shape)
    vol = m.cdf(b) - m.cdf(np.c_[a[:, 0], b[:, 1]]) - m.cdf(np.c_[b[:, 0], a[:, 1]]) + m.cdf(a)
    assert np.all(vol >= -1e-12)


def test_partial_matches_central_differences(any_model, rng):
    u = 0.05 + 0.9 * rng.random((300, any_model.dim))
    h = 1e-6
    for j in range(any_model.dim):
        e = np.zeros(any_model.dim)
        e[j] = h
        fd = (any_model.cdf(u + e) - any_model.cdf(u - e)) / (2 * h)
        np.testing.assert_allclose(any_model.partial(u, j), fd, atol=1e-5)


def test_partial_in_unit_interval(any_model, rng):
    u = rng.random((500, any_model.dim))
    u[::7, 0] = 0.0
    u[::5, -1] = 1.0
    for j in range(any_model.dim):
        p = any_model.partial(u, j)
        assert np.all((p >= 0) & (p <= 1))


def test_partial_examples():
    ind2 = CopulaModel.create("independence")
    assert ind2.partial([0.3, 0.8], 0) == pytest.approx(0.8, abs=1e-15)
    ind3 = CopulaModel.create("independence", dim=3)
    assert ind3.partial([0.5, 0.5, 0.5], 1) == pytest.approx(0.25, abs=1e-15)
    cl = CopulaModel.create("clayton", 2.0)
    h = 1e-6
    fd = (cl.cdf([0.5 + h, 0.5]) - cl.cdf([0.5 - h, 0.5])) / (2 * h)
    assert cl.partial([0.5, 0.5], 0) == pytest.approx(fd, abs=1e-6)


def test_partial_boundary_uses_one_sided_difference():
    m = CopulaModel.create("fgm", 0.5)
    # exact dC/du at u = 0 is v (1 + theta (1 - v)) = 0.6 * 1.2
    assert m.partial([0.0, 0.6], 0) == pytest.approx(0.6 * 1.2, abs=1e-5)
    # exact dC/du at u = 1 is v (1 - theta (1 - v))
    assert m.partial([1.0, 0.6], 0) == pytest.approx(0.6 * 0.8, abs=1e-5)


def test_gaussian_d_gt_2_uses_finite_differences():
    m = CopulaModel.create("gaussian", 0.5, dim=3)
    assert not m.has_analytic_partial
    assert CopulaModel.create("gaussian", 0.5).has_analytic_partial


def test_bivariate_margin():
    ind3 = CopulaModel.create("independence", dim=3)
    assert ind3.bivariate_margin(0, 2, 0.4, 0.5) == pytest.approx(0.2, abs=1e-15)
    fgm = CopulaModel.create("fgm", 0.5)
    assert fgm.bivariate_margin(0, 1, 0.5, 0.5) == pytest.approx(0.28125, abs=1e-15)
    with pytest.raises(ValueError):
        fgm.bivariate_margin(1, 1, 0.5, 0.5)
    with pytest.raises(IndexError):
        fgm.bivariate_margin(0, 2, 0.5, 0.5)


def test_bivariate_margin_uniform(any_model):
    assert any_model.bivariate_margin(0, 1, 1.0, 0.3) == pytest.approx(0.3, abs=1e-9)


def test_fgm_margin_monte_carlo():
    s = CopulaModel.create("fgm", 0.5).sample(40000, seed=5).data
    assert abs(np.mean(np.all(s <= 0.5, axis=1)) - 0.28125) < 0.01


def test_gaussian_bivariate_cdf_against_plackett_quadrature():
    rho = 0.85
    m = CopulaModel.create("gaussian", rho)
    for a, b in [(0.3, 0.6), (0.01, 0.02), (0.95, 0.2), (0.5, 0.5)]:
        x, y = special.ndtri(a), special.ndtri(b)

        def dens(r):
            return np.exp(-(x * x - 2 * r * x * y + y * y) / (2 * (1 - r * r))) / (2 * np.pi * np.sqrt(1 - r * r))

        ref = a * b + integrate.quad(dens, 0, rho, epsabs=1e-15, epsrel=1e-13)[0]
        assert m.cdf([a, b]) == pytest.approx(ref, abs=1e-10)


def test_gaussian_exchangeable_cdf_against_scipy():
    m = CopulaModel.create("gaussian", 0.4, dim=3)
    cov = np.full((3, 3), 0.4) + 0.6 * np.eye(3)
    u = np.array([0.3, 0.7, 0.5])
    ref = stats.multivariate_normal(np.zeros(3), cov).cdf(special.ndtri(u))
    assert m.cdf(u) == pytest.approx(ref, abs=1e-5)


def test_parameter_validation():
    with pytest.raises(ConfigError):
        CopulaModel.create("clayton", -1.0)
    with pytest.raises(ConfigError):
        CopulaModel.create("gumbel", 0.5)
    with pytest.raises(ConfigError):
        CopulaModel.create("fgm", 1.5)
    with pytest.raises(ConfigError):
        CopulaModel.create("fgm", 0.5, dim=3)
    with pytest.raises(ConfigError):
        CopulaModel.create("gaussian", 1.0)
    with pytest.raises(ConfigError):
        CopulaModel.create("frank", 0.0)
    with pytest.raises(ConfigError):
        CopulaModel.create("nope", 1.0)
    with pytest.raises(ConfigError):
        CopulaModel(Family.CLAYTON, 2, ())


def test_dimension_mismatch():
    m = CopulaModel.create("clayton", 2.0)
    with pytest.raises(ValueError):
        m.cdf([0.5, 0.5, 0.5])
    with pytest.raises(ValueError):
        m.cdf([0.5, 1.5])


def test_sample_independence_uncorrelated():
    s = CopulaModel.create("independence").sample(1000, seed=3).data
    assert abs(np.corrcoef(s.T)[0, 1]) < 0.1


def _kendall_tau_by_quadrature(m, nodes=200):
    # tau = 1 - 4 int int dC/du dC/dv du dv
    x, w = gauss_legendre(nodes, 0.0, 1.0)
    uu, vv = np.meshgrid(x, x, indexing="ij")
    pts = np.stack([uu, vv], axis=-1)
    return 1.0 - 4.0 * np.sum(np.outer(w, w) * m.partial(pts, 0) * m.partial(pts, 1))


def test_clayton_sample_kendall_tau():
    m = CopulaModel.create("clayton", 2.0)
    oracle = _kendall_tau_by_quadrature(m)
    assert oracle == pytest.approx(0.5, abs=2e-3)
    s = m.sample(20000, seed=7).data
    tau = stats.kendalltau(s[:, 0], s[:, 1]).statistic
    assert abs(tau - oracle) < 0.02


@pytest.mark.parametrize("spec", [("gumbel", 2.0, 2), ("frank", -3.0, 2), ("gaussian", 0.6, 2), ("fgm", -1.0, 2)])
def test_sample_kendall_tau_matches_quadrature(spec):
    m = CopulaModel.create(*spec)
    s = m.sample(20000, seed=8).data
    tau = stats.kendalltau(s[:, 0], s[:, 1]).statistic
    assert abs(tau - _kendall_tau_by_quadrature(m)) < 0.02


def test_sample_lower_orthant_probabilities_d3(multivariate_model):
    s = multivariate_model.sample(40000, seed=9).data
    u = np.array([0.6, 0.4, 0.7])
    assert abs(np.mean(np.all(s <= u, axis=1)) - multivariate_model.cdf(u)) < 0.01


def test_sample_deterministic(any_model):
    a = any_model.sample(50, seed=123).data
    b = any_model.sample(50, seed=123).data
    np.testing.assert_array_equal(a, b)


def test_sample_margins_uniform(any_model):
    s = any_model.sample(10000, seed=2024)
    crit = stats.kstwo(10000).ppf(0.99)
    assert np.all(uniformity_ks(s) < crit)


def test_conditional_inverse_roundtrip(bivariate_model, rng):
    u = 0.02 + 0.96 * rng.random(200)
    w = 0.02 + 0.96 * rng.random(200)
    v = bivariate_model.conditional_inverse(u, w)
    np.testing.assert_allclose(bivariate_model.partial(np.c_[u, v], 0), w, atol=1e-7)


@settings(max_examples=200, deadline=None)
@given(
    theta=st.floats(0.05, 20.0),
    u=st.floats(0.0, 1.0),
    v=st.floats(0.0, 1.0),
)
def test_clayton_bounds_property(theta, u, v):
    c = CopulaModel.create("clayton", theta).cdf([u, v])
    assert max(u + v - 1.0, 0.0) - 1e-12 <= c <= min(u, v) + 1e-12
