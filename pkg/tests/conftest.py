import numpy as np
import pytest

from copula_lab.copulas import CopulaModel

# one representative per family (and the d > 2 variants)
MODEL_SPECS = [
    ("independence", None, 2),
    ("independence", None, 3),
    ("clayton", 2.0, 2),
    ("clayton", 1.0, 3),
    ("gumbel", 1.5, 2),
    ("gumbel", 2.0, 3),
    ("frank", -3.0, 2),
    ("frank", 4.0, 3),
    ("gaussian", 0.6, 2),
    ("gaussian", -0.5, 2),
    ("gaussian", 0.5, 3),
    ("fgm", 0.5, 2),
    ("fgm", -1.0, 2),
]


def model_id(spec):
    fam, th, d = spec
    return f"{fam}-{th}-d{d}"


@pytest.fixture(params=MODEL_SPECS, ids=model_id)
def any_model(request):
    fam, th, d = request.param
    return CopulaModel.create(fam, th, d)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


@pytest.fixture(params=[s for s in MODEL_SPECS if s[2] == 2], ids=model_id)
def bivariate_model(request):
    fam, th, d = request.param
    return CopulaModel.create(fam, th, d)


@pytest.fixture(params=[s for s in MODEL_SPECS if s[2] > 2], ids=model_id)
def multivariate_model(request):
    fam, th, d = request.param
    return CopulaModel.create(fam, th, d)
