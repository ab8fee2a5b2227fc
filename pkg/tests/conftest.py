"""Shared fixtures: the shipped 20-period curve and parameter tables.

Everything heavy is session scoped; the fixture objects are all frozen
dataclasses, so sharing them across tests is safe.
"""

import pathlib

import pytest

from svlibor import (
    build_loadings,
    factorize_vols,
    load_curve,
    load_params,
    strip_libors,
)

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> pathlib.Path:
    return FIXTURES


@pytest.fixture(scope="session")
def curve_pair():
    return load_curve(FIXTURES / "curve_table.csv")


@pytest.fixture(scope="session")
def tenor(curve_pair):
    return curve_pair[0]


@pytest.fixture(scope="session")
def curve(curve_pair):
    return curve_pair[1]


@pytest.fixture(scope="session")
def params():
    return load_params(FIXTURES / "model_table.json")


@pytest.fixture(scope="session")
def libors(curve_pair):
    return strip_libors(curve_pair[1], curve_pair[0])


@pytest.fixture(scope="session")
def loadings(tenor, params):
    return build_loadings(tenor, params.corr_decay)


@pytest.fixture(scope="session")
def fact(params, loadings):
    return factorize_vols(params, loadings)
