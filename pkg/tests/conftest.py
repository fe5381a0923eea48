import math

import numpy as np
import pytest

from siclab.core.fiducials import exact_fiducial_d3, exact_fiducial_d4
from siclab.core.heisenberg import Dimension


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long-running acceptance checks')


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def random_unit_vector(rng):
    def make(d):
        z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        return z / np.linalg.norm(z)
    return make


@pytest.fixture
def hesse_vector():
    return exact_fiducial_d3(0.0).vector


@pytest.fixture
def bengtsson():
    return exact_fiducial_d4()


@pytest.fixture
def bengtsson_usual_vector():
    """The d=4 fiducial in the presentation with ``+i`` imaginary parts."""
    rho = 1 + math.sqrt(2)
    x = math.sqrt(2 + math.sqrt(5))
    z = np.array([2 * rho, 1 + rho * x + 1j * (rho + x), 2j, 1 - rho * x + 1j * (rho - x)])
    return z / np.linalg.norm(z)


@pytest.fixture
def dim3():
    return Dimension(3)


@pytest.fixture
def dim4():
    return Dimension(4)


@pytest.fixture
def catalog_path(tmp_path, monkeypatch):
    path = tmp_path / 'fiducials.json'
    monkeypatch.setenv('SICLAB_CATALOG', str(path))
    return path
