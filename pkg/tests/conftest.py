import math

import numpy as np
import pytest

from formzero.framework import FormationSpec, build_framework, modal_decomposition
from formzero.io import bundled_formation

QUAD_POSITIONS = [(1.5, 1.0), (-2.0, -1.0), (1.5, -1.5), (-1.0, 1.5)]
QUAD_EDGES = [(2, 3), (1, 3), (2, 4), (1, 4), (3, 4)]
TRIANGLE = [(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2)]


@pytest.fixture
def quad_spec():
    return FormationSpec.from_arrays("paper-4agent", QUAD_POSITIONS, QUAD_EDGES)


@pytest.fixture
def quad_fw(quad_spec):
    return build_framework(quad_spec)


@pytest.fixture
def quad_md(quad_fw):
    return modal_decomposition(quad_fw)


@pytest.fixture
def fourbar_md(quad_spec):
    return modal_decomposition(build_framework(quad_spec.without_edge(3, 4, "paper-4bar")))


@pytest.fixture
def triangle_fw():
    return build_framework(FormationSpec.from_arrays("triangle", TRIANGLE, [(1, 2), (2, 3), (1, 3)]))


@pytest.fixture(params=["paper-4agent", "paper-4bar", "triangle"])
def fixture_md(request):
    return modal_decomposition(build_framework(bundled_formation(request.param)))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
