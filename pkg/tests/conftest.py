import math
import os

import numpy as np
import pytest

from riccilab import (FlowConfig, build_flat_torus, build_icosphere, load_off,
                      metric_from_positions, perturb, read_off, rescale_to_area, run_flow)

HERE = os.path.dirname(__file__)
ROOT = os.path.dirname(HERE)
FIXTURES = os.path.join(HERE, "fixtures")
CONFIGS = os.path.join(ROOT, "configs")

TETRA_OFF = """OFF
4 4 0
1 1 1
1 -1 -1
-1 1 -1
-1 -1 1
3 0 1 2
3 0 3 1
3 0 2 3
3 1 3 2
"""


def unit_tetrahedron():
    """Regular tetrahedron with unit edges."""
    mesh = load_off(TETRA_OFF)
    metric = metric_from_positions(mesh)
    return metric.with_u(np.full(4, -math.log(2 * math.sqrt(2))))


@pytest.fixture
def tetra_text():
    return TETRA_OFF


@pytest.fixture(scope="session")
def genus2_mesh():
    return read_off(os.path.join(FIXTURES, "genus2.off"))


@pytest.fixture(scope="session")
def sphere4pi():
    return rescale_to_area(metric_from_positions(build_icosphere(3)), 4 * math.pi)


@pytest.fixture(scope="session")
def short_sphere_trace():
    """A brief perturbed sphere flow, enough samples for the theorem machinery."""
    m = metric_from_positions(build_icosphere(2))
    m = rescale_to_area(perturb(m, 0.2, 3), 4 * math.pi)
    return run_flow(m, FlowConfig(dt_init=2e-3, t_max=2.0, sample_every=100))


@pytest.fixture(scope="session")
def torus_trace():
    _, m = build_flat_torus(8, 8)
    m = perturb(m, 0.2, 7)
    return run_flow(m, FlowConfig(dt_init=5e-4, t_max=20.0, sample_every=100))
