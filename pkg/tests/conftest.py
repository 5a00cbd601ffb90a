"""Shared robots and cached analyses for the test suite.

The battery mirrors robots/battery.json; moderate grid resolutions keep the
unit tests fast while the acceptance module runs the spec resolution.
"""
import math

import numpy as np
import pytest
from hypothesis import settings

from cuspidal import (
    DhParams,
    critical_values,
    find_cusps,
    find_nodes,
    trace_critical_points,
)

settings.register_profile("repro", deadline=None, derandomize=True)
settings.load_profile("repro")

HALF_PI = math.pi / 2

# orthogonal robot with four cusps (two aspects, cuspidal)
REFERENCE = DhParams(0, 1, 0, 1, 2, 1.5, -HALF_PI, HALF_PI)
# orthogonal robot whose critical values self-intersect in two nodes
NODE_ROBOT = DhParams(0, 1, 0, 4, 2, 6, -HALF_PI, HALF_PI)
# conic taxonomy trio
HYPERBOLA_ROBOT = DhParams(0, 1, 0, 1, 2, 1.5, HALF_PI, math.pi / 6)
PARABOLA_ROBOT = DhParams(0, 1, 0, 1, 2, 1.5, math.pi / 3, HALF_PI)
ELLIPSE_ROBOT = DhParams(0, 1, 0, 1, 2, 1.5, math.pi / 6, HALF_PI)
# non-orthogonal pair with opposite verdicts
NONORTHO_CUSPIDAL = DhParams(0, 1, 0, 1, 2, 1, -math.pi / 6, HALF_PI)
NONORTHO_CUSPIDAL_B = DhParams(0, 1, 0, 1, 2, 1, math.pi / 6, HALF_PI)
NONORTHO_NONCUSPIDAL = DhParams(0, 1, 0, 1, 0.2, 2, -math.pi / 3, 1.745)
# two IK solutions everywhere: no pseudosingularities at all
BINARY_ROBOT = DhParams(0, 0.2, 0, 3, 1, 0.5, -HALF_PI, HALF_PI)
# intersecting joint axes: exact quadruple root in the workspace
NONGENERIC_QUAD = DhParams(0, 0, 0, 1, 2, 1.5, -HALF_PI, HALF_PI)
# fully symmetric geometry: the critical curve degenerates (squared factor)
NONGENERIC_CURVE = DhParams(0, 0, 0, 2, 2, 2, -HALF_PI, HALF_PI)

PAPER_BATTERY = {
    "orthogonal_cuspidal": REFERENCE,
    "orthogonal_node": NODE_ROBOT,
    "nonortho_cuspidal": NONORTHO_CUSPIDAL,
    "nonortho_cuspidal_b": NONORTHO_CUSPIDAL_B,
    "nonortho_noncuspidal": NONORTHO_NONCUSPIDAL,
    "ellipse_conic": ELLIPSE_ROBOT,
}

TEST_GRID = 240


def random_valid_params(rng) -> DhParams:
    """Random robot away from the validation degeneracies."""
    d = rng.uniform(-1.5, 1.5, 3)
    a = rng.uniform(0.3, 2.5, 3) * rng.choice([-1.0, 1.0], 3)
    alpha1 = rng.choice([-1.0, 1.0]) * rng.uniform(0.35, math.pi - 0.35)
    alpha2 = rng.uniform(-math.pi, math.pi)
    return DhParams(d[0], d[1], d[2], a[0], a[1], a[2], alpha1, alpha2)


class _AnalysisCache:
    def __init__(self):
        self._curves = {}
        self._wcurves = {}
        self._cusps = {}
        self._nodes = {}

    def curves(self, p, grid_n=TEST_GRID):
        key = (p, grid_n)
        if key not in self._curves:
            self._curves[key] = trace_critical_points(p, grid_n)
        return self._curves[key]

    def wcurves(self, p, grid_n=TEST_GRID):
        key = (p, grid_n)
        if key not in self._wcurves:
            self._wcurves[key] = critical_values(p, self.curves(p, grid_n))
        return self._wcurves[key]

    def cusps(self, p, grid_n=TEST_GRID):
        key = (p, grid_n)
        if key not in self._cusps:
            self._cusps[key] = find_cusps(p, self.wcurves(p, grid_n))
        return self._cusps[key]

    def nodes(self, p, grid_n=TEST_GRID):
        key = (p, grid_n)
        if key not in self._nodes:
            self._nodes[key] = find_nodes(p, self.wcurves(p, grid_n))
        return self._nodes[key]


@pytest.fixture(scope="session")
def analysis():
    return _AnalysisCache()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20230817)
