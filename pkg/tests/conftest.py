import numpy as np
import pytest

from fwrobust.instances import HEXAGON_POINTS, HEXAGON_WEIGHTS, abs_gauge
from fwrobust.gauges import l1_gauge, quantile_gauge, separable_gauge, tropical_gauge
from fwrobust.solver import WeightedSample


@pytest.fixture
def hexagon():
    return tropical_gauge(2), WeightedSample(HEXAGON_POINTS, HEXAGON_WEIGHTS)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


PLANAR_GAUGES = {
    "tropical": lambda: tropical_gauge(2),
    "l1": lambda: l1_gauge(2),
    "separable": lambda: separable_gauge([0.2, 0.35]),
}

LINE_GAUGES = {
    "abs": abs_gauge,
    "quantile": lambda: quantile_gauge(0.25),
}
