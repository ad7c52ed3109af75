"""Small worked instances used by the reproduction suite and the tests."""

from __future__ import annotations

import numpy as np

from .gauges import PolyhedralGauge, quantile_gauge, tropical_gauge
from .solver import WeightedSample

# six points of the tropical-plane example, drawn in the chart that drops coordinate 0
HEXAGON_POINTS = np.array([(0, 1), (1, 1), (1, 0), (0, -1), (-1, -1), (-1, 0)], dtype=float)
HEXAGON_WEIGHTS = np.array([1, 3, 1, 3, 1, 3], dtype=float)

# the interior point whose self-contamination fails to make it a median
INTERIOR_PROBE = np.array([0.25, 0.5])
# a point on the open segment from the origin to the weight-1 point (1, 0)
SEGMENT_PROBE = np.array([0.5, 0.0])


def hexagon() -> tuple[PolyhedralGauge, WeightedSample]:
    return tropical_gauge(2), WeightedSample(HEXAGON_POINTS, HEXAGON_WEIGHTS)


def abs_gauge() -> PolyhedralGauge:
    """The absolute value on the line."""
    return PolyhedralGauge([[1.0], [-1.0]], [[1.0], [-1.0]], name="abs")


def line_sample(xs, weights=None) -> WeightedSample:
    xs = np.asarray(xs, dtype=float).reshape(-1, 1)
    return WeightedSample(xs, np.ones(len(xs)) if weights is None else weights)


def kappa_instances():
    """(name, gauge, sample, corrupted indices) triples with corrupted weight below the threshold."""
    return [
        ("abs", abs_gauge(), line_sample([0, 1, 2, 3, 4]), [0, 4]),
        ("quantile-0.25", quantile_gauge(0.25), line_sample(range(8)), [7]),
        ("tropical-2", tropical_gauge(2), WeightedSample(HEXAGON_POINTS, HEXAGON_WEIGHTS), [1]),
    ]


def escape_instances():
    """Same gauges with corrupted weight above the threshold."""
    return [
        ("abs", abs_gauge(), line_sample([0, 1, 2, 3, 4]), [0, 1, 2]),
        ("quantile-0.25", quantile_gauge(0.25), line_sample([0, 1, 2, 3]), [0, 1]),
        ("tropical-2", tropical_gauge(2), WeightedSample(HEXAGON_POINTS, HEXAGON_WEIGHTS), [1, 3, 5]),
    ]
