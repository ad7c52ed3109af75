"""Fermat-Weber points under polyhedral gauges and their robustness to contamination."""

from .errors import GaugeError, InputError, InvariantError, PreconditionError
from .gauges import (
    TOL,
    BlackBoxGauge,
    PolyhedralGauge,
    euclidean_gauge,
    from_descriptor,
    l1_gauge,
    quantile_gauge,
    separable_gauge,
    tropical_gauge,
)
from .solver import FWSolution, Uniqueness, WeightedSample, is_fw_point, solve_fw_lp, solve_fw_subgradient
from .robustness import escape_experiment, kappa_bound, verify_lower_bound
from .cells import elementary_hull, enumerate_cells
from .contamination import cl_membership, contamination_locus, quantile_cl

__all__ = [
    "TOL",
    "BlackBoxGauge",
    "FWSolution",
    "GaugeError",
    "InputError",
    "InvariantError",
    "PolyhedralGauge",
    "PreconditionError",
    "Uniqueness",
    "WeightedSample",
    "cl_membership",
    "contamination_locus",
    "elementary_hull",
    "enumerate_cells",
    "escape_experiment",
    "euclidean_gauge",
    "from_descriptor",
    "is_fw_point",
    "kappa_bound",
    "l1_gauge",
    "quantile_cl",
    "quantile_gauge",
    "separable_gauge",
    "solve_fw_lp",
    "solve_fw_subgradient",
    "tropical_gauge",
    "verify_lower_bound",
]
