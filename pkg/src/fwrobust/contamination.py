"""Contamination loci: every Fermat-Weber point reachable by adding one point
of weight below ``w_D / sigma`` to a weighted sample ``(D, w)``."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cells import ElementaryCell, Region, _require_low_dim, connected, enumerate_cells, face_lattice, probe_grid
from .errors import InputError, InvariantError, PreconditionError
from .gauges import TOL, PolyhedralGauge
from .lp import linprog
from .solver import OptimalityCertificate, Uniqueness, WeightedSample, active_sets, fw_uniqueness, is_fw_point, solve_fw_lp


def _sample(D, w) -> WeightedSample:
    s = D if isinstance(D, WeightedSample) else WeightedSample(np.asarray(D, dtype=float), w)
    return s.merged()


@dataclass
class ContaminationWitness:
    """A contaminant ``(e, w_e)`` under which ``target`` is a Fermat-Weber point."""

    e: np.ndarray
    w_e: float
    target: np.ndarray
    certificate: OptimalityCertificate

    def to_json(self) -> dict:
        return {"e": self.e.tolist(), "w_e": self.w_e, "target": self.target.tolist(), "residual": self.certificate.residual}


@dataclass
class Membership:
    status: str  # "in" | "out" | "indeterminate"
    value: float  # min over Q_a of dual_gauge(-p)
    bound: float  # w_D / sigma
    witness: ContaminationWitness | None = None

    def __bool__(self) -> bool:
        return self.status == "in"


def _min_dual_over_Q(g: PolyhedralGauge, s: WeightedSample, a, tol: float):
    """``min dual_gauge(-p)`` for ``p`` in ``Q_a = sum_d w_d subdiff(a - d)``.

    Variables are convex multipliers over each point's active dual vertices
    and an epigraph variable; the Minkowski sum is never formed.
    """
    P, U = g.dual_vertices, g.primal_vertices
    act = active_sets(g, s, a, tol)
    sizes = [len(x) for x in act]
    nlam = sum(sizes)
    n = len(s)
    # G maps multipliers to p = sum_d w_d sum_j lam_dj P_j
    G = np.zeros((g.dim, nlam))
    A_eq = np.zeros((n, nlam + 1))
    col = 0
    for i, (idx, wd) in enumerate(zip(act, s.weights)):
        k = len(idx)
        G[:, col:col + k] = wd * P[idx].T
        A_eq[i, col:col + k] = 1.0
        col += k
    # <-p, u> <= t for every primal vertex u
    A_ub = np.hstack([-(U @ G), -np.ones((len(U), 1))])
    c = np.zeros(nlam + 1)
    c[-1] = 1.0
    free = np.zeros(nlam + 1, dtype=bool)
    free[-1] = True
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(len(U)), A_eq=A_eq, b_eq=np.ones(n), free=free)
    if not res.success:
        raise InvariantError(f"contamination LP ended with status {res.status}")
    lam = np.clip(res.x[:nlam], 0.0, None)
    p = G @ lam
    return float(g.dual_eval(-p)), p


def cl_membership(g: PolyhedralGauge, D, w=None, a=None, tol: float = TOL, band: float | None = None) -> Membership:
    """Decide whether ``a`` is a Fermat-Weber point for some single contaminant of weight below ``w_D / sigma``.

    ``band`` is the half-width, relative to ``w_D``, of the indeterminate zone
    around the weight bound (default ``tol``).
    """
    if not isinstance(g, PolyhedralGauge):
        raise PreconditionError("contamination loci need a polyhedral gauge")
    s = _sample(D, w)
    if a is None:
        raise InputError("target point a is required")
    a = np.asarray(a, dtype=float).ravel()
    if a.size != g.dim:
        raise InputError("dimension mismatch")
    w_D = s.total_weight
    bound = w_D / g.skewness
    band = tol if band is None else band
    value, p = _min_dual_over_Q(g, s, a, tol)
    if value > bound + band * w_D:
        return Membership("out", value, bound)
    if value >= bound - band * w_D:
        return Membership("indeterminate", value, bound)
    if value <= 1e-12 * w_D:
        # a is already optimal; extra mass at a keeps it optimal
        e, w_e = a.copy(), bound / 2.0
    else:
        w_e = value
        r = -p / w_e
        U = g.primal_vertices
        u = U[int(np.argmax(U @ r))]
        e = a - u
    cert = is_fw_point(g, s.plus(e[None, :], [w_e]), a, tol)
    if not cert or cert.residual > 1e-8 * (w_D + w_e):
        raise InvariantError(f"contamination witness failed to certify (residual {cert.residual:.3e})")
    return Membership("in", value, bound, ContaminationWitness(e, float(w_e), a, cert))


@dataclass
class SelfContamination:
    optimal: bool
    unique: Uniqueness | None
    weight: float

    @property
    def refutes_membership(self) -> bool:
        """Necessity fails: ``a`` is not even optimal after self-contamination."""
        return not self.optimal


def self_contamination_check(g: PolyhedralGauge, D, w=None, a=None, weight: float | None = None, tol: float = TOL) -> SelfContamination:
    """Optimality and uniqueness of ``a`` once ``a`` itself carries extra weight ``w_D / sigma``."""
    s = _sample(D, w)
    a = np.asarray(a, dtype=float).ravel()
    weight = s.total_weight / g.skewness if weight is None else float(weight)
    t = s.plus(a[None, :], [weight])
    cert = is_fw_point(g, t, a, tol)
    if not cert:
        return SelfContamination(False, None, weight)
    return SelfContamination(True, fw_uniqueness(g, t, a, tol), weight)


# ---------------------------------------------------------------------------
# regions


@dataclass
class CLRegion:
    region: Region
    accepted: list[int]
    rejected: list[tuple[int, float]]
    indeterminate: list[int]
    witnesses: dict[int, ContaminationWitness]
    cells: list[ElementaryCell]
    connected: bool
    sandwich: bool
    fw_cells: list[int] = field(default_factory=list)

    def contains(self, y, tol: float = 1e-9) -> bool:
        return self.region.contains(y, tol)

    def to_json(self) -> dict:
        return {
            "dim": self.region.dim,
            "accepted": [
                {**self.cells[i].to_json(), "witness": self.witnesses[i].to_json() if i in self.witnesses else None}
                for i in self.accepted
            ],
            "rejected": [{**self.cells[i].to_json(), "min_contaminant_weight": v} for i, v in self.rejected],
            "indeterminate": [self.cells[i].to_json() for i in self.indeterminate],
            "connected": self.connected,
            "sandwich": self.sandwich,
        }


def contamination_locus(g: PolyhedralGauge, D, w=None, tol: float = TOL, threads: int = 1) -> CLRegion:
    """Cells of ``D`` whose relative interior belongs to the contamination locus, closed under faces."""
    _require_low_dim(g)
    s = _sample(D, w)
    cells = enumerate_cells(g, s.points, tol)
    lattice = face_lattice(cells)

    def test(c: ElementaryCell) -> Membership:
        return cl_membership(g, s, None, c.representative, tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(test, cells))
    else:
        results = [test(c) for c in cells]

    inside = {i for i, r in enumerate(results) if r}
    closure = set(inside)
    for i in inside:
        closure |= lattice[i]
    for j in closure - inside:
        if results[j].status == "out":
            raise InvariantError("a face of an accepted cell was rejected")
    accepted = sorted(closure, key=lambda i: (cells[i].dim, tuple(np.round(cells[i].representative, 9))))
    rejected = [(i, results[i].value) for i in range(len(cells)) if i not in closure and results[i].status == "out"]
    indet = [i for i in range(len(cells)) if i not in closure and results[i].status == "indeterminate"]
    witnesses = {i: results[i].witness for i in accepted if results[i].witness is not None}

    fw_cells = [i for i, c in enumerate(cells) if is_fw_point(g, s, c.representative, tol)]
    in_eh = all(cells[i].bounded for i in accepted)
    fw_in = all(i in closure for i in fw_cells) and bool(fw_cells)
    region = Region([cells[i] for i in accepted], g.dim)
    return CLRegion(
        region,
        accepted,
        rejected,
        indet,
        witnesses,
        cells,
        connected(cells, accepted, lattice),
        in_eh and fw_in,
        fw_cells,
    )


def quantile_cl(D, w, b: float) -> tuple[float, float]:
    """Closed-form locus ``[d_1, d_k]`` for the ``b``-quantile gauge, ``b < 1/2``.

    ``k`` is the first index whose strict suffix weight is at most
    ``(1 - 2b) / (1 - b) * w_D``.
    """
    D = np.asarray(D, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    if not 0 < b < 0.5:
        raise PreconditionError("quantile level must lie in (0, 1/2)")
    if len(D) == 0 or len(w) != len(D):
        raise InputError("need matching nonempty points and weights")
    if np.any(np.diff(D) <= 0):
        raise InputError("points must be sorted strictly increasing")
    if np.any(w <= 0):
        raise InputError("weights must be positive")
    thr = (1 - 2 * b) / (1 - b) * w.sum()
    suffix = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])  # suffix[k-1] = sum_{i > k} w_i
    k = int(np.flatnonzero(suffix <= thr)[0])
    return float(D[0]), float(D[k])


# ---------------------------------------------------------------------------
# tropical medians


@dataclass
class Balance:
    interior: np.ndarray  # weight strictly inside each of the three regions
    inclusive: np.ndarray  # weight in each closed region (boundary and apex included)
    apex: float
    boundary: np.ndarray  # weight on the boundary of each region, apex excluded
    total: float

    @property
    def rule_inclusive(self) -> bool:
        return bool(np.all(self.inclusive >= self.total / 3 * (1 - 1e-12)))

    @property
    def rule_interior(self) -> bool:
        return bool(np.all(self.interior <= self.total / 3 * (1 + 1e-12)))

    @property
    def balanced(self) -> bool:
        return self.rule_inclusive and self.rule_interior

    def __bool__(self) -> bool:
        return self.balanced


def _chart(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] == 3:
        pts = pts[:, 1:] - pts[:, :1]
    if pts.shape[1] != 2:
        raise PreconditionError("tropical balancing is implemented for d = 2 only")
    return pts


def tropical_balance(points, weights, m, tol: float = TOL) -> Balance:
    """Region weights around ``m`` for the tropical plane.

    A point ``a`` lies in region ``j`` when coordinate ``j`` of ``a - m`` (with
    the dropped coordinate 0 as zero) is maximal; ties put it on a boundary.
    """
    pts = _chart(points)
    m = _chart(m)[0]
    w = np.asarray(weights, dtype=float).ravel()
    if len(w) != len(pts):
        raise InputError("points and weights differ in length")
    interior = np.zeros(3)
    inclusive = np.zeros(3)
    boundary = np.zeros(3)
    apex = 0.0
    for a, wa in zip(pts, w):
        z = np.concatenate([[0.0], a - m])
        scale = tol * (1.0 + np.abs(z).max())
        if np.abs(z[1:]).max() <= scale:
            apex += wa
            inclusive += wa
            continue
        top = np.flatnonzero(z >= z.max() - scale)
        inclusive[top] += wa
        if len(top) == 1:
            interior[top[0]] += wa
        else:
            boundary[top] += wa
    return Balance(interior, inclusive, apex, boundary, float(w.sum()))


def tropical_median_check(points, weights, m, tol: float = TOL) -> bool:
    return tropical_balance(points, weights, m, tol).balanced


# ---------------------------------------------------------------------------
# brute force


@dataclass
class BruteForce:
    points: np.ndarray  # distinct optimizers collected
    contaminants: int

    def __len__(self) -> int:
        return len(self.points)


def cl_bruteforce_oracle(
    g: PolyhedralGauge,
    D,
    w=None,
    lo=None,
    hi=None,
    steps: int = 41,
    weight_steps: int = 20,
    threads: int = 1,
) -> BruteForce:
    """Optimizers after one contaminant on a grid of locations and weights in ``(0, w_D / sigma)``."""
    s = _sample(D, w)
    lo = s.points.min(axis=0) - 1.0 if lo is None else np.atleast_1d(np.asarray(lo, dtype=float))
    hi = s.points.max(axis=0) + 1.0 if hi is None else np.atleast_1d(np.asarray(hi, dtype=float))
    grid = probe_grid(lo, hi, steps)
    bound = s.total_weight / g.skewness
    weights = [k / (weight_steps + 1) * bound for k in range(1, weight_steps + 1)]
    if not weights:
        return BruteForce(np.zeros((0, g.dim)), 0)

    def run(e) -> list[np.ndarray]:
        return [solve_fw_lp(g, s.plus(e[None, :], [we]), certify=False).optimizer for we in weights]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            found = [x for xs in pool.map(run, grid) for x in xs]
    else:
        found = [x for e in grid for x in run(e)]
    uniq = np.unique(np.round(np.array(found), 10), axis=0)
    return BruteForce(uniq, len(grid) * len(weights))
