"""Corruption experiments: escape along a skew direction, the kappa bound, breakdown estimates."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, PreconditionError
from .gauges import PolyhedralGauge
from .solver import WeightedSample, solve_fw_lp


def _indices(s: WeightedSample, C) -> list[int]:
    idx = sorted({int(i) for i in C})
    if len(idx) != len(list(C)):
        raise InputError("corrupted index set contains duplicates")
    if any(i < 0 or i >= len(s) for i in idx):
        raise InputError(f"corrupted indices must lie in [0, {len(s)})")
    return idx


@dataclass
class CorruptionPlan:
    """Which points are corrupted and how."""

    indices: list[int]
    w_C: float
    mode: str  # "shift" or "replace"
    M: float | None = None
    v: np.ndarray | None = None
    replacement: np.ndarray | None = None

    @classmethod
    def shift(cls, s: WeightedSample, C, M: float, v) -> CorruptionPlan:
        idx = _indices(s, C)
        if not idx:
            raise InputError("a corruption plan needs at least one index")
        return cls(idx, s.subset_weight(idx), "shift", M=float(M), v=np.asarray(v, dtype=float))

    @classmethod
    def replace(cls, s: WeightedSample, C, points) -> CorruptionPlan:
        idx = _indices(s, C)
        if not idx:
            raise InputError("a corruption plan needs at least one index")
        return cls(idx, s.subset_weight(idx), "replace", replacement=np.asarray(points, dtype=float))

    def apply(self, s: WeightedSample) -> WeightedSample:
        if self.mode == "shift":
            return corrupt_shift(s, self.indices, self.M, self.v)
        return s.replace(self.indices, self.replacement)


def corrupt_shift(s: WeightedSample, C, M: float, v) -> WeightedSample:
    """Move every point of ``C`` to ``c - M v``."""
    if M < 0:
        raise PreconditionError("shift magnitude must be nonnegative")
    idx = _indices(s, C)
    v = np.asarray(v, dtype=float).ravel()
    if v.size != s.dim:
        raise InputError("shift direction has the wrong dimension")
    if not idx:
        return s
    return s.replace(idx, s.points[idx] - M * v)


def reach(g: PolyhedralGauge, a_star, s: WeightedSample) -> float:
    """``M_{a*} = max_a gauge(a* - a)``."""
    return float(np.max(g(np.asarray(a_star, dtype=float)[None, :] - s.points)))


def threshold(g) -> float:
    return 1.0 / (1.0 + g.skewness)


# ---------------------------------------------------------------------------
# escape


@dataclass
class EscapeResult:
    M_found: float | None
    trace: list[tuple[float, float]]
    precondition_met: bool
    radius: float
    a_star: np.ndarray

    @property
    def escaped(self) -> bool:
        return self.M_found is not None

    def trace_csv(self) -> str:
        return "M,distance\n" + "".join(f"{M:.12g},{d:.12g}\n" for M, d in self.trace)


def escape_experiment(
    g: PolyhedralGauge,
    s: WeightedSample,
    C,
    v=None,
    R: float | None = None,
    max_doublings: int = 60,
    a_star=None,
) -> EscapeResult:
    """Double ``M`` from 1 until the optimizer of the shifted sample leaves ``{x : gauge(a* - x) <= R}``.

    A corrupted weight at or below ``w_A / (1 + sigma)`` is not rejected; the
    result then reports ``precondition_met=False`` and is expected to show no
    escape.
    """
    idx = _indices(s, C)
    v = g.skew_dirs[0] if v is None else np.asarray(v, dtype=float)
    if a_star is None:
        a_star = solve_fw_lp(g, s, certify=False).optimizer
    a_star = np.asarray(a_star, dtype=float)
    R = 10.0 * (1.0 + g.skewness) * reach(g, a_star, s) if R is None else float(R)
    if R <= 0:
        # a one-point sample has zero reach; any positive radius works
        R = 10.0 * (1.0 + g.skewness)
    w_C = s.subset_weight(idx)
    met = w_C * (1.0 + g.skewness) > s.total_weight
    trace: list[tuple[float, float]] = []
    M = 1.0
    for _ in range(max_doublings + 1):
        x = solve_fw_lp(g, corrupt_shift(s, idx, M, v), certify=False).optimizer
        dist = float(g(a_star - x))
        trace.append((M, dist))
        if dist > R:
            return EscapeResult(M, trace, met, R, a_star)
        M *= 2.0
    return EscapeResult(None, trace, met, R, a_star)


# ---------------------------------------------------------------------------
# kappa


def kappa_bound(g: PolyhedralGauge, s: WeightedSample, w_C: float, a_star) -> float:
    """Radius of the ball around ``a*`` that holds every optimizer after corrupting weight ``w_C``."""
    sigma = g.skewness
    w_A = s.total_weight
    if w_C < 0:
        raise PreconditionError("corrupted weight must be nonnegative")
    if (1.0 + sigma) * w_C >= w_A:
        raise PreconditionError(
            f"corrupted weight {w_C:g} is not below the threshold w_A/(1+sigma) = {w_A / (1 + sigma):g}"
        )
    M = reach(g, a_star, s)
    return (w_A - w_C) / (w_A - (1.0 + sigma) * w_C) * sigma * (1.0 + sigma) * M


@dataclass
class TrialRecord:
    fraction: float
    mode: str
    M: float | None
    replacement: np.ndarray | None
    optimizer: np.ndarray
    distance: float


@dataclass
class RobustnessReport:
    threshold: float
    sigma: float
    a_star: np.ndarray
    kappa: float | None
    records: list[TrialRecord] = field(default_factory=list)
    verdict: str = "pass"

    @property
    def max_ratio(self) -> float:
        if not self.records or not self.kappa:
            return 0.0
        return max(r.distance for r in self.records) / self.kappa

    @property
    def violations(self) -> int:
        if self.kappa is None:
            return 0
        return sum(r.distance > self.kappa * (1 + 1e-9) for r in self.records)

    def consistent(self, g: PolyhedralGauge) -> bool:
        """Stored distances agree with distances recomputed from stored optimizers."""
        return all(abs(float(g(self.a_star - r.optimizer)) - r.distance) <= 1e-9 * (1 + r.distance) for r in self.records)

    def to_json(self) -> dict:
        return {
            "threshold": self.threshold,
            "sigma": self.sigma,
            "a_star": self.a_star.tolist(),
            "kappa": self.kappa,
            "max_ratio": self.max_ratio,
            "violations": self.violations,
            "verdict": self.verdict,
            "trials": [
                {
                    "fraction": r.fraction,
                    "mode": r.mode,
                    "M": r.M,
                    "replacement": None if r.replacement is None else r.replacement.tolist(),
                    "optimizer": r.optimizer.tolist(),
                    "distance": r.distance,
                }
                for r in self.records
            ],
        }


def verify_lower_bound(
    g: PolyhedralGauge,
    s: WeightedSample,
    C,
    trials: int = 1000,
    seed: int = 0,
    threads: int = 1,
    max_log_shift: float = 9.0,
) -> RobustnessReport:
    """Run random and adversarial corruptions of ``C`` and compare against kappa.

    Even trials replace ``C`` by uniform points in a box of side ``1e6 * diam(A)``
    centred at ``a*``; odd trials shift ``C`` by ``-M v`` with ``log10 M`` uniform
    in ``[0, max_log_shift]``.
    """
    idx = _indices(s, C)
    w_C = s.subset_weight(idx)
    a_star = solve_fw_lp(g, s).optimizer
    kappa = kappa_bound(g, s, w_C, a_star)
    report = RobustnessReport(threshold(g), g.skewness, a_star, kappa)
    frac = w_C / s.total_weight
    if not idx:
        dist = float(g(a_star - a_star))
        report.records.append(TrialRecord(0.0, "none", None, None, a_star.copy(), dist))
        return report
    side = 1e6 * max(s.diameter(), 1.0)
    v = g.skew_dirs[0]
    children = np.random.SeedSequence(seed).spawn(trials)

    def run(k: int) -> TrialRecord:
        rng = np.random.default_rng(children[k])
        if k % 2 == 0:
            pts = a_star + rng.uniform(-side / 2, side / 2, size=(len(idx), s.dim))
            x = solve_fw_lp(g, s.replace(idx, pts), certify=False).optimizer
            return TrialRecord(frac, "random", None, pts, x, float(g(a_star - x)))
        M = float(10.0 ** rng.uniform(0.0, max_log_shift))
        x = solve_fw_lp(g, corrupt_shift(s, idx, M, v), certify=False).optimizer
        return TrialRecord(frac, "shift", M, None, x, float(g(a_star - x)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            report.records = list(pool.map(run, range(trials)))
    else:
        report.records = [run(k) for k in range(trials)]
    report.verdict = "pass" if report.violations == 0 else "fail"
    return report


# ---------------------------------------------------------------------------
# breakdown


def greedy_subset(g: PolyhedralGauge, s: WeightedSample, fraction: float, a_star) -> list[int]:
    """Smallest prefix of points, heaviest first and then farthest from ``a*``, reaching ``fraction * w_A``."""
    dist = g(np.asarray(a_star, dtype=float)[None, :] - s.points)
    order = sorted(range(len(s)), key=lambda i: (-s.weights[i], -dist[i], i))
    target = fraction * s.total_weight
    chosen, acc = [], 0.0
    for i in order:
        if acc >= target * (1 - 1e-12):
            break
        chosen.append(i)
        acc += s.weights[i]
    return sorted(chosen)


@dataclass
class BreakdownResult:
    estimate: float
    lo: float
    hi: float
    threshold: float
    granularity: float
    steps: list[tuple[float, bool]]

    @property
    def brackets(self) -> bool:
        return abs(self.estimate - self.threshold) <= (self.hi - self.lo) + self.granularity + 1e-12


def breakdown_estimate(g: PolyhedralGauge, s: WeightedSample, resolution: float = 0.01) -> BreakdownResult:
    """Bisection on the corrupted fraction at which the optimizer escapes."""
    if resolution <= 0:
        raise PreconditionError("resolution must be positive")
    a_star = solve_fw_lp(g, s, certify=False).optimizer
    lo, hi = 0.0, 1.0
    steps = []
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        C = greedy_subset(g, s, mid, a_star)
        broke = escape_experiment(g, s, C, a_star=a_star).escaped
        steps.append((mid, broke))
        if broke:
            hi = mid
        else:
            lo = mid
    gran = float(s.weights.max() / s.total_weight)
    return BreakdownResult(0.5 * (lo + hi), lo, hi, threshold(g), gran, steps)


# ---------------------------------------------------------------------------
# separable gauges


@dataclass
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        scale = tol * (1.0 + np.abs(self.hi - self.lo).max())
        return bool(np.all(x >= self.lo - scale) and np.all(x <= self.hi + scale))

    def to_json(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


def separable_box_bound(bs, s: WeightedSample) -> Box:
    """Coordinate box of the sample, which holds every sub-threshold corrupted optimizer."""
    bs = np.asarray(bs, dtype=float).ravel()
    if bs.size != s.dim:
        raise InputError("need one quantile level per coordinate")
    if np.any(bs <= 0) or np.any(bs > 0.5):
        raise PreconditionError("quantile levels must lie in (0, 0.5]")
    return Box(s.points.min(axis=0).copy(), s.points.max(axis=0).copy())
