"""Weighted Fermat-Weber problems ``min_x sum_a w_a * gauge(x - a)``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InputError, InvariantError, PreconditionError
from .gauges import TOL, BlackBoxGauge, PolyhedralGauge
from .lp import LPError, linprog


class Uniqueness(str, Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class WeightedSample:
    """Finite point set with strictly positive weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.ndim != 2 or len(pts) == 0:
            raise InputError("sample must contain at least one point")
        if len(w) != len(pts):
            raise InputError("points and weights differ in length")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise InputError("sample has non-finite entries")
        if np.any(w <= 0):
            raise InputError("weights must be strictly positive")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> WeightedSample:
        pts = np.asarray(points, dtype=float)
        return cls(pts, np.ones(len(pts)))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return len(self.points)

    def subset_weight(self, idx) -> float:
        return float(self.weights[list(idx)].sum())

    def translate(self, t) -> WeightedSample:
        return WeightedSample(self.points + np.asarray(t, dtype=float), self.weights)

    def scale_weights(self, lam: float) -> WeightedSample:
        return WeightedSample(self.points, self.weights * lam)

    def replace(self, idx, new_points) -> WeightedSample:
        pts = self.points.copy()
        pts[list(idx)] = np.asarray(new_points, dtype=float).reshape(len(idx), self.dim)
        return WeightedSample(pts, self.weights)

    def plus(self, points, weights) -> WeightedSample:
        """Add weighted points; weight is accumulated on points already present."""
        pts = [row for row in self.points]
        w = list(self.weights)
        for p, wp in zip(np.atleast_2d(np.asarray(points, dtype=float)), np.atleast_1d(weights)):
            for i, q in enumerate(pts):
                if np.array_equal(p, q):
                    w[i] += float(wp)
                    break
            else:
                pts.append(p)
                w.append(float(wp))
        return WeightedSample(np.array(pts), np.array(w))

    def merged(self, tol: float = 0.0) -> WeightedSample:
        """Coincident points merged with summed weights."""
        out = WeightedSample(self.points[:1], self.weights[:1])
        for p, w in zip(self.points[1:], self.weights[1:]):
            hit = np.flatnonzero(np.max(np.abs(out.points - p), axis=1) <= tol)
            if hit.size:
                ws = out.weights.copy()
                ws[hit[0]] += w
                out = WeightedSample(out.points, ws)
            else:
                out = WeightedSample(np.vstack([out.points, p]), np.append(out.weights, w))
        return out

    def diameter(self) -> float:
        if len(self) < 2:
            return 0.0
        diff = self.points[:, None, :] - self.points[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())


@dataclass
class OptimalityCertificate:
    """Convex multipliers over active dual vertices with ``sum_a w_a p_a ~ 0``."""

    optimal: bool
    residual: float
    subgradients: np.ndarray  # p_a, one row per sample point
    active: list[np.ndarray]  # active dual-vertex indices per sample point
    multipliers: list[np.ndarray]

    def __bool__(self) -> bool:
        return self.optimal

    def to_json(self) -> list:
        return [
            {"active": a.tolist(), "lambda": lam.tolist(), "subgradient": p.tolist()}
            for a, lam, p in zip(self.active, self.multipliers, self.subgradients)
        ]


@dataclass
class FWSolution:
    optimizer: np.ndarray
    objective: float
    certificate: OptimalityCertificate | None
    unique: Uniqueness = Uniqueness.UNKNOWN
    method: str = "lp"
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "optimizer": self.optimizer.tolist(),
            "objective": self.objective,
            "unique": self.unique.value,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
            "residual": None if self.certificate is None else self.certificate.residual,
            "method": self.method,
        }


def _check_dims(g, s: WeightedSample) -> None:
    if s.dim != g.dim:
        raise InputError(f"sample dimension {s.dim} does not match gauge dimension {g.dim}")


def objective(g, s: WeightedSample, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(s.weights @ np.atleast_1d(g(x[None, :] - s.points)))


def _atol(g: PolyhedralGauge, x: np.ndarray, a: np.ndarray, tol: float) -> float:
    # the coincidence test must survive LP rounding at the sample's coordinate scale
    return tol * 1e-2 * (1.0 + max(np.abs(x).max(), np.abs(a).max()))


def active_sets(g: PolyhedralGauge, s: WeightedSample, x, tol: float = TOL) -> list[np.ndarray]:
    x = np.asarray(x, dtype=float)
    return [g.active(x - a, tol, _atol(g, x, a, tol)) for a in s.points]


def is_fw_point(g: PolyhedralGauge, s: WeightedSample, x, tol: float = TOL) -> OptimalityCertificate:
    """Decide ``0 in sum_a w_a subdiff(x - a)`` by an LP over convex multipliers."""
    _check_dims(g, s)
    x = np.asarray(x, dtype=float).ravel()
    if x.size != g.dim:
        raise InputError("dimension mismatch")
    P = g.dual_vertices
    d = g.dim
    act = active_sets(g, s, x, tol)
    n = len(s)
    sizes = [len(a) for a in act]
    nlam = sum(sizes)
    wA = s.total_weight

    if all(k == 1 for k in sizes):
        lams = [np.ones(1) for _ in act]
    else:
        # min ||r||_1 subject to  sum_a w_a sum_p lam_ap p + r = 0,  sum_p lam_ap = 1
        A_eq = np.zeros((n + d, nlam + 2 * d))
        col = 0
        for i, (a_idx, w) in enumerate(zip(act, s.weights)):
            k = len(a_idx)
            A_eq[i, col:col + k] = 1.0
            A_eq[n:, col:col + k] = w * P[a_idx].T
            col += k
        A_eq[n:, nlam:nlam + d] = np.eye(d)
        A_eq[n:, nlam + d:] = -np.eye(d)
        b_eq = np.concatenate([np.ones(n), np.zeros(d)])
        c = np.concatenate([np.zeros(nlam), np.ones(2 * d)])
        res = linprog(c, A_eq=A_eq, b_eq=b_eq)
        if not res.success:
            raise InvariantError(f"optimality LP failed: {res.status}")
        lam_all = np.clip(res.x[:nlam], 0.0, None)
        lams, col = [], 0
        for k in sizes:
            part = lam_all[col:col + k]
            lams.append(part / part.sum())
            col += k
    subgrads = np.array([lam @ P[a_idx] for lam, a_idx in zip(lams, act)])
    residual = float(np.linalg.norm(s.weights @ subgrads))
    return OptimalityCertificate(residual <= tol * wA, residual, subgrads, act, lams)


def solve_fw_lp(
    g: PolyhedralGauge,
    s: WeightedSample,
    certify: bool = True,
    check_unique: bool = False,
    tol: float = TOL,
) -> FWSolution:
    """Global minimizer through ``min sum w_a t_a`` s.t. ``t_a >= <p, x - a>`` for all dual vertices."""
    _check_dims(g, s)
    P = g.dual_vertices
    n, d, k = len(s), g.dim, len(P)
    center = np.median(s.points, axis=0)
    pts = s.points - center
    # rows ordered (a, p): <p, x> - t_a <= <p, a>
    A = np.zeros((n * k, d + n))
    A[:, :d] = np.tile(P, (n, 1))
    A[np.arange(n * k), d + np.repeat(np.arange(n), k)] = -1.0
    b = (pts @ P.T).ravel()
    c = np.concatenate([np.zeros(d), s.weights])
    free = np.concatenate([np.ones(d, dtype=bool), np.zeros(n, dtype=bool)])
    res = linprog(c, A_ub=A, b_ub=b, free=free)
    if not res.success:
        raise InvariantError(f"Fermat-Weber LP ended with status {res.status}")
    x = res.x[:d] + center
    # snap onto a sample point when the LP landed on it up to rounding
    near = np.max(np.abs(s.points - x), axis=1)
    j = int(np.argmin(near))
    if near[j] <= 1e-12 * (1 + np.abs(s.points).max()):
        x = s.points[j].copy()
    sol = FWSolution(x, objective(g, s, x), None)
    if certify:
        cert = is_fw_point(g, s, x, tol)
        if not cert:
            raise InvariantError(f"LP optimizer failed its optimality certificate (residual {cert.residual:.3e})")
        sol.certificate = cert
        if check_unique:
            sol.unique = fw_uniqueness(g, s, x, tol)
    return sol


def directional_derivative(g: PolyhedralGauge, s: WeightedSample, x, u, tol: float = TOL) -> float:
    P = g.dual_vertices
    u = np.asarray(u, dtype=float)
    return float(sum(w * np.max(P[a] @ u) for w, a in zip(s.weights, active_sets(g, s, x, tol))))


def _probe_directions(g: PolyhedralGauge, act: list[np.ndarray]) -> list[np.ndarray]:
    d = g.dim
    probes = list(np.eye(d)) + list(-np.eye(d))
    full = len(g.dual_vertices)
    P = g.dual_vertices
    for a_idx in act:
        if len(a_idx) == full:
            probes += list(g.primal_vertices) + list(-g.primal_vertices)
        elif len(a_idx) >= 2 and d == 2:
            for i in range(len(a_idx)):
                for j in range(i + 1, len(a_idx)):
                    e = P[a_idx[i]] - P[a_idx[j]]
                    perp = np.array([-e[1], e[0]])
                    probes += [perp, -perp]
    return [u / np.linalg.norm(u) for u in probes if np.linalg.norm(u) > 0]


def _ray_extent(g: PolyhedralGauge, s: WeightedSample, x, u, fx: float, tol: float) -> float:
    """Largest ``tau`` in [0, scale] keeping ``x + tau u`` optimal (LP)."""
    P = g.dual_vertices
    n, k = len(s), len(P)
    scale = 1.0 + s.diameter()
    pts = s.points - x
    # vars: tau, t_1..t_n;  <p, tau u - a> <= t_a ; sum w t <= fx ; tau <= scale
    A = np.zeros((n * k + 2, 1 + n))
    A[: n * k, 0] = np.tile(P @ u, n)
    A[np.arange(n * k), 1 + np.repeat(np.arange(n), k)] = -1.0
    A[n * k, 1:] = s.weights
    A[n * k + 1, 0] = 1.0
    b = np.concatenate([(pts @ P.T).ravel(), [fx + tol * 1e-3 * (1 + abs(fx))], [scale]])
    c = np.zeros(1 + n)
    c[0] = -1.0
    res = linprog(c, A_ub=A, b_ub=b)
    return float(res.x[0]) if res.success else 0.0


def fw_uniqueness(g: PolyhedralGauge, s: WeightedSample, x, tol: float = TOL) -> Uniqueness:
    """Tri-state uniqueness verdict for an optimal point ``x``."""
    x = np.asarray(x, dtype=float)
    if not is_fw_point(g, s, x, tol):
        raise PreconditionError("fw_uniqueness needs an optimal point")
    act = active_sets(g, s, x, tol)
    probes = _probe_directions(g, act)
    P = g.dual_vertices
    wA = s.total_weight
    flat = [u for u in probes if sum(w * np.max(P[a] @ u) for w, a in zip(s.weights, act)) <= tol * 10 * wA]
    if not flat:
        return Uniqueness.YES if g.dim <= 2 else Uniqueness.UNKNOWN
    fx = objective(g, s, x)
    scale = 1.0 + s.diameter()
    for u in flat:
        if _ray_extent(g, s, x, u, fx, tol) > 1e-7 * scale:
            return Uniqueness.NO
    return Uniqueness.UNKNOWN


# ---------------------------------------------------------------------------
# black-box route


def _weiszfeld(g: BlackBoxGauge, s: WeightedSample, iters: int, tol: float) -> FWSolution:
    A, w = s.points, s.weights
    x = w @ A / w.sum()
    scale = 1.0 + np.abs(A).max()
    for _ in range(iters):
        diff = x - A
        dist = np.linalg.norm(diff, axis=1)
        hit = dist <= 1e-14 * scale
        inv = np.where(hit, 0.0, 1.0 / np.where(hit, 1.0, dist))
        R = ((w * inv)[:, None] * diff).sum(axis=0)
        if hit.any():
            wj = w[hit].sum()
            r = np.linalg.norm(R)
            if r <= wj:
                break
            T = (w * inv) @ A / (w * inv).sum()
            x_new = (1 - wj / r) * T + (wj / r) * x
        else:
            if np.linalg.norm(R) <= 1e-13 * w.sum():
                break
            x_new = (w * inv) @ A / (w * inv).sum()
        if np.max(np.abs(x_new - x)) <= 1e-16 * scale:
            x = x_new
            break
        x = x_new
    diff = x - A
    dist = np.linalg.norm(diff, axis=1)
    hit = dist <= 1e-12 * scale
    subgrads = np.zeros_like(A)
    subgrads[~hit] = diff[~hit] / dist[~hit, None]
    if hit.any():
        R = w[~hit] @ subgrads[~hit]
        j = np.flatnonzero(hit)
        subgrads[j] = -R / w[hit].sum()
    residual = float(np.linalg.norm(w @ subgrads))
    ok = residual <= 1e-8 * w.sum() and np.all(np.linalg.norm(subgrads, axis=1) <= 1 + 1e-9)
    cert = OptimalityCertificate(bool(ok), residual, subgrads, [np.zeros(0, int)] * len(A), [np.zeros(0)] * len(A))
    return FWSolution(x, objective(g, s, x), cert, method="weiszfeld")


def solve_fw_subgradient(
    g: BlackBoxGauge,
    s: WeightedSample,
    iters: int = 10_000,
    step: float | None = None,
    polish: bool = True,
    tol: float = TOL,
) -> FWSolution:
    """Minimize through the value/subgradient oracle only.

    Euclidean gauges go through Weiszfeld's iteration.  Otherwise normalized
    subgradient steps ``c / sqrt(k)`` run first and a trust-region cutting-plane
    phase then closes the remaining gap using the collected subgradients.
    """
    if iters < 1:
        raise PreconditionError("iters must be >= 1")
    _check_dims(g, s)
    if g.is_euclidean:
        return _weiszfeld(g, s, iters, tol)

    A, w = s.points, s.weights
    wA = s.total_weight

    def f_and_sub(x):
        vals, subs = g.batch(x - A)
        return float(w @ vals), w @ subs

    def f(x):
        return f_and_sub(x)[0]

    def sub(x):
        return f_and_sub(x)[1]

    vals = [f(a) for a in A]
    x = A[int(np.argmin(vals))].copy()
    f0 = f(x)
    c = step if step is not None else f0 / (wA * g.skewness)
    if c <= 0:
        c = 1.0
    best_x, best_f = x.copy(), f0
    cuts: list[tuple[np.ndarray, float, np.ndarray]] = []
    for k in range(1, iters + 1):
        fx, gk = f_and_sub(x)
        cuts.append((x.copy(), fx, gk))
        if fx < best_f:
            best_x, best_f = x.copy(), fx
        if fx > 10 * f0 + 1e-12:
            raise InvariantError("subgradient iteration diverged")
        nrm = np.linalg.norm(gk)
        if nrm == 0:
            break
        x = x - (c / math.sqrt(k)) * gk / nrm
    lower = -np.inf
    if polish:
        best_x, best_f, lower = _cutting_plane(f, sub, best_x, cuts[-200:], max(c, 1e-12 * (1 + np.abs(A).max())))
    return FWSolution(best_x, best_f, None, method="subgradient", extra={"lower_bound": float(lower)})


def _cutting_plane(f, sub, xc, cuts, radius, max_iter: int = 2000):
    d = xc.size
    fc = f(xc)
    cuts = list(cuts) + [(xc.copy(), fc, sub(xc))]
    lower = -np.inf
    for _ in range(max_iter):
        # vars (x, r): min r  s.t.  f_i + <g_i, x - y_i> <= r,  |x - xc| <= radius
        G = np.array([gi for _, _, gi in cuts])
        rhs = np.array([gi @ yi - fi for yi, fi, gi in cuts])
        A_ub = np.vstack([
            np.hstack([G, -np.ones((len(cuts), 1))]),
            np.hstack([np.eye(d), np.zeros((d, 1))]),
            np.hstack([-np.eye(d), np.zeros((d, 1))]),
        ])
        b_ub = np.concatenate([rhs, xc + radius, -(xc - radius)])
        res = linprog(np.r_[np.zeros(d), 1.0], A_ub=A_ub, b_ub=b_ub, free=np.ones(d + 1, dtype=bool))
        if not res.success:
            raise LPError(f"cutting-plane LP failed: {res.status}")
        y, model = res.x[:d], res.x[d]
        gap = fc - model
        on_edge = np.max(np.abs(y - xc)) >= radius * (1 - 1e-9)
        if gap <= 1e-13 * (1 + abs(fc)) and not on_edge:
            lower = model
            break
        fy = f(y)
        cuts.append((y.copy(), fy, sub(y)))
        if fy < fc - 0.1 * gap:
            xc, fc = y.copy(), fy
        elif gap <= 1e-13 * (1 + abs(fc)):
            lower = model
            break
    return xc, fc, lower


# ---------------------------------------------------------------------------
# structural checks


def skew_line_fw_check(g: PolyhedralGauge, taus, base=None, tol: float = TOL) -> OptimalityCertificate:
    """Optimality of ``base + tau_l v`` with ``l = ceil(n / (1 + sigma))`` for samples on a skew line."""
    taus = np.asarray(taus, dtype=float).ravel()
    if np.any(np.diff(taus) < 0):
        raise PreconditionError("taus must be sorted")
    base = np.zeros(g.dim) if base is None else np.asarray(base, dtype=float)
    v = g.skew_dirs[0]
    s = WeightedSample.uniform(base + taus[:, None] * v)
    n = len(taus)
    ell = math.ceil(n / (1 + g.skewness) - 1e-12)
    return is_fw_point(g, s, base + taus[ell - 1] * v, tol)


@dataclass
class ThreePointWitness:
    c: np.ndarray
    w_c: float
    verified: bool
    residual: float


def euclid_three_point_witness(a, b, m, rho: float, w_a: float = 1.0, w_b: float = 1.0) -> ThreePointWitness:
    """Place a third point so that ``m`` is the Euclidean Fermat-Weber point.

    With ``v = w_a (m-a)/|m-a| + w_b (m-b)/|m-b|`` the point ``c = m + rho v`` of
    weight ``|v|`` pulls with gradient ``-v`` at ``m`` and so cancels the other
    two, whatever ``rho > 0`` is.
    """
    a, b, m = (np.asarray(z, dtype=float) for z in (a, b, m))
    if rho <= 0:
        raise PreconditionError("rho must be positive")
    e1, e2 = b - a, m - a
    cross = e1[0] * e2[1] - e1[1] * e2[0]
    if abs(cross) <= 1e-12 * (1 + np.linalg.norm(e1) * np.linalg.norm(e2)):
        raise PreconditionError("m must not lie on the line through a and b")
    ua = (m - a) / np.linalg.norm(m - a)
    ub = (m - b) / np.linalg.norm(m - b)
    v = w_a * ua + w_b * ub
    c = m + rho * v
    w_c = float(np.linalg.norm(v))
    uc = (m - c) / np.linalg.norm(m - c)
    residual = float(np.linalg.norm(w_a * ua + w_b * ub + w_c * uc))
    verified = residual <= 1e-8 and w_c < w_a + w_b
    return ThreePointWitness(c, w_c, bool(verified), residual)
