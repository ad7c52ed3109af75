"""Finite gauges: polyhedral ones exactly, smooth ones as black boxes.

A polyhedral gauge is stored through the vertex sets of its unit ball and of
the unit ball of its dual.  With dual vertices ``P`` the gauge evaluates as
``max_p <p, x>``; with primal vertices ``U`` the dual gauge evaluates as
``max_u <p, u>``.  Vertex/facet conversion is available for ``dim <= 3``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GaugeError, InputError, PreconditionError
from .lp import linprog

TOL = 1e-9


def _as_vector(x, dim: int | None = None) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise InputError("expected a vector")
    if dim is not None and x.size != dim:
        raise InputError(f"dimension mismatch: expected {dim}, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InputError("vector has non-finite coordinates")
    return x


# ---------------------------------------------------------------------------
# vertex <-> facet conversion


def _hull_2d(points: np.ndarray) -> np.ndarray:
    """Counter-clockwise convex hull vertices (Andrew's monotone chain)."""
    pts = sorted(map(tuple, np.unique(np.round(points, 15), axis=0)))
    if len(pts) < 3:
        return np.array(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    scale = max(1.0, max(abs(c) for p in pts for c in p))
    eps = 1e-12 * scale * scale
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= eps:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= eps:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def polar_vertices(vertices: np.ndarray) -> np.ndarray:
    """Vertices of the polar of ``conv(vertices)`` (origin must be interior).

    Each facet ``{x : <p, x> = 1}`` of the hull contributes its normal ``p``.
    """
    V = np.asarray(vertices, dtype=float)
    d = V.shape[1]
    if d == 1:
        lo, hi = V.min(), V.max()
        if not lo < 0 < hi:
            raise GaugeError("origin is not interior to the unit ball")
        return np.array([[1.0 / hi], [1.0 / lo]])
    if d == 2:
        H = _hull_2d(V)
        if len(H) < 3:
            raise GaugeError("unit ball is not full-dimensional")
        normals = []
        for i in range(len(H)):
            a, b = H[i], H[(i + 1) % len(H)]
            M = np.array([a, b])
            try:
                p = np.linalg.solve(M, np.ones(2))
            except np.linalg.LinAlgError:
                raise GaugeError("origin lies on the boundary of the unit ball") from None
            normals.append(p)
        return np.array(normals)
    if d == 3:
        from scipy.spatial import ConvexHull, QhullError

        try:
            hull = ConvexHull(V)
        except QhullError as exc:
            raise GaugeError(f"degenerate unit ball: {exc}") from None
        offs = -hull.equations[:, -1]
        if np.any(offs <= TOL):
            raise GaugeError("origin is not interior to the unit ball")
        P = hull.equations[:, :-1] / offs[:, None]
        return _unique_rows(P)
    raise GaugeError("vertex/facet conversion is only supported for dim <= 3")


def _unique_rows(P: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    out: list[np.ndarray] = []
    for p in P:
        if not any(np.max(np.abs(p - q)) <= tol * (1 + np.max(np.abs(q))) for q in out):
            out.append(p)
    return np.array(out)


def extreme_points(V: np.ndarray) -> np.ndarray:
    """Drop points that are not vertices of ``conv(V)`` (dim <= 3)."""
    d = V.shape[1]
    if d == 1:
        return np.array([[V.min()], [V.max()]])
    if d == 2:
        return _hull_2d(V)
    if d == 3:
        from scipy.spatial import ConvexHull

        return V[np.sort(ConvexHull(V).vertices)]
    return _unique_rows(V)


def origin_interior(V: np.ndarray) -> bool:
    """LP test: is 0 a strictly positive combination of a spanning set ``V``?"""
    n, d = V.shape
    if np.linalg.matrix_rank(V) < d:
        return False
    res = linprog(np.zeros(n), A_ub=-np.eye(n), b_ub=-np.ones(n), A_eq=V.T, b_eq=np.zeros(d))
    return res.success


# ---------------------------------------------------------------------------
# gauges


@dataclass(frozen=True)
class SubgradientFace:
    """Face of the dual ball equal to the subdifferential of the gauge at ``point``."""

    point: np.ndarray
    indices: tuple[int, ...]
    vertices: np.ndarray

    @property
    def relint_point(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def __len__(self) -> int:
        return len(self.indices)


class PolyhedralGauge:
    """A gauge whose unit ball is a polytope containing the origin in its interior.

    Parameters
    ----------
    primal_vertices : array_like, optional
        Vertices of the unit ball ``B = {x : gauge(x) <= 1}``.
    dual_vertices : array_like, optional
        Vertices of the dual unit ball.  Either list may be omitted when the
        dimension is at most 3; it is then recovered by polarity.
    name : str, optional
        Label used in reports.
    """

    def __init__(self, primal_vertices=None, dual_vertices=None, name: str = "polyhedral", tol: float = TOL):
        if primal_vertices is None and dual_vertices is None:
            raise GaugeError("need primal_vertices or dual_vertices")
        U = None if primal_vertices is None else np.atleast_2d(np.asarray(primal_vertices, dtype=float))
        P = None if dual_vertices is None else np.atleast_2d(np.asarray(dual_vertices, dtype=float))
        for arr in (U, P):
            if arr is not None and not np.all(np.isfinite(arr)):
                raise GaugeError("non-finite vertex coordinates")
        dims = {arr.shape[1] for arr in (U, P) if arr is not None}
        if len(dims) != 1:
            raise GaugeError("primal and dual vertices have different dimensions")
        d = dims.pop()
        if d < 1:
            raise GaugeError("dimension must be at least 1")
        for label, arr in (("primal", U), ("dual", P)):
            if arr is not None:
                if np.linalg.matrix_rank(arr) < d:
                    raise GaugeError(f"{label} ball is not full-dimensional")
                if not origin_interior(arr):
                    raise GaugeError(f"origin is not in the strict interior of the {label} ball")
        if U is None:
            P = extreme_points(P)
            U = polar_vertices(P)
        elif P is None:
            U = extreme_points(U)
            P = polar_vertices(U)
        elif d <= 3:
            U, P = extreme_points(U), extreme_points(P)

        self.dim = d
        self.name = name
        self.tol = tol
        self.primal_vertices = U
        self.dual_vertices = P
        U.setflags(write=False)
        P.setflags(write=False)
        self._check_consistency()
        self.skewness, self.skew_dirs = self._compute_skewness()

    def _check_consistency(self) -> None:
        G = self.primal_vertices @ self.dual_vertices.T
        if not np.allclose(G.max(axis=1), 1.0, atol=1e-7):
            raise GaugeError("primal vertices are not on the boundary of the unit ball")
        if not np.allclose(G.max(axis=0), 1.0, atol=1e-7):
            raise GaugeError("dual vertices are not on the boundary of the dual ball")

    def _compute_skewness(self):
        vals = (-self.primal_vertices) @ self.dual_vertices.T
        g_neg = vals.max(axis=1)
        sigma = float(g_neg.max())
        if sigma < 1.0 + 1e-12 and self.is_norm:
            sigma = 1.0
        hit = np.flatnonzero(g_neg >= sigma * (1.0 - self.tol))
        dirs = -self.primal_vertices[hit] / sigma + 0.0
        order = np.lexsort(dirs.T[::-1])
        dirs = dirs[order]
        dirs.setflags(write=False)
        return sigma, dirs

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x) -> float | np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            return (x @ self.dual_vertices.T).max(axis=1)
        x = _as_vector(x, self.dim)
        return float(np.max(self.dual_vertices @ x))

    def dual_eval(self, p) -> float | np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.ndim == 2:
            return (p @ self.primal_vertices.T).max(axis=1)
        p = _as_vector(p, self.dim)
        return float(np.max(self.primal_vertices @ p))

    @property
    def is_norm(self) -> bool:
        U = self.primal_vertices
        return all(np.min(np.max(np.abs(U + u), axis=1)) <= 1e-9 for u in U)

    def is_symmetric(self) -> bool:
        return self.is_norm

    def active(self, x, tol: float | None = None, atol: float | None = None) -> np.ndarray:
        """Indices of dual vertices attaining ``gauge(x)`` (all of them at 0)."""
        tol = self.tol if tol is None else tol
        atol = tol if atol is None else atol
        vals = self.dual_vertices @ x
        g = vals.max()
        if g <= atol:
            return np.arange(len(vals))
        return np.flatnonzero(vals >= g - tol * g)

    def subdifferential(self, x, tol: float | None = None, atol: float | None = None) -> SubgradientFace:
        x = _as_vector(x, self.dim)
        idx = self.active(x, tol, atol)
        return SubgradientFace(x, tuple(int(i) for i in idx), self.dual_vertices[idx])

    def exposed_face(self, p, tol: float | None = None) -> np.ndarray:
        """Indices of primal vertices ``u`` with ``<p, u> = dual_eval(p)``."""
        tol = self.tol if tol is None else tol
        vals = self.primal_vertices @ _as_vector(p, self.dim)
        g = vals.max()
        return np.flatnonzero(vals >= g - tol * max(abs(g), 1.0))

    def dual(self) -> PolyhedralGauge:
        return PolyhedralGauge(self.dual_vertices, self.primal_vertices, name=f"dual({self.name})", tol=self.tol)

    def as_black_box(self) -> BlackBoxGauge:
        P = self.dual_vertices

        def subgrad(x):
            return P[int(np.argmax(P @ x))].copy()

        def batch(X):
            vals = X @ P.T
            idx = vals.argmax(axis=1)
            return vals[np.arange(len(X)), idx], P[idx]

        return BlackBoxGauge(
            self.dim, lambda x: float(np.max(P @ x)), subgrad, self.skewness, name=f"blackbox({self.name})", batch=batch
        )

    def descriptor(self) -> dict:
        return {
            "type": "polyhedral",
            "dim": self.dim,
            "primal_vertices": self.primal_vertices.tolist(),
            "dual_vertices": self.dual_vertices.tolist(),
        }

    def __repr__(self) -> str:
        return (
            f"PolyhedralGauge({self.name!r}, dim={self.dim}, "
            f"{len(self.primal_vertices)} primal / {len(self.dual_vertices)} dual vertices, sigma={self.skewness:.6g})"
        )


class BlackBoxGauge:
    """A gauge known only through evaluation and a subgradient oracle."""

    def __init__(
        self,
        dim: int,
        func: Callable,
        subgrad: Callable,
        skewness: float,
        name: str = "blackbox",
        batch: Callable | None = None,
    ):
        """``batch`` optionally maps an ``(n, d)`` array to ``(values, subgradients)`` row by row."""
        if dim < 1:
            raise GaugeError("dimension must be at least 1")
        if skewness < 1:
            raise GaugeError("skewness is at least 1")
        self.dim = dim
        self.func = func
        self.subgrad = subgrad
        self.skewness = float(skewness)
        self.name = name
        self._batch = batch

    def batch(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values and one subgradient for every row of ``X``."""
        if self._batch is not None:
            return self._batch(X)
        vals = np.array([self.func(r) for r in X], dtype=float)
        subs = np.array([np.asarray(self.subgrad(r), dtype=float) for r in X])
        return vals, subs

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            return np.array([self.func(row) for row in x])
        return float(self.func(_as_vector(x, self.dim)))

    def subgradient(self, x) -> np.ndarray:
        return np.asarray(self.subgrad(_as_vector(x, self.dim)), dtype=float)

    @property
    def is_euclidean(self) -> bool:
        return self.name == "euclidean"

    def spot_check(self, rng=None, n: int = 200) -> bool:
        """Sampled homogeneity and subadditivity."""
        rng = np.random.default_rng(0) if rng is None else rng
        for _ in range(n):
            x, y = rng.normal(size=(2, self.dim))
            lam = rng.uniform(0.1, 10)
            if abs(self(lam * x) - lam * self(x)) > 1e-9 * (1 + self(lam * x)):
                return False
            if self(x + y) > self(x) + self(y) + 1e-9:
                return False
        return True

    def descriptor(self) -> dict:
        if self.is_euclidean:
            return {"type": "euclidean", "dim": self.dim}
        raise GaugeError("black-box gauges other than the Euclidean norm have no descriptor")

    def __repr__(self) -> str:
        return f"BlackBoxGauge({self.name!r}, dim={self.dim}, sigma={self.skewness:.6g})"


# ---------------------------------------------------------------------------
# module-level operations


def gauge_eval(g: PolyhedralGauge, x) -> float:
    return g(x)


def dual_gauge(g: PolyhedralGauge) -> PolyhedralGauge:
    return g.dual()


def subdifferential(g: PolyhedralGauge, x, tol: float | None = None) -> SubgradientFace:
    return g.subdifferential(x, tol)


def skewness(g: PolyhedralGauge) -> tuple[float, np.ndarray]:
    return g.skewness, g.skew_dirs


def in_hull(points: np.ndarray, y: np.ndarray, tol: float = 1e-9) -> bool:
    """LP membership of ``y`` in ``conv(points)``."""
    n = len(points)
    A_eq = np.vstack([points.T, np.ones((1, n))])
    b_eq = np.concatenate([y, [1.0]])
    # L1 slack keeps the LP feasible so the residual can be thresholded
    d = points.shape[1] + 1
    A = np.hstack([A_eq, np.eye(d), -np.eye(d)])
    c = np.concatenate([np.zeros(n), np.ones(2 * d)])
    res = linprog(c, A_eq=A, b_eq=b_eq)
    return res.success and res.fun <= tol * (1 + np.abs(y).max())


def check_skew_subdiff(g: PolyhedralGauge, v, tol: float | None = None) -> bool:
    """Whether ``-(1/sigma) * subdiff(v)`` lies inside ``subdiff(-v)``.

    This inclusion holds exactly when ``v`` is a skewness direction.
    """
    tol = g.tol if tol is None else tol
    v = _as_vector(v, g.dim)
    if np.max(np.abs(v)) == 0:
        raise InputError("v must be nonzero")
    if abs(g(v) - 1.0) > 1e-7:
        raise PreconditionError(f"v must have unit gauge, got {g(v)}")
    face = g.subdifferential(v, tol)
    opposite = g.subdifferential(-v, tol)
    return all(in_hull(opposite.vertices, -p / g.skewness, 1e-8) for p in face.vertices)


# ---------------------------------------------------------------------------
# constructors


def tropical_gauge(d: int) -> PolyhedralGauge:
    """Simplicial gauge on the quotient of R^{d+1} by the all-ones line.

    Points are written in the chart that fixes coordinate 0 to zero, so the
    chart vector ``y`` stands for the class of ``(0, y_1, ..., y_d)``.  On a
    representative ``x`` the gauge is ``sum(x) - (d + 1) * min(x)``.
    """
    if int(d) != d or d < 1:
        raise GaugeError("tropical gauge needs an integer d >= 1")
    d = int(d)
    ones = np.ones(d)
    dual = np.vstack([ones, ones - (d + 1) * np.eye(d)])
    primal = np.vstack([np.eye(d), -ones])
    return PolyhedralGauge(primal, dual, name=f"tropical({d})")


def tropical_closed_form(y) -> float | np.ndarray:
    """Reference formula for the tropical gauge in the chart."""
    y = np.asarray(y, dtype=float)
    full = np.concatenate([np.zeros(y.shape[:-1] + (1,)), y], axis=-1)
    return full.sum(axis=-1) - full.shape[-1] * full.min(axis=-1)


def quantile_gauge(b: float) -> PolyhedralGauge:
    """The 1-D gauge ``max((1 - b) x, -b x)`` whose Fermat-Weber points are b-quantiles."""
    if not 0 < b < 1:
        raise GaugeError("quantile level b must lie in (0, 1)")
    return PolyhedralGauge([[1 / (1 - b)], [-1 / b]], [[1 - b], [-b]], name=f"quantile({b:g})")


def separable_gauge(bs) -> PolyhedralGauge:
    """Sum of coordinatewise quantile gauges; the dual ball is a box."""
    bs = [float(b) for b in bs]
    if not bs or any(not 0 < b < 1 for b in bs):
        raise GaugeError("each b_i must lie in (0, 1)")
    d = len(bs)
    corners = np.array(np.meshgrid(*[[1 - b, -b] for b in bs], indexing="ij")).reshape(d, -1).T
    primal = []
    for i, b in enumerate(bs):
        e = np.zeros(d)
        e[i] = 1.0
        primal += [e / (1 - b), -e / b]
    return PolyhedralGauge(np.array(primal), corners, name=f"separable({','.join(f'{b:g}' for b in bs)})")


def l1_gauge(dim: int = 2) -> PolyhedralGauge:
    """The l1 norm: unit ball is the cross-polytope, dual ball the cube."""
    primal = np.vstack([np.eye(dim), -np.eye(dim)])
    corners = np.array(np.meshgrid(*[[1.0, -1.0]] * dim, indexing="ij")).reshape(dim, -1).T
    return PolyhedralGauge(primal, corners, name=f"l1({dim})")


def polygon_gauge(vertices, name: str = "polygon") -> PolyhedralGauge:
    return PolyhedralGauge(primal_vertices=vertices, name=name)


def euclidean_gauge(dim: int = 2) -> BlackBoxGauge:
    def subgrad(x):
        n = np.linalg.norm(x)
        return x / n if n > 0 else np.zeros_like(x)

    def batch(X):
        n = np.linalg.norm(X, axis=1)
        safe = np.where(n > 0, n, 1.0)
        return n, X / safe[:, None]

    return BlackBoxGauge(dim, lambda x: float(np.linalg.norm(x)), subgrad, 1.0, name="euclidean", batch=batch)


def from_descriptor(desc: dict) -> PolyhedralGauge | BlackBoxGauge:
    if not isinstance(desc, dict) or "type" not in desc:
        raise GaugeError("gauge descriptor must be an object with a 'type' field")
    kind = desc["type"]
    try:
        if kind == "polyhedral":
            g = PolyhedralGauge(desc.get("primal_vertices"), desc.get("dual_vertices"))
            if "dim" in desc and int(desc["dim"]) != g.dim:
                raise GaugeError(f"descriptor dim {desc['dim']} does not match vertices ({g.dim})")
            return g
        if kind == "tropical":
            return tropical_gauge(desc["d"])
        if kind == "quantile":
            return quantile_gauge(float(desc["b"]))
        if kind == "separable":
            return separable_gauge(desc["b"])
        if kind == "l1":
            return l1_gauge(int(desc.get("dim", 2)))
        if kind == "euclidean":
            return euclidean_gauge(int(desc["dim"]))
    except KeyError as exc:
        raise GaugeError(f"gauge descriptor of type {kind!r} is missing {exc}") from None
    raise GaugeError(f"unknown gauge type {kind!r}")
