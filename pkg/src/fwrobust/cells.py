"""Elementary convex sets of a sample and its elementary hull (dimension 1 and 2).

A point ``y`` determines, for every sample point ``a``, the face
``subdiff gauge(y - a)`` of the dual ball.  The tuple of these faces is the
*signature* of ``y``; points sharing a signature form the relative interior of
one elementary cell, and the closure of that set is the cell itself.  In the
plane the cells are the faces of the arrangement of rays ``a + R+ u`` over
sample points ``a`` and primal vertices ``u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GaugeError, InputError, InvariantError, PreconditionError
from .gauges import TOL, PolyhedralGauge, _hull_2d
from .lp import linprog
from .solver import WeightedSample, is_fw_point

Signature = tuple[tuple[int, ...], ...]


def _require_low_dim(g) -> None:
    if not isinstance(g, PolyhedralGauge):
        raise GaugeError("cell computations need a polyhedral gauge")
    if g.dim > 2:
        raise PreconditionError(f"cell computations support dimension 1 and 2 only, got {g.dim}")


def _points(A, dim: int) -> np.ndarray:
    if isinstance(A, WeightedSample):
        A = A.points
    pts = np.asarray(A, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[1] != dim or len(pts) == 0:
        raise InputError(f"expected a nonempty list of {dim}-dimensional points")
    # coincident points give the same fan; keep one apex each
    out: list[np.ndarray] = []
    for p in pts:
        if not any(np.array_equal(p, q) for q in out):
            out.append(p)
    return np.array(out)


def _scale(A: np.ndarray) -> float:
    return 1.0 + float(np.abs(A).max())


def signature(g: PolyhedralGauge, A: np.ndarray, y, tol: float = TOL) -> Signature:
    """Active dual vertices of ``y - a`` for every ``a`` (all of them when ``y = a``)."""
    y = np.asarray(y, dtype=float)
    atol = 1e-12 * _scale(A)
    return tuple(tuple(int(i) for i in g.active(y - a, tol, atol)) for a in A)


# ---------------------------------------------------------------------------
# normal cones


@dataclass
class Cone:
    """``cone(generators)``; an empty generator list is the zero cone."""

    generators: np.ndarray

    @property
    def is_zero(self) -> bool:
        return len(self.generators) == 0


def cone_of_face(g: PolyhedralGauge, p, tol: float = TOL) -> Cone:
    """Normal cone ``N(p)`` spanned by the exposed primal face ``{x in B : <p, x> = 1}``.

    ``p`` may be a dual vector or a SubgradientFace, in which case its relative
    interior point is used.
    """
    if hasattr(p, "relint_point"):
        p = p.relint_point
    p = np.asarray(p, dtype=float)
    U = g.primal_vertices
    vals = U @ p
    if vals.max() < 1.0 - tol:
        return Cone(np.zeros((0, g.dim)))
    return Cone(U[vals >= 1.0 - tol].copy())


def primal_face(g: PolyhedralGauge, S) -> np.ndarray:
    """Primal vertices ``u`` with ``<p, u> = 1`` for every dual vertex index in ``S``."""
    P, U = g.dual_vertices, g.primal_vertices
    S = list(S)
    if not S:
        return U.copy()
    ok = np.all(U @ P[S].T >= 1.0 - 1e-9, axis=1)
    return U[ok]


# ---------------------------------------------------------------------------
# cells


@dataclass
class ElementaryCell:
    signature: Signature
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    dim: int
    vertices: np.ndarray  # of the box-clipped cell; ordered (ccw polygon / segment endpoints)
    bounded: bool
    bounded_by_faces: bool
    representative: np.ndarray

    def contains(self, y, tol: float = 1e-9) -> bool:
        """Membership in the closed cell."""
        y = np.asarray(y, dtype=float)
        scale = tol * (1.0 + np.abs(y).max())
        if len(self.b_eq) and np.max(np.abs(self.A_eq @ y - self.b_eq)) > scale:
            return False
        return not (len(self.b_ub) and np.max(self.A_ub @ y - self.b_ub) > scale)

    def measure(self) -> float:
        if self.dim == 0:
            return 0.0
        if self.dim == 1:
            return float(np.linalg.norm(self.vertices[-1] - self.vertices[0]))
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(abs(x @ np.roll(y, -1) - y @ np.roll(x, -1)))

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "bounded": self.bounded,
            "vertices": self.vertices.tolist(),
            "representative": self.representative.tolist(),
            "signature": [list(s) for s in self.signature],
        }


def _halfspaces(g: PolyhedralGauge, A: np.ndarray, sig: Signature):
    """Closed H-description of the cell with signature ``sig``."""
    P = g.dual_vertices
    eq, beq, ub, bub = [], [], [], []
    for a, S in zip(A, sig):
        p0 = P[S[0]]
        for j in S[1:]:
            r = P[j] - p0
            n = np.linalg.norm(r)
            eq.append(r / n)
            beq.append(r @ a / n)
        for j in sorted(set(range(len(P))) - set(S)):
            r = P[j] - p0
            n = np.linalg.norm(r)
            ub.append(r / n)
            bub.append(r @ a / n)
    d = g.dim
    return (
        np.array(eq).reshape(-1, d),
        np.array(beq),
        np.array(ub).reshape(-1, d),
        np.array(bub),
    )


def _recession_bounded(g: PolyhedralGauge, A: np.ndarray, sig: Signature) -> bool:
    """Bounded iff the recession cone ``cap_a N(S_a)`` is zero.

    Nonzero ``z`` in ``N(S)`` has ``<p0, z> = gauge(z) > 0``, so ``<p0, z> = 1``
    normalises the search for a recession direction.
    """
    P = g.dual_vertices
    d = g.dim
    eq, ub = [], []
    for S in sig:
        p0 = P[S[0]]
        eq += [P[j] - p0 for j in S[1:]]
        ub += [P[j] - p0 for j in range(len(P)) if j not in S]
    eq.append(P[sig[0][0]])
    b_eq = np.zeros(len(eq))
    b_eq[-1] = 1.0
    A_ub = np.array(ub).reshape(-1, d) if ub else None
    b_ub = np.zeros(len(ub)) if ub else None
    res = linprog(np.zeros(d), A_ub=A_ub, b_ub=b_ub, A_eq=np.array(eq), b_eq=b_eq, free=np.ones(d, dtype=bool))
    return not res.success


def _face_intersection_bounded(g: PolyhedralGauge, sig: Signature) -> bool:
    """Bounded iff no ``x`` in the primal ball has ``<p, x> = 1`` for all active ``p`` of all points."""
    P = g.dual_vertices
    d = g.dim
    used = sorted(set().union(*map(set, sig)))
    res = linprog(
        np.zeros(d),
        A_ub=P,
        b_ub=np.ones(len(P)),
        A_eq=P[used],
        b_eq=np.ones(len(used)),
        free=np.ones(d, dtype=bool),
    )
    return not res.success


def _clip_polygon(poly: list[np.ndarray], n: np.ndarray, b: float) -> list[np.ndarray]:
    """Sutherland-Hodgman step for the half-plane ``<n, y> <= b``."""
    out: list[np.ndarray] = []
    k = len(poly)
    for i in range(k):
        cur, nxt = poly[i], poly[(i + 1) % k]
        fc, fn = n @ cur - b, n @ nxt - b
        if fc <= 0:
            out.append(cur)
        if (fc < 0 < fn) or (fn < 0 < fc):
            t = fc / (fc - fn)
            out.append(cur + t * (nxt - cur))
    return out


def _dedupe(pts: list[np.ndarray], tol: float) -> np.ndarray:
    out: list[np.ndarray] = []
    for p in pts:
        if not out or np.max(np.abs(p - out[-1])) > tol:
            out.append(p)
    if len(out) > 1 and np.max(np.abs(out[0] - out[-1])) <= tol:
        out.pop()
    return np.array(out)


@dataclass
class WorkBox:
    lo: np.ndarray
    hi: np.ndarray

    def halfspaces(self):
        d = len(self.lo)
        return np.vstack([np.eye(d), -np.eye(d)]), np.concatenate([self.hi, -self.lo])


def working_box(g: PolyhedralGauge, A: np.ndarray, extra: np.ndarray | None = None) -> WorkBox:
    """Axis box of side at least ``10 diam(A) (1 + sigma)`` holding every arrangement vertex."""
    pts = A if extra is None or len(extra) == 0 else np.vstack([A, extra])
    center = 0.5 * (A.min(axis=0) + A.max(axis=0))
    diam = float(np.linalg.norm(A.max(axis=0) - A.min(axis=0)))
    half = max(5.0 * max(diam, 1.0) * (1.0 + g.skewness), 1.5 * float(np.abs(pts - center).max()) + 1.0)
    return WorkBox(center - half, center + half)


def _build_cell(g: PolyhedralGauge, A: np.ndarray, sig: Signature, box: WorkBox, V: np.ndarray | None = None) -> ElementaryCell:
    A_eq, b_eq, A_ub, b_ub = _halfspaces(g, A, sig)
    d = g.dim
    scale = _scale(np.vstack([A, box.lo, box.hi]))
    rank = 0 if len(A_eq) == 0 else int(np.linalg.matrix_rank(A_eq, tol=1e-9))
    B_ub, bb_ub = box.halfspaces()
    all_ub = np.vstack([A_ub, B_ub])
    all_b = np.concatenate([b_ub, bb_ub])
    cdim = d - rank
    if cdim == 0:
        y = np.linalg.lstsq(A_eq, b_eq, rcond=None)[0]
        verts = y[None, :]
    elif cdim == 1 and d == 2 or (cdim == 1 and d == 1):
        if d == 2:
            nrm = A_eq[0]
            y0 = np.linalg.lstsq(A_eq, b_eq, rcond=None)[0]
            direc = np.array([-nrm[1], nrm[0]])
        else:
            y0, direc = np.zeros(1), np.ones(1)
        lo, hi = -np.inf, np.inf
        for r, b in zip(all_ub, all_b):
            c = r @ direc
            rhs = b - r @ y0
            if abs(c) <= 1e-12:
                if rhs < -1e-9 * scale:
                    raise InvariantError("empty cell from a realised signature")
                continue
            if c > 0:
                hi = min(hi, rhs / c)
            else:
                lo = max(lo, rhs / c)
        if lo > hi + 1e-9 * scale:
            raise InvariantError("empty cell from a realised signature")
        verts = np.array([y0 + lo * direc, y0 + hi * direc])
        if np.max(np.abs(verts[0] - verts[1])) <= 1e-12 * scale:
            cdim = 0
            verts = verts[:1]
    else:
        poly = [np.array(c) for c in [(box.lo[0], box.lo[1]), (box.hi[0], box.lo[1]), (box.hi[0], box.hi[1]), (box.lo[0], box.hi[1])]]
        for r, b in zip(A_ub, b_ub):
            poly = _clip_polygon(poly, r, b)
            if not poly:
                break
        verts = _dedupe(poly, 1e-12 * scale)
        if len(verts) < 3:
            raise InvariantError("degenerate two-dimensional cell")
    if V is not None and len(V):
        # land exactly on arrangement vertices computed once from the rays
        for i, y in enumerate(verts):
            k = int(np.argmin(np.abs(V - y).max(axis=1)))
            if np.abs(V[k] - y).max() <= 1e-9 * scale:
                verts[i] = V[k]
    verts = verts + 0.0
    rep = verts.mean(axis=0)
    if d == 2 and cdim == 1:
        # keep the segment in a sensible reading order
        if tuple(verts[0]) > tuple(verts[1]):
            verts = verts[::-1].copy()
    bounded = _recession_bounded(g, A, sig)
    by_faces = _face_intersection_bounded(g, sig)
    cell = ElementaryCell(sig, A_eq, b_eq, A_ub, b_ub, cdim, verts, bounded, by_faces, rep)
    return cell


def elementary_cell_at(g: PolyhedralGauge, A, x, tol: float = TOL) -> ElementaryCell:
    """The cell whose relative interior contains ``x``."""
    _require_low_dim(g)
    A = _points(A, g.dim)
    x = np.asarray(x, dtype=float).ravel()
    if x.size != g.dim:
        raise InputError("dimension mismatch")
    sig = signature(g, A, x, tol)
    V = _arrangement_vertices(g, A)
    return _build_cell(g, A, sig, working_box(g, A, np.vstack([V, x[None, :]])), V)


def is_bounded_at(g: PolyhedralGauge, A, x, tol: float = TOL) -> bool:
    """Boundedness of the minimal cell at ``x`` without building its geometry."""
    _require_low_dim(g)
    A = _points(A, g.dim)
    return _recession_bounded(g, A, signature(g, A, np.asarray(x, dtype=float), tol))


# ---------------------------------------------------------------------------
# arrangement


def _rays(g: PolyhedralGauge, A: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    return [(a, u / np.linalg.norm(u)) for a in A for u in g.primal_vertices]


def _arrangement_vertices(g: PolyhedralGauge, A: np.ndarray) -> np.ndarray:
    if g.dim == 1:
        return A.copy()
    scale = _scale(A)
    rays = _rays(g, A)
    verts = [a for a in A]
    for i in range(len(rays)):
        a, u = rays[i]
        for j in range(i + 1, len(rays)):
            b, v = rays[j]
            if np.array_equal(a, b):
                continue
            M = np.column_stack([u, -v])
            det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
            if abs(det) <= 1e-12:
                continue
            t, s = np.linalg.solve(M, b - a)
            if t >= -1e-12 * scale and s >= -1e-12 * scale:
                verts.append(a + max(t, 0.0) * u)
    out: list[np.ndarray] = []
    for p in verts:
        if not any(np.max(np.abs(p - q)) <= 1e-10 * scale for q in out):
            out.append(p)
    return np.array(out) + 0.0


def _point_ray_distance(p, a, u) -> float:
    t = max(0.0, float((p - a) @ u))
    return float(np.linalg.norm(p - (a + t * u)))


def _sample_points(g: PolyhedralGauge, A: np.ndarray, V: np.ndarray) -> list[np.ndarray]:
    """Points hitting every arrangement face: the vertices, plus nearby points
    along each incident edge and inside each incident sector."""
    if g.dim == 1:
        xs = np.sort(A[:, 0])
        pts = list(xs) + list(0.5 * (xs[1:] + xs[:-1])) + [xs[0] - 1.0, xs[-1] + 1.0]
        return [np.array([x]) for x in pts]
    scale = _scale(A)
    rays = _rays(g, A)
    samples = []
    for k, v in enumerate(V):
        dirs = []
        far = []
        for a, u in rays:
            dist = _point_ray_distance(v, a, u)
            if dist <= 1e-9 * scale:
                if np.max(np.abs(v - a)) <= 1e-9 * scale:
                    dirs.append(u)
                else:
                    dirs += [u, -u]
            else:
                far.append(dist)
        others = [np.linalg.norm(v - w) for j, w in enumerate(V) if j != k]
        eps = 0.25 * min(far + others + [4.0])
        angles = sorted({round(math.atan2(d[1], d[0]), 12) for d in dirs})
        samples.append(v)
        for i, th in enumerate(angles):
            nxt = angles[(i + 1) % len(angles)] + (2 * math.pi if i + 1 == len(angles) else 0.0)
            mid = 0.5 * (th + nxt)
            samples.append(v + eps * np.array([math.cos(th), math.sin(th)]))
            samples.append(v + eps * np.array([math.cos(mid), math.sin(mid)]))
    return samples


def enumerate_cells(g: PolyhedralGauge, A, tol: float = TOL) -> list[ElementaryCell]:
    """All elementary cells of ``A``, sorted by dimension and representative point."""
    _require_low_dim(g)
    A = _points(A, g.dim)
    V = _arrangement_vertices(g, A)
    box = working_box(g, A, V)
    sigs: dict[Signature, None] = {}
    for y in _sample_points(g, A, V):
        sigs.setdefault(signature(g, A, y, tol), None)
    cells = []
    for sig in sigs:
        cell = _build_cell(g, A, sig, box, V)
        if signature(g, A, cell.representative, tol) != sig:
            raise InvariantError("cell representative left its cell")
        cells.append(cell)
    cells.sort(key=lambda c: (c.dim, tuple(np.round(c.representative, 9))))
    return cells


def locate(cells: list[ElementaryCell], g: PolyhedralGauge, A, y, tol: float = TOL) -> list[int]:
    """Indices of cells whose relative interior contains ``y``."""
    A = _points(A, g.dim)
    sig = signature(g, A, y, tol)
    return [i for i, c in enumerate(cells) if c.signature == sig]


def face_lattice(cells: list[ElementaryCell]) -> list[set[int]]:
    """For every cell, the indices of cells that are its faces (itself included)."""
    out = []
    for i, c in enumerate(cells):
        faces = {i}
        for j, f in enumerate(cells):
            if j != i and f.dim < c.dim and c.contains(f.representative):
                faces.add(j)
        out.append(faces)
    return out


def connected(cells: list[ElementaryCell], chosen: list[int], lattice: list[set[int]] | None = None) -> bool:
    """Whether the union of the closed cells ``chosen`` is connected."""
    if not chosen:
        return True
    lattice = face_lattice(cells) if lattice is None else lattice
    seen = {chosen[0]}
    stack = [chosen[0]]
    while stack:
        i = stack.pop()
        for j in chosen:
            if j not in seen and lattice[i] & lattice[j]:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(chosen)


# ---------------------------------------------------------------------------
# regions


@dataclass
class Region:
    cells: list[ElementaryCell]
    dim: int
    meta: dict = field(default_factory=dict)

    def contains(self, y, tol: float = 1e-9) -> bool:
        return any(c.contains(y, tol) for c in self.cells)

    def points(self) -> np.ndarray:
        if not self.cells:
            return np.zeros((0, self.dim))
        return np.vstack([c.vertices for c in self.cells])

    def hull_vertices(self) -> np.ndarray:
        pts = self.points()
        if self.dim == 1:
            return np.array([[pts.min()], [pts.max()]]) if len(pts) else pts
        return _hull_2d(pts)

    def area(self) -> float:
        return sum(c.measure() for c in self.cells if c.dim == self.dim)

    def is_convex(self, tol: float = 1e-9) -> bool:
        """The union equals the convex hull of its vertices (compared by area or length)."""
        H = self.hull_vertices()
        if self.dim == 1:
            return math.isclose(self.area(), float(H.max() - H.min()), rel_tol=tol, abs_tol=tol) if len(H) else True
        if len(H) < 3:
            return True
        x, y = H[:, 0], H[:, 1]
        hull_area = 0.5 * float(abs(x @ np.roll(y, -1) - y @ np.roll(x, -1)))
        return math.isclose(self.area(), hull_area, rel_tol=1e-9, abs_tol=tol)

    def interval(self) -> tuple[float, float]:
        if self.dim != 1:
            raise PreconditionError("interval() is for one-dimensional regions")
        pts = self.points()
        return float(pts.min()), float(pts.max())

    def to_json(self) -> dict:
        return {"dim": self.dim, "cells": [c.to_json() for c in self.cells], **self.meta}


def elementary_hull(g: PolyhedralGauge, A, cells: list[ElementaryCell] | None = None) -> Region:
    """Union of all bounded cells."""
    _require_low_dim(g)
    cells = enumerate_cells(g, A) if cells is None else cells
    bounded = [c for c in cells if c.bounded]
    return Region(bounded, g.dim)


def ehull_contains(g: PolyhedralGauge, A, x, tol: float = TOL) -> bool:
    return is_bounded_at(g, A, x, tol)


def probe_grid(lo, hi, n: int) -> np.ndarray:
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    axes = [np.linspace(l, h, n) for l, h in zip(lo, hi)]
    return np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(lo), -1).T


def ehull_monotone_check(g: PolyhedralGauge, D, A, n: int = 25) -> bool:
    """Every probe of ``EH(D)`` lies in ``EH(A)`` for ``D`` a subset of ``A``."""
    _require_low_dim(g)
    D = _points(D, g.dim)
    A = _points(A, g.dim)
    if not all(any(np.array_equal(d, a) for a in A) for d in D):
        raise PreconditionError("D must be a subset of A")
    eh = elementary_hull(g, D)
    probes = [c.representative for c in eh.cells] + [v for c in eh.cells for v in c.vertices]
    lo, hi = D.min(axis=0), D.max(axis=0)
    pad = 0.05 * (hi - lo) + 1e-3
    probes += [y for y in probe_grid(lo - pad, hi + pad, n) if eh.contains(y)]
    return all(ehull_contains(g, A, y) for y in probes)


# ---------------------------------------------------------------------------
# norm-case checks


@dataclass
class LinearityResult:
    lhs: float
    rhs: float
    equal: bool
    common_subgradient: bool

    def __bool__(self) -> bool:
        return self.equal == self.common_subgradient


def common_subgradient(g: PolyhedralGauge, D) -> bool:
    """LP: is there ``p`` in the dual ball with ``<p, d> = gauge(d)`` for all ``d``?"""
    P = g.dual_vertices
    D = np.atleast_2d(np.asarray(D, dtype=float))
    k = len(P)
    A_eq = np.vstack([np.ones((1, k)), D @ P.T])
    b_eq = np.concatenate([[1.0], g(D)])
    return linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq).success


def linearity_check(g: PolyhedralGauge, D, w=None, tol: float = TOL) -> LinearityResult:
    """Compare ``gauge(sum w_d d) = sum w_d gauge(d)`` with a common subgradient existing."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    w = np.ones(len(D)) if w is None else np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise InputError("weights must be positive")
    lhs = float(g(w @ D))
    rhs = float(w @ g(D))
    equal = abs(lhs - rhs) <= tol * (1.0 + rhs)
    return LinearityResult(lhs, rhs, equal, common_subgradient(g, D))


@dataclass
class ContaminantProbe:
    m: np.ndarray
    applicable: bool
    c: np.ndarray | None = None
    w_c: float | None = None
    optimal: bool = False
    branch: str = ""

    @property
    def passed(self) -> bool:
        return not self.applicable or self.optimal


def norm_eh_in_cl_check(g: PolyhedralGauge, D, w, probes, detail: bool = False):
    """For a norm, build a contaminant ``(c, w_c)`` with ``w_c < w_D`` making each probe in ``EH(D)`` optimal."""
    _require_low_dim(g)
    if not g.is_norm:
        raise PreconditionError("this check needs a symmetric gauge (a norm)")
    D = np.atleast_2d(np.asarray(D, dtype=float))
    s = WeightedSample(D, w).merged()
    D, w = s.points, s.weights
    w_D = s.total_weight
    P, U = g.dual_vertices, g.primal_vertices
    results = []
    for m in np.atleast_2d(np.asarray(probes, dtype=float)):
        if not ehull_contains(g, D, m):
            results.append(ContaminantProbe(m, False))
            continue
        hit = np.flatnonzero(np.all(D == m, axis=1))
        if hit.size:
            w_c = w_D - w[hit[0]]
            c = m.copy()
            branch = "majority"
        else:
            pd = np.array([P[g.active(m - d)].mean(axis=0) for d in D])
            q = -(w @ pd)
            w_c = float(g.dual_eval(q))
            branch = "constructive"
            if w_c <= 1e-12 * w_D:
                results.append(ContaminantProbe(m, True, None, 0.0, bool(is_fw_point(g, s, m)), "already optimal"))
                continue
            u = U[int(np.argmax(U @ (q / w_c)))]
            c = m - u
        contaminated = s.plus(c[None, :], [w_c]) if w_c > 0 else s
        ok = bool(is_fw_point(g, contaminated, m)) and w_c < w_D
        results.append(ContaminantProbe(m, True, c, w_c, ok, branch))
    verdict = all(r.passed for r in results)
    return (verdict, results) if detail else verdict
