"""Dense two-phase simplex for the small LPs used throughout the package.

Every LP here has at most a few hundred rows, so a full tableau with Bland's
anti-cycling rule is both fast enough and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-11
COST_TOL = 1e-10


class LPError(RuntimeError):
    """Raised when an LP that must be solvable is infeasible or unbounded."""


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    fun: float | None
    iterations: int

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def _pivot(T: np.ndarray, r: int, s: int) -> None:
    T[r] /= T[r, s]
    col = T[:, s].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _simplex(T: np.ndarray, basis: list[int], ncols: int, max_iter: int) -> tuple[str, int]:
    """Run Bland-rule primal simplex on tableau ``T`` (last row = reduced costs).

    Only the first ``ncols`` columns may enter the basis.
    """
    m = T.shape[0] - 1
    it = 0
    while it < max_iter:
        cost = T[-1, :ncols]
        scale = 1.0 + np.abs(cost).max(initial=0.0)
        candidates = np.flatnonzero(cost < -COST_TOL * scale)
        if candidates.size == 0:
            return "optimal", it
        s = int(candidates[0])
        col = T[:m, s]
        rhs = T[:m, -1]
        pos = col > PIVOT_TOL
        if not pos.any():
            return "unbounded", it
        ratios = np.full(m, np.inf)
        ratios[pos] = rhs[pos] / col[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * (1.0 + abs(best)))
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, r, s)
        basis[r] = s
        it += 1
    raise LPError(f"simplex did not terminate in {max_iter} iterations")


def linprog(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    free=None,
    max_iter: int = 50_000,
) -> LPResult:
    """Minimize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x == b_eq``.

    Variables are nonnegative except where the boolean mask ``free`` is set.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    free = np.zeros(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.shape[1] != n or A_eq.shape[1] != n:
        raise ValueError("constraint matrices do not match the cost vector")

    # free variables are split as x = x+ - x-
    free_idx = np.flatnonzero(free)
    n_split = n + free_idx.size
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    def split(A):
        return np.hstack([A, -A[:, free_idx]])

    A = np.zeros((m, n_split + m_ub))
    A[:m_ub, :n_split] = split(A_ub)
    A[:m_ub, n_split:] = np.eye(m_ub)
    A[m_ub:, :n_split] = split(A_eq)
    b = np.concatenate([b_ub, b_eq])
    cost = np.concatenate([c, -c[free_idx], np.zeros(m_ub)])
    n_std = A.shape[1]

    neg = b < 0
    A[neg] *= -1.0
    b = np.where(neg, -b, b)

    # slack columns serve as the initial basis where their sign survived
    basis: list[int] = [-1] * m
    for i in range(m_ub):
        if not neg[i]:
            basis[i] = n_split + i
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)

    T = np.zeros((m + 1, n_std + n_art + 1))
    T[:m, :n_std] = A
    T[:m, -1] = b
    for k, i in enumerate(art_rows):
        T[i, n_std + k] = 1.0
        basis[i] = n_std + k

    iterations = 0
    if n_art:
        T[-1, n_std:n_std + n_art] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        status, it = _simplex(T, basis, n_std + n_art, max_iter)
        iterations += it
        scale = 1.0 + np.abs(b).max(initial=0.0)
        if -T[-1, -1] > 1e-9 * scale:
            return LPResult("infeasible", None, None, iterations)
        # drive remaining artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n_std:
                row = T[i, :n_std]
                nz = np.flatnonzero(np.abs(row) > 1e-9)
                if nz.size:
                    _pivot(T, i, int(nz[0]))
                    basis[i] = int(nz[0])
                else:
                    keep[i] = False
        if not keep.all():
            T = np.vstack([T[:m][keep], T[-1:]])
            basis = [bj for bj, k in zip(basis, keep) if k]
            m = len(basis)
        T = np.hstack([T[:, :n_std], T[:, -1:]])

    T[-1, :] = 0.0
    T[-1, :n_std] = cost
    for i, bj in enumerate(basis):
        if T[-1, bj] != 0.0:
            T[-1] -= T[-1, bj] * T[i]
    status, it = _simplex(T, basis, n_std, max_iter)
    iterations += it
    if status != "optimal":
        return LPResult(status, None, None, iterations)

    z = np.zeros(n_std)
    for i, bj in enumerate(basis):
        z[bj] = T[i, -1]
    x = z[:n].copy()
    x[free_idx] -= z[n:n_split]
    return LPResult("optimal", x, float(c @ x), iterations)


def feasible_point(A_ub=None, b_ub=None, A_eq=None, b_eq=None, n: int | None = None, free=None):
    """Return a feasible point of the constraint system or ``None``."""
    if n is None:
        src = A_ub if A_ub is not None else A_eq
        n = np.atleast_2d(src).shape[1]
    res = linprog(np.zeros(n), A_ub, b_ub, A_eq, b_eq, free=free)
    return res.x if res.success else None
