"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq`` and
``x >= 0``.  Intended for the small LPs that arise from single routes, where
a dense tableau is perfectly adequate; large ones go to HiGHS.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy import optimize, sparse

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

TOL = 1e-9
DENSE_LIMIT = 20_000  # tableau cells (rows x columns) above which HiGHS is used


@dataclass
class LpResult:
    status: str
    x: Optional[np.ndarray] = None
    fun: float = np.nan
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


@njit(cache=True)
def _pivot(T, basis, row, col):
    T[row, :] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row:
            f = T[i, col]
            if f != 0.0:
                T[i, :] -= f * T[row, :]
    basis[row] = col


@njit(cache=True)
def _iterate(T, basis, n_cols, tol, max_iter):
    """Run Bland-rule pivots on tableau ``T`` (objective in the last row).

    Only the first ``n_cols`` columns may enter.  Returns ``(code, iters)``
    with code 0 optimal, 1 unbounded, 2 iteration limit.
    """
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    it = 0
    while it < max_iter:
        col = -1
        for j in range(n_cols):
            if T[m, j] < -tol:
                col = j
                break
        if col < 0:
            return 0, it
        row = -1
        best = np.inf
        for i in range(m):
            a = T[i, col]
            if a > tol:
                r = T[i, rhs] / a
                if r < best - tol or (abs(r - best) <= tol and basis[i] < basis[row]):
                    best = r
                    row = i
        if row < 0:
            return 1, it
        _pivot(T, basis, row, col)
        it += 1
    return 2, it


def linprog(
    c: np.ndarray,
    A_ub: Optional[np.ndarray] = None,
    b_ub: Optional[np.ndarray] = None,
    A_eq: Optional[np.ndarray] = None,
    b_eq: Optional[np.ndarray] = None,
    tol: float = TOL,
    max_iter: int = 10_000,
) -> LpResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    if m * (n + m) > DENSE_LIMIT:
        return _highs(c, A_ub, b_ub, A_eq, b_eq)

    flip_ub = b_ub < 0
    flip_eq = b_eq < 0
    n_art = int(flip_ub.sum()) + m_eq
    n_slack = m_ub
    width = n + n_slack + n_art + 1
    T = np.zeros((m + 1, width))
    basis = np.empty(m, dtype=np.int64)

    T[:m_ub, :n] = A_ub
    T[:m_ub, n : n + n_slack] = np.eye(m_ub)
    T[:m_ub, -1] = b_ub
    T[m_ub:m, :n] = A_eq
    T[m_ub:m, -1] = b_eq
    sign = np.concatenate([np.where(flip_ub, -1.0, 1.0), np.where(flip_eq, -1.0, 1.0)])
    T[:m] *= sign[:, None]

    a = n + n_slack
    for i in range(m):
        if i < m_ub and not flip_ub[i]:
            basis[i] = n + i
        else:
            T[i, a] = 1.0
            basis[i] = a
            a += 1

    iters = 0
    if n_art:
        # phase 1: minimise the sum of artificials
        T[m, :] = 0.0
        art_rows = basis >= n + n_slack
        T[m, :] = -T[:m][art_rows].sum(axis=0)
        T[m, n + n_slack : n + n_slack + n_art] = 0.0
        code, it = _iterate(T, basis, n + n_slack, tol, max_iter)
        iters += it
        if code == 2:
            raise RuntimeError("simplex iteration limit in phase 1")
        if -T[m, -1] > 1e-7 * max(1.0, np.abs(T[:m, -1]).max(initial=0.0)):
            return LpResult(INFEASIBLE, iterations=iters)
        # drive zero-level artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n + n_slack:
                cand = np.nonzero(np.abs(T[i, : n + n_slack]) > tol)[0]
                if cand.size:
                    _pivot(T, basis, i, int(cand[0]))
                else:
                    keep[i] = False
        if not keep.all():
            T = np.vstack([T[:m][keep], T[m:]])
            basis = basis[keep]
            m = basis.size
        T = np.ascontiguousarray(np.delete(T, np.s_[n + n_slack : n + n_slack + n_art], axis=1))

    # phase 2
    T[m, :] = 0.0
    T[m, :n] = c
    for i in range(m):
        j = basis[i]
        if T[m, j] != 0.0:
            T[m, :] -= T[m, j] * T[i, :]
    code, it = _iterate(T, basis, n + n_slack, tol, max_iter)
    iters += it
    if code == 2:
        raise RuntimeError("simplex iteration limit in phase 2")
    if code == 1:
        return LpResult(UNBOUNDED, iterations=iters)
    x = np.zeros(n + n_slack)
    x[basis] = T[:m, -1]
    x = np.maximum(x[:n], 0.0)
    return LpResult(OPTIMAL, x=x, fun=float(c @ x), iterations=iters)


def _highs(c, A_ub, b_ub, A_eq, b_eq) -> LpResult:
    res = optimize.linprog(
        c,
        A_ub=sparse.csr_matrix(A_ub) if A_ub.shape[0] else None,
        b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=sparse.csr_matrix(A_eq) if A_eq.shape[0] else None,
        b_eq=b_eq if A_eq.shape[0] else None,
        bounds=(0, None),
        method="highs",
    )
    iters = int(getattr(res, "nit", 0) or 0)
    if res.status == 2:
        return LpResult(INFEASIBLE, iterations=iters)
    if res.status == 3:
        return LpResult(UNBOUNDED, iterations=iters)
    if res.status != 0:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    x = np.maximum(res.x, 0.0)
    return LpResult(OPTIMAL, x=x, fun=float(c @ x), iterations=iters)


@njit(cache=True)
def solve_ub(c, A, b, tol=TOL, max_iter=10_000):
    """``min c @ x`` s.t. ``A @ x <= b``, ``x >= 0`` entirely in compiled code.

    Returns ``(code, x)`` with code 0 optimal, 1 unbounded, 2 iteration
    limit, 3 infeasible.
    """
    m, n = A.shape
    n_art = 0
    for i in range(m):
        if b[i] < 0:
            n_art += 1
    width = n + m + n_art + 1
    T = np.zeros((m + 1, width))
    basis = np.empty(m, dtype=np.int64)
    a = n + m
    for i in range(m):
        sgn = -1.0 if b[i] < 0 else 1.0
        for j in range(n):
            T[i, j] = sgn * A[i, j]
        T[i, n + i] = sgn
        T[i, width - 1] = sgn * b[i]
        if sgn > 0:
            basis[i] = n + i
        else:
            T[i, a] = 1.0
            basis[i] = a
            a += 1
    x = np.zeros(n)
    if n_art:
        for i in range(m):
            if basis[i] >= n + m:
                for j in range(n + m):
                    T[m, j] -= T[i, j]
                T[m, width - 1] -= T[i, width - 1]
        code, _ = _iterate(T, basis, n + m, tol, max_iter)
        if code == 2:
            return 2, x
        scale = 1.0
        for i in range(m):
            scale = max(scale, abs(T[i, width - 1]))
        if -T[m, width - 1] > 1e-7 * scale:
            return 3, x
        for i in range(m):
            if basis[i] >= n + m:
                # a row left with only its artificial is redundant and stays at zero
                for j in range(n + m):
                    if abs(T[i, j]) > tol:
                        _pivot(T, basis, i, j)
                        break
    T[m, :] = 0.0
    for j in range(n):
        T[m, j] = c[j]
    for i in range(m):
        j = basis[i]
        f = T[m, j]
        if f != 0.0:
            T[m, :] -= f * T[i, :]
    code, _ = _iterate(T, basis, n + m, tol, max_iter)
    if code != 0:
        return code, x
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = max(T[i, width - 1], 0.0)
    return 0, x
