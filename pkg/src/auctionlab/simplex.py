"""Small dense linear programs by the two-phase tableau simplex method.

Intended for LPs with tens of variables and constraints. Bland's rule is used
for pivoting, so the method terminates on degenerate problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-9


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: np.ndarray | None
    objective: float | None

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def _pivot(tab: np.ndarray, basis: list, row: int, col: int):
    tab[row] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and tab[r, col] != 0.0:
            tab[r] -= tab[r, col] * tab[row]
    basis[row] = col


def _run(tab: np.ndarray, basis: list, allowed: np.ndarray, tol: float) -> bool:
    """Minimize the objective held in the last row; False if unbounded."""
    m = tab.shape[0] - 1
    while True:
        cost = tab[-1, :-1]
        cand = np.flatnonzero((cost < -tol) & allowed)
        if cand.size == 0:
            return True
        col = int(cand[0])
        colv = tab[:m, col]
        pos = colv > tol
        if not pos.any():
            return False
        ratios = np.full(m, np.inf)
        ratios[pos] = tab[:m, -1][pos] / colv[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        row = min(ties, key=lambda r: basis[r])
        _pivot(tab, basis, int(row), col)


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, tol: float = TOL) -> LPResult:
    """Minimize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq`` and ``x >= 0``."""
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.shape[1] != n or A_eq.shape[1] != n or len(b_ub) != len(A_ub) or len(b_eq) != len(A_eq):
        raise ValueError("constraint shapes do not match the objective")
    m_ub, m_eq = len(A_ub), len(A_eq)
    m = m_ub + m_eq
    # columns: x (n), slacks (m_ub), artificials (m), rhs
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1
    b = np.abs(b)
    n_real = n + m_ub
    tab = np.zeros((m + 1, n_real + m + 1))
    tab[:m, :n_real] = A
    tab[:m, n_real:n_real + m] = np.eye(m)
    tab[:m, -1] = b
    tab[-1, :n_real] = -A.sum(axis=0)
    tab[-1, -1] = -b.sum()
    basis = list(range(n_real, n_real + m))

    _run(tab, basis, np.ones(n_real + m, dtype=bool), tol)
    if -tab[-1, -1] > 1e-7 * max(1.0, b.sum()):
        return LPResult("infeasible", None, None)

    # drive artificials out of the basis; rows with no real pivot are redundant
    keep = []
    for r in range(m):
        if basis[r] >= n_real:
            nz = np.flatnonzero(np.abs(tab[r, :n_real]) > tol)
            if nz.size == 0:
                continue
            _pivot(tab, basis, r, int(nz[0]))
        keep.append(r)
    tab = np.vstack([tab[keep], tab[-1:]])
    basis = [basis[r] for r in keep]

    tab[-1] = 0.0
    tab[-1, :n] = c
    for r, j in enumerate(basis):
        if tab[-1, j] != 0.0:
            tab[-1] -= tab[-1, j] * tab[r]
    allowed = np.zeros(tab.shape[1] - 1, dtype=bool)
    allowed[:n_real] = True
    if not _run(tab, basis, allowed, tol):
        return LPResult("unbounded", None, None)
    x = np.zeros(n_real + m)
    for r, j in enumerate(basis):
        x[j] = tab[r, -1]
    x = np.maximum(x[:n], 0.0)
    return LPResult("optimal", x, float(c @ x))
