"""Dense two-phase revised simplex with dual values.

Solves ``min c'x  s.t.  A x {<=,=,>=} b,  x >= 0`` at desk scale (a few
hundred rows and columns).  Returns row duals in the convention where a
``>=`` row gets a non-negative dual and a ``<=`` row a non-positive one, so
reduced costs are ``c - A'y >= 0`` at the optimum.

Pricing uses Dantzig's rule and falls back to Bland's rule after a streak of
degenerate pivots; the basis inverse is maintained by elementary row updates
with periodic refactorization.  Any LP backend honouring the same dual sign
convention can substitute for this one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
_PIVOT_TOL = 1e-10
_REFACTOR_EVERY = 150

LE, EQ, GE = "<=", "=", ">="


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray
    objective: float
    duals: np.ndarray
    reduced_costs: np.ndarray


class _Tableau:
    """Standard-form problem min c'x, Ax = b (b >= 0), x >= 0 with an
    explicit basis inverse."""

    def __init__(self, a: np.ndarray, b: np.ndarray, basis: np.ndarray):
        self.a = a
        self.b = b
        self.basis = basis.copy()
        self.m = a.shape[0]
        self._refactor()

    def _refactor(self):
        bmat = self.a[:, self.basis]
        self.binv = np.linalg.solve(bmat, np.eye(self.m))
        self.xb = self.binv @ self.b

    def duals(self, c: np.ndarray) -> np.ndarray:
        return c[self.basis] @ self.binv

    def pivot(self, enter: int, leave_row: int):
        col = self.binv @ self.a[:, enter]
        piv = col[leave_row]
        self.binv[leave_row] /= piv
        self.xb[leave_row] /= piv
        for i in range(self.m):
            if i != leave_row and abs(col[i]) > _PIVOT_TOL:
                self.binv[i] -= col[i] * self.binv[leave_row]
                self.xb[i] -= col[i] * self.xb[leave_row]
        self.basis[leave_row] = enter


def _run_simplex(tab: _Tableau, c: np.ndarray, allowed: np.ndarray,
                 max_iters: int) -> str:
    """Minimize c over the tableau, entering only ``allowed`` columns.
    Returns "optimal" or "unbounded"."""
    m = tab.m
    degenerate_streak = 0
    bland = False
    for it in range(max_iters):
        if it and it % _REFACTOR_EVERY == 0:
            tab._refactor()
        y = tab.duals(c)
        reduced = c - y @ tab.a
        reduced[~allowed] = np.inf
        reduced[tab.basis] = np.inf
        if bland:
            candidates = np.flatnonzero(reduced < -OPT_TOL)
            if candidates.size == 0:
                return "optimal"
            enter = int(candidates[0])
        else:
            enter = int(np.argmin(reduced))
            if reduced[enter] >= -OPT_TOL:
                return "optimal"
        col = tab.binv @ tab.a[:, enter]
        positive = col > _PIVOT_TOL
        if not positive.any():
            return "unbounded"
        ratios = np.full(m, np.inf)
        ratios[positive] = tab.xb[positive] / col[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + _PIVOT_TOL)
        if bland:
            leave_row = int(ties[np.argmin(tab.basis[ties])])
        else:
            leave_row = int(ties[np.argmax(col[ties])])
        if best < FEAS_TOL:
            degenerate_streak += 1
            if degenerate_streak > 10 * m:
                bland = True
        else:
            degenerate_streak = 0
        tab.pivot(enter, leave_row)
    raise RuntimeError("simplex hit its iteration limit")


def solve(c: Sequence[float], a: np.ndarray, b: Sequence[float],
          senses: Sequence[str], max_iters: int | None = None) -> LpSolution:
    """Solve min c'x s.t. A x (senses) b, x >= 0."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("A must be a matrix")
    m, n = a.shape
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    senses = list(senses)
    if len(b) != m or len(c) != n or len(senses) != m:
        raise ValueError("dimension mismatch")

    # normalize to b >= 0, then append slack/surplus and artificial columns
    a = a.copy()
    b = b.copy()
    row_sign = np.ones(m)
    senses = senses.copy()
    for i in range(m):
        if b[i] < 0:
            a[i] = -a[i]
            b[i] = -b[i]
            row_sign[i] = -1.0
            senses[i] = {LE: GE, GE: LE, EQ: EQ}[senses[i]]

    cols = [a]
    slack_of_row = {}
    art_of_row = {}
    extra = []
    k = n
    for i, s in enumerate(senses):
        if s == LE:
            col = np.zeros(m)
            col[i] = 1.0
            extra.append(col)
            slack_of_row[i] = k
            k += 1
        elif s == GE:
            col = np.zeros(m)
            col[i] = -1.0
            extra.append(col)
            slack_of_row[i] = k
            k += 1
    n_slack = k - n
    for i, s in enumerate(senses):
        if s in (GE, EQ):
            col = np.zeros(m)
            col[i] = 1.0
            extra.append(col)
            art_of_row[i] = k
            k += 1
    full = np.hstack([a] + [col[:, None] for col in extra]) if extra else a
    n_total = full.shape[1]
    n_art = n_total - n - n_slack

    basis = np.zeros(m, dtype=int)
    for i, s in enumerate(senses):
        basis[i] = slack_of_row[i] if s == LE else art_of_row[i]

    if max_iters is None:
        max_iters = 200 * (m + n_total) + 2000
    tab = _Tableau(full, b, basis)

    if n_art:
        c1 = np.zeros(n_total)
        c1[n + n_slack:] = 1.0
        allowed = np.ones(n_total, dtype=bool)
        status = _run_simplex(tab, c1, allowed, max_iters)
        if status != "optimal" or c1[tab.basis] @ tab.xb > FEAS_TOL:
            empty = np.zeros(n)
            return LpSolution("infeasible", empty, np.nan, np.zeros(m), empty)
        # pivot leftover zero-level artificials out where possible
        for row in range(m):
            if tab.basis[row] >= n + n_slack:
                line = tab.binv[row] @ full[:, : n + n_slack]
                pivots = np.flatnonzero(np.abs(line) > 1e-8)
                if pivots.size:
                    tab.pivot(int(pivots[0]), row)

    c2 = np.zeros(n_total)
    c2[:n] = c
    allowed = np.ones(n_total, dtype=bool)
    allowed[n + n_slack:] = False  # artificials may never re-enter
    status = _run_simplex(tab, c2, allowed, max_iters)
    if status == "unbounded":
        empty = np.zeros(n)
        return LpSolution("unbounded", empty, -np.inf, np.zeros(m), empty)

    x_full = np.zeros(n_total)
    x_full[tab.basis] = tab.xb
    x = x_full[:n]
    y = tab.duals(c2)[:m] * row_sign
    reduced = c - (tab.duals(c2) @ full[:, :n])
    return LpSolution("optimal", x, float(c @ x), y, reduced)
