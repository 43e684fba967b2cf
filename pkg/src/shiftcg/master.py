"""Restricted master problem: covering LP with duals and an exact integer
solve by LP-based branch-and-bound.

Coverage rows use ``>=`` (over-covering a job never pays, and it keeps the
restricted problems feasible); duals are non-negative and a column's reduced
cost is its cost minus the duals of the jobs it covers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import linprog
from .digraph import Digraph, JobNode, iter_od_paths, path_to_shift
from .errors import CapacityError, UncoveredJobError
from .model import Instance, Shift, evaluate_cost


@dataclass(frozen=True)
class Column:
    shift: Shift
    cost: float
    covered: frozenset[str]

    def key(self):
        return (self.shift.hb, self.shift.he, self.shift.activities)


class ColumnPool:
    """Deduplicated set of candidate shifts with their expected costs."""

    def __init__(self, columns: Iterable[Column] = ()):
        self.columns: list[Column] = []
        self._index: dict = {}
        for col in columns:
            self.add(col)

    def add(self, column: Column) -> bool:
        k = column.key()
        if k in self._index:
            return False
        self._index[k] = len(self.columns)
        self.columns.append(column)
        return True

    def add_shift(self, shift: Shift, instance: Instance) -> bool:
        return self.add(Column(shift, evaluate_cost(shift, instance),
                               frozenset(shift.job_ids)))

    def __len__(self):
        return len(self.columns)

    def __iter__(self):
        return iter(self.columns)

    def covered_jobs(self) -> set[str]:
        out: set[str] = set()
        for col in self.columns:
            out |= col.covered
        return out


def singleton_pool(instance: Instance, digraph: Digraph) -> ColumnPool:
    """Seed pool: for every job, the cheapest decodable shift containing only
    that job (falling back to any covering path when no singleton exists)."""
    pool = ColumnPool()
    best: dict[str, tuple[float, Shift]] = {}
    o, d = digraph.origin, digraph.destination
    for a0 in digraph.out_arcs[o]:
        v = digraph.arcs[a0][1]
        node = digraph.vertices[v]
        for a1 in digraph.out_arcs[v]:
            h = digraph.arcs[a1][1]
            if not digraph.out_arcs[h]:
                continue
            end_arc = digraph.out_arcs[h][0]
            if digraph.arcs[end_arc][1] != d:
                continue
            shift = path_to_shift([o, v, h, d], instance, digraph)
            cost = evaluate_cost(shift, instance)
            cur = best.get(node.job)
            if cur is None or cost < cur[0]:
                best[node.job] = (cost, shift)
    missing = [j.id for j in instance.jobs if j.id not in best]
    for job_id in missing:
        shift = _any_covering_shift(job_id, instance, digraph)
        if shift is None:
            raise UncoveredJobError(job_id, f"no decodable shift can cover job {job_id!r}")
        best[job_id] = (evaluate_cost(shift, instance), shift)
    for job_id in sorted(best):
        pool.add_shift(best[job_id][1], instance)
    return pool


def _any_covering_shift(job_id: str, instance: Instance,
                        digraph: Digraph) -> Optional[Shift]:
    """Breadth-first search for any o-d path through one of the job's vertices."""
    targets = set(digraph.job_vertices.get(job_id, ()))
    if not targets:
        return None
    parent: dict[int, int] = {digraph.origin: -1}
    frontier = [digraph.origin]
    hit = None
    while frontier and hit is None:
        nxt = []
        for v in frontier:
            for a in digraph.out_arcs[v]:
                h = digraph.arcs[a][1]
                if h not in parent:
                    parent[h] = v
                    if h in targets:
                        hit = h
                        break
                    nxt.append(h)
            if hit is not None:
                break
        frontier = nxt
    if hit is None:
        return None
    prefix = []
    v = hit
    while v != -1:
        prefix.append(v)
        v = parent[v]
    prefix.reverse()
    # greedily run to the destination (pruning guarantees a way out)
    v = hit
    while v != digraph.destination:
        a = digraph.out_arcs[v][0]
        v = digraph.arcs[a][1]
        prefix.append(v)
    return path_to_shift(prefix, instance, digraph)


@dataclass
class LpOutcome:
    objective: float
    primal: list[float]
    duals: dict[str, float]


def solve_lp(pool: ColumnPool, jobs: Iterable[str]) -> LpOutcome:
    """LP relaxation of the restricted master; returns one dual per job."""
    job_order = sorted(jobs)
    missing = set(job_order) - pool.covered_jobs()
    if missing:
        raise UncoveredJobError(sorted(missing)[0])
    rows = {j: i for i, j in enumerate(job_order)}
    m, n = len(job_order), len(pool)
    a = np.zeros((m, n))
    for k, col in enumerate(pool):
        for j in col.covered:
            if j in rows:
                a[rows[j], k] = 1.0
    c = np.array([col.cost for col in pool])
    res = linprog.solve(c, a, np.ones(m), [">="] * m)
    if res.status != "optimal":
        raise RuntimeError(f"restricted master LP came back {res.status}")
    duals = {j: float(res.duals[i]) for j, i in rows.items()}
    return LpOutcome(float(res.objective), [float(v) for v in res.x], duals)


def solve_ip(pool: ColumnPool, jobs: Iterable[str], *,
             node_cap: int = 1_000_000) -> tuple[list[Column], float]:
    """Exact binary covering over the pool by depth-first branch-and-bound
    with LP bounds; optimal at desk scale."""
    job_order = sorted(jobs)
    missing = set(job_order) - pool.covered_jobs()
    if missing:
        raise UncoveredJobError(sorted(missing)[0])
    cols = list(pool)
    n = len(cols)
    covers: list[frozenset[str]] = [c.covered & set(job_order) for c in cols]
    costs = np.array([c.cost for c in cols])

    best_cost = np.inf
    best_sel: Optional[list[int]] = None
    nodes = 0

    def lp_bound(excluded: frozenset[int], fixed: frozenset[int]):
        active = [k for k in range(n) if k not in excluded and k not in fixed]
        covered = set()
        for k in fixed:
            covered |= covers[k]
        open_jobs = [j for j in job_order if j not in covered]
        fixed_cost = float(costs[list(fixed)].sum()) if fixed else 0.0
        if not open_jobs:
            return fixed_cost, np.array([]), active
        rows = {j: i for i, j in enumerate(open_jobs)}
        a = np.zeros((len(open_jobs), len(active)))
        for kk, k in enumerate(active):
            for j in covers[k]:
                if j in rows:
                    a[rows[j], kk] = 1.0
        if not len(active) or (a.sum(axis=1) == 0).any():
            return np.inf, np.array([]), active
        res = linprog.solve(costs[active], a, np.ones(len(open_jobs)),
                            [">="] * len(open_jobs))
        if res.status != "optimal":
            return np.inf, np.array([]), active
        return fixed_cost + res.objective, res.x, active

    def recurse(excluded: frozenset[int], fixed: frozenset[int]):
        nonlocal best_cost, best_sel, nodes
        nodes += 1
        if nodes > node_cap:
            raise CapacityError("branch-and-bound node cap exceeded")
        bound, x, active = lp_bound(excluded, fixed)
        if bound >= best_cost - 1e-9:
            return
        frac = [kk for kk in range(len(x)) if min(x[kk], 1 - x[kk]) > 1e-6]
        if not frac:
            chosen = sorted(fixed | {active[kk] for kk in range(len(x)) if x[kk] > 0.5})
            total = float(costs[chosen].sum())
            if total < best_cost - 1e-12:
                best_cost = total
                best_sel = chosen
            return
        kk = max(frac, key=lambda i: (min(x[i], 1 - x[i]), -active[i]))
        k = active[kk]
        recurse(excluded, fixed | {k})
        recurse(excluded | {k}, fixed)

    recurse(frozenset(), frozenset())
    if best_sel is None:
        raise RuntimeError("integer master had no feasible solution")
    return [cols[k] for k in best_sel], float(best_cost)
