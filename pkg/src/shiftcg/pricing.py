"""Pricing subproblem: minimum reduced-cost shift as a resource-constrained
shortest path on the shift digraph.

Every job-tailed arc carries, per scenario, the monoid triple of the single
job at its tail (times shifted by the break duration when the arc implies a
break), plus a real component holding minus the job's dual value (and the
wage on arcs into an end vertex).  Concatenating arc resources along a path
reproduces the shift's per-scenario rescheduling counts and its reduced
cost.  A backward sweep of meets yields per-vertex lower bounds; best-first
enumeration keyed by the optimistic completion cost then finds the cheapest
o-d path, stops early at a target threshold, or collects every path below a
gap.

The engine exploits a structural fact: along any search state every resource
is tag-uniform across scenarios (identity until the first job arc, triples
after), so candidate keys need only the kept-first-job count branch and the
full resource of a partial path is materialized once, when it is popped.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from . import digraph as dg
from .errors import CapacityError, InvalidInputError, StructureError
from .model import Instance
from .monoid import (NEG_INF, TAG_NEUTRAL, TAG_TOP, TAG_TRIPLE, Resource,
                     resource_cost, resource_plus)

_KIND_E = 0  # identity resource
_KIND_S = 1  # one triple per scenario


def _splus_fields(fa, fb):
    """Triple (+) triple on raw field bundles; broadcasts (n,) against
    (deg, n)."""
    bga, doca, dota, dtca, dtta = fa
    bgb, docb, dotb, dtcb, dttb = fb
    cond_do = dota <= bgb
    do_c = doca + np.where(cond_do, docb, dtcb)
    do_t = np.where(cond_do, dotb, dttb)
    cond_dt = dtta <= bgb
    dt_c = dtca + np.where(cond_dt, docb, dtcb)
    dt_t = np.where(cond_dt, dotb, dttb)
    return (np.broadcast_to(bga, do_c.shape), do_c, do_t, dt_c, dt_t)


def _meet_fields(fa, fb):
    """Triple meet on raw field bundles."""
    bga, doca, dota, dtca, dtta = fa
    bgb, docb, dotb, dtcb, dttb = fb
    pick_do = (doca < docb) | ((doca == docb) & (dota <= dotb))
    pick_dt = (dtca < dtcb) | ((dtca == dtcb) & (dtta <= dttb))
    return (np.maximum(bga, bgb),
            np.where(pick_do, doca, docb), np.where(pick_do, dota, dotb),
            np.where(pick_dt, dtca, dtcb), np.where(pick_dt, dtta, dttb))


class ArcResources:
    """Per-arc resources for a digraph under the current duals.

    The scenario triples depend on the instance only; the real component is
    ``-dual`` on job-to-job arcs and ``wage - dual`` on job-to-end arcs.
    """

    def __init__(self, context: "PricingContext", lam: np.ndarray):
        self.context = context
        self.digraph = context.digraph
        self.n_scenarios = context.instance.n_scenarios
        self.cbu = context.instance.cbu
        self.is_triple = context.is_triple
        self.bg = context.bg
        self.do_c = context.do_c
        self.do_t = context.do_t
        self.dt_c = context.dt_c
        self.dt_t = context.dt_t
        lam.setflags(write=False)
        self.lam = lam

    def fields(self, a: int):
        return (self.bg[a], self.do_c[a], self.do_t[a], self.dt_c[a], self.dt_t[a])

    def resource(self, a: int) -> Resource:
        if not self.is_triple[a]:
            return Resource.identity(self.n_scenarios, float(self.lam[a]))
        return Resource(np.full(self.n_scenarios, TAG_TRIPLE, dtype=np.int8),
                        *self.fields(a), float(self.lam[a]))


class PricingContext:
    """Caches everything dual-independent (scenario triples and per-vertex
    arc stacks) so column generation refreshes only the real parts."""

    def __init__(self, digraph: dg.Digraph, instance: Instance):
        self.digraph = digraph
        self.instance = instance
        n_arcs = digraph.n_arcs
        n_scen = instance.n_scenarios
        xb = {j.id: np.array([w.of(j.id).xb for w in instance.scenarios],
                             dtype=np.int64) for j in instance.jobs}
        xe = {j.id: np.array([w.of(j.id).xe for w in instance.scenarios],
                             dtype=np.int64) for j in instance.jobs}
        vl = {j.id: np.array([w.of(j.id).vl for w in instance.scenarios],
                             dtype=bool) for j in instance.jobs}

        self.is_triple = np.zeros(n_arcs, dtype=bool)
        shape = (n_arcs, n_scen)
        self.bg = np.zeros(shape, dtype=np.int64)
        self.do_c = np.zeros(shape, dtype=np.int64)
        self.do_t = np.zeros(shape, dtype=np.int64)
        self.dt_c = np.zeros(shape, dtype=np.int64)
        self.dt_t = np.zeros(shape, dtype=np.int64)
        self.tail_job: list[Optional[str]] = [None] * n_arcs

        tbr = instance.rules.tbr
        for a, (t, _h) in enumerate(digraph.arcs):
            kind = digraph.arc_kind[a]
            if kind not in dg.JOB_TAILED_KINDS:
                continue
            j = digraph.vertices[t].job
            self.tail_job[a] = j
            self.is_triple[a] = True
            self.bg[a] = xb[j]
            late = vl[j]
            end = xe[j] + (tbr if kind in dg.BREAK_AFTER_KINDS else 0)
            self.do_c[a] = np.where(late, 1, 0)
            self.do_t[a] = np.where(late, NEG_INF, end)
            self.dt_c[a] = 1
            self.dt_t[a] = NEG_INF
        for arr in (self.is_triple, self.bg, self.do_c, self.do_t,
                    self.dt_c, self.dt_t):
            arr.setflags(write=False)

        # per-vertex stacks of out-arc data, in out-arc order
        self.arc_ids = [np.array(arcs, dtype=np.int64)
                        for arcs in digraph.out_arcs]
        self.heads = [np.array([digraph.arcs[a][1] for a in arcs],
                               dtype=np.int64) for arcs in digraph.out_arcs]
        self.stack_triple = [bool(self.is_triple[arcs[0]]) if arcs else False
                             for arcs in digraph.out_arcs]
        self.arc_stacks = []
        for v, arcs in enumerate(digraph.out_arcs):
            if arcs and self.stack_triple[v]:
                idx = self.arc_ids[v]
                self.arc_stacks.append(tuple(
                    f[idx] for f in (self.bg, self.do_c, self.do_t,
                                     self.dt_c, self.dt_t)))
            else:
                self.arc_stacks.append(None)
            if arcs:
                kinds = {bool(self.is_triple[a]) for a in arcs}
                if len(kinds) != 1:
                    raise StructureError("out-arcs of one vertex mix resource kinds")

    def arc_resources(self, duals: Mapping[str, float]) -> ArcResources:
        lam = np.array(self.digraph.wage_cost, dtype=float)
        for a, j in enumerate(self.tail_job):
            if j is None:
                continue
            try:
                lam[a] -= duals[j]
            except KeyError:
                raise InvalidInputError(f"no dual value supplied for job {j!r}")
        return ArcResources(self, lam)


def build_arc_resources(digraph: dg.Digraph, instance: Instance,
                        duals: Mapping[str, float]) -> ArcResources:
    return PricingContext(digraph, instance).arc_resources(duals)


# ---------------------------------------------------------------------------
# Per-vertex lower bounds
# ---------------------------------------------------------------------------


class BoundSet:
    """One lower-bound resource per vertex: for every v-d path Q the stored
    bound is below Q's resource, so optimistic completion costs never
    overestimate.  Sizes above one are accepted but collapse to the single
    meet-based bound."""

    def __init__(self, kinds, fields, lam, n_scenarios: int, kappa: int):
        self.kinds = kinds  # (n_vertices,) int8: _KIND_E/_KIND_S/top=2
        self.fld = fields  # 5-tuple of (n_vertices, n_scen)
        self.lam = lam  # (n_vertices,)
        self.n_scenarios = n_scenarios
        self.kappa = kappa

    def bounds(self, v: int) -> list[Resource]:
        n = self.n_scenarios
        if self.kinds[v] == _KIND_E:
            return [Resource.identity(n, float(self.lam[v]))]
        if self.kinds[v] == 2:
            return [Resource.top(n, float(self.lam[v]))]
        return [Resource(np.full(n, TAG_TRIPLE, dtype=np.int8),
                         *(f[v] for f in self.fld), float(self.lam[v]))]


def compute_bounds(digraph: dg.Digraph, arcres: ArcResources,
                   kappa: int = 1) -> BoundSet:
    """Reverse-topological sweep: the bound at v is the meet over out-arcs of
    (arc resource + bound at the head); vertices that cannot reach d get the
    absorbing top (empty meet)."""
    if kappa < 1:
        raise InvalidInputError("kappa must be at least 1")
    if not digraph.is_topologically_ordered():
        raise StructureError("bound computation requires an acyclic digraph")
    ctx = arcres.context
    n_v, n_s = digraph.n_vertices, arcres.n_scenarios
    kinds = np.full(n_v, 2, dtype=np.int8)  # 2 = top (no way out)
    fields = tuple(np.zeros((n_v, n_s), dtype=np.int64) for _ in range(5))
    lam = np.full(n_v, np.inf)
    d = digraph.destination
    kinds[d] = _KIND_E
    lam[d] = 0.0
    for v in range(n_v - 2, -1, -1):
        arcs = ctx.arc_ids[v]
        if not len(arcs):
            continue
        heads = ctx.heads[v]
        live = kinds[heads] != 2
        if not live.any():
            continue
        arcs, heads = arcs[live], heads[live]
        cand_lam = arcres.lam[arcs] + lam[heads]
        head_kinds = kinds[heads]
        if ctx.stack_triple[v]:
            stack = tuple(f[live] for f in ctx.arc_stacks[v])
            if (head_kinds == _KIND_S).all():
                rows = _splus_fields(stack, tuple(f[heads] for f in fields))
            elif (head_kinds == _KIND_E).all():
                rows = stack
            else:
                s_rows = _splus_fields(stack, tuple(f[heads] for f in fields))
                mask = (head_kinds == _KIND_S)[:, None]
                rows = tuple(np.where(mask, s, a) for s, a in zip(s_rows, stack))
            kinds[v] = _KIND_S
        else:
            # identity arcs pass the head bounds through unchanged
            if (head_kinds == _KIND_E).all():
                kinds[v] = _KIND_E
                lam[v] = float(cand_lam.min())
                continue
            if not (head_kinds == _KIND_S).all():
                raise StructureError("mixed bound kinds under identity arcs")
            rows = tuple(f[heads] for f in fields)
            kinds[v] = _KIND_S
        acc = _meet_reduce_rows(rows)
        for f, m in zip(fields, acc):
            f[v] = m
        lam[v] = float(cand_lam.min())
    return BoundSet(kinds, fields, lam, n_s, kappa)


def _meet_reduce_rows(rows):
    """Meet along axis 0 of stacked (deg, n) field bundles by halving."""
    rows = tuple(np.asarray(r) for r in rows)
    k = rows[0].shape[0]
    while k > 1:
        half = k // 2
        merged = _meet_fields(tuple(r[:half] for r in rows),
                              tuple(r[half:2 * half] for r in rows))
        if k % 2:
            rows = tuple(np.concatenate([m, r[k - 1:k]])
                         for m, r in zip(merged, rows))
        else:
            rows = merged
        k = rows[0].shape[0]
    return tuple(r[0] for r in rows)


# ---------------------------------------------------------------------------
# Partial paths and the optimistic completion key
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartialPath:
    """A path from the origin with its accumulated resource."""

    vertices: tuple[int, ...]
    resource: Resource

    @property
    def end(self) -> int:
        return self.vertices[-1]

    @classmethod
    def empty(cls, digraph: dg.Digraph, n_scenarios: int) -> "PartialPath":
        return cls((digraph.origin,), Resource.identity(n_scenarios))

    def extend(self, arc: int, arcres: ArcResources) -> "PartialPath":
        t, h = arcres.digraph.arcs[arc]
        if t != self.end:
            raise StructureError("arc does not extend this path")
        return PartialPath(self.vertices + (h,),
                           resource_plus(self.resource, arcres.resource(arc)))


def key(p: PartialPath, bounds: BoundSet, cbu: float) -> float:
    """Optimistic cost of completing ``p`` to the destination: the best cost
    of its resource extended by any stored bound at its last vertex."""
    values = [resource_cost(resource_plus(p.resource, b), cbu)
              for b in bounds.bounds(p.end)]
    return min(values) if values else float("inf")


# ---------------------------------------------------------------------------
# Enumeration engine
# ---------------------------------------------------------------------------


class _Node:
    __slots__ = ("vertex", "kind", "fields", "lam")

    def __init__(self, vertex, kind, fields, lam):
        self.vertex = vertex
        self.kind = kind
        self.fields = fields
        self.lam = lam


@dataclass
class _VertexTable:
    heads: np.ndarray
    ext_kind: int  # _KIND_E or _KIND_S (rows at +inf carried by inf_mask)
    ext_lam: np.ndarray  # (deg,)
    inf_rows: np.ndarray  # (deg,) bool: completion impossible
    # key ingredients (triple tables): chosen count branch of arc+bound rows
    bg_t: Optional[np.ndarray]  # (deg, n)
    do_c_t: Optional[np.ndarray]
    dt_c_t: Optional[np.ndarray]
    base_cost: np.ndarray  # (deg,): key of each row under an identity prefix
    # arc side, for materializing popped resources
    arc_triple: bool
    arc_stack: Optional[tuple]
    arc_lam: np.ndarray


def _build_tables(digraph: dg.Digraph, arcres: ArcResources, bounds: BoundSet,
                  cbu: float) -> list[Optional[_VertexTable]]:
    ctx = arcres.context
    n_s = arcres.n_scenarios
    scale = cbu / n_s if n_s else 0.0
    tables: list[Optional[_VertexTable]] = [None] * digraph.n_vertices
    for v in range(digraph.n_vertices):
        arcs = ctx.arc_ids[v]
        if not len(arcs):
            continue
        heads = ctx.heads[v]
        head_kinds = bounds.kinds[heads]
        inf_rows = head_kinds == 2
        ext_lam = arcres.lam[arcs] + np.where(inf_rows, 0.0, bounds.lam[heads])
        arc_lam = arcres.lam[arcs]
        bound_rows = tuple(f[heads] for f in bounds.fld)
        if ctx.stack_triple[v]:
            stack = ctx.arc_stacks[v]
            s_mask = (head_kinds == _KIND_S)[:, None]
            combined = _splus_fields(stack, bound_rows)
            ext = tuple(np.where(s_mask, c, a) for c, a in zip(combined, stack))
            ext_kind = _KIND_S
        else:
            if (head_kinds[~inf_rows] == _KIND_E).all():
                # identity arcs into identity bounds: pure pass-through
                base = ext_lam.copy()
                base[inf_rows] = np.inf
                tables[v] = _VertexTable(heads, _KIND_E, ext_lam, inf_rows,
                                         None, None, None, base, False, None,
                                         arc_lam)
                continue
            ext = bound_rows
            ext_kind = _KIND_S
        base = scale * ext[1].sum(axis=1) + ext_lam
        base[inf_rows] = np.inf
        tables[v] = _VertexTable(heads, ext_kind, ext_lam, inf_rows,
                                 ext[0], ext[1], ext[3], base,
                                 ctx.stack_triple[v], ctx.arc_stacks[v],
                                 arc_lam)
    return tables


def _materialize(parent: _Node, table: _VertexTable, row: int,
                 vertex: int) -> _Node:
    lam = parent.lam + float(table.arc_lam[row])
    if not table.arc_triple:
        return _Node(vertex, parent.kind, parent.fields, lam)
    arc_fields = tuple(f[row] for f in table.arc_stack)
    if parent.kind == _KIND_E:
        return _Node(vertex, _KIND_S, arc_fields, lam)
    return _Node(vertex, _KIND_S, _splus_fields(parent.fields, arc_fields), lam)


def _child_keys(node: _Node, table: _VertexTable, scale: float) -> np.ndarray:
    if node.kind == _KIND_E:
        return table.base_cost + node.lam
    node_count = int(node.fields[1].sum())
    if table.ext_kind == _KIND_E:
        keys = scale * node_count + node.lam + table.ext_lam
        return np.where(table.inf_rows, np.inf, keys)
    take_do = node.fields[2][None, :] <= table.bg_t
    counts = np.where(take_do, table.do_c_t, table.dt_c_t).sum(axis=1)
    keys = scale * (node_count + counts) + node.lam + table.ext_lam
    return np.where(table.inf_rows, np.inf, keys)


def _search(digraph: dg.Digraph, arcres: ArcResources, bounds: BoundSet,
            cbu: float, *, delta: Optional[float] = None,
            gap: Optional[float] = None, list_cap: int = 10_000_000,
            trace: Optional[list] = None):
    """Best-first enumeration over partial paths.

    Minimization mode (``gap is None``): returns the cheapest o-d path and
    its cost, stopping early on the first completed path at or below
    ``delta`` when given.  Collection mode: returns every o-d path with cost
    at or below ``gap``.
    """
    n_s = arcres.n_scenarios
    scale = cbu / n_s if n_s else 0.0
    collect = gap is not None
    tables = _build_tables(digraph, arcres, bounds, cbu)
    d = digraph.destination
    o = digraph.origin

    root = _Node(o, _KIND_E, None, 0.0)
    if bounds.kinds[o] == 2:
        root_key = float("inf")
    elif bounds.kinds[o] == _KIND_E:
        root_key = float(bounds.lam[o])
    else:
        root_key = float(scale * bounds.fld[1][o].sum() + bounds.lam[o])

    heap: list = []
    incumbent = float("inf")
    best_path: Optional[tuple[int, ...]] = None
    found: list[tuple[tuple[int, ...], float]] = []
    pushes = 0
    pops = 0
    if root_key <= gap if collect else root_key < incumbent:
        heap.append((root_key, 1, (o,), root, -1))
        pushes = 1

    while heap:
        key_val, length, vseq, parent, row = heapq.heappop(heap)
        pops += 1
        if trace is not None:
            trace.append((pops, len(heap), incumbent if not collect else len(found)))
        # keys never decrease along extensions, so pops arrive in
        # non-decreasing key order and nothing beyond these limits remains
        if collect:
            if key_val > gap:
                break
        elif key_val >= incumbent:
            break
        v = vseq[-1]
        if v == d:
            # the bound at d is the identity, so the key equals the true cost
            cost = key_val
            if collect:
                found.append((vseq, cost))
            elif cost < incumbent:
                incumbent = cost
                best_path = vseq
                if delta is not None and cost <= delta:
                    break
            continue
        if row < 0:
            node = parent  # the root carries its own (empty) resource
        else:
            node = _materialize(parent, tables[parent.vertex], row, v)
        table = tables[v]
        if table is None:
            continue
        keys = _child_keys(node, table, scale)
        bound_val = gap if collect else incumbent
        ok = keys <= bound_val if collect else keys < bound_val
        for i in np.flatnonzero(ok):
            pushes += 1
            if pushes > list_cap:
                raise CapacityError(
                    f"candidate path list exceeded {list_cap} entries; "
                    "the gap enumeration would need a branch-and-price")
            heapq.heappush(heap, (float(keys[i]), length + 1,
                                  vseq + (int(table.heads[i]),), node, int(i)))

    if collect:
        return found
    if best_path is None:
        return None
    return best_path, incumbent


def enumerate_min(digraph: dg.Digraph, arcres: ArcResources, bounds: BoundSet,
                  cbu: float, *, list_cap: int = 10_000_000, trace=None):
    """Cheapest o-d path and its cost, or ``None`` when no path exists."""
    return _search(digraph, arcres, bounds, cbu, list_cap=list_cap, trace=trace)


def enumerate_threshold(digraph: dg.Digraph, arcres: ArcResources,
                        bounds: BoundSet, cbu: float, delta: float, *,
                        list_cap: int = 10_000_000, trace=None):
    """Like :func:`enumerate_min`, but returns the first completed path whose
    cost is at or below ``delta`` (possibly suboptimal)."""
    return _search(digraph, arcres, bounds, cbu, delta=delta,
                   list_cap=list_cap, trace=trace)


def enumerate_below(digraph: dg.Digraph, arcres: ArcResources,
                    bounds: BoundSet, cbu: float, gap: float, *,
                    list_cap: int = 10_000_000, trace=None):
    """All o-d paths with cost at or below ``gap`` (inclusive), as
    (vertex tuple, cost) pairs in cost order."""
    return _search(digraph, arcres, bounds, cbu, gap=gap,
                   list_cap=list_cap, trace=trace)


def write_trace_csv(trace, path) -> None:
    """Persist a search trace of (iteration, candidate-list size, incumbent)
    rows collected through the ``trace`` argument of the enumerators."""
    with open(path, "w") as fh:
        fh.write("iteration,list_size,incumbent\n")
        for iteration, list_size, incumbent in trace:
            fh.write(f"{iteration},{list_size},{incumbent}\n")
