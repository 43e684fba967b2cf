"""Solver orchestration.

``run_column_generation`` drives the restricted-master / pricing loop with a
threshold on acceptable reduced costs that halves whenever pricing proves no
column sits below it; the loop only stops once a pricing round that ran to
completion shows the minimum reduced cost is non-negative.

``run_exact`` wraps that in the exact scheme: integer-solve the generated
pool, and when an integrality gap remains, enumerate every column whose
reduced cost is at most the gap (none outside that set can enter an optimal
integer solution) and integer-solve once more.

The compact arc-flow MILP is built for export and for direct solves on tiny
instances; it cross-checks the column-generation optimum.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import linprog
from .digraph import (Digraph, EndNode, JobNode, BL_AL, BL_BL, AL_AL,
                      JOB_TO_JOB_KINDS, build_digraph, path_to_shift)
from .errors import (CapacityError, InvalidInputError, NonConvergedError,
                     UncoveredJobError)
from .master import Column, ColumnPool, LpOutcome, singleton_pool, solve_ip, solve_lp
from .model import Instance, Shift, evaluate_cost, evaluate_solution
from .pricing import (PricingContext, compute_bounds, enumerate_below,
                      enumerate_min, enumerate_threshold)


@dataclass
class CgConfig:
    delta0: Optional[float] = None  # defaults to -cbu
    kappa: int = 1
    max_iterations: int = 1000
    reduced_cost_tol: float = 1e-9
    gap_rel_tol: float = 1e-7
    list_cap: int = 10_000_000
    node_cap: int = 1_000_000

    def resolve_delta0(self, instance: Instance) -> float:
        if self.delta0 is not None:
            if self.delta0 >= 0:
                raise InvalidInputError("delta0 must be negative")
            return self.delta0
        return -max(instance.cbu, 1.0)


@dataclass
class CgReport:
    iterations: int = 0
    columns_generated: int = 0
    converged: bool = False
    c_low: float = float("nan")
    c_upp: Optional[float] = None
    c_final: Optional[float] = None
    gap_history: list = field(default_factory=list)  # (iter, c_low, rc, delta)
    lp_time: float = 0.0
    pricing_time: float = 0.0
    ip_time: float = 0.0
    total_time: float = 0.0

    def pricing_share(self) -> float:
        return self.pricing_time / self.total_time if self.total_time else 0.0

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "columns_generated": self.columns_generated,
            "converged": self.converged,
            "c_low": self.c_low,
            "c_upp": self.c_upp,
            "c_final": self.c_final,
            "lp_time_s": round(self.lp_time, 6),
            "pricing_time_s": round(self.pricing_time, 6),
            "ip_time_s": round(self.ip_time, 6),
            "total_time_s": round(self.total_time, 6),
            "pricing_share": round(self.pricing_share(), 4),
            "gap_history": [
                {"iteration": it, "c_low": lo, "reduced_cost": rc, "delta": dl}
                for (it, lo, rc, dl) in self.gap_history
            ],
        }

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def save_gap_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,c_low,reduced_cost,delta\n")
            for it, lo, rc, dl in self.gap_history:
                fh.write(f"{it},{lo},{rc},{dl}\n")


def run_column_generation(
    instance: Instance,
    pool: Optional[ColumnPool] = None,
    config: Optional[CgConfig] = None,
    digraph: Optional[Digraph] = None,
) -> tuple[LpOutcome, ColumnPool, CgReport]:
    """Solve the master LP relaxation to optimality by column generation."""
    config = config or CgConfig()
    t0 = time.perf_counter()
    digraph = digraph or build_digraph(instance)
    context = PricingContext(digraph, instance)
    if pool is None:
        pool = singleton_pool(instance, digraph)
    job_ids = [j.id for j in instance.jobs]
    delta = config.resolve_delta0(instance)
    report = CgReport()
    outcome: Optional[LpOutcome] = None

    for it in range(1, config.max_iterations + 1):
        report.iterations = it
        t_lp = time.perf_counter()
        outcome = solve_lp(pool, job_ids)
        t_price = time.perf_counter()
        report.lp_time += t_price - t_lp

        arcres = context.arc_resources(outcome.duals)
        bounds = compute_bounds(digraph, arcres, config.kappa)
        result = enumerate_threshold(digraph, arcres, bounds, instance.cbu,
                                     delta, list_cap=config.list_cap)
        report.pricing_time += time.perf_counter() - t_price

        if result is None:
            report.converged = True
            break
        path, reduced_cost = result
        report.gap_history.append((it, outcome.objective, reduced_cost, delta))
        if reduced_cost > delta:
            delta = delta / 2.0
        shift = path_to_shift(path, instance, digraph)
        added = pool.add_shift(shift, instance)
        if added:
            report.columns_generated += 1
        if reduced_cost >= -config.reduced_cost_tol:
            report.converged = True
            break
        if not added:
            raise RuntimeError(
                "pricing returned an already-known column with negative "
                f"reduced cost {reduced_cost}; duals are inconsistent")

    report.c_low = outcome.objective if outcome else float("nan")
    report.total_time += time.perf_counter() - t0
    return outcome, pool, report


@dataclass
class ExactResult:
    shifts: list[Shift]
    objective: float
    report: CgReport
    pool: ColumnPool


def run_exact(
    instance: Instance,
    config: Optional[CgConfig] = None,
    pool: Optional[ColumnPool] = None,
) -> ExactResult:
    """Certified optimum of the shift-planning problem over decodable shifts."""
    config = config or CgConfig()
    t0 = time.perf_counter()
    digraph = build_digraph(instance)
    outcome, pool, report = run_column_generation(instance, pool, config, digraph)
    if not report.converged:
        raise NonConvergedError(
            f"column generation did not converge in {report.iterations} iterations")

    t_ip = time.perf_counter()
    selected, c_upp = solve_ip(pool, [j.id for j in instance.jobs],
                               node_cap=config.node_cap)
    report.ip_time += time.perf_counter() - t_ip
    report.c_upp = c_upp
    c_low = report.c_low

    gap = c_upp - c_low
    if gap <= config.gap_rel_tol * max(1.0, abs(c_low)):
        report.c_final = c_upp
        report.total_time = time.perf_counter() - t0
        return ExactResult([col.shift for col in selected], c_upp, report, pool)

    # inject every column whose reduced cost is within the integrality gap
    t_price = time.perf_counter()
    context = PricingContext(digraph, instance)
    arcres = context.arc_resources(outcome.duals)
    bounds = compute_bounds(digraph, arcres, config.kappa)
    try:
        below = enumerate_below(digraph, arcres, bounds, instance.cbu,
                                gap + 1e-12, list_cap=config.list_cap)
    except CapacityError as exc:
        raise CapacityError(
            f"{exc}; closing a {gap:.6g} integrality gap here needs branch-and-price,"
            " which is out of scope") from exc
    report.pricing_time += time.perf_counter() - t_price
    for path, _cost in below:
        pool.add_shift(path_to_shift(path, instance, digraph), instance)

    t_ip = time.perf_counter()
    selected, c_final = solve_ip(pool, [j.id for j in instance.jobs],
                                 node_cap=config.node_cap)
    report.ip_time += time.perf_counter() - t_ip
    report.c_final = c_final
    report.total_time = time.perf_counter() - t0
    return ExactResult([col.shift for col in selected], c_final, report, pool)


def solve_deterministic(instance: Instance,
                        config: Optional[CgConfig] = None) -> ExactResult:
    """Optimal plan of the scenario-free problem (classical job assignment)."""
    return run_exact(instance.without_scenarios(), config)


@dataclass
class ComparisonReport:
    deterministic_cost: float
    deterministic_plan_stochastic_cost: float
    stochastic_cost: float
    improvement_pct: float
    deterministic_shifts: list[Shift]
    stochastic_shifts: list[Shift]


def compare_deterministic(instance: Instance,
                          config: Optional[CgConfig] = None) -> ComparisonReport:
    """Re-price the deterministic optimum under the scenarios and report how
    much the stochastic optimum saves, as a percentage."""
    det = solve_deterministic(instance, config)
    det_eval = evaluate_solution(det.shifts, instance)
    sto = run_exact(instance, config)
    base = det_eval.total_cost
    improvement = 0.0 if base == 0 else 100.0 * (base - sto.objective) / base
    return ComparisonReport(det.objective, base, sto.objective, improvement,
                            det.shifts, sto.shifts)


# ---------------------------------------------------------------------------
# Compact arc-flow MILP
# ---------------------------------------------------------------------------


@dataclass
class CompactModel:
    """Arc-flow formulation with per-scenario back-up indicators.

    Variables: one binary ``x`` per arc (integer, not binary, on the
    end-to-destination arcs, which several selected shifts may share) and one
    binary ``y`` per job vertex and scenario.  A big-M row activates ``y`` at
    the head of a selected arc whose succession breaks under the scenario
    unless the tail's job is itself rescheduled; very-late vertices force
    ``y`` whenever the vertex is used.  Vertices without a job never need an
    indicator and carry none.
    """

    instance: Instance
    digraph: Digraph
    n_x: int
    y_index: dict  # (vertex, scenario) -> variable index
    obj: np.ndarray
    rows: list  # (coeffs dict var->float, sense, rhs, label)
    integer_x: list  # arc indices whose x may exceed 1
    m_arc: dict  # (arc, scenario) -> 1 entries only
    m_vertex: dict  # (vertex, scenario) -> 1 entries only

    @property
    def n_vars(self) -> int:
        return self.n_x + len(self.y_index)


def build_compact_model(instance: Instance) -> CompactModel:
    digraph = build_digraph(instance)
    n_arcs = digraph.n_arcs
    n_scen = instance.n_scenarios
    scen = instance.scenarios
    tbr = instance.rules.tbr

    m_arc: dict = {}
    for a, (t, h) in enumerate(digraph.arcs):
        kind = digraph.arc_kind[a]
        if kind not in JOB_TO_JOB_KINDS:
            continue
        j = digraph.vertices[t].job
        j2 = digraph.vertices[h].job
        slack = tbr if kind == BL_AL else 0
        for w in range(n_scen):
            rec, rec2 = scen[w].of(j), scen[w].of(j2)
            if rec.xe + slack > rec2.xb:
                m_arc[(a, w)] = 1

    m_vertex: dict = {}
    job_vertices = [i for i, v in enumerate(digraph.vertices)
                    if isinstance(v, JobNode)]
    for i in job_vertices:
        j = digraph.vertices[i].job
        for w in range(n_scen):
            if scen[w].of(j).vl:
                m_vertex[(i, w)] = 1

    y_index: dict = {}
    for i in job_vertices:
        for w in range(n_scen):
            y_index[(i, w)] = n_arcs + len(y_index)

    n_vars = n_arcs + len(y_index)
    obj = np.zeros(n_vars)
    obj[:n_arcs] = digraph.wage_cost
    if n_scen:
        for (i, w), k in y_index.items():
            obj[k] = instance.cbu / n_scen

    rows: list = []
    # coverage: each job's vertices receive exactly one unit of flow
    for job in sorted(j.id for j in instance.jobs):
        coeffs = {}
        for i in digraph.job_vertices.get(job, ()):
            for a in digraph.in_arcs[i]:
                coeffs[a] = coeffs.get(a, 0.0) + 1.0
        rows.append((coeffs, "=", 1.0, f"cover[{job}]"))
    # flow conservation at interior vertices
    for i, v in enumerate(digraph.vertices):
        if i in (digraph.origin, digraph.destination):
            continue
        coeffs = {a: 1.0 for a in digraph.in_arcs[i]}
        for a in digraph.out_arcs[i]:
            coeffs[a] = coeffs.get(a, 0.0) - 1.0
        rows.append((coeffs, "=", 0.0, f"flow[v{i}]"))
    # big-M delay propagation: y_head >= x_arc - y_tail (rows only where M=1)
    for (a, w) in sorted(m_arc):
        t, h = digraph.arcs[a]
        coeffs = {y_index[(h, w)]: 1.0, a: -1.0}
        if (t, w) in y_index:
            coeffs[y_index[(t, w)]] = coeffs.get(y_index[(t, w)], 0.0) + 1.0
        rows.append((coeffs, ">=", 0.0, f"delay[a{a},w{w}]"))
    # very-late vertices force the indicator whenever the vertex is used
    for (i, w) in sorted(m_vertex):
        coeffs = {y_index[(i, w)]: 1.0}
        for a in digraph.in_arcs[i]:
            coeffs[a] = coeffs.get(a, 0.0) - 1.0
        rows.append((coeffs, ">=", 0.0, f"verylate[v{i},w{w}]"))

    integer_x = [a for a, (t, _h) in enumerate(digraph.arcs)
                 if isinstance(digraph.vertices[t], EndNode)]
    return CompactModel(instance, digraph, n_arcs, y_index, obj, rows,
                        integer_x, m_arc, m_vertex)


def _var_name(model: CompactModel, k: int) -> str:
    if k < model.n_x:
        return f"x_a{k}"
    for (i, w), idx in model.y_index.items():
        if idx == k:
            return f"y_v{i}_w{w}"
    raise KeyError(k)


def export_lp_format(model: CompactModel, path) -> None:
    """Write the model in CPLEX LP text format with stable ordering."""
    names = [_var_name(model, k) for k in range(model.n_vars)]

    def expr(coeffs: dict) -> str:
        terms = []
        for k in sorted(coeffs):
            v = coeffs[k]
            if v == 0:
                continue
            sign = "-" if v < 0 else "+"
            mag = abs(v)
            coeff = "" if mag == 1 else f"{mag:.12g} "
            terms.append(f"{sign} {coeff}{names[k]}")
        if not terms:
            return "0 " + names[0]
        out = " ".join(terms)
        return out[2:] if out.startswith("+ ") else out

    lines = ["\\ stochastic shift planning, arc-flow form", "Minimize", " obj: "
             + expr({k: v for k, v in enumerate(model.obj) if v})]
    lines.append("Subject To")
    for coeffs, sense, rhs, label in model.rows:
        op = {"=": "=", ">=": ">=", "<=": "<="}[sense]
        lines.append(f" {label}: {expr(coeffs)} {op} {rhs:.12g}")
    lines.append("Bounds")
    binary_x = [a for a in range(model.n_x) if a not in set(model.integer_x)]
    for a in model.integer_x:
        lines.append(f" 0 <= {names[a]}")
    lines.append("Binaries")
    bin_names = [names[a] for a in binary_x]
    bin_names += [names[k] for k in range(model.n_x, model.n_vars)]
    for chunk in range(0, len(bin_names), 8):
        lines.append(" " + " ".join(bin_names[chunk:chunk + 8]))
    if model.integer_x:
        lines.append("Generals")
        for chunk in range(0, len(model.integer_x), 8):
            lines.append(" " + " ".join(names[a] for a in
                                        model.integer_x[chunk:chunk + 8]))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_lp_format(path) -> dict:
    """Light LP-format reader used to validate exported models round-trip."""
    sections = {"minimize": [], "subject to": [], "bounds": [],
                "binaries": [], "generals": []}
    current = None
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line or line.lstrip().startswith("\\"):
                continue
            lowered = line.strip().lower()
            if lowered in ("minimize", "maximize", "subject to", "bounds",
                           "binaries", "generals", "end"):
                current = None if lowered == "end" else lowered
                if current == "maximize":
                    current = "minimize"
                continue
            if current is None:
                raise InvalidInputError(f"unexpected content outside sections: {line!r}")
            sections[current].append(line.strip())
    variables = set()
    for line in sections["binaries"] + sections["generals"]:
        variables.update(line.split())
    constraints = []
    for line in sections["subject to"]:
        label, _, rest = line.partition(":")
        for op in ("<=", ">=", "="):
            if op in rest:
                lhs, _, rhs = rest.partition(op)
                constraints.append((label.strip(), op, float(rhs)))
                variables.update(tok for tok in lhs.split()
                                 if tok not in "+-" and not _is_number(tok))
                break
        else:
            raise InvalidInputError(f"constraint without comparator: {line!r}")
    return {"variables": sorted(variables), "constraints": constraints,
            "objective_terms": " ".join(sections["minimize"])}


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def solve_compact(instance: Instance, *, max_jobs: int = 6,
                  max_scenarios: int = 3,
                  node_cap: int = 200_000) -> tuple[list[Shift], float]:
    """Direct branch-and-bound solve of the compact MILP; guarded to toy
    sizes, where it cross-checks the column-generation optimum."""
    if len(instance.jobs) > max_jobs or instance.n_scenarios > max_scenarios:
        raise CapacityError(
            f"compact solve is capped at {max_jobs} jobs x {max_scenarios}"
            " scenarios; use the column-generation solver instead")
    model = build_compact_model(instance)
    n = model.n_vars
    base_rows = [(coeffs, sense, rhs) for coeffs, sense, rhs, _ in model.rows]
    binary_vars = [k for k in range(n) if k < model.n_x
                   and k not in set(model.integer_x)]
    binary_vars += list(range(model.n_x, n))
    for k in binary_vars:
        base_rows.append(({k: 1.0}, "<=", 1.0))

    a = np.zeros((len(base_rows), n))
    b = np.zeros(len(base_rows))
    senses = []
    for i, (coeffs, sense, rhs) in enumerate(base_rows):
        for k, v in coeffs.items():
            a[i, k] = v
        b[i] = rhs
        senses.append(sense)

    best = [np.inf, None]
    nodes = [0]

    def recurse(fix_rows: list):
        nodes[0] += 1
        if nodes[0] > node_cap:
            raise CapacityError("compact branch-and-bound node cap exceeded")
        if fix_rows:
            extra = np.zeros((len(fix_rows), n))
            eb = np.zeros(len(fix_rows))
            for i, (k, val) in enumerate(fix_rows):
                extra[i, k] = 1.0
                eb[i] = val
            aa = np.vstack([a, extra])
            bb = np.concatenate([b, eb])
            ss = senses + ["="] * len(fix_rows)
        else:
            aa, bb, ss = a, b, senses
        res = linprog.solve(model.obj, aa, bb, ss)
        if res.status != "optimal" or res.objective >= best[0] - 1e-9:
            return
        fracs = [k for k in binary_vars
                 if min(res.x[k], 1 - res.x[k]) > 1e-6]
        if not fracs:
            best[0] = res.objective
            best[1] = res.x.copy()
            return
        k = max(fracs, key=lambda i: min(res.x[i], 1 - res.x[i]))
        first = 1.0 if res.x[k] >= 0.5 else 0.0
        recurse(fix_rows + [(k, first)])
        recurse(fix_rows + [(k, 1.0 - first)])

    recurse([])
    if best[1] is None:
        raise RuntimeError("compact model is infeasible")
    shifts = _decode_flow(model, best[1])
    return shifts, float(best[0])


def _decode_flow(model: CompactModel, x: np.ndarray) -> list[Shift]:
    """Split an integral arc-flow into o-d paths and decode them."""
    digraph = model.digraph
    flow = [int(round(x[a])) for a in range(model.n_x)]
    shifts = []
    while True:
        start = next((a for a in digraph.out_arcs[digraph.origin] if flow[a] > 0),
                     None)
        if start is None:
            break
        path = [digraph.origin]
        arc = start
        while True:
            flow[arc] -= 1
            head = digraph.arcs[arc][1]
            path.append(head)
            if head == digraph.destination:
                break
            arc = next(a for a in digraph.out_arcs[head] if flow[a] > 0)
        shifts.append(path_to_shift(path, model.instance, digraph))
    return shifts
