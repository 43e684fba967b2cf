"""Restricted master: covering LP with duals, exact integer covering."""

import itertools
import random

import numpy as np
import pytest

from shiftcg.digraph import build_digraph
from shiftcg.errors import UncoveredJobError
from shiftcg.master import (Column, ColumnPool, singleton_pool, solve_ip,
                            solve_lp)
from shiftcg.model import (Instance, Job, JobRef, RuleParams, Shift, WageCurve,
                           evaluate_cost)

from conftest import random_instance


def make_pool(entries):
    """entries: list of (cost, covered ids)."""
    pool = ColumnPool()
    for i, (cost, covered) in enumerate(entries):
        s = Shift(0, 60 + i, tuple(JobRef(j) for j in covered))
        pool.add(Column(s, float(cost), frozenset(covered)))
    return pool


def vertex_enumeration_optimum(costs, cover_sets, jobs):
    """Exhaustive LP-vertex oracle for min c'y, coverage >= 1, y >= 0: every
    vertex has at most m positive coordinates fixed by a square subsystem."""
    m, n = len(jobs), len(costs)
    rows = {j: i for i, j in enumerate(jobs)}
    a = np.zeros((m, n))
    for k, covered in enumerate(cover_sets):
        for j in covered:
            a[rows[j], k] = 1.0
    best = np.inf
    for size in range(0, m + 1):
        for support in itertools.combinations(range(n), size):
            for tight in itertools.combinations(range(m), size):
                sub = a[np.ix_(tight, support)]
                if size and abs(np.linalg.det(sub)) < 1e-9:
                    continue
                y = np.zeros(n)
                if size:
                    try:
                        y[list(support)] = np.linalg.solve(sub, np.ones(size))
                    except np.linalg.LinAlgError:
                        continue
                if (y < -1e-9).any():
                    continue
                if (a @ y < 1 - 1e-9).any():
                    continue
                best = min(best, float(np.dot(costs, y)))
    return best


def test_partition_pool_is_tight():
    pool = make_pool([(4.0, ("a", "b")), (3.0, ("c",))])
    lp = solve_lp(pool, ["a", "b", "c"])
    assert lp.objective == pytest.approx(7.0)
    assert lp.primal == pytest.approx([1.0, 1.0])


def test_identical_coverage_prefers_cheaper():
    pool = make_pool([(5.0, ("a",)), (7.0, ("a",))])
    lp = solve_lp(pool, ["a"])
    assert lp.objective == pytest.approx(5.0)
    assert lp.primal[0] == pytest.approx(1.0)
    assert lp.duals["a"] <= 5.0 + 1e-9


def test_odd_cycle_gap():
    pool = make_pool([(1.0, ("a", "b")), (1.0, ("b", "c")), (1.0, ("a", "c"))])
    lp = solve_lp(pool, ["a", "b", "c"])
    sel, obj = solve_ip(pool, ["a", "b", "c"])
    assert lp.objective == pytest.approx(1.5)
    assert obj == pytest.approx(2.0)
    assert len(sel) == 2


def test_uncovered_job_is_named():
    pool = make_pool([(1.0, ("a",))])
    with pytest.raises(UncoveredJobError) as err:
        solve_lp(pool, ["a", "zz"])
    assert err.value.job_id == "zz"
    with pytest.raises(UncoveredJobError):
        solve_ip(pool, ["a", "zz"])


def test_lp_matches_vertex_enumeration(rng):
    for _ in range(40):
        m = rng.randint(2, 5)
        n = rng.randint(m, 10)
        jobs = [f"t{i}" for i in range(m)]
        entries = []
        for k in range(n):
            size = rng.randint(1, m)
            covered = tuple(sorted(rng.sample(jobs, size)))
            entries.append((round(rng.uniform(1, 9), 2), covered))
        entries.append((10.0, tuple(jobs)))  # guarantee feasibility
        pool = make_pool(entries)
        lp = solve_lp(pool, jobs)
        oracle = vertex_enumeration_optimum(
            [c for c, _ in entries], [set(cv) for _, cv in entries], jobs)
        assert lp.objective == pytest.approx(oracle, abs=1e-7)


def test_ip_matches_subset_enumeration(rng):
    for _ in range(30):
        m = rng.randint(2, 5)
        n = rng.randint(3, 9)
        jobs = [f"t{i}" for i in range(m)]
        entries = []
        for k in range(n):
            size = rng.randint(1, m)
            covered = tuple(sorted(rng.sample(jobs, size)))
            entries.append((round(rng.uniform(1, 9), 2), covered))
        entries.append((11.0, tuple(jobs)))
        pool = make_pool(entries)
        _, obj = solve_ip(pool, jobs)
        best = np.inf
        for mask in range(1, 1 << len(entries)):
            covered = set()
            cost = 0.0
            for k in range(len(entries)):
                if mask >> k & 1:
                    cost += entries[k][0]
                    covered |= set(entries[k][1])
            if covered >= set(jobs):
                best = min(best, cost)
        assert obj == pytest.approx(best)


def test_lp_ip_singleton_sandwich_and_dual_certificate(rng):
    for _ in range(15):
        inst = random_instance(rng, n_jobs=rng.randint(3, 6),
                               n_scenarios=rng.randint(0, 3))
        g = build_digraph(inst)
        pool = singleton_pool(inst, g)
        singleton_total = sum(col.cost for col in pool)
        lp = solve_lp(pool, [j.id for j in inst.jobs])
        sel, ip = solve_ip(pool, [j.id for j in inst.jobs])
        assert lp.objective <= ip + 1e-9
        assert ip <= singleton_total + 1e-9
        # dual certificate at the LP optimum
        worst = min(col.cost - sum(lp.duals[j] for j in col.covered)
                    for col in pool)
        assert worst >= -1e-7


def test_adding_columns_never_raises_lp(rng):
    inst = random_instance(rng, n_jobs=4, n_scenarios=2)
    g = build_digraph(inst)
    pool = singleton_pool(inst, g)
    jobs = [j.id for j in inst.jobs]
    before = solve_lp(pool, jobs).objective
    from shiftcg.digraph import enumerate_all_shifts
    for s in enumerate_all_shifts(g, inst)[:10]:
        pool.add_shift(s, inst)
        after = solve_lp(pool, jobs).objective
        assert after <= before + 1e-9
        before = after


def test_pool_deduplicates(rng):
    inst = random_instance(rng, n_jobs=3, n_scenarios=1)
    g = build_digraph(inst)
    pool = singleton_pool(inst, g)
    n = len(pool)
    col = pool.columns[0]
    assert not pool.add(col)
    assert not pool.add_shift(col.shift, inst)
    assert len(pool) == n


def test_singleton_pool_costs_are_consistent(rng):
    inst = random_instance(rng, n_jobs=5, n_scenarios=3)
    g = build_digraph(inst)
    pool = singleton_pool(inst, g)
    assert pool.covered_jobs() == {j.id for j in inst.jobs}
    for col in pool:
        assert col.cost == pytest.approx(evaluate_cost(col.shift, inst))
