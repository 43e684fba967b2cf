"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import random
from typing import Optional

import pytest

from shiftcg.digraph import Digraph, build_digraph, iter_od_paths, path_to_shift
from shiftcg.model import (Break, Instance, Job, JobRealization, JobRef,
                           RuleParams, Scenario, Shift, WageCurve, simulate)
from shiftcg.monoid import NEG_INF, NEUTRAL, Resource, SElement, s_cost, s_plus, triple


# ---------------------------------------------------------------------------
# Random monoid elements (membership guaranteed by construction)
# ---------------------------------------------------------------------------


def random_triple(rng: random.Random, tmax: int = 200, cmax: int = 5) -> SElement:
    """Draw bg and the rescheduled-first branch, then derive the kept-first
    branch from one of the three coupling rules."""
    bg = rng.randint(0, tmax)
    dt_c = rng.randint(1, cmax)
    dt_t = NEG_INF if rng.random() < 0.3 else rng.randint(0, tmax)
    rule = rng.choice(("below", "above", "tie"))
    if rule == "below" and dt_t != NEG_INF:
        do_t = NEG_INF if dt_t == 0 or rng.random() < 0.3 else rng.randint(0, dt_t - 1)
        do_c = dt_c
    elif rule == "above":
        do_t = rng.randint(dt_t + 1, tmax + 1) if dt_t != NEG_INF else rng.randint(0, tmax)
        do_c = dt_c - 1
    else:
        do_t = dt_t
        do_c = rng.choice((dt_c, dt_c - 1))
    return triple(bg, do_c, do_t, dt_c, dt_t)


def random_element(rng: random.Random, p_special: float = 0.1) -> SElement:
    from shiftcg.monoid import TOP
    u = rng.random()
    if u < p_special / 2:
        return NEUTRAL
    if u < p_special:
        return TOP
    return random_triple(rng)


# ---------------------------------------------------------------------------
# Random instances (small enough for exhaustive digraph oracles)
# ---------------------------------------------------------------------------


def random_instance(rng: random.Random, n_jobs: int = 5, n_scenarios: int = 3,
                    n_hb: int = 2, n_hf: int = 2, with_lunch: bool = True,
                    delay_std: float = 20.0, vl_prob: float = 0.08) -> Instance:
    """Small instance whose jobs all fit at least one (hb, phase, he) slot."""
    day0 = 480
    for _attempt in range(100):
        hb_set = tuple(sorted(rng.sample(
            [day0, day0 + 60, day0 + 120, day0 + 180], k=n_hb)))
        tm = rng.choice((420, 480, 540))
        hf_candidates = [day0 + 360, day0 + 420, day0 + 480, day0 + 540]
        hf_set = tuple(sorted(rng.sample(hf_candidates, k=n_hf)))
        if with_lunch:
            tbl = day0 + rng.choice((210, 240))
            tel = tbl + 150
            tbr, tml = 45, rng.choice((60, 90))
        else:
            tbl, tel = day0 + 900, day0 + 1000
            tbr, tml = 30, 90
        rules = RuleParams(tm=tm, tbl=tbl, tel=tel, tbr=tbr, tml=tml,
                           hb_set=hb_set, hf_set=hf_set)
        jobs = []
        tries = 0
        while len(jobs) < n_jobs and tries < 60 * n_jobs:
            tries += 1
            length = rng.randint(25, 70)
            tb = rng.randint(hb_set[0], hf_set[-1] - length)
            job = Job(f"j{len(jobs)}", tb, tb + length)
            if _singleton_slot_exists(job, rules):
                jobs.append(job)
        if len(jobs) == n_jobs:
            break
    else:
        raise RuntimeError("could not draw a coverable job set")

    scenarios = []
    for _ in range(n_scenarios):
        realized = {}
        for job in jobs:
            delay = max(0, round(rng.gauss(5, delay_std)))
            xb = job.tb + delay
            realized[job.id] = JobRealization(xb, xb + (job.te - job.tb),
                                              rng.random() < vl_prob)
        scenarios.append(Scenario(realized))

    wage = WageCurve(((0, 300.0), (360, 300.0), (tm, 300.0 + 2.0 * (tm - 360))))
    return Instance(tuple(jobs), tuple(scenarios), rules, wage,
                    cbu=rng.choice((120.0, 240.0)))


def _singleton_slot_exists(job: Job, rules: RuleParams) -> bool:
    for hb in rules.hb_set:
        if job.tb < hb or job.te > hb + rules.tm:
            continue
        if hb <= rules.tel - rules.tml and job.te <= rules.tel - rules.tbr:
            for he in rules.hf_set:
                if he < rules.tbl + rules.tml and job.te <= he <= hb + rules.tm:
                    return True
                if he >= rules.tbl + rules.tml and job.te + rules.tbr <= he <= hb + rules.tm:
                    return True
        if hb > rules.tel - rules.tml and job.tb >= rules.tbl + rules.tbr:
            for he in rules.hf_set:
                if he >= rules.tbl + rules.tml and job.te <= he <= hb + rules.tm:
                    return True
    return False


def random_duals(rng: random.Random, instance: Instance,
                 scale: float = 400.0) -> dict[str, float]:
    return {j.id: round(rng.uniform(0, scale), 3) for j in instance.jobs}


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------


def scalar_path_resource(path, digraph: Digraph, arcres) -> tuple[list, float]:
    """Fold arc resources along a path with the scalar monoid operations
    (independent of the vectorized engine)."""
    n = arcres.n_scenarios
    elems = [NEUTRAL] * n
    lam = 0.0
    for t, h in zip(path, path[1:]):
        a = digraph.arc_index[(t, h)]
        r = arcres.resource(a)
        elems = [s_plus(elems[w], r.element(w)) for w in range(n)]
        lam += r.lam
    return elems, lam


def scalar_cost(elems, lam: float, cbu: float) -> float:
    if not elems:
        return lam
    return cbu / len(elems) * sum(s_cost(e) for e in elems) + lam


def brute_force_paths(digraph: Digraph, arcres, cbu: float):
    """Every o-d path with its true cost, by DFS with vectorized resources
    (prefix sharing); independent of the best-first search."""
    from shiftcg.monoid import resource_cost, resource_plus

    d = digraph.destination
    out = []

    def walk(v, vs, res):
        if v == d:
            out.append((tuple(vs), resource_cost(res, cbu)))
            return
        for a in digraph.out_arcs[v]:
            h = digraph.arcs[a][1]
            walk(h, vs + [h], resource_plus(res, arcres.resource(a)))

    walk(digraph.origin, [digraph.origin], Resource.identity(arcres.n_scenarios))
    return out


def simulate_first_rescheduled(shift: Shift, scenario: Scenario,
                               rules: RuleParams) -> frozenset[str]:
    """Replay the rules under the hypothesis that the first job was handed to
    a back-up agent (oracle for the dt branch)."""
    rescheduled: set[str] = set()
    acts = shift.activities
    first_seen = False
    for i, act in enumerate(acts):
        if not isinstance(act, JobRef):
            continue
        if not first_seen:
            rescheduled.add(act.job)
            first_seen = True
            continue
        rec = scenario.of(act.job)
        if rec.vl:
            rescheduled.add(act.job)
            continue
        prev_job = None
        slack = 0
        if i >= 1 and isinstance(acts[i - 1], JobRef):
            prev_job = acts[i - 1].job
        elif i >= 2 and isinstance(acts[i - 1], Break) and isinstance(acts[i - 2], JobRef):
            prev_job = acts[i - 2].job
            slack = rules.tbr
        if prev_job is None or prev_job in rescheduled:
            continue
        if scenario.of(prev_job).xe > rec.xb - slack:
            rescheduled.add(act.job)
    return frozenset(rescheduled)


def last_job_release(shift: Shift, scenario: Scenario, rules: RuleParams,
                     rescheduled: frozenset[str]) -> int:
    """Expected do_t/dt_t value: the realized end of the final job (+break
    duration when a break follows it), or -inf when that job is rescheduled."""
    acts = shift.activities
    job_positions = [i for i, a in enumerate(acts) if isinstance(a, JobRef)]
    last = job_positions[-1]
    job = acts[last].job
    if job in rescheduled:
        return NEG_INF
    end = scenario.of(job).xe
    if last + 1 < len(acts) and isinstance(acts[last + 1], Break):
        end += rules.tbr
    return end


def partition_optimum(instance: Instance, shifts) -> float:
    """Exact minimum-cost covering over a full shift pool by bitmask DP on
    the cheapest cost per covered job set (independent of any LP)."""
    from shiftcg.model import evaluate_cost

    ids = sorted(j.id for j in instance.jobs)
    bit = {j: 1 << i for i, j in enumerate(ids)}
    best_by_mask: dict[int, float] = {}
    for s in shifts:
        mask = 0
        for j in s.job_ids:
            mask |= bit[j]
        c = evaluate_cost(s, instance)
        if c < best_by_mask.get(mask, float("inf")):
            best_by_mask[mask] = c
    full = (1 << len(ids)) - 1
    inf = float("inf")
    dp = [inf] * (full + 1)
    dp[0] = 0.0
    for m in range(1, full + 1):
        low = m & (-m)
        for mask, c in best_by_mask.items():
            if mask & low:
                rest = m & ~mask
                if dp[rest] + c < dp[m]:
                    dp[m] = dp[rest] + c
    return dp[full]


def random_feasible_shift_with_breaks(rng: random.Random, instance: Instance,
                                      max_jobs: int = 4) -> Optional[Shift]:
    """A structurally valid, feasible shift with one or more breaks placed
    between jobs (at most one per gap), not necessarily well-scheduled."""
    from shiftcg.model import is_feasible

    r = instance.rules
    jobs = sorted(instance.jobs, key=lambda j: (j.tb, j.te))
    picked: list[Job] = []
    for job in jobs:
        if picked and picked[-1].te > job.tb:
            continue
        if rng.random() < 0.6:
            picked.append(job)
        if len(picked) == max_jobs:
            break
    if not picked:
        return None
    hb = max((t for t in r.hb_set if t <= picked[0].tb), default=None)
    he = min((t for t in r.hf_set if t >= picked[-1].te), default=None)
    if hb is None or he is None or he - hb > r.tm:
        return None
    acts: list = []
    for i, job in enumerate(picked):
        acts.append(JobRef(job.id))
        nxt = picked[i + 1].tb if i + 1 < len(picked) else he
        lo = max(job.te, r.tbl)
        hi = min(nxt, r.tel) - r.tbr
        if hi >= lo and rng.random() < 0.7:
            t0 = rng.randint(lo, hi)
            acts.append(Break(t0, t0 + r.tbr))
    shift = Shift(hb, he, tuple(acts))
    if not shift.breaks:
        return None
    if not is_feasible(shift, r, instance.jobs_by_id):
        return None
    return shift


@pytest.fixture
def rng():
    return random.Random(20240817)
