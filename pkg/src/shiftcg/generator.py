"""Synthetic instance generator.

Two profiles: ``fixed-window`` puts every shift on one shared six-hour
interval with the lunch window pushed past it (no breaks arise), while
``full-day`` spreads jobs over a working day with several begin/end times
and a midday lunch window.  Delays shift a job's realized begin by a
truncated normal draw and preserve its duration; very-late flags are
independent coin flips.  Output is deterministic in the seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .digraph import job_has_singleton_slot
from .errors import InvalidInputError
from .model import (DEFAULT_CBU, Instance, Job, JobRealization, RuleParams,
                    Scenario, WageCurve, default_wage_curve)

PROFILES = ("fixed-window", "full-day")


@dataclass(frozen=True)
class GeneratorSpec:
    n_jobs: int
    n_scenarios: int
    profile: str = "full-day"
    seed: int = 0
    delay_mean: float = 8.0
    delay_std: float = 20.0
    vl_prob: float = 0.03
    day_start: int = 6 * 60
    day_end: int = 22 * 60
    job_min_len: int = 30
    job_max_len: int = 75
    cbu: Optional[float] = None

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise InvalidInputError(f"profile must be one of {PROFILES}")
        if self.n_jobs < 1 or self.n_scenarios < 0:
            raise InvalidInputError("need n_jobs >= 1 and n_scenarios >= 0")
        if not 0 <= self.vl_prob <= 1:
            raise InvalidInputError("vl_prob must be a probability")
        if self.job_min_len < 1 or self.job_max_len < self.job_min_len:
            raise InvalidInputError("bad job length bounds")


def _rules_fixed_window(spec: GeneratorSpec) -> RuleParams:
    hb = spec.day_start
    he = hb + 360
    # lunch window after the shift window: rule (2) never forces a break
    return RuleParams(tm=360, tbl=he + 30, tel=he + 180, tbr=60, tml=90,
                      hb_set=(hb,), hf_set=(he,))


def _rules_full_day(spec: GeneratorSpec) -> RuleParams:
    day = spec.day_end - spec.day_start
    if day < 6 * 60:
        raise InvalidInputError("full-day profile needs at least six hours")
    hb_set = tuple(spec.day_start + k * 120
                   for k in range(max(2, min(5, day // 180))))
    tm = min(600, day)
    hf_set = tuple(sorted({min(hb + tm, spec.day_end) for hb in hb_set}
                          | {spec.day_end}))
    mid = spec.day_start + day // 2
    return RuleParams(tm=tm, tbl=mid - 90, tel=mid + 60, tbr=60, tml=90,
                      hb_set=hb_set, hf_set=hf_set)


def generate_instance(spec: GeneratorSpec) -> Instance:
    rng = random.Random(spec.seed)
    rules = (_rules_fixed_window(spec) if spec.profile == "fixed-window"
             else _rules_full_day(spec))

    if spec.profile == "fixed-window":
        window = (rules.hb_set[0], rules.hf_set[-1])
    else:
        window = (spec.day_start, spec.day_end)
    jobs = []
    width = len(str(spec.n_jobs))
    for i in range(spec.n_jobs):
        # redraw jobs that straddle the lunch window in a way no shift can
        # host (the dead zone between the two phase guards)
        for _ in range(1000):
            length = rng.randint(spec.job_min_len, min(spec.job_max_len,
                                                       window[1] - window[0] - 1))
            tb = rng.randint(window[0], window[1] - length)
            job = Job(f"j{i:0{width}d}", tb, tb + length)
            if job_has_singleton_slot(job, rules):
                break
        else:
            raise InvalidInputError("could not place a coverable job; widen "
                                    "the horizon or the end-time grid")
        jobs.append(job)
    jobs.sort(key=lambda j: (j.tb, j.te, j.id))

    scenarios = []
    for _ in range(spec.n_scenarios):
        realized = {}
        for job in jobs:
            delay = max(0, round(rng.gauss(spec.delay_mean, spec.delay_std)))
            xb = job.tb + delay
            realized[job.id] = JobRealization(xb, xb + (job.te - job.tb),
                                              rng.random() < spec.vl_prob)
        scenarios.append(Scenario(realized))

    wage = default_wage_curve(rules.tm)
    cbu = DEFAULT_CBU if spec.cbu is None else spec.cbu
    return Instance(tuple(jobs), tuple(scenarios), rules, wage, cbu)
