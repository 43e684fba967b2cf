"""Domain model: jobs, scenarios, working rules, shifts, and their costs.

A shift is a begin time, an ordered sequence of activities (jobs and breaks),
and an end time.  Under a delay scenario each job carries realized begin/end
times and a very-late flag; jobs that can no longer be operated by the
shift's own team are handed to a back-up agent.  The expected number of such
hand-overs, priced at ``cbu`` each, is the stochastic part of a shift's cost;
the deterministic part is a piecewise-linear wage on the shift duration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

from .errors import InvalidInputError, StructureError, UnknownJobError

BL = "bl"
AL = "al"


@dataclass(frozen=True)
class RuleParams:
    """Working rules: maximum duration, lunch window, break length, and the
    allowed begin/end time grids (all times are integer minutes-of-day)."""

    tm: int  # maximum shift duration
    tbl: int  # lunch window begin
    tel: int  # lunch window end
    tbr: int  # break duration
    tml: int  # max lunch-window overlap tolerated without a break
    hb_set: tuple[int, ...]  # allowed shift begin times
    hf_set: tuple[int, ...]  # allowed shift end times

    def __post_init__(self):
        object.__setattr__(self, "hb_set", tuple(int(t) for t in self.hb_set))
        object.__setattr__(self, "hf_set", tuple(int(t) for t in self.hf_set))
        if self.tm <= 0:
            raise InvalidInputError("tm must be positive")
        if not self.tbl < self.tel:
            raise InvalidInputError("lunch window must satisfy tbl < tel")
        if not 0 <= self.tbr <= self.tel - self.tbl:
            raise InvalidInputError("break duration must fit the lunch window")
        if self.tml < 0:
            raise InvalidInputError("tml must be non-negative")
        for name, grid in (("hb_set", self.hb_set), ("hf_set", self.hf_set)):
            if not grid:
                raise InvalidInputError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise InvalidInputError(f"{name} must be strictly increasing")


@dataclass(frozen=True)
class WageCurve:
    """Piecewise-linear, non-decreasing wage as a function of shift duration.

    ``breakpoints`` is a sorted list of (duration, cost) pairs starting at
    duration 0; the curve is linear between breakpoints and extends the last
    segment's slope beyond the final breakpoint.
    """

    breakpoints: tuple[tuple[int, float], ...]

    def __post_init__(self):
        pts = tuple((int(d), float(c)) for d, c in self.breakpoints)
        object.__setattr__(self, "breakpoints", pts)
        if not pts:
            raise InvalidInputError("wage curve needs at least one breakpoint")
        if pts[0][0] != 0:
            raise InvalidInputError("wage curve must start at duration 0")
        for (d0, c0), (d1, c1) in zip(pts, pts[1:]):
            if d1 <= d0:
                raise InvalidInputError("wage breakpoints must increase in duration")
            if c1 < c0:
                raise InvalidInputError("wage curve must be non-decreasing")

    def cost(self, duration: int) -> float:
        if duration < 0:
            raise InvalidInputError("duration must be non-negative")
        pts = self.breakpoints
        if len(pts) == 1:
            return pts[0][1]
        for (d0, c0), (d1, c1) in zip(pts, pts[1:]):
            if duration <= d1:
                if duration <= d0:
                    return c0
                return c0 + (c1 - c0) * (duration - d0) / (d1 - d0)
        # beyond the last breakpoint: extend the final slope
        (d0, c0), (d1, c1) = pts[-2], pts[-1]
        slope = (c1 - c0) / (d1 - d0)
        return c1 + slope * (duration - d1)


def default_wage_curve(tm: int) -> WageCurve:
    """Flat 500 up to six hours, then 2 per extra minute (shape only; all
    values are configurable through the instance file)."""
    if tm <= 360:
        return WageCurve(((0, 500.0), (tm, 500.0)))
    return WageCurve(((0, 500.0), (360, 500.0), (tm, 500.0 + 2.0 * (tm - 360))))


#: Two hours at the default extra-hour rate of 2/min.
DEFAULT_CBU = 240.0


@dataclass(frozen=True)
class Job:
    id: str
    tb: int  # scheduled begin
    te: int  # scheduled end

    def __post_init__(self):
        if not self.tb < self.te:
            raise InvalidInputError(f"job {self.id!r}: tb must be < te")


@dataclass(frozen=True)
class JobRealization:
    xb: int  # realized begin
    xe: int  # realized end
    vl: bool  # very-late flag

    def __post_init__(self):
        if self.xb > self.xe:
            raise InvalidInputError("realized times must satisfy xb <= xe")


@dataclass(frozen=True)
class Scenario:
    """One delay scenario: a realized (xb, xe, vl) record per job."""

    realized: Mapping[str, JobRealization]

    def __post_init__(self):
        object.__setattr__(self, "realized", dict(self.realized))

    def of(self, job_id: str) -> JobRealization:
        try:
            return self.realized[job_id]
        except KeyError:
            raise UnknownJobError(job_id, f"scenario has no record for job {job_id!r}")


@dataclass(frozen=True)
class JobRef:
    """Shift activity: a job, referenced by id."""

    job: str


@dataclass(frozen=True)
class Break:
    """Shift activity: a lunch break with explicit scheduled interval."""

    tb: int
    te: int

    def __post_init__(self):
        if not self.tb < self.te:
            raise InvalidInputError("break must satisfy tb < te")


Activity = Union[JobRef, Break]


@dataclass(frozen=True)
class Shift:
    """Begin time, ordered activities, end time.  The master-problem column."""

    hb: int
    he: int
    activities: tuple[Activity, ...]

    def __post_init__(self):
        object.__setattr__(self, "activities", tuple(self.activities))

    @property
    def job_ids(self) -> tuple[str, ...]:
        return tuple(a.job for a in self.activities if isinstance(a, JobRef))

    @property
    def breaks(self) -> tuple[Break, ...]:
        return tuple(a for a in self.activities if isinstance(a, Break))

    @property
    def duration(self) -> int:
        return self.he - self.hb


@dataclass(frozen=True)
class Instance:
    """A full problem instance: jobs, scenarios, rules, wage curve, back-up cost."""

    jobs: tuple[Job, ...]
    scenarios: tuple[Scenario, ...]
    rules: RuleParams
    wage: WageCurve
    cbu: float

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not self.jobs:
            raise InvalidInputError("instance needs at least one job")
        if self.cbu < 0:
            raise InvalidInputError("cbu must be non-negative")
        ids = [j.id for j in self.jobs]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("job ids must be unique")
        for scenario in self.scenarios:
            missing = set(ids) - set(scenario.realized)
            extra = set(scenario.realized) - set(ids)
            if missing or extra:
                raise InvalidInputError(
                    f"scenario records do not match jobs (missing={sorted(missing)},"
                    f" unknown={sorted(extra)})"
                )

    @cached_property
    def jobs_by_id(self) -> dict[str, Job]:
        return {j.id: j for j in self.jobs}

    @property
    def n_scenarios(self) -> int:
        return len(self.scenarios)

    def job(self, job_id: str) -> Job:
        try:
            return self.jobs_by_id[job_id]
        except KeyError:
            raise UnknownJobError(job_id)

    def without_scenarios(self) -> "Instance":
        return Instance(self.jobs, (), self.rules, self.wage, self.cbu)


# ---------------------------------------------------------------------------
# Shift structure and feasibility
# ---------------------------------------------------------------------------


def _activity_interval(activity: Activity, jobs: Mapping[str, Job]) -> tuple[int, int]:
    if isinstance(activity, Break):
        return activity.tb, activity.te
    try:
        job = jobs[activity.job]
    except KeyError:
        raise UnknownJobError(activity.job)
    return job.tb, job.te


def check_structure(shift: Shift, jobs: Mapping[str, Job]) -> None:
    """Raise unless the shift's activities are ordered, non-overlapping and
    contained in [hb, he]."""
    if not shift.activities:
        raise StructureError("shift has no activities")
    intervals = [_activity_interval(a, jobs) for a in shift.activities]
    if shift.hb > intervals[0][0]:
        raise StructureError("first activity starts before the shift begins")
    if intervals[-1][1] > shift.he:
        raise StructureError("last activity ends after the shift ends")
    for (_, e0), (b1, _) in zip(intervals, intervals[1:]):
        if e0 > b1:
            raise StructureError("activities overlap or are out of order")


def _is_ordered(shift: Shift, jobs: Mapping[str, Job]) -> bool:
    try:
        check_structure(shift, jobs)
    except StructureError:
        return False
    return True


def lunch_overlap(shift: Shift, rules: RuleParams) -> int:
    """Length of the intersection of [hb, he] with the lunch window."""
    return max(0, min(rules.tel, shift.he) - max(rules.tbl, shift.hb))


def is_feasible(shift: Shift, rules: RuleParams, jobs: Mapping[str, Job]) -> bool:
    """Working-rule check: duration cap, mandatory break on long lunch
    overlap, and the basic ordering of activities."""
    if not _is_ordered(shift, jobs):
        return False
    if shift.he - shift.hb > rules.tm:
        return False
    if lunch_overlap(shift, rules) >= rules.tml and not shift.breaks:
        return False
    return True


def is_well_scheduled(shift: Shift, rules: RuleParams, jobs: Mapping[str, Job]) -> bool:
    """Feasible, at most one break, and that break retimed to abut the next
    activity (or the lunch-window end, whichever is earlier)."""
    if not is_feasible(shift, rules, jobs):
        return False
    breaks = [i for i, a in enumerate(shift.activities) if isinstance(a, Break)]
    if len(breaks) > 1:
        return False
    for i in breaks:
        br = shift.activities[i]
        if i + 1 < len(shift.activities):
            nxt, _ = _activity_interval(shift.activities[i + 1], jobs)
            target = min(nxt, rules.tel)
        else:
            target = min(shift.he, rules.tel)
        if br.te != target or br.te - br.tb != rules.tbr:
            return False
    return True


def well_schedule(shift: Shift, rules: RuleParams, jobs: Mapping[str, Job]) -> Shift:
    """Normalize a feasible shift: drop all breaks but the first and retime
    the kept one so it abuts the following activity (never increases cost)."""
    from .errors import InfeasibleShiftError

    if not is_feasible(shift, rules, jobs):
        raise InfeasibleShiftError("well_schedule requires a feasible shift")
    if not shift.breaks:
        return shift
    first_break = next(i for i, a in enumerate(shift.activities) if isinstance(a, Break))
    kept = [a for i, a in enumerate(shift.activities)
            if isinstance(a, JobRef) or i == first_break]
    pos = kept.index(shift.activities[first_break])
    if pos + 1 < len(kept):
        nxt, _ = _activity_interval(kept[pos + 1], jobs)
        te_b = min(nxt, rules.tel)
    else:
        te_b = min(shift.he, rules.tel)
    kept[pos] = Break(te_b - rules.tbr, te_b)
    return Shift(shift.hb, shift.he, tuple(kept))


# ---------------------------------------------------------------------------
# Delay simulation and costs
# ---------------------------------------------------------------------------


def simulate(shift: Shift, scenario: Scenario, rules: RuleParams) -> frozenset[str]:
    """Replay the rescheduling rules for one scenario and return the ids of
    the jobs handed to a back-up agent.

    A job goes to a back-up agent iff it is very late, or its immediate
    predecessor job (directly before it, or separated by one break) was kept
    by the team and its realized end collides with the job's realized begin
    (shifted by the break duration when a break sits in between).  A job
    after a rescheduled job is never blocked by it.
    """
    rescheduled: set[str] = set()
    acts = shift.activities
    for i, act in enumerate(acts):
        if not isinstance(act, JobRef):
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


def evaluate_cost(shift: Shift, instance: Instance) -> float:
    """Expected shift cost: wage on the duration plus ``cbu`` times the mean
    number of rescheduled jobs over the scenarios."""
    wage = instance.wage.cost(shift.he - shift.hb)
    if not instance.scenarios:
        return wage
    total = sum(len(simulate(shift, w, instance.rules)) for w in instance.scenarios)
    return wage + instance.cbu * total / len(instance.scenarios)


@dataclass(frozen=True)
class SolutionReport:
    total_cost: float
    per_scenario_backup_counts: tuple[int, ...]
    coverage_ok: bool
    uncovered: tuple[str, ...] = ()


def evaluate_solution(shifts: Sequence[Shift], instance: Instance) -> SolutionReport:
    """Price a plan: sum of shift costs, per-scenario back-up counts, and a
    coverage check over the instance's jobs."""
    total = sum(evaluate_cost(s, instance) for s in shifts)
    counts = tuple(
        sum(len(simulate(s, w, instance.rules)) for s in shifts)
        for w in instance.scenarios
    )
    covered = set()
    for s in shifts:
        covered.update(s.job_ids)
    uncovered = tuple(sorted(j.id for j in instance.jobs if j.id not in covered))
    return SolutionReport(total, counts, not uncovered, uncovered)


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def instance_to_dict(instance: Instance) -> dict:
    r = instance.rules
    return {
        "rules": {
            "tm": r.tm, "tbl": r.tbl, "tel": r.tel, "tbr": r.tbr, "tml": r.tml,
            "hb_set": list(r.hb_set), "hf_set": list(r.hf_set),
        },
        "wage": {"breakpoints": [[d, c] for d, c in instance.wage.breakpoints]},
        "cbu": instance.cbu,
        "jobs": [{"id": j.id, "tb": j.tb, "te": j.te} for j in instance.jobs],
        "scenarios": [
            {"realized": {jid: {"xb": rec.xb, "xe": rec.xe, "vl": int(rec.vl)}
                          for jid, rec in sorted(w.realized.items())}}
            for w in instance.scenarios
        ],
    }


def instance_from_dict(data: Mapping) -> Instance:
    try:
        r = data["rules"]
        rules = RuleParams(
            tm=int(r["tm"]), tbl=int(r["tbl"]), tel=int(r["tel"]),
            tbr=int(r["tbr"]), tml=int(r["tml"]),
            hb_set=tuple(int(t) for t in r["hb_set"]),
            hf_set=tuple(int(t) for t in r["hf_set"]),
        )
        wage = WageCurve(tuple((int(d), float(c)) for d, c in data["wage"]["breakpoints"]))
        jobs = tuple(Job(str(j["id"]), int(j["tb"]), int(j["te"])) for j in data["jobs"])
        scenarios = tuple(
            Scenario({
                str(jid): JobRealization(int(rec["xb"]), int(rec["xe"]), bool(rec["vl"]))
                for jid, rec in w["realized"].items()
            })
            for w in data.get("scenarios", [])
        )
        return Instance(jobs, scenarios, rules, wage, float(data["cbu"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed instance data: {exc}") from exc


def load_instance(path) -> Instance:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(data)


def save_instance(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2, sort_keys=True)
        fh.write("\n")


def shift_to_dict(shift: Shift) -> dict:
    acts = []
    for a in shift.activities:
        if isinstance(a, JobRef):
            acts.append({"job": a.job})
        else:
            acts.append({"break": [a.tb, a.te]})
    return {"hb": shift.hb, "he": shift.he, "activities": acts}


def shift_from_dict(data: Mapping) -> Shift:
    try:
        acts: list[Activity] = []
        for a in data["activities"]:
            if "job" in a:
                acts.append(JobRef(str(a["job"])))
            else:
                tb, te = a["break"]
                acts.append(Break(int(tb), int(te)))
        return Shift(int(data["hb"]), int(data["he"]), tuple(acts))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed shift data: {exc}") from exc


def load_plan(path) -> list[Shift]:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, list):
        raise InvalidInputError("plan file must hold a JSON list of shifts")
    return [shift_from_dict(s) for s in data]


def save_plan(shifts: Iterable[Shift], path) -> None:
    with open(path, "w") as fh:
        json.dump([shift_to_dict(s) for s in shifts], fh, indent=2, sort_keys=True)
        fh.write("\n")
