"""Acyclic shift digraph whose o-d paths encode well-scheduled shifts.

Job vertices are phase-tagged copies (before lunch / after lunch) of each
job for each allowed begin time; an o-d path picks one begin time, threads
compatible jobs, and ends at an allowed end time.  A break is implied by a
``bl -> al`` arc or by finishing from the ``bl`` phase at a late-enough end
time; decoding retimes that break so it abuts the next activity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .errors import CapacityError, EncodingError, InfeasibleShiftError, StructureError
from .model import AL, BL, Break, Instance, JobRef, Shift, is_well_scheduled


@dataclass(frozen=True)
class Origin:
    def __repr__(self):
        return "o"


@dataclass(frozen=True)
class Destination:
    def __repr__(self):
        return "d"


@dataclass(frozen=True)
class JobNode:
    job: str
    hb: int
    phase: str  # BL or AL

    def __repr__(self):
        return f"({self.job},{self.hb},{self.phase})"


@dataclass(frozen=True)
class EndNode:
    he: int

    def __repr__(self):
        return f"he={self.he}"


Vertex = Union[Origin, Destination, JobNode, EndNode]

ORIGIN = Origin()
DEST = Destination()

# Arc kinds; the kind fixes both the decode rule and the pricing resource.
O_BL = "o-bl"
O_AL = "o-al"
BL_BL = "bl-bl"
BL_AL = "bl-al"  # break between the two jobs
AL_AL = "al-al"
BL_END = "bl-end"  # ends from bl with he below the break threshold, no break
BL_END_BREAK = "bl-end-break"  # ends from bl at a late end time, trailing break
AL_END = "al-end"
END_D = "end-d"

JOB_TAILED_KINDS = frozenset({BL_BL, BL_AL, AL_AL, BL_END, BL_END_BREAK, AL_END})
JOB_TO_JOB_KINDS = frozenset({BL_BL, BL_AL, AL_AL})
JOB_TO_END_KINDS = frozenset({BL_END, BL_END_BREAK, AL_END})
BREAK_AFTER_KINDS = frozenset({BL_AL, BL_END_BREAK})


@dataclass
class Digraph:
    """Indexed vertex list (in topological order), arcs with kinds and wage
    costs, adjacency lists sorted by head, and the phase-membership sets used
    to encode shifts back into paths."""

    vertices: list[Vertex]
    arcs: list[tuple[int, int]]
    arc_kind: list[str]
    wage_cost: np.ndarray
    out_arcs: list[list[int]]
    in_arcs: list[list[int]]
    vertex_index: dict[Vertex, int]
    job_vertices: dict[str, list[int]]  # V_j
    jbl: dict[int, frozenset[str]]  # hb -> jobs allowed before lunch
    jal: dict[int, frozenset[str]]  # hb -> jobs allowed after lunch
    arc_index: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    @property
    def origin(self) -> int:
        return 0

    @property
    def destination(self) -> int:
        return len(self.vertices) - 1

    def is_topologically_ordered(self) -> bool:
        return all(t < h for t, h in self.arcs)

    def count_od_paths(self) -> int:
        """Exact o-d path count by a reverse topological sweep."""
        counts = [0] * self.n_vertices
        counts[self.destination] = 1
        for v in range(self.n_vertices - 2, -1, -1):
            counts[v] = sum(counts[self.arcs[a][1]] for a in self.out_arcs[v])
        return counts[self.origin]


def job_has_singleton_slot(job, rules) -> bool:
    """True when some (begin, phase, end) combination admits a one-job shift;
    jobs straddling the lunch window can fail every guard and are then not
    coverable at all."""
    for hb in rules.hb_set:
        if job.tb < hb or job.te > hb + rules.tm:
            continue
        if hb <= rules.tel - rules.tml and job.te <= rules.tel - rules.tbr:
            for he in rules.hf_set:
                if he < rules.tbl + rules.tml and job.te <= he <= hb + rules.tm:
                    return True
                if (he >= rules.tbl + rules.tml
                        and job.te + rules.tbr <= he <= hb + rules.tm):
                    return True
        if hb > rules.tel - rules.tml and job.tb >= rules.tbl + rules.tbr:
            for he in rules.hf_set:
                if he >= rules.tbl + rules.tml and job.te <= he <= hb + rules.tm:
                    return True
    return False


def build_digraph(instance: Instance) -> Digraph:
    """Emit the nine arc families with their guards, then prune vertices that
    lie on no o-d path."""
    r = instance.rules
    jobs_sorted = sorted(instance.jobs, key=lambda j: (j.tb, j.te, j.id))

    jbl: dict[int, frozenset[str]] = {}
    jal: dict[int, frozenset[str]] = {}
    for hb in r.hb_set:
        jbl[hb] = frozenset(
            j.id for j in jobs_sorted
            if j.tb >= hb and j.te <= r.tel - r.tbr and j.te <= hb + r.tm)
        jal[hb] = frozenset(
            j.id for j in jobs_sorted
            if j.tb >= hb and j.tb >= r.tbl + r.tbr and j.te <= hb + r.tm)

    vertices: list[Vertex] = [ORIGIN]
    for hb in r.hb_set:
        for j in jobs_sorted:
            if j.id in jbl[hb]:
                vertices.append(JobNode(j.id, hb, BL))
            if j.id in jal[hb]:
                vertices.append(JobNode(j.id, hb, AL))
    for he in r.hf_set:
        vertices.append(EndNode(he))
    vertices.append(DEST)
    index = {v: i for i, v in enumerate(vertices)}
    by_id = instance.jobs_by_id

    arcs: list[tuple[int, int]] = []
    kinds: list[str] = []

    def add(tail: Vertex, head: Vertex, kind: str) -> None:
        arcs.append((index[tail], index[head]))
        kinds.append(kind)

    for hb in r.hb_set:
        if hb <= r.tel - r.tml:
            for j in jbl[hb]:
                add(ORIGIN, JobNode(j, hb, BL), O_BL)
        else:
            for j in jal[hb]:
                add(ORIGIN, JobNode(j, hb, AL), O_AL)
        for j in jbl[hb]:
            for j2 in jbl[hb]:
                if by_id[j].te <= by_id[j2].tb:
                    add(JobNode(j, hb, BL), JobNode(j2, hb, BL), BL_BL)
            for j2 in jal[hb]:
                if by_id[j].te + r.tbr <= by_id[j2].tb:
                    add(JobNode(j, hb, BL), JobNode(j2, hb, AL), BL_AL)
        for j in jal[hb]:
            for j2 in jal[hb]:
                if by_id[j].te <= by_id[j2].tb:
                    add(JobNode(j, hb, AL), JobNode(j2, hb, AL), AL_AL)
        for he in r.hf_set:
            if he < r.tbl + r.tml:
                for j in jbl[hb]:
                    if by_id[j].te <= he <= hb + r.tm:
                        add(JobNode(j, hb, BL), EndNode(he), BL_END)
            else:
                for j in jbl[hb]:
                    if by_id[j].te + r.tbr <= he <= hb + r.tm:
                        add(JobNode(j, hb, BL), EndNode(he), BL_END_BREAK)
                for j in jal[hb]:
                    if by_id[j].te <= he <= hb + r.tm:
                        add(JobNode(j, hb, AL), EndNode(he), AL_END)
    for he in r.hf_set:
        add(EndNode(he), DEST, END_D)

    # prune vertices that are not on any o-d path (origin/destination stay)
    n = len(vertices)
    fwd = [False] * n
    fwd[index[ORIGIN]] = True
    order = sorted(range(len(arcs)), key=lambda a: arcs[a][0])
    for a in order:
        t, h = arcs[a]
        if fwd[t]:
            fwd[h] = True
    bwd = [False] * n
    bwd[index[DEST]] = True
    for a in sorted(range(len(arcs)), key=lambda a: -arcs[a][1]):
        t, h = arcs[a]
        if bwd[h]:
            bwd[t] = True
    keep = [i for i in range(n) if (fwd[i] and bwd[i]) or vertices[i] in (ORIGIN, DEST)]
    remap = {old: new for new, old in enumerate(keep)}
    new_vertices = [vertices[i] for i in keep]
    new_arcs: list[tuple[int, int]] = []
    new_kinds: list[str] = []
    for a, (t, h) in enumerate(arcs):
        if fwd[t] and bwd[h]:  # implies the arc lies on some o-d path
            new_arcs.append((remap[t], remap[h]))
            new_kinds.append(kinds[a])

    return _assemble(new_vertices, new_arcs, new_kinds, instance, jbl, jal)


def _assemble(vertices, arcs, kinds, instance, jbl, jal) -> Digraph:
    index = {v: i for i, v in enumerate(vertices)}
    order = sorted(range(len(arcs)), key=lambda a: (arcs[a][0], arcs[a][1]))
    arcs = [arcs[a] for a in order]
    kinds = [kinds[a] for a in order]

    wage = np.zeros(len(arcs), dtype=float)
    for a, (t, h) in enumerate(arcs):
        if kinds[a] in JOB_TO_END_KINDS:
            hb = vertices[t].hb
            he = vertices[h].he
            wage[a] = instance.wage.cost(he - hb)
    wage.setflags(write=False)

    out_arcs: list[list[int]] = [[] for _ in vertices]
    in_arcs: list[list[int]] = [[] for _ in vertices]
    for a, (t, h) in enumerate(arcs):
        out_arcs[t].append(a)
        in_arcs[h].append(a)

    job_vertices: dict[str, list[int]] = {}
    for i, v in enumerate(vertices):
        if isinstance(v, JobNode):
            job_vertices.setdefault(v.job, []).append(i)

    dg = Digraph(vertices, arcs, kinds, wage, out_arcs, in_arcs, index,
                 job_vertices, jbl, jal,
                 arc_index={(t, h): a for a, (t, h) in enumerate(arcs)})
    if not dg.is_topologically_ordered():
        raise StructureError("internal error: vertex order is not topological")
    return dg


# ---------------------------------------------------------------------------
# Path <-> shift bijection
# ---------------------------------------------------------------------------


def _as_indices(path: Sequence, digraph: Digraph) -> list[int]:
    out = []
    for v in path:
        if isinstance(v, int) or isinstance(v, np.integer):
            if not 0 <= int(v) < digraph.n_vertices:
                raise StructureError(f"vertex index {v} out of range")
            out.append(int(v))
        else:
            try:
                out.append(digraph.vertex_index[v])
            except KeyError:
                raise StructureError(f"vertex {v!r} is not in the digraph")
    return out


def path_to_shift(path: Sequence, instance: Instance, digraph: Digraph) -> Shift:
    """Decode an o-d path into the unique well-scheduled shift it encodes."""
    idx = _as_indices(path, digraph)
    if len(idx) < 4:
        raise StructureError("an o-d path visits at least four vertices")
    verts = [digraph.vertices[i] for i in idx]
    if not isinstance(verts[0], Origin) or not isinstance(verts[-1], Destination):
        raise StructureError("path must run from the origin to the destination")
    if not isinstance(verts[-2], EndNode):
        raise StructureError("the penultimate vertex must be an end-time vertex")
    arc_ids = []
    for t, h in zip(idx, idx[1:]):
        a = digraph.arc_index.get((t, h))
        if a is None:
            raise StructureError(f"({digraph.vertices[t]!r}, {digraph.vertices[h]!r})"
                                 " is not an arc")
        arc_ids.append(a)

    job_nodes = [v for v in verts[1:-2]]
    if not all(isinstance(v, JobNode) for v in job_nodes):
        raise StructureError("interior vertices must be job vertices")
    hbs = {v.hb for v in job_nodes}
    if len(hbs) != 1:
        raise StructureError("path crosses several begin times")
    hb = hbs.pop()
    he = verts[-2].he
    r = instance.rules
    by_id = instance.jobs_by_id

    activities: list = []
    for pos, v in enumerate(job_nodes):
        activities.append(JobRef(v.job))
        kind = digraph.arc_kind[arc_ids[pos + 1]]
        if kind == BL_AL:
            te_b = min(by_id[job_nodes[pos + 1].job].tb, r.tel)
            activities.append(Break(te_b - r.tbr, te_b))
        elif kind == BL_END_BREAK:
            te_b = min(he, r.tel)
            activities.append(Break(te_b - r.tbr, te_b))
    return Shift(hb, he, tuple(activities))


def shift_to_path(shift: Shift, digraph: Digraph, instance: Instance) -> list[int]:
    """Encode a well-scheduled feasible shift as the o-d path it came from,
    or raise :class:`EncodingError` when no arc sequence represents it."""
    r = instance.rules
    if not is_well_scheduled(shift, r, instance.jobs_by_id):
        raise InfeasibleShiftError("shift_to_path requires a well-scheduled shift")
    hb, he = shift.hb, shift.he
    if hb not in r.hb_set or he not in r.hf_set:
        raise EncodingError("shift begin/end times are not on the allowed grids")
    jbl = digraph.jbl.get(hb, frozenset())
    jal = digraph.jal.get(hb, frozenset())

    break_positions = set()  # index into the job sequence after which a break sits
    jobs: list[str] = []
    for act in shift.activities:
        if isinstance(act, JobRef):
            jobs.append(act.job)
        else:
            break_positions.add(len(jobs) - 1)
    if -1 in break_positions:
        raise EncodingError("a leading break is not representable")

    verts: list[Vertex] = [ORIGIN]
    break_seen = False
    for pos, j in enumerate(jobs):
        if j in jbl and j in jal:
            phase = AL if break_seen else BL
        elif j in jbl:
            phase = BL
        elif j in jal:
            phase = AL
        else:
            raise EncodingError(f"job {j!r} cannot start a shift at {hb}")
        verts.append(JobNode(j, hb, phase))
        if pos in break_positions:
            break_seen = True
    verts.append(EndNode(he))
    verts.append(DEST)

    idx = []
    for v in verts:
        i = digraph.vertex_index.get(v)
        if i is None:
            raise EncodingError(f"vertex {v!r} does not exist in the digraph")
        idx.append(i)
    emitted_breaks = set()
    for pos, (t, h) in enumerate(zip(idx, idx[1:])):
        a = digraph.arc_index.get((t, h))
        if a is None:
            raise EncodingError(
                f"({digraph.vertices[t]!r}, {digraph.vertices[h]!r}) violates a guard")
        kind = digraph.arc_kind[a]
        if kind == BL_AL:
            emitted_breaks.add(pos - 1)  # after the job at this position
        elif kind == BL_END_BREAK:
            emitted_breaks.add(len(jobs) - 1)
    if emitted_breaks != break_positions:
        raise EncodingError("break placement is not representable on this path")
    return idx


def iter_od_paths(digraph: Digraph, cap: int = 10**6) -> Iterator[list[int]]:
    """Yield every o-d path as a vertex-index list (refuses above ``cap``)."""
    total = digraph.count_od_paths()
    if total > cap:
        raise CapacityError(f"digraph has {total} o-d paths, above the cap of {cap}")
    d = digraph.destination
    stack: list[int] = [digraph.origin]

    def walk(v: int) -> Iterator[list[int]]:
        if v == d:
            yield list(stack)
            return
        for a in digraph.out_arcs[v]:
            h = digraph.arcs[a][1]
            stack.append(h)
            yield from walk(h)
            stack.pop()

    yield from walk(digraph.origin)


def enumerate_all_shifts(digraph: Digraph, instance: Instance,
                         cap: int = 10**6) -> list[Shift]:
    """Decode every o-d path; brute-force support for the oracle tests."""
    return [path_to_shift(p, instance, digraph) for p in iter_od_paths(digraph, cap)]


def to_dot(digraph: Digraph) -> str:
    """DOT export for debugging."""
    lines = ["digraph shifts {", "  rankdir=LR;"]
    for i, v in enumerate(digraph.vertices):
        lines.append(f'  v{i} [label="{v!r}"];')
    for a, (t, h) in enumerate(digraph.arcs):
        lines.append(f'  v{t} -> v{h} [label="{digraph.arc_kind[a]}"];')
    lines.append("}")
    return "\n".join(lines)
