"""Shift digraph construction and the path <-> shift bijection."""

import random

import pytest

from shiftcg.digraph import (AL, BL, DEST, ORIGIN, BL_AL, BL_END_BREAK,
                             Destination, EndNode, JobNode, Origin,
                             build_digraph, enumerate_all_shifts,
                             iter_od_paths, path_to_shift, shift_to_path,
                             to_dot)
from shiftcg.errors import (CapacityError, EncodingError, InfeasibleShiftError,
                            StructureError)
from shiftcg.model import (Break, Instance, Job, JobRealization, JobRef,
                           RuleParams, Scenario, Shift, WageCurve,
                           default_wage_curve, is_feasible, is_well_scheduled)

from conftest import random_instance


def tiny_instance(jobs, hb_set, hf_set, *, tm=480, tbl=720, tel=870,
                  tbr=60, tml=90, scenarios=()):
    rules = RuleParams(tm=tm, tbl=tbl, tel=tel, tbr=tbr, tml=tml,
                       hb_set=hb_set, hf_set=hf_set)
    return Instance(tuple(jobs), tuple(scenarios), rules,
                    default_wage_curve(tm), 240.0)


# ---------------------------------------------------------------------------
# construction guards
# ---------------------------------------------------------------------------


def test_single_job_short_end_path_exists():
    # one job, begin slot below the lunch threshold, end before the break
    # boundary: the three-arc path exists and decodes to a break-free shift
    inst = tiny_instance([Job("a", 500, 560)], hb_set=(480,), hf_set=(600,))
    g = build_digraph(inst)
    assert g.count_od_paths() == 1
    (path,) = list(iter_od_paths(g))
    s = path_to_shift(path, inst, g)
    assert s == Shift(480, 600, (JobRef("a"),))
    assert not s.breaks


def test_overlapping_jobs_have_no_succession_arc():
    inst = tiny_instance([Job("a", 500, 600), Job("b", 560, 650)],
                         hb_set=(480,), hf_set=(700,))
    g = build_digraph(inst)
    names = {(g.vertices[t], g.vertices[h]) for t, h in g.arcs}
    assert (JobNode("a", 480, BL), JobNode("b", 480, BL)) not in names
    assert (JobNode("b", 480, BL), JobNode("a", 480, BL)) not in names


def test_job_ending_too_close_to_lunch_end_has_no_bl_vertex():
    # te > tel - tbr keeps a job out of the before-lunch sets
    inst = tiny_instance([Job("a", 700, 830)], hb_set=(480,), hf_set=(900,))
    assert 830 > inst.rules.tel - inst.rules.tbr
    g = build_digraph(inst)
    assert all(not (isinstance(v, JobNode) and v.phase == BL)
               for v in g.vertices)


def test_no_arc_crosses_begin_times():
    rng = random.Random(5)
    inst = random_instance(rng, n_jobs=6, n_scenarios=0, n_hb=3, n_hf=2)
    g = build_digraph(inst)
    for t, h in g.arcs:
        vt, vh = g.vertices[t], g.vertices[h]
        if isinstance(vt, JobNode) and isinstance(vh, JobNode):
            assert vt.hb == vh.hb


def test_digraph_is_topologically_ordered_and_pruned():
    rng = random.Random(11)
    for _ in range(10):
        inst = random_instance(rng, n_jobs=6, n_scenarios=0)
        g = build_digraph(inst)
        assert g.is_topologically_ordered()
        for i in range(g.n_vertices):
            if i in (g.origin, g.destination):
                continue
            assert g.out_arcs[i], f"vertex {g.vertices[i]} has no way out"
            assert g.in_arcs[i], f"vertex {g.vertices[i]} has no way in"


def test_wage_cost_sits_on_end_arcs_only():
    rng = random.Random(3)
    inst = random_instance(rng, n_jobs=5, n_scenarios=0)
    g = build_digraph(inst)
    for a, (t, h) in enumerate(g.arcs):
        if isinstance(g.vertices[h], EndNode):
            hb = g.vertices[t].hb
            he = g.vertices[h].he
            assert g.wage_cost[a] == inst.wage.cost(he - hb)
        else:
            assert g.wage_cost[a] == 0.0


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------


def three_job_break_instance():
    # jobs placed so a shift can run two jobs before lunch... actually one
    # job, take the break, then two more after it
    jobs = [Job("j2", 500, 560), Job("j3", 790, 850), Job("j4", 880, 940)]
    return tiny_instance(jobs, hb_set=(480, 490), hf_set=(960,), tm=480)


def test_break_path_decodes_with_retimed_break():
    inst = three_job_break_instance()
    g = build_digraph(inst)
    path = [ORIGIN, JobNode("j2", 490, BL), JobNode("j3", 490, AL),
            JobNode("j4", 490, AL), EndNode(960), DEST]
    s = path_to_shift(path, inst, g)
    assert s.job_ids == ("j2", "j3", "j4")
    assert s.hb == 490 and s.he == 960
    (br,) = s.breaks
    # break abuts min(next job begin, lunch end) = min(790, 870)
    assert br == Break(730, 790)
    assert is_well_scheduled(s, inst.rules, inst.jobs_by_id)
    assert shift_to_path(s, g, inst) == [g.vertex_index[v] for v in path]


def test_trailing_break_decode():
    inst = tiny_instance([Job("a", 500, 560)], hb_set=(480,), hf_set=(900,))
    g = build_digraph(inst)
    path = [ORIGIN, JobNode("a", 480, BL), EndNode(900), DEST]
    s = path_to_shift(path, inst, g)
    (br,) = s.breaks
    assert br == Break(810, 870)  # ends at min(he, lunch end) = 870
    assert is_well_scheduled(s, inst.rules, inst.jobs_by_id)


def test_structured_errors():
    inst = three_job_break_instance()
    g = build_digraph(inst)
    with pytest.raises(StructureError):
        path_to_shift([ORIGIN, DEST], inst, g)
    with pytest.raises(StructureError):
        path_to_shift([ORIGIN, JobNode("j4", 490, AL), JobNode("j3", 490, AL),
                       EndNode(960), DEST], inst, g)
    with pytest.raises(InfeasibleShiftError):
        shift_to_path(Shift(490, 960, (JobRef("j2"),)), g, inst)  # needs break
    # a well-scheduled shift whose begin time is off the grid
    off = Shift(495, 960, (JobRef("j2"), Break(730, 790), JobRef("j3"),
                           JobRef("j4")))
    with pytest.raises(EncodingError):
        shift_to_path(off, g, inst)


def test_breakless_long_shift_is_not_representable():
    # a shift that must take its break (long lunch overlap) only exists in
    # the digraph with the break arc; a well-scheduled shift built with no
    # break on a short window roundtrips instead
    inst = tiny_instance([Job("a", 500, 560), Job("b", 600, 660)],
                         hb_set=(480,), hf_set=(700, 900))
    g = build_digraph(inst)
    ok = Shift(480, 700, (JobRef("a"), JobRef("b")))
    assert shift_to_path(ok, g, inst)
    # ending at 900 from the bl phase forces a trailing break during decode,
    # so the breakless variant on that window has no path
    bad = Shift(480, 900, (JobRef("a"), JobRef("b")))
    assert is_well_scheduled(bad, inst.rules, inst.jobs_by_id) is False


# ---------------------------------------------------------------------------
# bijection, exhaustively on small instances
# ---------------------------------------------------------------------------


def test_round_trip_and_validity_exhaustive(rng):
    for k in range(12):
        inst = random_instance(rng, n_jobs=rng.randint(2, 6),
                               n_scenarios=0, n_hb=rng.randint(1, 3),
                               n_hf=rng.randint(1, 3))
        g = build_digraph(inst)
        count = g.count_od_paths()
        paths = list(iter_od_paths(g))
        assert len(paths) == count
        seen = set()
        for p in paths:
            s = path_to_shift(p, inst, g)
            assert is_feasible(s, inst.rules, inst.jobs_by_id)
            assert is_well_scheduled(s, inst.rules, inst.jobs_by_id)
            assert shift_to_path(s, g, inst) == p
            key = (s.hb, s.he, s.activities)
            assert key not in seen  # distinct paths decode to distinct shifts
            seen.add(key)


def test_enumerate_all_shifts_matches_path_count(rng):
    inst = random_instance(rng, n_jobs=5, n_scenarios=0, n_hb=2, n_hf=2)
    g = build_digraph(inst)
    shifts = enumerate_all_shifts(g, inst)
    assert len(shifts) == g.count_od_paths()


def test_enumeration_cap():
    rng = random.Random(2)
    inst = random_instance(rng, n_jobs=6, n_scenarios=0, n_hb=2, n_hf=2)
    g = build_digraph(inst)
    if g.count_od_paths() > 1:
        with pytest.raises(CapacityError):
            list(iter_od_paths(g, cap=1))


def test_dot_export_mentions_vertices():
    inst = tiny_instance([Job("a", 500, 560)], hb_set=(480,), hf_set=(600,))
    g = build_digraph(inst)
    dot = to_dot(g)
    assert "digraph" in dot and "(a,480,bl)" in dot
