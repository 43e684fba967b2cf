"""Lattice-ordered monoid that propagates delay along job successions.

An element summarizes a partial job sequence under one scenario by a
``bg/do/dt`` triple: ``bg`` is the realized start of the first job, and the
``do`` / ``dt`` components each hold a (count, time) pair — the number of
rescheduled jobs and the availability time after the last kept job — under
the two hypotheses that the sequence's first job is kept (``do``) or handed
to a back-up agent (``dt``).  The time ``-inf`` (a dedicated integer
sentinel) means "the relevant last job was itself rescheduled", which never
blocks a successor.

``Resource`` bundles one such element per scenario plus a real accumulator
for wage-minus-dual costs, stored as numpy arrays so path concatenation and
cost evaluation vectorize across scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError

#: Integer sentinel ordered below every finite minute value; never used in
#: arithmetic, only in comparisons.
NEG_INF = -(2**62)

_KIND_NEUTRAL = "e"
_KIND_TOP = "top"
_KIND_TRIPLE = "s"

TAG_NEUTRAL = np.int8(0)
TAG_TRIPLE = np.int8(1)
TAG_TOP = np.int8(2)


@dataclass(frozen=True)
class SElement:
    """Tagged union: the neutral element, the absorbing top, or a triple."""

    kind: str
    bg: int = 0
    do_c: int = 0
    do_t: int = 0
    dt_c: int = 0
    dt_t: int = 0

    @property
    def is_neutral(self) -> bool:
        return self.kind == _KIND_NEUTRAL

    @property
    def is_top(self) -> bool:
        return self.kind == _KIND_TOP

    @property
    def is_triple(self) -> bool:
        return self.kind == _KIND_TRIPLE

    def __repr__(self):
        if self.is_neutral:
            return "SElement(e)"
        if self.is_top:
            return "SElement(top)"

        def t(v):
            return "-inf" if v == NEG_INF else str(v)

        return (f"SElement(bg={self.bg}, do=({self.do_c},{t(self.do_t)}),"
                f" dt=({self.dt_c},{t(self.dt_t)}))")


NEUTRAL = SElement(_KIND_NEUTRAL)
TOP = SElement(_KIND_TOP)


def satisfies_membership(do_c: int, do_t: int, dt_c: int, dt_t: int) -> bool:
    """The coupling between the two hypothesis branches that every triple
    must satisfy (do_t and dt_t compare with -inf below all finite times)."""
    if do_c < 0 or dt_c < 0:
        return False
    if do_t < dt_t:
        return do_c == dt_c
    if do_t > dt_t:
        return do_c == dt_c - 1
    return do_c in (dt_c, dt_c - 1)


def triple(bg: int, do_c: int, do_t: int, dt_c: int, dt_t: int) -> SElement:
    """Build a validated triple element."""
    if bg == NEG_INF:
        raise ValueError("bg must be a finite time")
    if not satisfies_membership(do_c, do_t, dt_c, dt_t):
        raise ValueError(
            f"(do=({do_c},{do_t}), dt=({dt_c},{dt_t})) violates the membership rules"
        )
    return SElement(_KIND_TRIPLE, int(bg), int(do_c), int(do_t), int(dt_c), int(dt_t))


def s_plus(a: SElement, b: SElement) -> SElement:
    """Concatenate two sequence summaries (associative, not commutative)."""
    if a.is_neutral:
        return b
    if b.is_neutral:
        return a
    if a.is_top or b.is_top:
        return TOP
    if a.do_t <= b.bg:
        do_c, do_t = a.do_c + b.do_c, b.do_t
    else:
        do_c, do_t = a.do_c + b.dt_c, b.dt_t
    if a.dt_t <= b.bg:
        dt_c, dt_t = a.dt_c + b.do_c, b.do_t
    else:
        dt_c, dt_t = a.dt_c + b.dt_c, b.dt_t
    return SElement(_KIND_TRIPLE, a.bg, do_c, do_t, dt_c, dt_t)


def s_leq(a: SElement, b: SElement) -> bool:
    """Partial order: neutral below everything, top above everything, and
    triples compared by reversed start time and (count, time) lexicographic
    order on both hypothesis branches."""
    if a.is_neutral or b.is_top:
        return True
    if a.is_top or b.is_neutral:
        return False
    return (a.bg >= b.bg
            and (a.do_c, a.do_t) <= (b.do_c, b.do_t)
            and (a.dt_c, a.dt_t) <= (b.dt_c, b.dt_t))


def s_meet(a: SElement, b: SElement) -> SElement:
    """Greatest lower bound: max of starts, (count, time)-lexicographic
    minimum on each hypothesis branch."""
    if a.is_neutral or b.is_neutral:
        return NEUTRAL
    if a.is_top:
        return b
    if b.is_top:
        return a
    do_c, do_t = min((a.do_c, a.do_t), (b.do_c, b.do_t))
    dt_c, dt_t = min((a.dt_c, a.dt_t), (b.dt_c, b.dt_t))
    return SElement(_KIND_TRIPLE, max(a.bg, b.bg), do_c, do_t, dt_c, dt_t)


def s_cost(q: SElement) -> float:
    """Scenario cost: rescheduled-job count under the kept-first-job
    hypothesis (0 for neutral, +inf for top)."""
    if q.is_neutral:
        return 0.0
    if q.is_top:
        return float("inf")
    return float(q.do_c)


# ---------------------------------------------------------------------------
# Vectorized array kernels (shared by Resource and the pricing engine).
# All payload slots where the tag is not TRIPLE are kept at zero.
# ---------------------------------------------------------------------------


def _zero_masked(tags, *fields):
    keep = tags == TAG_TRIPLE
    return tuple(np.where(keep, f, 0) for f in fields)


def splus_arrays(ta, fa, tb, fb):
    """Elementwise monoid sum of two tagged array bundles.

    ``fa``/``fb`` are (bg, do_c, do_t, dt_c, dt_t) tuples; broadcasting
    between the two bundles is supported.
    """
    bga, doca, dota, dtca, dtta = fa
    bgb, docb, dotb, dtcb, dttb = fb
    cond_do = dota <= bgb
    do_c = doca + np.where(cond_do, docb, dtcb)
    do_t = np.where(cond_do, dotb, dttb)
    cond_dt = dtta <= bgb
    dt_c = dtca + np.where(cond_dt, docb, dtcb)
    dt_t = np.where(cond_dt, dotb, dttb)
    bg = np.broadcast_to(bga, do_c.shape)

    a_neutral = ta == TAG_NEUTRAL
    b_neutral = tb == TAG_NEUTRAL
    any_top = (ta == TAG_TOP) | (tb == TAG_TOP)
    tags = np.where(a_neutral, tb,
                    np.where(b_neutral, ta,
                             np.where(any_top, TAG_TOP, TAG_TRIPLE)))

    def pick(av, bv, cv):
        out = np.where(a_neutral, bv, np.where(b_neutral, av, cv))
        return np.where(tags == TAG_TRIPLE, out, 0)

    return tags, (pick(bga, bgb, bg), pick(doca, docb, do_c),
                  pick(dota, dotb, do_t), pick(dtca, dtcb, dt_c),
                  pick(dtta, dttb, dt_t))


def _lex_leq(c1, t1, c2, t2):
    return (c1 < c2) | ((c1 == c2) & (t1 <= t2))


def sleq_arrays(ta, fa, tb, fb):
    """Elementwise partial-order test; returns a boolean array."""
    bga, doca, dota, dtca, dtta = fa
    bgb, docb, dotb, dtcb, dttb = fb
    both = (ta == TAG_TRIPLE) & (tb == TAG_TRIPLE)
    cmp = ((bga >= bgb)
           & _lex_leq(doca, dota, docb, dotb)
           & _lex_leq(dtca, dtta, dtcb, dttb))
    return (ta == TAG_NEUTRAL) | (tb == TAG_TOP) | (both & cmp)


def smeet_arrays(ta, fa, tb, fb):
    """Elementwise meet of two tagged array bundles."""
    bga, doca, dota, dtca, dtta = fa
    bgb, docb, dotb, dtcb, dttb = fb
    either_neutral = (ta == TAG_NEUTRAL) | (tb == TAG_NEUTRAL)
    a_top = ta == TAG_TOP
    b_top = tb == TAG_TOP
    tags = np.where(either_neutral, TAG_NEUTRAL,
                    np.where(a_top, tb, np.where(b_top, ta, TAG_TRIPLE)))

    pick_a_do = _lex_leq(doca, dota, docb, dotb)
    pick_a_dt = _lex_leq(dtca, dtta, dtcb, dttb)
    bg = np.maximum(bga, bgb)
    do_c = np.where(pick_a_do, doca, docb)
    do_t = np.where(pick_a_do, dota, dotb)
    dt_c = np.where(pick_a_dt, dtca, dtcb)
    dt_t = np.where(pick_a_dt, dtta, dttb)

    def pick(av, bv, cv):
        out = np.where(a_top, bv, np.where(b_top, av, cv))
        return np.where(tags == TAG_TRIPLE, out, 0)

    return tags, (pick(bga, bgb, bg), pick(doca, docb, do_c),
                  pick(dota, dotb, do_t), pick(dtca, dtcb, dt_c),
                  pick(dtta, dttb, dt_t))


def cost_arrays(tags, do_c, lam, cbu: float, n_scenarios: int):
    """Cost of tagged bundles along the last axis (+inf when any top)."""
    if n_scenarios == 0:
        return np.asarray(lam, dtype=float) + 0.0
    top = (tags == TAG_TOP).any(axis=-1)
    total = np.where(tags == TAG_TRIPLE, do_c, 0).sum(axis=-1)
    value = (cbu / n_scenarios) * total + lam
    return np.where(top, np.inf, value)


# ---------------------------------------------------------------------------
# Resource: one monoid element per scenario plus the real accumulator
# ---------------------------------------------------------------------------

_FIELDS = ("bg", "do_c", "do_t", "dt_c", "dt_t")


class Resource:
    """Product resource over the scenario set with a real cost accumulator.

    Immutable; per-scenario elements are exposed through :meth:`element` and
    :meth:`elements`, the arrays stay internal.
    """

    __slots__ = ("tags", "bg", "do_c", "do_t", "dt_c", "dt_t", "lam")

    def __init__(self, tags, bg, do_c, do_t, dt_c, dt_t, lam: float):
        arrays = [np.asarray(tags, dtype=np.int8)]
        arrays += [np.asarray(f, dtype=np.int64) for f in (bg, do_c, do_t, dt_c, dt_t)]
        n = arrays[0].shape
        for arr in arrays:
            if arr.shape != n:
                raise DimensionError("resource field arrays must share one shape")
            arr.setflags(write=False)
        self.tags, self.bg, self.do_c, self.do_t, self.dt_c, self.dt_t = arrays
        self.lam = float(lam)

    @classmethod
    def identity(cls, n_scenarios: int, lam: float = 0.0) -> "Resource":
        z = np.zeros(n_scenarios, dtype=np.int64)
        return cls(np.zeros(n_scenarios, dtype=np.int8), z, z, z, z, z, lam)

    @classmethod
    def top(cls, n_scenarios: int, lam: float = float("inf")) -> "Resource":
        z = np.zeros(n_scenarios, dtype=np.int64)
        return cls(np.full(n_scenarios, TAG_TOP, dtype=np.int8), z, z, z, z, z, lam)

    @classmethod
    def from_elements(cls, elements: Sequence[SElement], lam: float = 0.0) -> "Resource":
        tags = np.array([TAG_NEUTRAL if e.is_neutral else
                         TAG_TOP if e.is_top else TAG_TRIPLE for e in elements],
                        dtype=np.int8)
        fields = []
        for name in _FIELDS:
            fields.append(np.array(
                [getattr(e, name) if e.is_triple else 0 for e in elements],
                dtype=np.int64))
        return cls(tags, *fields, lam)

    @property
    def n_scenarios(self) -> int:
        return int(self.tags.shape[0])

    def element(self, w: int) -> SElement:
        tag = self.tags[w]
        if tag == TAG_NEUTRAL:
            return NEUTRAL
        if tag == TAG_TOP:
            return TOP
        return SElement(_KIND_TRIPLE, int(self.bg[w]), int(self.do_c[w]),
                        int(self.do_t[w]), int(self.dt_c[w]), int(self.dt_t[w]))

    def elements(self) -> tuple[SElement, ...]:
        return tuple(self.element(w) for w in range(self.n_scenarios))

    @property
    def per_scenario(self) -> tuple[SElement, ...]:
        return self.elements()

    def fields(self):
        return self.bg, self.do_c, self.do_t, self.dt_c, self.dt_t

    def __eq__(self, other):
        if not isinstance(other, Resource):
            return NotImplemented
        return (self.lam == other.lam
                and np.array_equal(self.tags, other.tags)
                and all(np.array_equal(a, b)
                        for a, b in zip(self.fields(), other.fields())))

    def __hash__(self):
        return hash((self.tags.tobytes(), self.bg.tobytes(), self.lam))

    def __repr__(self):
        return f"Resource({list(self.elements())!r}, lam={self.lam})"


def _check_dims(a: Resource, b: Resource) -> None:
    if a.n_scenarios != b.n_scenarios:
        raise DimensionError(
            f"scenario counts differ: {a.n_scenarios} vs {b.n_scenarios}")


def resource_plus(a: Resource, b: Resource) -> Resource:
    _check_dims(a, b)
    tags, fields = splus_arrays(a.tags, a.fields(), b.tags, b.fields())
    return Resource(tags, *fields, a.lam + b.lam)


def resource_leq(a: Resource, b: Resource) -> bool:
    _check_dims(a, b)
    return bool(sleq_arrays(a.tags, a.fields(), b.tags, b.fields()).all()
                and a.lam <= b.lam)


def resource_meet(a: Resource, b: Resource) -> Resource:
    _check_dims(a, b)
    tags, fields = smeet_arrays(a.tags, a.fields(), b.tags, b.fields())
    return Resource(tags, *fields, min(a.lam, b.lam))


def resource_cost(r: Resource, cbu: float) -> float:
    return float(cost_arrays(r.tags, r.do_c, r.lam, cbu, r.n_scenarios))
