"""Continuous growth and well-subdivided instances.

In the continuous variant a set keeps loading ``(v, w)`` from ``v`` even
after reaching ``w``, as long as the undirected edge ``{v, w}`` is not yet
covered by the two directional loads together.  Splitting every edge
where the two directions meet gives an instance on which the discrete
growth no longer depends on further subdivision.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from . import growth, kernel
from .growth import GrowthTrace, _min
from .instance import Instance
from .mergeplan import MergePlan


class SubdivisionError(RuntimeError):
    pass


@dataclass
class ContinuousTrace:
    """Continuous run: reach times plus undirected/directed tightness."""
    trace: GrowthTrace
    ut_time: list[Fraction | None]
    ut_loads: dict[int, tuple[Fraction, Fraction]]

    @property
    def inst(self) -> Instance:
        return self.trace.inst

    def atf(self, S, v):
        return self.trace.atf(S, v)

    def tight_time(self, u, v):
        return self.trace.tight_time(u, v)

    def undirected_tight_time(self, u, v) -> Fraction | None:
        k, _ = self.trace._edge_id(u, v)
        return self.ut_time[k]

    def interval(self, S, e: int) -> tuple[Fraction, Fraction] | None:
        """Window ``(t1, t2]`` on which ``S`` loads directed edge ``e``."""
        tr = self.trace
        ps = _plan_set(tr, S)
        g = kernel.graph_arrays(tr.inst)
        atf = tr.atf_index(ps.members)
        av = atf[g.tail[e]]
        if av is None:
            return None
        aw = atf[g.head[e]]
        ut = self.ut_time[e >> 1]
        stop = None if aw is None or ut is None else max(aw, ut)
        lo = max(ps.a, av)
        hi = _min(ps.d, stop)
        if hi is None:
            hi = tr.t_end
        return (lo, hi) if lo < hi else None

    def contribution(self, S, u, v, t=None) -> Fraction:
        """``C(S, (u, v))``: amount loaded by ``S`` up to time ``t`` (default: end)."""
        k, fwd = self.trace._edge_id(u, v)
        iv = self.interval(S, 2 * k + (0 if fwd else 1))
        if iv is None:
            return Fraction(0)
        lo, hi = iv
        if t is not None:
            hi = min(hi, t)
        return max(hi - lo, Fraction(0))

    def contributions(self) -> dict[tuple[frozenset, tuple], Fraction]:
        inst = self.inst
        g = kernel.graph_arrays(inst)
        vs = inst.vertices
        out = {}
        for ps in self.trace.family:
            for e in range(2 * inst.m):
                iv = self.interval(ps.members, e)
                if iv is not None:
                    out[(ps.members, (vs[g.tail[e]], vs[g.head[e]]))] = iv[1] - iv[0]
        return out


def _plan_set(tr: GrowthTrace, S):
    S = growth._as_set(S)
    for ps in tr.family:
        if ps.members == S:
            return ps
    raise growth.GrowthError("set is not active in this merge plan")


def continuous_run(inst: Instance, plan: MergePlan, *, root=None,
                   backend: str | None = None) -> ContinuousTrace:
    tr = growth.simulate(inst, plan, root=root, record=True, continuous=True, backend=backend)
    ut_time: list[Fraction | None] = [None] * inst.m
    loads = {}
    for k, t, lf, lb in tr.raw["ut_log"]:
        ut_time[k] = t
        loads[k] = (lf, lb)
    return ContinuousTrace(tr, ut_time, loads)


# subdivision


def _fresh_id(taken, k: int, j: int) -> str:
    base = f"e{k}_s{j}"
    name, r = base, 0
    while name in taken:
        r += 1
        name = f"{base}_{r}"
    return name


def subdivide_edges(inst: Instance, splits: dict[int, list[Fraction]]) -> Instance:
    """Split edge ``k`` at the given distances from its first endpoint ``eu[k]``.

    Positions outside ``(0, c)`` are ignored; new vertices are named
    ``e{k}_s{j}`` in order along the edge.
    """
    verts = list(inst.vertices)
    taken = set(verts)
    eu, ev, ec = [], [], []
    for k in range(inst.m):
        u, w, c = inst._eu[k], inst._ev[k], inst._ec[k]
        cuts = sorted({Fraction(p) for p in splits.get(k, ()) if 0 < p < c})
        if not cuts:
            eu.append(u), ev.append(w), ec.append(c)
            continue
        prev, prev_pos = u, Fraction(0)
        for j, p in enumerate(cuts):
            name = _fresh_id(taken, k, j)
            taken.add(name)
            verts.append(name)
            x = len(verts) - 1
            eu.append(prev), ev.append(x), ec.append(p - prev_pos)
            prev, prev_pos = x, p
        eu.append(prev), ev.append(w), ec.append(c - prev_pos)
    out = Instance._from_arrays(verts, inst.terminals, eu, ev, ec, inst.root)
    return out


def nice_splits(ct: ContinuousTrace) -> dict[int, list[Fraction]]:
    inst = ct.inst
    raw = ct.trace.raw
    splits: dict[int, list[Fraction]] = {}
    for k in range(inst.m):
        c = inst._ec[k]
        if ct.ut_time[k] is not None:
            lf, _ = ct.ut_loads[k]
            if 0 < lf < c:
                splits[k] = [lf]
            continue
        lf = Fraction(int(raw["load_num"][2 * k]), int(raw["load_den"][2 * k]))
        lb = Fraction(int(raw["load_num"][2 * k + 1]), int(raw["load_den"][2 * k + 1]))
        if lf > 0 or lb > 0:
            # strictly beyond both loads: midpoint of the remaining slack
            splits[k] = [lf + (c - lf - lb) / 2]
    return splits


def make_nice(inst: Instance, plan: MergePlan, *, root=None) -> Instance:
    """Subdivide each edge once, where the two directional loads meet."""
    ct = continuous_run(inst, plan, root=root)
    return subdivide_edges(inst, nice_splits(ct))


def well_splits(tr: GrowthTrace) -> dict[int, list[Fraction]]:
    """Positions where the contributing family of either orientation changes."""
    inst = tr.inst
    raw = tr.raw
    pos: dict[int, set] = {}
    for e, t, L, cm in raw["bp_log"]:
        k = e >> 1
        c = inst._ec[k]
        pos.setdefault(k, set()).add(L if e % 2 == 0 else c - L)
    for e in range(2 * inst.m):
        if raw["tight_den"][e]:
            continue
        L = Fraction(int(raw["load_num"][e]), int(raw["load_den"][e]))
        if L > 0:
            k = e >> 1
            pos.setdefault(k, set()).add(L if e % 2 == 0 else inst._ec[k] - L)
    return {k: sorted(p for p in ps if 0 < p < inst._ec[k]) for k, ps in pos.items()}


def make_well_subdivided(inst: Instance, plan: MergePlan, *, root=None,
                         verify: bool = True) -> Instance:
    """``make_nice`` followed by splits at every contribution change."""
    nice = make_nice(inst, plan, root=root)
    tr = growth.simulate(nice, plan, root=root, record=True)
    out = subdivide_edges(nice, well_splits(tr))
    if verify:
        tr2 = growth.simulate(out, plan, root=root, record=True)
        bad = growth.well_subdivided_violations(tr2)
        if bad:
            raise SubdivisionError(f"well-subdivision check failed on {len(bad)} edges: {bad[:5]}")
    return out


def random_subdivision(inst: Instance, rng: random.Random, *, fraction: float = 0.5,
                       max_cuts: int = 2, denominator: int = 7) -> Instance:
    """Split a random share of edges at random rational points."""
    splits = {}
    for k in range(inst.m):
        if rng.random() >= fraction:
            continue
        c = inst._ec[k]
        cuts = {c * Fraction(rng.randint(1, denominator - 1), denominator)
                for _ in range(rng.randint(1, max_cuts))}
        splits[k] = sorted(cuts)
    return subdivide_edges(inst, splits)


def subdivision_identity_violations(ct: ContinuousTrace, ct_sub: ContinuousTrace, k: int,
                                    c_u: Fraction, times=None) -> list[tuple]:
    """Compare a continuous run before and after splitting edge ``k`` once.

    ``ct_sub`` runs on the instance where edge ``k = {u, w}`` became
    ``{u, x}`` of length ``c_u`` and ``{x, w}``.  A set's load on ``(u, w)``
    lands on ``(u, x)`` until the orientation's total load reaches ``c_u``
    and on ``(x, w)`` afterwards; symmetrically for ``(w, u)``.
    When ``S`` is the first set loading an orientation this is
    ``min(C, c_u)`` and ``max(C - c_u, 0)``.  Checked at every given time.
    """
    inst, sub = ct.inst, ct_sub.inst
    u, w = inst.vertices[inst._eu[k]], inst.vertices[inst._ev[k]]
    c_w = inst._ec[k] - c_u
    x = next(v for v in sub.vertices if not inst.has_vertex(v))
    fam = [ps.members for ps in ct.trace.family]
    if times is None:
        times = [None]

    def crossing(e, cap):
        # first time the total load on directed edge e reaches cap
        ivs = [iv for iv in (ct.interval(T, e) for T in fam) if iv is not None]
        pts = sorted({p for iv in ivs for p in iv})
        load = Fraction(0)
        for a, b in zip(pts, pts[1:]):
            rate = sum(1 for lo, hi in ivs if lo <= a and b <= hi)
            if rate and load + rate * (b - a) >= cap:
                return a + (cap - load) / rate
            load += rate * (b - a)
        return None

    def split(S, e, cross, t):
        # (near part, far part) of S's load on directed edge e up to t
        iv = ct.interval(S, e)
        if iv is None:
            return Fraction(0), Fraction(0)
        lo, hi = iv
        if t is not None:
            hi = min(hi, t)
        if hi <= lo:
            return Fraction(0), Fraction(0)
        near = hi - lo if cross is None else max(min(hi, cross) - lo, Fraction(0))
        return near, hi - lo - near

    cross_f, cross_b = crossing(2 * k, c_u), crossing(2 * k + 1, c_w)

    bad = []
    for S in fam:
        for t in times:
            fn, ff = split(S, 2 * k, cross_f, t)
            bn, bf = split(S, 2 * k + 1, cross_b, t)
            want = {(u, x): fn, (x, w): ff, (w, x): bn, (x, u): bf}
            for (a, z), val in want.items():
                got = ct_sub.contribution(S, a, z, t)
                if got != val:
                    bad.append((S, (a, z), t, got, val))
    return bad
