"""Moat growing with a merge plan on the bidirected graph.

Every active set ``S`` of the plan grows the dual variable of its reach
set ``U_S`` (vertices reachable from ``S`` over tight directed edges) at
unit rate; a directed edge ``(v, w)`` is loaded by every active set with
``v`` in ``U_S`` and ``w`` outside.  The event simulation itself lives in
the kernel; this module turns its logs into reach times, contribution
intervals, dual solutions and diagnostics.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from . import kernel
from .instance import Instance, InstanceError, as_fraction, fmt, vkey
from .mergeplan import MergePlan, PlanSet


class GrowthError(ValueError):
    pass


INF = None  # unreachable marker in reach tables


def _lt(a, b) -> bool:
    """``a < b`` with ``None`` standing for +infinity."""
    if a is None:
        return False
    return b is None or a < b


def _min(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a if a <= b else b


@dataclass
class DualSolution:
    """Dual-BCR point: a list of ``(U, y_U)`` with exact amounts."""
    entries: list[tuple[frozenset, Fraction]]
    root: object
    terminals: tuple

    def aggregated(self) -> dict[frozenset, Fraction]:
        out: dict[frozenset, Fraction] = {}
        for U, y in self.entries:
            out[U] = out.get(U, Fraction(0)) + y
        return out

    def to_dict(self) -> dict:
        agg = self.aggregated()
        keys = sorted(agg, key=lambda U: (len(U), sorted(map(vkey, U))))
        return {
            "root": self.root,
            "terminals": list(self.terminals),
            "entries": [{"set": sorted(U, key=vkey), "y": fmt(agg[U])} for U in keys],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DualSolution":
        entries = [(frozenset(e["set"]), as_fraction(e["y"])) for e in data["entries"]]
        return cls(entries, data.get("root"), tuple(data.get("terminals", ())))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "DualSolution":
        return cls.from_dict(json.loads(text))


def dual_objective(d: DualSolution) -> Fraction:
    """Sum of ``y_U`` over sets that avoid the root and contain a terminal."""
    R = set(d.terminals)
    total = Fraction(0)
    for U, y in d.entries:
        if d.root not in U and (not R or U & R):
            total += y
    return total


def verify_dual_feasibility(d: DualSolution, inst: Instance) -> tuple[bool, list[tuple]]:
    """Exact check of every directed-edge packing constraint.

    Returns ``(ok, violations)`` with violations as ``(u, v, load, cost)``.
    """
    agg = d.aggregated()
    bad = []
    for u, v, c in inst.edges():
        for a, b in ((u, v), (v, u)):
            load = sum((y for U, y in agg.items() if a in U and b not in U), Fraction(0))
            if load > c:
                bad.append((a, b, load, c))
    for U, y in agg.items():
        if y < 0:
            bad.append(("negative", sorted(U, key=vkey), y, 0))
    return not bad, bad


@dataclass
class GrowthTrace:
    """Event history of one run.

    ``reach[i]`` maps vertex index to the first time terminal ``i`` (in
    ``inst.terminals`` order) reaches it; only filled in record mode.
    ``root_reach[i]`` is always available.
    """
    inst: Instance
    plan: MergePlan
    root: object
    continuous: bool
    t_end: Fraction
    raw: dict
    reach: list[dict[int, Fraction]] | None
    root_reach: list[Fraction | None]
    _cache: dict = field(default_factory=dict, repr=False)
    truncated: bool = False    # stopped once every terminal reached the root

    @property
    def recorded(self) -> bool:
        return self.reach is not None

    @property
    def family(self) -> list[PlanSet]:
        return self.plan.family()

    def _need_full(self):
        if self.truncated:
            raise GrowthError("run stopped early; rerun without objective_only")

    def _need_record(self):
        if self.reach is None:
            raise GrowthError("run was not recorded; rerun with record=True")

    def _tindex(self, S) -> list[int]:
        pos = self._cache.setdefault("tpos", {t: i for i, t in enumerate(self.inst.terminals)})
        try:
            return [pos[x] for x in S]
        except KeyError as exc:
            raise GrowthError(f"{exc.args[0]!r} is not a terminal") from None

    def tight_time(self, u, v) -> Fraction | None:
        """Time at which directed edge ``(u, v)`` became tight, or ``None``."""
        self._need_full()
        k, fwd = self._edge_id(u, v)
        e = 2 * k + (0 if fwd else 1)
        d = int(self.raw["tight_den"][e])
        return Fraction(int(self.raw["tight_num"][e]), d) if d else None

    def _edge_id(self, u, v) -> tuple[int, bool]:
        i, j = self.inst.index(u), self.inst.index(v)
        for k, w in self.inst.adjacency()[i]:
            if w == j:
                return k, self.inst._eu[k] == i
        raise InstanceError(f"no edge between {u!r} and {v!r}")

    def tight_index(self) -> list[Fraction | None]:
        self._need_full()
        got = self._cache.get("tight")
        if got is None:
            tn, td = self.raw["tight_num"], self.raw["tight_den"]
            got = [Fraction(int(a), int(b)) if b else None for a, b in zip(tn, td)]
            self._cache["tight"] = got
        return got

    def final_load(self, u, v) -> Fraction:
        self._need_full()
        k, fwd = self._edge_id(u, v)
        e = 2 * k + (0 if fwd else 1)
        return Fraction(int(self.raw["load_num"][e]), int(self.raw["load_den"][e]))

    def atf_index(self, S: Iterable) -> list[Fraction | None]:
        """``atf_S`` for every vertex index (``None`` if never reached)."""
        self._need_record()
        key = frozenset(S)
        got = self._cache.get(("atf", key))
        if got is None:
            got = [None] * self.inst.n
            for i in self._tindex(key):
                for v, t in self.reach[i].items():
                    if got[v] is None or t < got[v]:
                        got[v] = t
            self._cache[("atf", key)] = got
        return got

    def atf(self, S: Iterable, v) -> Fraction | None:
        """First time the terminal set ``S`` reaches vertex ``v``."""
        S = _as_set(S)
        if self.reach is None and v == self.root:
            out = None
            for i in self._tindex(S):
                out = _min(out, self.root_reach[i])
            return out
        return self.atf_index(S)[self.inst.index(v)]

    def contribution_intervals(self) -> dict[tuple[frozenset, int], tuple[Fraction, Fraction]]:
        """``(S, directed edge id) -> (t1, t2)``: ``S`` loads the edge on ``(t1, t2]``."""
        got = self._cache.get("contrib")
        if got is not None:
            return got
        if self.continuous:
            raise GrowthError("contribution intervals of continuous runs live in subdivide")
        inst = self.inst
        out = {}
        tail = kernel.graph_arrays(inst).tail
        head = kernel.graph_arrays(inst).head
        for ps in self.family:
            atf = self.atf_index(ps.members)
            for e in range(2 * inst.m):
                av = atf[tail[e]]
                if av is None:
                    continue
                lo = max(ps.a, av)
                hi = _min(ps.d, atf[head[e]])
                if _lt(lo, hi):
                    out[(ps.members, e)] = (lo, hi)
        self._cache["contrib"] = out
        return out

    def contributions(self) -> dict[tuple[frozenset, tuple], tuple[Fraction, Fraction]]:
        """Same as :meth:`contribution_intervals`, keyed by vertex pairs."""
        g = kernel.graph_arrays(self.inst)
        vs = self.inst.vertices
        return {(S, (vs[g.tail[e]], vs[g.head[e]])): iv
                for (S, e), iv in self.contribution_intervals().items()}

    def dual(self) -> DualSolution:
        """Aggregate the grown duals: one entry per constant stretch of ``U_S``."""
        self._need_record()
        got = self._cache.get("dual")
        if got is not None:
            return got
        vs = self.inst.vertices
        entries = []
        for ps in self.family:
            atf = self.atf_index(ps.members)
            reached = sorted((t, v) for v, t in enumerate(atf) if t is not None and t <= ps.d)
            cuts = sorted({ps.a, ps.d} | {t for t, _ in reached if ps.a < t < ps.d})
            U: set = set()
            p = 0
            for ta, tb in zip(cuts, cuts[1:]):
                while p < len(reached) and reached[p][0] <= ta:
                    U.add(vs[reached[p][1]])
                    p += 1
                entries.append((frozenset(U), tb - ta))
        got = DualSolution(entries, self.root, tuple(self.inst.terminals))
        self._cache["dual"] = got
        return got

    def events(self) -> list[tuple[Fraction, str, object]]:
        """Time-ordered ``(time, kind, payload)`` list."""
        vs = self.inst.vertices
        terms = self.inst.terminals
        ev = []
        for t, x, y in self.plan.merges():
            ev.append((t, "partition-change", (x, y)))
        g = kernel.graph_arrays(self.inst)
        for e, t in enumerate(self.tight_index()):
            if t is not None:
                ev.append((t, "edge-tight", (vs[g.tail[e]], vs[g.head[e]])))
        if self.recorded:
            for v, t, bits in self.raw["reach_log"]:
                who = [terms[i] for i in range(len(terms)) if bits >> i & 1]
                ev.append((t, "reach", (vs[v], who)))
        order = {"edge-tight": 0, "reach": 1, "partition-change": 2}
        ev.sort(key=lambda x: (x[0], order[x[1]]))
        return ev

    def to_dict(self) -> dict:
        """JSON-ready export: events, atf table per plan set, contribution intervals."""
        self._need_record()
        vs = self.inst.vertices
        fam = []
        for ps in self.family:
            atf = self.atf_index(ps.members)
            fam.append({
                "set": sorted(ps.members, key=vkey), "a": fmt(ps.a), "d": fmt(ps.d),
                "atf": {str(vs[v]): fmt(t) for v, t in enumerate(atf) if t is not None},
            })
        contrib = [{"set": sorted(S, key=vkey), "edge": [u, v], "from": fmt(a), "to": fmt(b)}
                   for (S, (u, v)), (a, b) in self.contributions().items()]
        return {
            "root": self.root,
            "t_end": fmt(self.t_end),
            "continuous": self.continuous,
            "events": [{"time": fmt(t), "kind": k, "payload": p} for t, k, p in self.events()],
            "sets": fam,
            "contributions": contrib,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _as_set(S) -> frozenset:
    if isinstance(S, PlanSet):
        return S.members
    if isinstance(S, (set, frozenset, list, tuple)):
        return frozenset(S)
    return frozenset([S])


def _check_plan(inst: Instance, plan: MergePlan) -> None:
    if set(plan.terminals) != set(inst.terminals):
        raise GrowthError("merge plan terminals do not match the instance terminals")


def run(inst: Instance, plan: MergePlan, *, root=None, record: bool = True,
        continuous: bool = False, backend: str | None = None) -> tuple[GrowthTrace, DualSolution | None]:
    """Simulate the moat growth; the dual is materialized only in record mode."""
    trace = simulate(inst, plan, root=root, record=record, continuous=continuous, backend=backend)
    return trace, (trace.dual() if record and not continuous else None)


def simulate(inst: Instance, plan: MergePlan, *, root=None, record: bool = True,
             continuous: bool = False, backend: str | None = None,
             objective_only: bool = False) -> GrowthTrace:
    """Run discrete dual growth (or its continuous variant) and collect the trace.

    ``objective_only`` (without ``record``) stops once every terminal has
    reached the root: root reach times, the objective and feasibility are
    final by then, but tight times and loads are not.
    """
    _check_plan(inst, plan)
    if root is None:
        root = inst.effective_root()
    terms = inst.terminals
    if root not in terms:
        raise GrowthError(f"root {root!r} is not a terminal")
    pos = {t: i for i, t in enumerate(terms)}
    merges = [(t, pos[x], pos[y]) for t, x, y in plan.merges()]
    raw = kernel.grow(inst, merges, continuous=continuous, record=record,
                      root_index=pos[root], backend=backend,
                      root_stop=objective_only and not record)
    K = len(terms)
    root_reach: list[Fraction | None] = [None] * K
    for t, bits in raw["root_log"]:
        for i in range(K):
            if bits >> i & 1 and root_reach[i] is None:
                root_reach[i] = Fraction(t)
    reach = None
    if record:
        reach = [dict() for _ in range(K)]
        for v, t, bits in raw["reach_log"]:
            i = 0
            while bits:
                if bits & 1 and v not in reach[i]:
                    reach[i][v] = t
                bits >>= 1
                i += 1
    stopped = bool(raw.get("stopped_early"))
    t_end = plan.end_time() if stopped else Fraction(raw["t_end"])
    return GrowthTrace(inst, plan, root, continuous, t_end, raw, reach, root_reach, truncated=stopped)


# objective and feasibility from the root reach times alone


def _root_atf(trace: GrowthTrace, S: frozenset) -> Fraction | None:
    out = None
    for i in trace._tindex(S):
        out = _min(out, trace.root_reach[i])
    return out


def run_objective(trace: GrowthTrace) -> Fraction:
    """Dual objective without materializing the dual.

    A set ``S`` adds the part of ``(a_S, d_S]`` before it reaches the root.
    """
    total = Fraction(0)
    for ps in trace.family:
        if trace.root in ps.members:
            continue
        hi = _min(ps.d, _root_atf(trace, ps.members))
        if hi > ps.a:
            total += hi - ps.a
    return total


def is_feasible_run(trace: GrowthTrace, plan: MergePlan | None = None,
                    inst: Instance | None = None) -> tuple[bool, tuple | None]:
    """True iff no rootless active set ever grows a moat containing the root.

    The witness is ``(time, S)``: from ``time`` on, ``S`` grows a root set.
    """
    if plan is not None and plan is not trace.plan and plan != trace.plan:
        raise GrowthError("trace was produced with a different merge plan")
    if inst is not None and inst is not trace.inst:
        _check_plan(inst, trace.plan)
    for ps in trace.family:
        if trace.root in ps.members:
            continue
        t = _root_atf(trace, ps.members)
        if t is not None and t < ps.d:
            return False, (max(t, ps.a), ps.members)
    return True, None


# diagnostics on tight, active and safe paths


def _s_tight_tree(trace: GrowthTrace, S: frozenset) -> dict:
    # BFS parents over S-tight edges; parents do not depend on where a search stops
    key = ("stree", S)
    got = trace._cache.get(key)
    if got is not None:
        return got
    inst = trace.inst
    atf = trace.atf_index(S)
    tight = trace.tight_index()
    g = kernel.graph_arrays(inst)
    out_ptr, out_edges, head = g.out_ptr.tolist(), g.out_edges.tolist(), g.head.tolist()
    # an edge qualifies when tight by the reach time of its head
    ok = [t is not None and atf[head[e]] is not None and t <= atf[head[e]] for e, t in enumerate(tight)]
    prev = {}
    queue = deque()
    for x in S:
        i = inst.index(x)
        prev[i] = -1
        queue.append(i)
    while queue:
        a = queue.popleft()
        ta = atf[a]
        for p in range(out_ptr[a], out_ptr[a + 1]):
            e = out_edges[p]
            b = head[e]
            if b in prev or not ok[e] or ta > atf[b]:
                continue
            prev[b] = a
            queue.append(b)
    trace._cache[key] = prev
    return prev


def s_tight_path(trace: GrowthTrace, S, v) -> list:
    """An ``S``-tight path from ``S`` to ``v`` as a vertex list.

    Returns ``[]`` when ``v`` is in ``S``.  Edges ``(a, b)`` qualify when
    ``atf_S(a) <= atf_S(b)`` and the edge is tight by ``atf_S(b)``.
    """
    S = _as_set(S)
    if v in S:
        return []
    inst = trace.inst
    target = inst.index(v)
    if trace.atf_index(S)[target] is None:
        raise GrowthError(f"{v!r} is not reachable from the set")
    prev = _s_tight_tree(trace, S)
    if target not in prev:
        raise GrowthError("no S-tight path found")  # cannot happen for a consistent trace
    path = []
    x = target
    while x != -1:
        path.append(inst.vertices[x])
        x = prev[x]
    return path[::-1]


def _check_s_tight(trace: GrowthTrace, S: frozenset, path: list) -> None:
    if not path:
        return
    if path[0] not in S:
        raise GrowthError("path does not start in S")
    for a, b in zip(path, path[1:]):
        ta, tb = trace.atf(S, a), trace.atf(S, b)
        tt = trace.tight_time(a, b)
        if ta is None or tb is None or ta > tb or tt is None or tt > tb:
            raise GrowthError(f"edge ({a!r}, {b!r}) is not S-tight")


def meeting_point(trace: GrowthTrace, S, path: list):
    """First vertex of ``path`` with ``atf_{R\\S} <= atf_S``, or ``None``."""
    S = _as_set(S)
    _check_s_tight(trace, S, path)
    rest = frozenset(trace.inst.terminals) - S
    if not rest:
        return None
    for x in path:
        a_rest = trace.atf(rest, x)
        if a_rest is not None and a_rest <= trace.atf(S, x):
            return x
    return None


def path_length(inst: Instance, path: list) -> Fraction:
    return sum((inst.cost(a, b) for a, b in zip(path, path[1:])), Fraction(0))


@dataclass
class SafeEdgeEntry:
    edge: tuple
    tight_at: Fraction
    contributors: list[frozenset]
    flagged: bool


def safe_edge_report(trace: GrowthTrace, S=None) -> list[SafeEdgeEntry]:
    """Sets that loaded each tight edge (either orientation) before it got tight.

    An edge is flagged when three or more sets contributed or, relative to
    ``S``, at least two of them avoid ``S``.
    """
    inst = trace.inst
    S = _as_set(S) if S is not None else None
    by_edge: dict[int, list] = {}
    for (T, e), (lo, hi) in trace.contribution_intervals().items():
        by_edge.setdefault(e, []).append((T, lo))
    g = kernel.graph_arrays(inst)
    vs = inst.vertices
    out = []
    for e, t in enumerate(trace.tight_index()):
        if t is None:
            continue
        seen = []
        for f in (e, e ^ 1):
            for T, lo in by_edge.get(f, ()):
                if lo < t and T not in seen:
                    seen.append(T)
        seen.sort(key=lambda T: (len(T), sorted(map(vkey, T))))
        flagged = len(seen) >= 3
        if S is not None and sum(1 for T in seen if not (T & S)) >= 2:
            flagged = True
        out.append(SafeEdgeEntry((vs[g.tail[e]], vs[g.head[e]]), t, seen, flagged))
    return out


def length_bound_holds(trace: GrowthTrace, S, v) -> tuple[bool, dict]:
    """Check ``c(P[m, v]) <= 2 atf_S(v) + atf_R(v) - 3 atf_S(m)`` on an S-tight path.

    Vacuous (True) when the path has no proper meeting point.
    """
    S = _as_set(S)
    path = s_tight_path(trace, S, v)
    m = meeting_point(trace, S, path) if path else None
    info = {"path": path, "meeting_point": m}
    if m is None or m == path[-1]:
        return True, info
    k = path.index(m)
    length = path_length(trace.inst, path[k:])
    R = frozenset(trace.inst.terminals)
    bound = 2 * trace.atf(S, v) + trace.atf(R, v) - 3 * trace.atf(S, m)
    info.update(length=length, bound=bound)
    return length <= bound, info


def well_subdivided_violations(trace: GrowthTrace) -> list[tuple]:
    """Edges breaking the two well-subdivision conditions in this run.

    (i) once both endpoints are reached (before the run ends), one orientation
    is tight;
    (ii) each loaded orientation has one contributing family on a single
    interval that ends in tightness.
    """
    self_check = []
    inst = trace.inst
    tight = trace.tight_index()
    R = frozenset(inst.terminals)
    atf = trace.atf_index(R)
    for k in range(inst.m):
        u, v = inst._eu[k], inst._ev[k]
        if atf[u] is None or atf[v] is None:
            continue
        both = max(atf[u], atf[v])
        if both >= trace.t_end:
            continue  # growth has stopped by then
        t = _min(tight[2 * k], tight[2 * k + 1])
        if t is None or t > both:
            self_check.append(("i", inst.vertices[u], inst.vertices[v]))
    per_edge: dict[int, list] = {}
    for (T, e), iv in trace.contribution_intervals().items():
        per_edge.setdefault(e, []).append(iv)
    for e, ivs in per_edge.items():
        starts = {a for a, _ in ivs}
        ends = {b for _, b in ivs}
        if len(starts) != 1 or len(ends) != 1 or tight[e] is None or tight[e] != next(iter(ends)):
            g = kernel.graph_arrays(inst)
            self_check.append(("ii", inst.vertices[g.tail[e]], inst.vertices[g.head[e]]))
    return self_check
