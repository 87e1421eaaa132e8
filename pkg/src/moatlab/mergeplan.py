"""Merge plans: nested terminal partitions stored as ultrametric merge times.

Terminals ``x`` and ``y`` lie in different parts of ``S^t`` exactly when
``t <= merge(x, y)``; parts join immediately after their merge time.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .instance import (DEFAULT_COMPONENT_CAP, DEFAULT_STEINER_CAP, Instance, SteinerTable,
                       as_fraction, fmt, steiner_cost, terminal_distances, vkey)


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class PlanSet:
    """A set of the laminar family with its activity window ``(a, d]``."""

    members: frozenset
    a: Fraction
    d: Fraction


class MergePlan:
    """Symmetric ultrametric merge-time function on a terminal list."""

    __slots__ = ("terminals", "_pos", "_t", "_cache")

    def __init__(self, terminals: Sequence, times: Mapping | Callable, *, check: bool = True):
        self.terminals = tuple(terminals)
        if len(set(self.terminals)) != len(self.terminals):
            raise PlanError("duplicate terminals")
        self._pos = {x: i for i, x in enumerate(self.terminals)}
        k = len(self.terminals)
        get = times if callable(times) else (lambda a, b: _lookup(times, a, b))
        self._t = [[Fraction(0)] * k for _ in range(k)]
        for i, j in itertools.combinations(range(k), 2):
            t = as_fraction(get(self.terminals[i], self.terminals[j]))
            if t < 0:
                raise PlanError("negative merge time")
            self._t[i][j] = self._t[j][i] = t
        self._cache: dict = {}
        if check:
            bad = self.ultrametric_violation()
            if bad is not None:
                raise PlanError(f"not ultrametric at {bad!r}")

    def merge(self, x, y) -> Fraction:
        return self._t[self._pos[x]][self._pos[y]]

    def pairs(self):
        for i, j in itertools.combinations(range(len(self.terminals)), 2):
            yield self.terminals[i], self.terminals[j], self._t[i][j]

    def ultrametric_violation(self):
        t = self._t
        k = len(self.terminals)
        for i in range(k):
            for j in range(k):
                for l in range(k):
                    if t[i][l] > max(t[i][j], t[j][l]):
                        return self.terminals[i], self.terminals[j], self.terminals[l]
        return None

    def __eq__(self, other) -> bool:
        if not isinstance(other, MergePlan) or set(self.terminals) != set(other.terminals):
            return NotImplemented if not isinstance(other, MergePlan) else False
        return all(self.merge(a, b) == other.merge(a, b) for a, b, _ in self.pairs())

    def __repr__(self) -> str:
        return f"MergePlan(|R|={len(self.terminals)}, value={fmt(value(self))})"

    # the nested partition process

    def merges(self) -> list[tuple[Fraction, object, object]]:
        """Kruskal order ``(t, x, y)``: after time ``t`` the parts of x and y are joined."""
        got = self._cache.get("merges")
        if got is not None:
            return got
        k = len(self.terminals)
        parent = list(range(k))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        order = sorted(itertools.combinations(range(k), 2), key=lambda p: (self._t[p[0]][p[1]], p))
        out = []
        for i, j in order:
            a, b = find(i), find(j)
            if a != b:
                parent[max(a, b)] = min(a, b)
                out.append((self._t[i][j], self.terminals[i], self.terminals[j]))
        self._cache["merges"] = out
        return out

    def breakpoints(self) -> list[Fraction]:
        return sorted({t for t, _, _ in self.merges()})

    def end_time(self) -> Fraction:
        m = self.merges()
        return m[-1][0] if m else Fraction(0)

    def partition_at(self, t) -> list[frozenset]:
        """Parts of ``S^t``: x, y together iff ``merge(x, y) < t``."""
        t = as_fraction(t)
        parts: list[set] = []
        for x in self.terminals:
            for p in parts:
                if self.merge(x, next(iter(p))) < t:
                    p.add(x)
                    break
            else:
                parts.append({x})
        return [frozenset(p) for p in parts]

    def family(self) -> list[PlanSet]:
        """Sets that are active on a nonempty window, with ``a_S`` and ``d_S``."""
        got = self._cache.get("family")
        if got is not None:
            return got
        current = {x: (frozenset([x]), Fraction(0)) for x in self.terminals}
        out: list[PlanSet] = []
        merges = self.merges()
        for t, group in itertools.groupby(merges, key=lambda m: m[0]):
            for _, x, y in group:
                sx, ax = current[x]
                sy, ay = current[y]
                if sx == sy:
                    continue
                for s, a in ((sx, ax), (sy, ay)):
                    if a < t:
                        out.append(PlanSet(s, a, t))
                u = sx | sy
                for z in u:
                    current[z] = (u, t)
            # unions created and absorbed at the same instant carry a == t and are skipped later
        out.sort(key=lambda s: (s.a, len(s.members), sorted(map(vkey, s.members))))
        self._cache["family"] = out
        return out

    def active_sets(self, t) -> list[frozenset]:
        """Parts of ``S^t`` while more than one part remains, else nothing."""
        parts = self.partition_at(t)
        return parts if len(parts) > 1 else []


def _lookup(times: Mapping, a, b):
    if (a, b) in times:
        return times[a, b]
    if (b, a) in times:
        return times[b, a]
    key = frozenset((a, b))
    if key in times:
        return times[key]
    raise PlanError(f"missing merge time for {a!r}, {b!r}")


def value(plan: MergePlan) -> Fraction:
    """``∫ (|S^t| - 1) dt``; the sum of merge times along a Kruskal tree."""
    return sum((t for t, _, _ in plan.merges()), Fraction(0))


def local_value(plan: MergePlan, X: Iterable) -> Fraction:
    """``∫ (#parts meeting X - 1) dt``."""
    X = [x for x in plan.terminals if x in set(X)]
    if not X:
        raise PlanError("empty set")
    sub = MergePlan(X, lambda a, b: plan.merge(a, b), check=False)
    return value(sub)


def from_upper_bound(terminals: Sequence, u: Mapping | Callable) -> MergePlan:
    """The maximum-value plan bounded by ``u``: minimax path values of ``u``."""
    terms = tuple(terminals)
    get = u if callable(u) else (lambda a, b: _lookup(u, a, b))
    k = len(terms)
    if k <= 1:
        return MergePlan(terms, {})
    w = [[Fraction(0)] * k for _ in range(k)]
    for i, j in itertools.combinations(range(k), 2):
        w[i][j] = w[j][i] = as_fraction(get(terms[i], terms[j]))
    # Prim (any MST gives the same path maxima), then path maxima in the tree
    best = {j: (w[0][j], 0) for j in range(1, k)}
    adj: list[list[tuple[int, Fraction]]] = [[] for _ in range(k)]
    while best:
        j = min(best, key=lambda q: (best[q][0], q))
        c, p = best.pop(j)
        adj[p].append((j, c))
        adj[j].append((p, c))
        for q in best:
            if w[j][q] < best[q][0]:
                best[q] = (w[j][q], j)
    times = [[Fraction(0)] * k for _ in range(k)]
    for s in range(k):
        stack = [(s, -1, Fraction(0))]
        while stack:
            x, par, mx = stack.pop()
            times[s][x] = mx
            for y, c in adj[x]:
                if y != par:
                    stack.append((y, x, max(mx, c)))
    return MergePlan(terms, lambda a, b: times[terms.index(a)][terms.index(b)], check=False)


def canonical_plan(inst: Instance) -> MergePlan:
    """Largest-value plan with ``merge(x, y) <= dist(x, y) / 2``."""
    d = terminal_distances(inst)
    return from_upper_bound(inst.terminals, lambda a, b: d[a, b] / 2)


def trivial_plan(terminals: Sequence) -> MergePlan:
    """Every pair merged at time 0."""
    return MergePlan(terminals, lambda a, b: 0, check=False)


def scale(plan: MergePlan, factor) -> MergePlan:
    f = as_fraction(factor)
    if f <= 0:
        raise PlanError("scale factor must be positive")
    return MergePlan(plan.terminals, lambda a, b: plan.merge(a, b) * f, check=False)


def contract_plan(plan: MergePlan, X: Iterable) -> MergePlan:
    """``M/X``: parts meeting X are combined; X is represented by its smallest id."""
    X = frozenset(X)
    if not X:
        raise PlanError("empty set")
    if not X <= set(plan.terminals):
        raise PlanError("contracted set must consist of plan terminals")
    rep = min(X, key=vkey)
    terms = [t for t in plan.terminals if t not in X or t == rep]
    mx = {a: min(plan.merge(a, x) for x in X) for a in plan.terminals}

    def t(a, b):
        if a == rep:
            return mx[b]
        if b == rep:
            return mx[a]
        return min(plan.merge(a, b), max(mx[a], mx[b]))

    return MergePlan(terms, t, check=False)


def contract_upper_bound(terminals: Sequence, u: Callable, X: Iterable) -> tuple[list, Callable]:
    """``u_X``: the bound on ``R/X`` with ``u_X(a, X) = min_x u(a, x)``."""
    X = frozenset(X)
    rep = min(X, key=vkey)
    terms = [t for t in terminals if t not in X or t == rep]

    def ux(a, b):
        if a == rep:
            return min(u(b, x) for x in X)
        if b == rep:
            return min(u(a, x) for x in X)
        return u(a, b)

    return terms, ux


# gamma-goodness


@dataclass
class GammaReport:
    gamma: Fraction
    status: str  # "strictly-good", "good" or "bad"
    bounded: bool = False
    pair_witness: tuple | None = None
    set_witness: frozenset | None = None
    cheap_sets: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def good(self) -> bool:
        return self.status in ("good", "strictly-good")

    @property
    def strictly_good(self) -> bool:
        return self.status == "strictly-good"


def gamma_constants(gamma) -> tuple[Fraction, Fraction, Fraction]:
    """``((7-5g)/12, (7-5g)/(18-14g), (12-12g)/(7-5g))``."""
    g = as_fraction(gamma)
    return (7 - 5 * g) / 12, (7 - 5 * g) / (18 - 14 * g), (12 - 12 * g) / (7 - 5 * g)


def classify_gamma(plan: MergePlan, inst: Instance, gamma, subset_cap: int = 16,
                   costs: Callable | None = None) -> GammaReport:
    """Decide whether ``plan`` is (strictly) gamma-good for ``inst``.

    Sets are enumerated exhaustively while ``|R|`` is within both the subset
    cap and the exact Steiner cap; beyond that only sets of at most
    ``DEFAULT_COMPONENT_CAP`` terminals are examined and the report is marked
    bounded.
    """
    g = as_fraction(gamma)
    if not 0 <= g <= Fraction(1, 5):
        raise PlanError("gamma must lie in [0, 1/5]")
    c1, c2, thr = gamma_constants(g)
    R = list(plan.terminals)
    d = terminal_distances(inst, R)
    good = strict = True
    report = GammaReport(g, "bad")
    for a, b, t in plan.pairs():
        lim = c1 * d[a, b]
        if t >= lim:
            strict = False
            if report.pair_witness is None or t > lim:
                report.pair_witness = (a, b)
        if t > lim:
            good = False
    if not good:
        return report
    exhaustive = len(R) <= min(subset_cap, DEFAULT_STEINER_CAP)
    max_size = len(R) if exhaustive else min(len(R), DEFAULT_COMPONENT_CAP)
    report.bounded = not exhaustive
    if costs is None:
        if exhaustive:
            table = SteinerTable(inst, R)
            costs = lambda X: table.cost(table.mask_of(X))  # noqa: E731
        else:
            costs = lambda X: steiner_cost(inst, X)[0]  # noqa: E731
    for size in range(2, max_size + 1):
        for X in itertools.combinations(R, size):
            lv = local_value(plan, X)
            c = costs(X)
            cheap = c < thr * lv
            not_strict_exp = not (c > thr * lv)
            if not (cheap or not_strict_exp):
                continue
            early = [(x, y) for x, y in itertools.combinations(X, 2)
                     if plan.merge(x, y) <= c2 * d[x, y]]
            early_strict = [(x, y) for x, y in early if plan.merge(x, y) < c2 * d[x, y]]
            if cheap:
                report.cheap_sets += 1
                if not early:
                    good = False
                    report.set_witness = frozenset(X)
            if not_strict_exp and not early_strict:
                strict = False
                if report.set_witness is None:
                    report.set_witness = frozenset(X)
    if report.bounded:
        report.notes.append("bounded verification")
    report.status = "strictly-good" if (good and strict) else ("good" if good else "bad")
    return report


# serialization and sampling


def plan_to_dict(plan: MergePlan) -> dict:
    return {"terminals": list(plan.terminals),
            "entries": [[a, b, fmt(t)] for a, b, t in plan.pairs()]}


def plan_from_dict(data) -> MergePlan:
    if isinstance(data, list):
        entries = data
        terms: list = []
        for a, b, _ in entries:
            for x in (a, b):
                if x not in terms:
                    terms.append(x)
    else:
        entries = data["entries"]
        terms = list(data["terminals"])
    times = {(a, b): as_fraction(t) for a, b, t in entries}
    return MergePlan(terms, times)


def plan_to_json(plan: MergePlan, **kw) -> str:
    return json.dumps(plan_to_dict(plan), **kw)


def plan_from_json(text: str) -> MergePlan:
    return plan_from_dict(json.loads(text))


def random_ultrametric(rng: random.Random, terminals: Sequence, t_max, denominator: int = 12,
                       t_min=0) -> MergePlan:
    """A random dendrogram with merge times on the grid ``1/denominator``."""
    terms = list(terminals)
    lo = int(as_fraction(t_min) * denominator)
    hi = int(as_fraction(t_max) * denominator)
    times = sorted(Fraction(rng.randint(lo, hi), denominator) for _ in range(len(terms) - 1))
    parts = [[x] for x in terms]
    mt: dict = {}
    for t in times:
        i, j = rng.sample(range(len(parts)), 2)
        for a in parts[i]:
            for b in parts[j]:
                mt[a, b] = t
        parts[i] = parts[i] + parts[j]
        parts.pop(j)
    return MergePlan(terms, mt)
