"""Relative greedy contraction, the function rho, gamma-good plans and the gap integral."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

from .instance import (Component, Instance, as_fraction, contract, drop, tmst, vkey)
from .mergeplan import MergePlan, canonical_plan, from_upper_bound

DEFAULT_CAP = 6
ONE_FIFTH = Fraction(1, 5)


# cheapest full components


def _leaf_paths(inst: Instance, src: int, is_term: list[bool]):
    """Dijkstra from terminal ``src`` whose interior avoids all terminals."""
    adj = inst.adjacency()
    ec = inst._ec
    dist = {src: Fraction(0)}
    prev = {src: None}
    done = set()
    heap = [(Fraction(0), src)]
    while heap:
        d, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        if x != src and is_term[x]:
            continue
        for k, y in adj[x]:
            nd = d + ec[k]
            if y not in dist or nd < dist[y]:
                dist[y] = nd
                prev[y] = (x, k)
                heapq.heappush(heap, (nd, y))
    return dist, prev


class FullComponentTable:
    """Cheapest full component (terminals exactly at the leaves) per terminal set.

    Dreyfus-Wagner over the terminals of ``points`` with Steiner vertices
    restricted to non-terminals of the whole instance.
    """

    def __init__(self, inst: Instance, points):
        self.inst = inst
        self.points = list(points)
        self.pos = {p: i for i, p in enumerate(self.points)}
        terms = set(inst.index(t) for t in inst.terminals)
        self.is_term = [i in terms for i in range(inst.n)]
        self.steiner = [v for v in range(inst.n) if not self.is_term[v]]
        self.leaf = [_leaf_paths(inst, inst.index(p), self.is_term) for p in self.points]
        self._dp: dict[int, tuple[dict, dict]] = {}
        self._best: dict[int, tuple] = {}

    def _table(self, mask: int):
        got = self._dp.get(mask)
        if got is not None:
            return got
        inst = self.inst
        best: dict[int, Fraction] = {}
        back: dict[int, tuple] = {}
        if mask & (mask - 1) == 0:
            i = mask.bit_length() - 1
            dist, _ = self.leaf[i]
            for v in self.steiner:
                if v in dist:
                    best[v] = dist[v]
                    back[v] = ("leaf", i)
        else:
            low = mask & -mask
            sub = (mask - 1) & mask
            while sub:
                if sub & low:
                    a, _ = self._table(sub)
                    b, _ = self._table(mask ^ sub)
                    for v, ca in a.items():
                        cb = b.get(v)
                        if cb is not None:
                            s = ca + cb
                            if v not in best or s < best[v]:
                                best[v] = s
                                back[v] = ("split", sub)
                sub = (sub - 1) & mask
            # relax inside the Steiner vertices
            adj = inst.adjacency()
            heap = [(c, v) for v, c in best.items()]
            heapq.heapify(heap)
            while heap:
                c, v = heapq.heappop(heap)
                if c != best[v]:
                    continue
                for k, w in adj[v]:
                    if self.is_term[w]:
                        continue
                    nc = c + inst._ec[k]
                    if w not in best or nc < best[w]:
                        best[w] = nc
                        back[w] = ("edge", v, k)
                        heapq.heappush(heap, (nc, w))
        self._dp[mask] = (best, back)
        return best, back

    def best(self, X) -> tuple[Fraction, frozenset] | None:
        """Cost and edge-index set of a cheapest full component on ``X``."""
        mask = 0
        for x in X:
            mask |= 1 << self.pos[x]
        if mask in self._best:
            return self._best[mask]
        inst = self.inst
        out = None
        members = [i for i in range(len(self.points)) if mask >> i & 1]
        if len(members) == 2:
            a, b = (inst.index(self.points[i]) for i in members)
            for k, y in inst.adjacency()[a]:
                if y == b and (out is None or inst._ec[k] < out[0]):
                    out = (inst._ec[k], ("direct", k))
        if len(members) >= 2:
            for i in members:
                rest, _ = self._table(mask ^ (1 << i))
                dist, _ = self.leaf[i]
                for v, c in rest.items():
                    if v in dist:
                        s = c + dist[v]
                        if out is None or s < out[0]:
                            out = (s, ("join", i, v))
        if out is not None:
            out = (out[0], frozenset(self._edges(mask, out[1])))
        self._best[mask] = out
        return out

    def _edges(self, mask: int, how) -> set[int]:
        if how[0] == "direct":
            return {how[1]}
        _, i, v = how
        return self._leaf_edges(i, v) | self._tree_edges(mask ^ (1 << i), v)

    def _leaf_edges(self, i: int, v: int) -> set[int]:
        _, prev = self.leaf[i]
        out = set()
        while prev[v] is not None:
            x, k = prev[v]
            out.add(k)
            v = x
        return out

    def _tree_edges(self, mask: int, v: int) -> set[int]:
        _, back = self._table(mask)
        how = back[v]
        if how[0] == "leaf":
            return self._leaf_edges(how[1], v)
        if how[0] == "split":
            return self._tree_edges(how[1], v) | self._tree_edges(mask ^ how[1], v)
        _, u, k = how
        return {k} | self._tree_edges(mask, u)


# relative greedy


@dataclass
class GreedyStep:
    X: frozenset           # terminals of the current graph G_i
    component: Component
    drop: Fraction
    ratio: Fraction
    originals: frozenset   # original terminals merged into the new representative


@dataclass
class GreedyRun:
    inst: Instance
    steps: list[GreedyStep]
    graphs: list[Instance]          # G_1 .. G_{j+1}
    cap: int
    final_bounded: bool
    groups: list[dict] = field(default_factory=list)  # per graph: terminal -> original set

    @property
    def ratios(self) -> list[Fraction]:
        return [s.ratio for s in self.steps]

    @property
    def tmst(self) -> Fraction:
        return tmst(self.inst)[0]


def _component(inst: Instance, X, edges) -> Component:
    vs = inst.vertices
    es = frozenset((vs[inst._eu[k]], vs[inst._ev[k]]) for k in edges)
    return Component(es, frozenset(X), sum((inst._ec[k] for k in edges), Fraction(0)))


def relative_greedy(inst: Instance, component_size_cap: int = DEFAULT_CAP) -> GreedyRun:
    """Contract the full component of least cost-to-drop ratio while it is below 1.

    Ties go to smaller sets, then to the lexicographically smaller set.
    Stops when no improving full component with at most ``component_size_cap``
    terminals remains; the final graph is then MST-optimal up to that cap.
    """
    G = inst
    groups = {t: frozenset([t]) for t in inst.terminals}
    graphs = [G]
    all_groups = [dict(groups)]
    steps: list[GreedyStep] = []
    while len(G.terminals) > 1:
        table = FullComponentTable(G, G.terminals)
        best = None
        size_cap = min(component_size_cap, len(G.terminals))
        for size in range(2, size_cap + 1):
            for X in itertools.combinations(sorted(G.terminals, key=vkey), size):
                got = table.best(X)
                if got is None:
                    continue
                dr = drop(G, X)
                if dr <= 0:
                    continue
                r = got[0] / dr
                key = (r, size, [vkey(x) for x in X])
                if best is None or key < best[0]:
                    best = (key, X, got, dr)
        if best is None or best[0][0] >= 1:
            break
        (r, _, _), X, (cost, edges), dr = best
        comp = _component(G, X, edges)
        merged = frozenset().union(*(groups[x] for x in X))
        steps.append(GreedyStep(frozenset(X), comp, dr, r, merged))
        rep = min(X, key=vkey)
        for x in X:
            groups.pop(x)
        groups[rep] = merged
        G = contract(G, X)
        graphs.append(G)
        all_groups.append(dict(groups))
    bounded = len(G.terminals) > component_size_cap
    return GreedyRun(inst, steps, graphs, component_size_cap, bounded, all_groups)


# rho


@dataclass
class RhoFunction:
    """Share of TMST contracted by components of ratio below ``1 - gamma``."""
    ratios: list[Fraction]
    drops: list[Fraction]
    tmst: Fraction

    def j(self, gamma) -> int:
        g = as_fraction(gamma)
        return sum(1 for r in self.ratios if r < 1 - g)

    def __call__(self, gamma) -> Fraction:
        if self.tmst == 0:
            return Fraction(0)
        return sum(self.drops[: self.j(gamma)], Fraction(0)) / self.tmst

    @property
    def breakpoints(self) -> list[Fraction]:
        """Values of gamma where rho drops (``1 - ratio_i``), increasing."""
        return sorted({1 - r for r in self.ratios})

    def integral(self, lo=0, hi=Fraction(1, 2)) -> Fraction:
        lo, hi = as_fraction(lo), as_fraction(hi)
        pts = sorted({lo, hi} | {b for b in self.breakpoints if lo < b < hi})
        return sum(((b - a) * self(a) for a, b in zip(pts, pts[1:])), Fraction(0))


def rho(run: GreedyRun) -> RhoFunction:
    return RhoFunction(run.ratios, [s.drop for s in run.steps], run.tmst)


# gamma-good plans


def _lifted_canonical(run: GreedyRun, j: int):
    """Canonical merge times of ``G_{j+1}`` pulled back to the original terminals."""
    G = run.graphs[j]
    plan = canonical_plan(G)
    rep = {}
    for t, orig in run.groups[j].items():
        for x in orig:
            rep[x] = t

    def m(a, b):
        ra, rb = rep[a], rep[b]
        return Fraction(0) if ra == rb else plan.merge(ra, rb)

    return m


def gamma_upper_bound(run: GreedyRun, gamma):
    g = as_fraction(gamma)
    if not 0 <= g <= ONE_FIFTH:
        raise ValueError("gamma must lie in [0, 1/5]")
    j = rho(run).j(g)
    m_g = _lifted_canonical(run, 0)
    m_gp = _lifted_canonical(run, j)
    f1 = (7 - 5 * g) / 6
    f2 = (7 - 5 * g) / (9 - 7 * g)
    return lambda a, b: max(f1 * m_gp(a, b), f2 * m_g(a, b))


def construct_gamma_plan(run: GreedyRun, gamma) -> MergePlan:
    """``M_gamma = M_u`` for ``u = max{(7-5g)/6 merge_G', (7-5g)/(9-7g) merge_G}``."""
    return from_upper_bound(run.inst.terminals, gamma_upper_bound(run, gamma))


def gamma_plan_value_bound(run: GreedyRun, gamma) -> Fraction:
    """Guaranteed lower bound on ``value(M_gamma)``."""
    g = as_fraction(gamma)
    j = rho(run).j(g)
    c1 = (7 - 5 * g) / 12
    c2 = (7 - 5 * g) / (18 - 14 * g)
    return (c1 - c2) * tmst(run.graphs[j])[0] + c2 * run.tmst


def a_coef(gamma) -> Fraction:
    g = as_fraction(gamma)
    return (7 - 5 * g) / 12


def b_coef(gamma) -> Fraction:
    g = as_fraction(gamma)
    return (7 - 5 * g) * (3 - 7 * g) / (12 * (9 - 7 * g))


def _sqrt_near(q: Fraction, digits: int = 40) -> Fraction:
    s = 10 ** digits
    return Fraction(isqrt(q.numerator * s * s // q.denominator), s)


def _critical_points(r: Fraction) -> list[Fraction]:
    # zeros of d/dg [a - r b] after clearing denominators:
    # 245 (r-1) g^2 - 630 (r-1) g + 429 r - 405
    A, B, C = 245 * (r - 1), -630 * (r - 1), 429 * r - 405
    if A == 0:
        return []
    disc = B * B - 4 * A * C
    if disc < 0:
        return []
    sq = _sqrt_near(disc)
    return [(-B + sq) / (2 * A), (-B - sq) / (2 * A)]


@dataclass
class GammaChoice:
    gamma: Fraction
    expression: Fraction   # a(g) - b(g) rho(g)
    bound: Fraction        # max(expression, 1/2): lower bound on BCR / TMST


def best_gamma(run_or_rho) -> GammaChoice:
    """Maximize ``a(g) - b(g) rho(g)`` over ``[0, 1/5]``, floored at 1/2.

    ``rho`` is constant on each piece, so candidates are piece endpoints and
    rational approximations of interior critical points; every candidate is
    evaluated exactly, so the result is a valid bound.
    """
    r = run_or_rho if isinstance(run_or_rho, RhoFunction) else rho(run_or_rho)
    cuts = sorted({Fraction(0), ONE_FIFTH} | {b for b in r.breakpoints if 0 < b < ONE_FIFTH})
    cands = set(cuts)
    for lo, hi in zip(cuts, cuts[1:]):
        val = r(lo)
        for c in _critical_points(val):
            if lo < c < hi:
                cands.add(c)
    best = None
    for g in sorted(cands):
        h = a_coef(g) - b_coef(g) * r(g)
        if best is None or h > best[1]:
            best = (g, h)
    g, h = best
    return GammaChoice(g, h, max(h, Fraction(1, 2)))


# the gap integral


def gap_integrand(gamma) -> Fraction:
    """``(a(g) - 1/2) / b(g) = (1-5g)(9-7g) / ((7-5g)(3-7g))``."""
    g = as_fraction(gamma)
    return (1 - 5 * g) * (9 - 7 * g) / ((7 - 5 * g) * (3 - 7 * g))


@dataclass
class GapBound:
    integral_lo: Fraction
    integral_hi: Fraction
    pieces: int

    @property
    def bound_lo(self) -> Fraction:
        return 2 * (1 - self.integral_hi)

    @property
    def bound_hi(self) -> Fraction:
        return 2 * (1 - self.integral_lo)

    @property
    def width(self) -> Fraction:
        return self.integral_hi - self.integral_lo


_GRID = 10 ** 30


def _floor_grid(q: Fraction) -> int:
    return (q.numerator * _GRID) // q.denominator


def _ceil_grid(q: Fraction) -> int:
    return -((-q.numerator * _GRID) // q.denominator)


def gap_bound(tol=Fraction(1, 10 ** 6)) -> GapBound:
    """Rigorous enclosure of the integral of the gap integrand over ``[0, 1/5]``.

    The integrand equals ``1 - (12/17)/(7-5g) - (24/17)/(3-7g)``, a sum of
    concave terms on the interval, so the composite trapezoid rule is a
    lower bound and the composite midpoint rule an upper bound.  Terms are
    rounded outward to a ``1e-30`` grid; pieces double until the width is
    at most ``tol``.
    """
    tol = as_fraction(tol)
    N = 16
    while True:
        h = ONE_FIFTH / N
        lo = sum(_floor_grid(gap_integrand(i * h)) for i in range(1, N))
        lo = 2 * lo + _floor_grid(gap_integrand(0)) + _floor_grid(gap_integrand(ONE_FIFTH))
        lo = Fraction(lo, 2 * _GRID) * h
        hi = sum(_ceil_grid(gap_integrand((2 * i + 1) * h / 2)) for i in range(N))
        hi = Fraction(hi, _GRID) * h
        if hi - lo <= tol:
            return GapBound(lo, hi, N)
        N *= 2
