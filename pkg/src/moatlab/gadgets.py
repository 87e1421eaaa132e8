"""Gadget graphs for the 7/12 lower bound on merge-plan based duals.

The 3x-gadget lets a terminal ``s`` reach a vertex ``w`` at time 7/6 even
though ``s`` sits at distance 7/6 while the other terminal is pulled along
at effective speed three.  The jump-gadget chains 3x-gadgets so that
``s`` and ``s'`` reach ``w`` together at 7/6 + 1/(6k).  Composing one
jump-gadget per (pair, third terminal) around a central vertex per pair
yields an MST-optimal instance where every merge plan loses.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .instance import Instance, as_fraction, shortest_distance, steiner_cost
from .mergeplan import MergePlan


class _Builder:
    """Append-only vertex/edge arrays with shared cost objects."""

    def __init__(self, terminals=()):
        self.names: list = []
        self.idx: dict = {}
        self.eu: list[int] = []
        self.ev: list[int] = []
        self.ec: list[Fraction] = []
        self.terminals = list(terminals)
        for t in terminals:
            self.vertex(t)

    def vertex(self, name) -> int:
        i = self.idx.get(name)
        if i is None:
            i = self.idx[name] = len(self.names)
            self.names.append(name)
        return i

    def edge(self, a: int, b: int, c: Fraction) -> None:
        self.eu.append(a)
        self.ev.append(b)
        self.ec.append(c)

    def instance(self, root=None) -> Instance:
        eu, ev = [], []
        for a, b in zip(self.eu, self.ev):
            if a < b:
                eu.append(a), ev.append(b)
            else:
                eu.append(b), ev.append(a)
        return Instance._from_arrays(self.names, self.terminals, eu, ev, self.ec, root)


class _Costs:
    def __init__(self, k: int):
        q = Fraction(1, 6 * k)
        self.q = q                     # 1/(6k)
        self.spoke3 = 1 - q            # spokes of the 3x-gadget
        self.tail3 = Fraction(1, 6)
        self.spokej = Fraction(7, 6) - q


def _three_x(b: _Builder, C: _Costs, k: int, s: int, s_star: int, w: int, prefix: str) -> None:
    xs = [b.vertex(f"{prefix}x{j}") for j in range(2 * k + 2)]
    for j in range(2 * k + 1):
        b.edge(xs[j], xs[j + 1], C.q)
    b.edge(s_star, xs[0], C.spoke3)
    for j in range(1, k + 1):
        b.edge(s, xs[2 * j], C.spoke3)
    b.edge(xs[2 * k + 1], w, C.tail3)


def _jump(b: _Builder, C: _Costs, k: int, s: int, s_prime: int, s_star: int, w: int,
          prefix: str) -> None:
    n = 30 * k
    xs = [b.vertex(f"{prefix}x{j}") for j in range(n + 1)]
    for j in range(n):
        b.edge(xs[j], xs[j + 1], C.q)
    b.edge(xs[n], w, C.q)
    for j in range(1, 15 * k + 1):
        b.edge(s, xs[2 * j - 1], C.spokej)
    _three_x(b, C, k, s, s_star, xs[0], f"{prefix}t0_")
    for j in range(1, 15 * k):
        _three_x(b, C, k, s, s_prime, xs[2 * j], f"{prefix}t{j}_")


@dataclass
class Gadget:
    kind: str                 # "3x" or "jump"
    k: int
    instance: Instance        # standalone graph on the gadget's own vertices
    w: object
    s: object
    s_star: object
    s_prime: object = None

    @property
    def terminals(self) -> tuple:
        return self.instance.terminals


def three_x_gadget(s="s", s_star="s*", k: int = 1, prefix: str = "") -> tuple[Gadget, object]:
    """3x-gadget from ``s_star`` to a new vertex ``w`` (named ``{prefix}w``)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    b = _Builder([s, s_star])
    w = f"{prefix}w"
    _three_x(b, _Costs(k), k, b.idx[s], b.idx[s_star], b.vertex(w), prefix)
    return Gadget("3x", k, b.instance(), w, s, s_star), w


def jump_gadget(s="s", s_prime="s'", s_star="s*", k: int = 1, prefix: str = "") -> tuple[Gadget, object]:
    """Jump-gadget from ``s_star`` to a new vertex ``w`` (named ``{prefix}w``)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    b = _Builder([s, s_prime, s_star])
    w = f"{prefix}w"
    _jump(b, _Costs(k), k, b.idx[s], b.idx[s_prime], b.idx[s_star], b.vertex(w), prefix)
    return Gadget("jump", k, b.instance(), w, s, s_star, s_prime), w


def k_for_epsilon(epsilon) -> int:
    eps = as_fraction(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    return math.ceil(1 / (6 * eps))


@dataclass
class LowerBoundInstance:
    instance: Instance
    k: int
    epsilon: Fraction
    centers: dict = field(default_factory=dict)   # (s, s') -> central vertex


def lower_bound_instance(R, epsilon, *, with_centers: bool = False):
    """Composed instance: for every ordered pair ``(s, s')`` a central vertex
    ``g{p}_v`` and one jump-gadget from each other terminal to it.

    Gadget vertices are named ``g{p}_j{q}_x{i}`` and ``g{p}_j{q}_t{j}_x{i}``.
    """
    R = list(R)
    if len(R) < 2:
        raise ValueError("need at least two terminals")
    if len(set(R)) != len(R):
        raise ValueError("terminal names must be distinct")
    eps = as_fraction(epsilon)
    k = k_for_epsilon(eps)
    C = _Costs(k)
    b = _Builder(R)
    centers = {}
    p = 0
    for s, s2 in itertools.permutations(R, 2):
        v = b.vertex(f"g{p}_v")
        centers[s, s2] = f"g{p}_v"
        for q, s_star in enumerate(x for x in R if x != s and x != s2):
            _jump(b, C, k, b.idx[s], b.idx[s2], b.idx[s_star], v, f"g{p}_j{q}_")
        p += 1
    if len(R) == 2:
        # no third terminal: keep the pair connected through its shortest structure
        s, s2 = R
        b.edge(b.idx[s], b.idx[s2], Fraction(2))
    inst = b.instance()
    if with_centers:
        return LowerBoundInstance(inst, k, eps, centers)
    return inst


# verification of the gadget properties


@dataclass
class GadgetReport:
    kind: str
    checks: list[tuple[str, bool, object, object]] = field(default_factory=list)

    def add(self, name: str, ok: bool, got, want) -> None:
        self.checks.append((name, bool(ok), got, want))

    @property
    def ok(self) -> bool:
        return all(c[1] for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c[1]]


def late_plan(terminals, t=4) -> MergePlan:
    """Every pair merges at ``t`` (default well after the gadget events)."""
    t = as_fraction(t)
    return MergePlan(terminals, lambda a, b: t, check=False)


def _avoiding_distance(inst: Instance, a, b) -> Fraction | None:
    # shortest a-b path whose inner vertices are not terminals
    from .goodplan import _leaf_paths
    terms = set(inst.index(t) for t in inst.terminals)
    is_term = [i in terms for i in range(inst.n)]
    dist, _ = _leaf_paths(inst, inst.index(a), is_term)
    return dist.get(inst.index(b))


def verify_gadget_lemma(gadget: Gadget, lemma: str | None = None,
                        plan: MergePlan | None = None) -> GadgetReport:
    """Re-check distances, reach times and component costs of a gadget.

    ``plan`` defaults to :func:`late_plan`.  Reach-time claims are only
    asserted when the plan merges late enough for the lemma to apply.
    """
    from . import growth
    lemma = lemma or gadget.kind
    inst = gadget.instance
    k = gadget.k
    q = Fraction(1, 6 * k)
    s, s_star, w = gadget.s, gadget.s_star, gadget.w
    plan = plan or late_plan(inst.terminals)
    rep = GadgetReport(lemma)
    d = lambda a, b: shortest_distance(inst, a, b)  # noqa: E731
    trace = growth.simulate(inst, plan, root=s, record=True)
    if lemma == "3x":
        rep.add("dist(s,w)", d(s, w) == Fraction(7, 6), d(s, w), Fraction(7, 6))
        rep.add("dist(s*,w)", d(s_star, w) == Fraction(3, 2), d(s_star, w), Fraction(3, 2))
        rep.add("dist(s,s*)", d(s, s_star) == 2, d(s, s_star), Fraction(2))
        cost, _ = steiner_cost(inst, [s, s_star, w])
        rep.add("component(s,s*,w)", cost == Fraction(5, 2) - q, cost, Fraction(5, 2) - q)
        t0 = Fraction(7, 6)
        if trace.t_end >= t0:
            a = trace.atf({s}, w)
            rep.add("atf(s,w)", a == t0, a, t0)
            a2 = growth._min(trace.atf({s_star}, w), plan.merge(s_star, s))
            rep.add("min(atf(s*,w),merge(s*,s))", a2 is not None and a2 <= t0, a2, t0)
    elif lemma == "jump":
        s2 = gadget.s_prime
        t0 = Fraction(7, 6) + q
        rep.add("dist(s,w)", d(s, w) == t0, d(s, w), t0)
        want = Fraction(3, 2) + 3 * q
        rep.add("dist(s',w)", d(s2, w) == want, d(s2, w), want)
        want = 2 + t0
        rep.add("dist(s*,w)", d(s_star, w) == want, d(s_star, w), want)
        rep.add("dist(s*,s)", d(s_star, s) == 2, d(s_star, s), Fraction(2))
        rep.add("dist(s',s)", d(s2, s) == 2, d(s2, s), Fraction(2))
        rep.add("dist(s*,s')>=2", d(s_star, s2) >= 2, d(s_star, s2), Fraction(2))
        av = _avoiding_distance(inst, s_star, w)
        rep.add("terminal-free s*-w path >= 6", av is not None and av >= 6, av, Fraction(6))
        cost, _ = steiner_cost(inst, [s, s2, s_star])
        rep.add("component(s,s',s*)>=4", cost >= 4, cost, Fraction(4))
        if trace.t_end >= t0 and plan.merge(s, s2) >= t0:
            for x in (s, s2):
                a = trace.atf({x}, w)
                rep.add(f"atf({x},w)", a == t0, a, t0)
            a2 = growth._min(trace.atf({s_star}, w), plan.merge(s_star, s))
            rep.add("min(atf(s*,w),merge(s*,s))", a2 is not None and a2 <= t0, a2, t0)
    else:
        raise ValueError(f"unknown lemma {lemma!r}")
    if trace.t_end == 0:
        rep.add("terminates at 0", True, trace.t_end, Fraction(0))
    return rep


# the bounding argument of the lower bound


def lower_bound_budget(n_terminals: int, epsilon) -> Fraction:
    """``((7/6 + eps)(|R| - 1) + 4) / (2(|R| - 1))``: the proof's cap on dual/TMST."""
    eps = as_fraction(epsilon)
    n = n_terminals - 1
    return ((Fraction(7, 6) + eps) * n + 4) / (2 * n)
