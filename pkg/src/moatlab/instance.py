"""Steiner tree instances with exact rational costs.

An :class:`Instance` is an undirected graph with positive edge costs, a
terminal set and an optional root.  It is immutable; contraction and
subdivision build new instances.  Metric quantities (distances, terminal
MST, drop, Steiner cost) are computed on demand from the sparse graph.
"""

from __future__ import annotations

import heapq
import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Hashable, Iterable, Sequence

Vertex = Hashable

DEFAULT_STEINER_CAP = 12
DEFAULT_COMPONENT_CAP = 6


class InstanceError(ValueError):
    pass


class OracleLimitError(RuntimeError):
    """Raised when an exact computation would exceed its size cap."""


def vkey(v) -> tuple:
    """Sort key that orders mixed int/str vertex ids deterministically."""
    return (isinstance(v, str), v) if isinstance(v, (int, str)) else (True, str(v))


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise InstanceError("floating point costs are not accepted; use 'p/q' strings")
    return Fraction(str(x).strip())


def fmt(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Component:
    """An edge set connecting a terminal set."""

    edges: frozenset
    terminals: frozenset
    cost: Fraction

    def vertices(self) -> set:
        return {x for e in self.edges for x in e}

    def is_full(self) -> bool:
        # a tree whose leaves are exactly the connected terminals
        deg: dict = {}
        for u, v in self.edges:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        if len(self.edges) != len(deg) - 1:
            return False
        leaves = {v for v, d in deg.items() if d == 1}
        return leaves == set(self.terminals) and all(deg.get(x, 0) == 1 for x in self.terminals)


class Instance:
    """Undirected Steiner tree instance ``(G, c, R, r)``."""

    __slots__ = ("vertices", "terminals", "root", "_index", "_eu", "_ev", "_ec",
                 "_adj", "_cache", "__weakref__")

    def __init__(self, vertices: Iterable[Vertex], terminals: Iterable[Vertex],
                 edges: Iterable[tuple], root: Vertex | None = None, *, check: bool = True):
        verts = tuple(dict.fromkeys(vertices))
        index = {v: i for i, v in enumerate(verts)}
        terms = tuple(dict.fromkeys(terminals))
        if not terms:
            raise InstanceError("terminal set is empty")
        for t in terms:
            if t not in index:
                raise InstanceError(f"terminal {t!r} is not a vertex")
        if root is not None and root not in terms:
            raise InstanceError(f"root {root!r} is not a terminal")
        best: dict[tuple[int, int], Fraction] = {}
        for e in edges:
            u, v, c = e
            if u not in index or v not in index:
                raise InstanceError(f"edge ({u!r}, {v!r}) has an unknown endpoint")
            c = as_fraction(c)
            if c <= 0:
                raise InstanceError(f"edge ({u!r}, {v!r}) has non-positive cost {c}")
            i, j = index[u], index[v]
            if i == j:
                continue
            key = (i, j) if i < j else (j, i)
            old = best.get(key)
            if old is None or c < old:
                best[key] = c
        keys = sorted(best)
        self.vertices = verts
        self.terminals = terms
        self.root = root
        self._index = index
        self._eu = [k[0] for k in keys]
        self._ev = [k[1] for k in keys]
        self._ec = [best[k] for k in keys]
        self._adj = None
        self._cache = {}
        if check:
            self._check_connected()

    @classmethod
    def _from_arrays(cls, vertices, terminals, eu, ev, ec, root=None) -> "Instance":
        """Trusted constructor for generators: no parallel edges, no loops."""
        self = cls.__new__(cls)
        self.vertices = tuple(vertices)
        self._index = {v: i for i, v in enumerate(self.vertices)}
        self.terminals = tuple(terminals)
        self.root = root
        self._eu, self._ev, self._ec = list(eu), list(ev), list(ec)
        self._adj = None
        self._cache = {}
        return self

    # basic access

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self._ec)

    def index(self, v: Vertex) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise InstanceError(f"unknown vertex {v!r}") from None

    def has_vertex(self, v) -> bool:
        return v in self._index

    def edges(self):
        """Yield ``(u, v, cost)`` for every undirected edge."""
        vs = self.vertices
        for i, j, c in zip(self._eu, self._ev, self._ec):
            yield vs[i], vs[j], c

    def edge_list(self) -> list[tuple]:
        return list(self.edges())

    def cost(self, u, v) -> Fraction:
        i, j = self.index(u), self.index(v)
        for k, w in self.adjacency()[i]:
            if w == j:
                return self._ec[k]
        raise InstanceError(f"no edge between {u!r} and {v!r}")

    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per vertex index, a list of ``(edge index, neighbour index)``."""
        if self._adj is None:
            adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
            for k, (i, j) in enumerate(zip(self._eu, self._ev)):
                adj[i].append((k, j))
                adj[j].append((k, i))
            self._adj = adj
        return self._adj

    def with_root(self, root) -> "Instance":
        if root is not None and root not in self.terminals:
            raise InstanceError(f"root {root!r} is not a terminal")
        out = Instance._from_arrays(self.vertices, self.terminals, self._eu, self._ev,
                                    self._ec, root)
        return out

    def effective_root(self):
        return self.root if self.root is not None else self.terminals[0]

    def common_denominator(self) -> int:
        d = self._cache.get("den")
        if d is None:
            d = 1
            for c in set(self._ec):
                d = lcm(d, c.denominator)
            self._cache["den"] = d
        return d

    def _check_connected(self) -> None:
        if self.n == 0:
            raise InstanceError("empty vertex set")
        seen = self._reach(self.index(self.terminals[0]))
        for t in self.terminals:
            if self._index[t] not in seen:
                raise InstanceError("disconnected: terminals lie in different components")

    def _reach(self, s: int) -> set[int]:
        adj = self.adjacency()
        seen = {s}
        stack = [s]
        while stack:
            x = stack.pop()
            for _, y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    def __repr__(self) -> str:
        return f"Instance(n={self.n}, m={self.m}, |R|={len(self.terminals)}, root={self.root!r})"

    # serialization

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "terminals": list(self.terminals),
            "root": self.root,
            "edges": [{"u": u, "v": v, "cost": fmt(c)} for u, v, c in self.edges()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        try:
            edges = [(e["u"], e["v"], e["cost"]) for e in data["edges"]]
            return cls(data["vertices"], data["terminals"], edges, data.get("root"))
        except (KeyError, TypeError) as exc:
            raise InstanceError(f"malformed instance: {exc}") from None

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))


def load(path: str) -> Instance:
    """Read an instance from a JSON or SteinLib ``.stp`` file."""
    with open(path) as fh:
        text = fh.read()
    if path.lower().endswith(".stp") or text.lstrip().upper().startswith(("33D32945", "SECTION")):
        return read_stp(text)
    return Instance.from_json(text)


def save(inst: Instance, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(inst.to_json(indent=1))


def read_stp(text: str) -> Instance:
    """Parse the Graph and Terminals sections of a SteinLib STP file."""
    section = None
    vertices: list[int] = []
    edges = []
    terminals = []
    root = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0].upper()
        if head == "SECTION":
            section = parts[1].upper() if len(parts) > 1 else None
            continue
        if head in ("END", "EOF"):
            section = None
            continue
        if section == "GRAPH":
            if head == "NODES":
                vertices = list(range(1, int(parts[1]) + 1))
            elif head in ("E", "A"):
                u, v, c = int(parts[1]), int(parts[2]), parts[3]
                if not c.lstrip("-").isdigit():
                    raise InstanceError(f"only integer STP costs are supported, got {c!r}")
                edges.append((u, v, Fraction(int(c))))
        elif section == "TERMINALS":
            if head in ("T", "TP"):
                terminals.append(int(parts[1]))
            elif head == "ROOT":
                root = int(parts[1])
    if not vertices:
        vertices = sorted({x for e in edges for x in e[:2]} | set(terminals))
    if root is not None and root not in terminals:
        terminals.append(root)
    return Instance(vertices, terminals, edges, root)


# shortest paths


def _dijkstra(inst: Instance, src: int, init: dict[int, object] | None = None,
              targets: set[int] | None = None) -> dict[int, Fraction]:
    adj = inst.adjacency()
    ec = inst._ec
    dist: dict[int, object] = {}
    if init is None:
        heap = [(Fraction(0), src)]
    else:
        heap = [(d, v) for v, d in init.items()]
        heapq.heapify(heap)
    remaining = set(targets) if targets is not None else None
    while heap:
        d, x = heapq.heappop(heap)
        if x in dist:
            continue
        dist[x] = d
        if remaining is not None:
            remaining.discard(x)
            if not remaining:
                break
        for k, y in adj[x]:
            if y not in dist:
                heapq.heappush(heap, (d + ec[k], y))
    return dist


def distances_from(inst: Instance, source: Vertex) -> dict[Vertex, Fraction]:
    """Exact shortest-path distances from ``source`` to every reachable vertex."""
    s = inst.index(source)
    fast = _fast_distances(inst, s)
    vs = inst.vertices
    if fast is not None:
        return {vs[i]: d for i, d in enumerate(fast) if d is not None}
    return {vs[i]: d for i, d in _dijkstra(inst, s).items()}


def _fast_distances(inst: Instance, s: int, targets=None) -> list | None:
    # integer-scaled Dijkstra in the compiled kernel for large graphs
    if inst.n < 2000:
        return None
    from . import kernel
    return kernel.distances(inst, s, targets)


def shortest_distance(inst: Instance, u: Vertex, v: Vertex) -> Fraction:
    if u == v:
        inst.index(u)
        return Fraction(0)
    i, j = inst.index(u), inst.index(v)
    d = _dijkstra(inst, i, targets={j})
    if j not in d:
        raise InstanceError("disconnected")
    return d[j]


def terminal_distances(inst: Instance, targets: Sequence[Vertex] | None = None) -> dict[tuple, Fraction]:
    """Metric closure restricted to ``targets`` (default: the terminals)."""
    targets = tuple(inst.terminals if targets is None else targets)
    key = ("tdist", targets)
    cached = inst._cache.get(key)
    if cached is not None:
        return cached
    idx = [inst.index(t) for t in targets]
    out: dict[tuple, Fraction] = {}
    for a, ia in zip(targets, idx):
        fast = _fast_distances(inst, ia, idx)
        if fast is not None:
            row = {i: d for i, d in zip(idx, fast) if d is not None}
        else:
            row = _dijkstra(inst, ia, targets=set(idx))
        for b, ib in zip(targets, idx):
            if ib not in row:
                raise InstanceError("disconnected")
            out[a, b] = row[ib]
    inst._cache[key] = out
    return out


def mst_on(points: Sequence, weight) -> tuple[Fraction, list[tuple]]:
    """Prim's algorithm on the complete graph over ``points``."""
    pts = list(points)
    if len(pts) <= 1:
        return Fraction(0), []
    best = {p: (weight(pts[0], p), pts[0]) for p in pts[1:]}
    total = Fraction(0)
    tree = []
    while best:
        p = min(best, key=lambda q: (best[q][0], vkey(q)))
        w, parent = best.pop(p)
        total += w
        tree.append((parent, p))
        for q in best:
            wq = weight(p, q)
            if wq < best[q][0]:
                best[q] = (wq, p)
    return total, tree


def tmst(inst: Instance) -> tuple[Fraction, list[tuple]]:
    """Cost of a terminal MST in the metric closure, with a witness tree."""
    d = terminal_distances(inst)
    return mst_on(inst.terminals, lambda a, b: d[a, b])


def _quotient_tmst(terms: Sequence, d: dict, X: frozenset) -> Fraction:
    # TMST of G/X expressed through the metric closure of G
    rep = min(X, key=vkey)
    pts = [t for t in terms if t not in X] + [rep]
    dx = {t: min(d[t, x] for x in X) for t in terms}

    def w(a, b):
        if a == rep:
            return dx[b]
        if b == rep:
            return dx[a]
        return min(d[a, b], dx[a] + dx[b])

    return mst_on(pts, w)[0]


def _check_subset(inst: Instance, X) -> frozenset:
    X = frozenset(X)
    if not X:
        raise InstanceError("empty terminal set")
    bad = X - set(inst.terminals)
    if bad:
        raise InstanceError(f"not terminals: {sorted(bad, key=vkey)!r}")
    return X


def contract(inst: Instance, X: Iterable[Vertex]) -> Instance:
    """Identify the terminals of ``X`` into one terminal (its smallest id)."""
    X = _check_subset(inst, X)
    rep = min(X, key=vkey)
    mapped = {v: (rep if v in X else v) for v in inst.vertices}
    verts = [v for v in inst.vertices if v not in X or v == rep]
    terms = [t for t in inst.terminals if t not in X or t == rep]
    root = mapped[inst.root] if inst.root is not None else None
    edges = [(mapped[u], mapped[v], c) for u, v, c in inst.edges()]
    return Instance(verts, terms, edges, root)


def drop(inst: Instance, X: Iterable[Vertex]) -> Fraction:
    """``TMST(G) - TMST(G/X)``."""
    X = _check_subset(inst, X)
    if len(X) == 1:
        return Fraction(0)
    d = terminal_distances(inst)
    return tmst(inst)[0] - _quotient_tmst(inst.terminals, d, X)


# exact Steiner trees


def _int_weights(inst: Instance) -> tuple[int, list[int]]:
    den = inst.common_denominator()
    return den, [int(c * den) for c in inst._ec]


class SteinerTable:
    """Dreyfus-Wagner table over a fixed list of (pseudo-)terminals.

    ``cost(mask)`` is the exact cost of a cheapest tree connecting the
    selected points; ``component(mask)`` rebuilds one such tree.
    """

    def __init__(self, inst: Instance, points: Sequence[Vertex]):
        self.inst = inst
        self.points = tuple(points)
        self.k = len(self.points)
        self.den, self.w = _int_weights(inst)
        self._dp: list = [None] * (1 << self.k)
        self._back: list = [None] * (1 << self.k)
        self._build()

    def _relax(self, labels: list, back: list) -> None:
        adj = self.inst.adjacency()
        w = self.w
        heap = [(d, v) for v, d in enumerate(labels) if d is not None]
        heapq.heapify(heap)
        done = [False] * len(labels)
        while heap:
            d, x = heapq.heappop(heap)
            if done[x] or d != labels[x]:
                continue
            done[x] = True
            for k, y in adj[x]:
                nd = d + w[k]
                if labels[y] is None or nd < labels[y]:
                    labels[y] = nd
                    back[y] = ("e", x, k)
                    heapq.heappush(heap, (nd, y))

    def _build(self) -> None:
        n = self.inst.n
        idx = [self.inst.index(p) for p in self.points]
        for i, s in enumerate(idx):
            lab: list = [None] * n
            lab[s] = 0
            back: list = [None] * n
            self._relax(lab, back)
            self._dp[1 << i] = lab
            self._back[1 << i] = back
        for mask in range(1, 1 << self.k):
            if mask & (mask - 1) == 0:
                continue
            low = mask & -mask
            lab = [None] * n
            back = [None] * n
            sub = (mask - 1) & mask
            while sub:
                if sub & low:
                    a, b = self._dp[sub], self._dp[mask ^ sub]
                    for v in range(n):
                        x, y = a[v], b[v]
                        if x is None or y is None:
                            continue
                        s = x + y
                        if lab[v] is None or s < lab[v]:
                            lab[v] = s
                            back[v] = ("s", sub)
                sub = (sub - 1) & mask
            self._relax(lab, back)
            self._dp[mask] = lab
            self._back[mask] = back

    def mask_of(self, X: Iterable[Vertex]) -> int:
        pos = {p: i for i, p in enumerate(self.points)}
        m = 0
        for x in X:
            m |= 1 << pos[x]
        return m

    def cost(self, mask: int) -> Fraction:
        if mask & (mask - 1) == 0:
            return Fraction(0)
        low = (mask & -mask).bit_length() - 1
        v = self.inst.index(self.points[low])
        d = self._dp[mask][v]
        if d is None:
            raise InstanceError("disconnected")
        return Fraction(d, self.den)

    def component(self, mask: int) -> Component:
        edges: set = set()
        if mask & (mask - 1):
            low = (mask & -mask).bit_length() - 1
            self._collect(mask, self.inst.index(self.points[low]), edges)
        vs = self.inst.vertices
        eu, ev, ec = self.inst._eu, self.inst._ev, self.inst._ec
        es = frozenset((vs[eu[k]], vs[ev[k]]) for k in edges)
        cost = sum((ec[k] for k in edges), Fraction(0))
        X = frozenset(p for i, p in enumerate(self.points) if mask >> i & 1)
        return Component(es, X, cost)

    def _collect(self, mask: int, v: int, out: set) -> None:
        stack = [(mask, v)]
        while stack:
            mask, v = stack.pop()
            b = self._back[mask][v]
            if b is None:
                continue
            if b[0] == "e":
                out.add(b[2])
                stack.append((mask, b[1]))
            else:
                stack.append((b[1], v))
                stack.append((mask ^ b[1], v))


def steiner_cost(inst: Instance, X: Iterable[Vertex],
                 size_cap: int = DEFAULT_STEINER_CAP) -> tuple[Fraction, Component]:
    """Exact cost of a cheapest component connecting ``X`` (Dreyfus-Wagner).

    Steiner vertices in ``X`` are treated as temporary terminals.
    """
    X = tuple(sorted(set(X), key=vkey))
    if not X:
        raise InstanceError("empty point set")
    for x in X:
        inst.index(x)
    if len(X) > size_cap:
        raise OracleLimitError("instance too large for exact oracle")
    if len(X) == 1:
        return Fraction(0), Component(frozenset(), frozenset(X), Fraction(0))
    table = SteinerTable(inst, X)
    full = (1 << len(X)) - 1
    return table.cost(full), table.component(full)


def metric_mst_upper_bound(inst: Instance, X: Iterable[Vertex]) -> Fraction:
    """Metric-closure MST of ``X``: an upper bound on its Steiner cost."""
    X = tuple(X)
    d = terminal_distances(inst, X)
    return mst_on(X, lambda a, b: d[a, b])[0]


@dataclass
class MstOptimality:
    optimal: bool
    witness: Component | None = None
    bounded: bool = False
    cap: int = DEFAULT_COMPONENT_CAP
    notes: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.optimal


def improving_sets(inst: Instance, component_size_cap: int = DEFAULT_COMPONENT_CAP,
                   table: SteinerTable | None = None):
    """Yield ``(X, cost, drop)`` for every improving terminal set up to the cap."""
    R = inst.terminals
    if table is None:
        if len(R) > DEFAULT_STEINER_CAP:
            raise OracleLimitError("instance too large for exact oracle")
        table = SteinerTable(inst, R)
    d = terminal_distances(inst)
    base = tmst(inst)[0]
    for size in range(3, min(component_size_cap, len(R)) + 1):
        for X in itertools.combinations(R, size):
            c = table.cost(table.mask_of(X))
            dr = base - _quotient_tmst(R, d, frozenset(X))
            if c < dr:
                yield frozenset(X), c, dr


def is_mst_optimal(inst: Instance, component_size_cap: int = DEFAULT_COMPONENT_CAP) -> MstOptimality:
    """Check that no component on at most ``component_size_cap`` terminals is improving."""
    R = inst.terminals
    bounded = component_size_cap < len(R)
    if len(R) == len(inst.vertices):
        return MstOptimality(True, None, False, component_size_cap, ["all vertices are terminals"])
    if len(R) > DEFAULT_STEINER_CAP:
        raise OracleLimitError("instance too large for exact oracle")
    table = SteinerTable(inst, R)
    for X, c, dr in improving_sets(inst, component_size_cap, table):
        return MstOptimality(False, table.component(table.mask_of(X)), bounded, component_size_cap)
    notes = ["bounded verification only"] if bounded else []
    return MstOptimality(True, None, bounded, component_size_cap, notes)


# random instances


def random_instance(rng: random.Random, n: int, k: int, *, extra: float = 0.35,
                    max_cost: int = 9, denominator: int = 1) -> Instance:
    """Connected random graph on ``n`` vertices with ``k`` terminals."""
    if not 1 <= k <= n:
        raise InstanceError("need 1 <= k <= n")
    verts = list(range(n))
    order = verts[:]
    rng.shuffle(order)
    edges = {}
    for i in range(1, n):
        j = order[rng.randrange(i)]
        edges[frozenset((order[i], j))] = None
    for a, b in itertools.combinations(verts, 2):
        if rng.random() < extra:
            edges[frozenset((a, b))] = None
    out = []
    for e in edges:
        a, b = sorted(e)
        out.append((a, b, Fraction(rng.randint(1, max_cost * denominator), denominator)))
    terms = sorted(rng.sample(verts, k))
    return Instance(verts, terms, out, terms[0])


def random_mst_optimal_instance(rng: random.Random, n: int, k: int, tries: int = 200,
                                **kw) -> Instance:
    """Rejection-sample a random instance whose terminal MST is optimal.

    Instances where every vertex is a terminal are skipped, so the result
    always has Steiner vertices when ``k < n``.
    """
    for _ in range(tries):
        inst = random_instance(rng, n, k, **kw)
        if k == n:
            return inst
        table = SteinerTable(inst, inst.terminals)
        if table.cost((1 << k) - 1) == tmst(inst)[0]:
            return inst
    raise RuntimeError("no MST-optimal instance found")


def random_hub_instance(rng: random.Random, n: int, k: int) -> Instance:
    """Terminals hang off a random network of cheaper Steiner hubs.

    Direct terminal edges are sparse and comparatively expensive, so Steiner
    vertices matter more than in :func:`random_instance`.
    """
    if not 2 <= k < n:
        raise InstanceError("need 2 <= k < n")
    terms = [f"t{i}" for i in range(k)]
    hubs = [f"h{i}" for i in range(n - k)]
    edges: dict[frozenset, Fraction] = {}
    for i in range(1, len(hubs)):
        edges[frozenset((hubs[i], rng.choice(hubs[:i])))] = Fraction(rng.randint(1, 4), 2)
    for a, b in itertools.combinations(hubs, 2):
        if rng.random() < 0.35:
            edges.setdefault(frozenset((a, b)), Fraction(rng.randint(1, 4), 2))
    for t in terms:
        for h in rng.sample(hubs, min(len(hubs), rng.randint(1, 3))):
            edges[frozenset((t, h))] = Fraction(rng.randint(2, 6), 2)
    for a, b in itertools.combinations(terms, 2):
        if rng.random() < 0.3:
            edges[frozenset((a, b))] = Fraction(rng.randint(4, 8), 2)
    out = [(*sorted(e), c) for e, c in edges.items()]
    return Instance(terms + hubs, terms, out, terms[0])
