import itertools
import os
import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from moatlab.instance import Instance, random_instance

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# lines printed after the run by the acceptance suite
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@st.composite
def small_instances(draw, min_n=3, max_n=8, min_k=2, max_k=5, denominators=(1, 2)):
    n = draw(st.integers(min_n, max_n))
    k = draw(st.integers(min(min_k, n), min(max_k, n)))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    den = draw(st.sampled_from(denominators))
    extra = draw(st.sampled_from([0.2, 0.35, 0.6]))
    return random_instance(random.Random(seed), n, k, extra=extra, denominator=den)


# brute-force references, independent of the library's algorithms


def floyd_warshall(inst: Instance) -> dict:
    vs = list(inst.vertices)
    INF = None
    d = {(a, b): (Fraction(0) if a == b else INF) for a in vs for b in vs}
    for u, v, c in inst.edges():
        if d[u, v] is None or c < d[u, v]:
            d[u, v] = d[v, u] = c
    for k in vs:
        for i in vs:
            if d[i, k] is None:
                continue
            for j in vs:
                if d[k, j] is None:
                    continue
                nd = d[i, k] + d[k, j]
                if d[i, j] is None or nd < d[i, j]:
                    d[i, j] = nd
    return d


def all_simple_path_min(inst: Instance, s, t):
    adj = {v: [] for v in inst.vertices}
    for u, v, c in inst.edges():
        adj[u].append((v, c))
        adj[v].append((u, c))
    best = None

    def dfs(x, seen, length):
        nonlocal best
        if x == t:
            if best is None or length < best:
                best = length
            return
        for y, c in adj[x]:
            if y not in seen:
                seen.add(y)
                dfs(y, seen, length + c)
                seen.remove(y)

    dfs(s, {s}, Fraction(0))
    return best


def kruskal_cost(points, weight) -> Fraction:
    pts = list(points)
    parent = {p: p for p in pts}

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    total = Fraction(0)
    for a, b in sorted(itertools.combinations(pts, 2), key=lambda p: weight(*p)):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            total += weight(a, b)
    return total


def induced_mst(inst: Instance, verts: set):
    """MST of the subgraph induced by ``verts``; ``None`` if disconnected."""
    parent = {v: v for v in verts}

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    total, joined = Fraction(0), 0
    for u, v, c in sorted(inst.edges(), key=lambda e: e[2]):
        if u in verts and v in verts:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                total += c
                joined += 1
    return total if joined == len(verts) - 1 else None


def brute_steiner(inst: Instance, X) -> Fraction:
    X = set(X)
    others = [v for v in inst.vertices if v not in X]
    best = None
    for r in range(len(others) + 1):
        for extra in itertools.combinations(others, r):
            c = induced_mst(inst, X | set(extra))
            if c is not None and (best is None or c < best):
                best = c
    return best


@pytest.fixture
def rng():
    return random.Random(12345)
