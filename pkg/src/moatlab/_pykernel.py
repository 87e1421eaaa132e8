"""Pure-Python event kernel (reference semantics and fallback).

Mirrors ``_ckernel.pyx`` exactly; see ``kernel.py`` for the data layout.
Terminal sets are Python-int bitmasks, so any number of terminals works.
"""

from __future__ import annotations

import heapq
from array import array
from fractions import Fraction


def distances(n, out_ptr, out_edges, head, weight, src):
    """Integer Dijkstra over directed edge ids; -1 marks unreachable."""
    dist = [-1] * n
    heap = [(0, src)]
    while heap:
        d, x = heapq.heappop(heap)
        if dist[x] >= 0:
            continue
        dist[x] = d
        for p in range(out_ptr[x], out_ptr[x + 1]):
            e = out_edges[p]
            y = head[e]
            if dist[y] < 0:
                heapq.heappush(heap, (d + weight[e >> 1], y))
    return dist


def grow(g, merges, continuous=False, record=False, root=0, root_stop=False):
    n, m = g.n, g.m
    M2 = 2 * m
    tail, head = g.tail, g.head
    cost = [Fraction(a, b) for a, b in zip(g.cnum, g.cden)]
    out_ptr, out_edges, in_ptr, in_edges = g.out_ptr, g.out_edges, g.in_ptr, g.in_edges
    tvert = g.tvert
    K = len(tvert)
    rootv = tvert[root]

    T = [0] * n
    HM = [0] * n
    rep = list(range(K))
    pmask = {i: 1 << i for i in range(K)}
    repmask = (1 << K) - 1
    rate = [0] * M2
    tau = [None] * M2
    frz = [Fraction(0)] * M2
    tight = [None] * M2
    cm = [0] * M2
    ut = [None] * m if continuous else None
    key = [None] * (M2 + m)
    version = [0] * (M2 + m)
    heap: list = []
    reached: list[int] = []
    root_log = []
    reach_log = []
    bp_log = []
    ut_log = []
    events = 0

    def push(item, t):
        version[item] += 1
        key[item] = t
        heapq.heappush(heap, (t, item, version[item]))

    def drop_item(item):
        version[item] += 1
        key[item] = None

    def load(e, t):
        if tight[e] is not None:
            return cost[e >> 1]
        if rate[e] > 0:
            return cost[e >> 1] - rate[e] * (tau[e] - t)
        return frz[e]

    def update_ut(k, t):
        if ut[k] is not None:
            return
        c = cost[k]
        lsum = load(2 * k, t) + load(2 * k + 1, t)
        r = rate[2 * k] + rate[2 * k + 1]
        if lsum >= c:
            push(M2 + k, t)
        elif r > 0:
            push(M2 + k, t + (c - lsum) / r)
        else:
            drop_item(M2 + k)

    def _mark_ut(k, t):
        ut[k] = t
        drop_item(M2 + k)
        if record:
            ut_log.append((k, t, load(2 * k, t), load(2 * k + 1, t)))

    def refresh(e, t):
        if tight[e] is not None:
            return
        v, w = tail[e], head[e]
        if continuous and ut[e >> 1] is None:
            new_cm = HM[v]
        else:
            new_cm = HM[v] & ~HM[w]
        new_rate = bin(new_cm & repmask).count("1")
        if new_cm == cm[e] and new_rate == rate[e]:
            return
        L = load(e, t)
        if record:
            bp_log.append((e, t, L, new_cm))
        cm[e] = new_cm
        c = cost[e >> 1]
        if new_rate > 0:
            if new_rate != rate[e]:
                tau[e] = t + (c - L) / new_rate
                rate[e] = new_rate
                push(e, tau[e])
        else:
            rate[e] = 0
            frz[e] = L
            if L == c:
                push(e, t)
            else:
                drop_item(e)
        if continuous:
            update_ut(e >> 1, t)

    def refresh_vertex(x, t):
        for p in range(out_ptr[x], out_ptr[x + 1]):
            refresh(out_edges[p], t)
        for p in range(in_ptr[x], in_ptr[x + 1]):
            refresh(in_edges[p], t)

    def hit_mask(bits):
        h = 0
        for r, pm in pmask.items():
            if bits & pm:
                h |= pm
        return h

    for i, v in enumerate(tvert):
        T[v] |= 1 << i
        HM[v] |= 1 << i
        reached.append(v)
        if record:
            reach_log.append((v, Fraction(0), 1 << i))
    root_log.append((Fraction(0), 1 << root))

    t = Fraction(0)
    mi = 0
    parts = K
    if parts > 1:
        for v in tvert:
            refresh_vertex(v, t)
    full = (1 << K) - 1
    stopped = False
    while parts > 1:
        if root_stop and T[rootv] == full:
            stopped = True
            break
        while heap and heap[0][2] != version[heap[0][1]]:
            heapq.heappop(heap)
        nm = merges[mi][0] if mi < len(merges) else None
        if heap and (nm is None or heap[0][0] <= nm):
            t = heap[0][0]
            changed: dict[int, None] = {}
            batch = []
            while heap and heap[0][0] == t:
                _, item, ver = heapq.heappop(heap)
                if ver == version[item]:
                    key[item] = None
                    batch.append(item)
            for item in batch:
                events += 1
                if item < M2:
                    e = item
                    if tight[e] is not None:
                        continue
                    k = e >> 1
                    if continuous and ut[k] is None:
                        _mark_ut(k, t)
                    tight[e] = t
                    if record:
                        bp_log.append((e, t, cost[k], 0))
                    rate[e] = 0
                    frz[e] = cost[k]
                    cm[e] = 0
                    v, w = tail[e], head[e]
                    work = [(v, w)]
                    while work:
                        a, b = work.pop()
                        new = T[a] & ~T[b]
                        if not new:
                            continue
                        if T[b] == 0:
                            reached.append(b)
                        T[b] |= new
                        changed[b] = None
                        if record:
                            reach_log.append((b, t, new))
                        if b == rootv:
                            root_log.append((t, new))
                        for p in range(out_ptr[b], out_ptr[b + 1]):
                            f = out_edges[p]
                            if tight[f] is not None:
                                work.append((b, head[f]))
                    refresh(e ^ 1, t)
                else:
                    k = item - M2
                    if ut[k] is None:
                        _mark_ut(k, t)
                        refresh(2 * k, t)
                        refresh(2 * k + 1, t)
            for x in changed:
                HM[x] = hit_mask(T[x])
            for x in changed:
                refresh_vertex(x, t)
            continue
        # partition change
        t = nm
        newparts = set()
        while mi < len(merges) and merges[mi][0] == t:
            _, a, b = merges[mi]
            mi += 1
            ra, rb = _find(rep, a), _find(rep, b)
            if ra == rb:
                continue
            lo, hi = min(ra, rb), max(ra, rb)
            rep[hi] = lo
            pmask[lo] |= pmask.pop(hi)
            repmask &= ~(1 << hi)
            parts -= 1
            newparts.discard(hi)
            newparts.add(lo)
        events += 1
        if parts == 1:
            break
        big = 0
        for r in newparts:
            big |= pmask[r]
        touched = [x for x in reached if T[x] & big]
        for x in touched:
            HM[x] = hit_mask(T[x])
        for x in touched:
            refresh_vertex(x, t)

    t_end = t
    tn = array("q", [0]) * M2
    td = array("q", [0]) * M2
    ln = array("q", [0]) * M2
    ld = array("q", [1]) * M2
    for e in range(M2):
        if tight[e] is not None:
            tn[e], td[e] = tight[e].numerator, tight[e].denominator
        L = load(e, t_end)
        ln[e], ld[e] = L.numerator, L.denominator
    out = {
        "t_end": t_end,
        "tight_num": tn, "tight_den": td,
        "load_num": ln, "load_den": ld,
        "root_log": root_log,
        "events": events,
        "stopped_early": stopped,
    }
    if record:
        out["reach_log"] = reach_log
        out["bp_log"] = bp_log
        out["ut_log"] = ut_log
    return out


def _find(rep, a):
    while rep[a] != a:
        rep[a] = rep[rep[a]]
        a = rep[a]
    return a
