"""Backend selection and graph layout for the event kernel.

Undirected edge ``k = {u, v}`` (``u = eu[k]``) becomes directed edges
``2k`` (u to v) and ``2k + 1`` (v to u); the reverse of ``e`` is ``e ^ 1``.
Both backends take a :class:`GraphArrays` and a Kruskal merge list
``[(time, a, b), ...]`` over terminal indices and return the same raw
dictionary (tight times and final loads as numerator/denominator arrays,
plus event logs).

Set ``MOATLAB_PURE=1`` to force the pure-Python backend.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _pykernel

log = logging.getLogger(__name__)

_ck = None
if os.environ.get("MOATLAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernel as _ck  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        _ck = None

BACKEND = "cython" if _ck is not None else "python"
C_TERMINAL_LIMIT = 64


@dataclass
class GraphArrays:
    n: int
    m: int
    tail: np.ndarray
    head: np.ndarray
    cnum: np.ndarray
    cden: np.ndarray
    out_ptr: np.ndarray
    out_edges: np.ndarray
    in_ptr: np.ndarray
    in_edges: np.ndarray
    tvert: np.ndarray

    def as_lists(self) -> "GraphArrays":
        return GraphArrays(self.n, self.m, *(a.tolist() for a in (
            self.tail, self.head, self.cnum, self.cden, self.out_ptr, self.out_edges,
            self.in_ptr, self.in_edges, self.tvert)))


def _csr(n: int, src: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(src, kind="stable").astype(np.int32)
    counts = np.bincount(src, minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int32)
    np.cumsum(counts, out=ptr[1:])
    return ptr, order


def graph_arrays(inst) -> GraphArrays:
    """CSR layout of ``inst``, cached on the instance."""
    g = inst._cache.get("csr")
    if g is not None:
        return g
    m = inst.m
    eu = np.asarray(inst._eu, dtype=np.int32)
    ev = np.asarray(inst._ev, dtype=np.int32)
    tail = np.empty(2 * m, dtype=np.int32)
    head = np.empty(2 * m, dtype=np.int32)
    tail[0::2], tail[1::2] = eu, ev
    head[0::2], head[1::2] = ev, eu
    # distinct cost objects are few in generated instances
    memo: dict[Fraction, tuple[int, int]] = {}
    cnum = np.empty(m, dtype=np.int64)
    cden = np.empty(m, dtype=np.int64)
    for k, c in enumerate(inst._ec):
        nd = memo.get(c)
        if nd is None:
            nd = memo[c] = (c.numerator, c.denominator)
        cnum[k], cden[k] = nd
    out_ptr, out_edges = _csr(inst.n, tail)
    in_ptr, in_edges = _csr(inst.n, head)
    tvert = np.asarray([inst.index(t) for t in inst.terminals], dtype=np.int32)
    g = GraphArrays(inst.n, m, tail, head, cnum, cden, out_ptr, out_edges, in_ptr, in_edges, tvert)
    inst._cache["csr"] = g
    return g


def _fits(g: GraphArrays) -> bool:
    big = 2 ** 62
    return bool(np.all(np.abs(g.cnum) < big) and np.all(g.cden < big))


def grow(inst, merges, *, continuous: bool = False, record: bool = False,
         root_index: int = 0, backend: str | None = None, root_stop: bool = False) -> dict:
    """Run the event kernel on ``inst`` with Kruskal merge list ``merges``.

    With ``root_stop`` the run ends as soon as every terminal has reached
    the root; tight times and loads are then partial.
    """
    g = graph_arrays(inst)
    use_c = (backend or BACKEND) == "cython" and _ck is not None
    if use_c and (len(inst.terminals) > C_TERMINAL_LIMIT or not _fits(g)):
        use_c = False
    if use_c:
        try:
            out = _ck.grow(g, merges, continuous, record, root_index, root_stop)
            out["backend"] = "cython"
            return out
        except OverflowError:
            log.warning("compiled kernel overflowed; rerunning with exact Python arithmetic")
    gl = inst._cache.get("csr_lists")
    if gl is None:
        gl = inst._cache["csr_lists"] = g.as_lists()
    out = _pykernel.grow(gl, merges, continuous, record, root_index, root_stop)
    out["backend"] = "python"
    return out


def _int_weights(inst):
    got = inst._cache.get("iw")
    if got is None:
        D = inst.common_denominator()
        g = graph_arrays(inst)
        w = g.cnum * (D // g.cden) if D < 2 ** 62 else None
        ok = w is not None and int(w.max(initial=0)) * max(inst.n, 1) < 2 ** 62
        got = inst._cache["iw"] = (D, w if ok else None)
    return got


def distances(inst, s: int, targets=None) -> list:
    """Exact distances from vertex index ``s``; ``None`` if unreachable.

    With ``targets`` (vertex indices) only those entries are converted.
    """
    g = graph_arrays(inst)
    D, w = _int_weights(inst)
    if _ck is not None and w is not None:
        dist = _ck.distances(g.n, g.out_ptr, g.out_edges, g.head, w, s)
    else:
        from .instance import _dijkstra
        got = _dijkstra(inst, s)
        dist = [got.get(i) for i in range(inst.n)]
        if targets is not None:
            return [dist[i] for i in targets]
        return dist
    idx = range(g.n) if targets is None else targets
    return [None if dist[i] < 0 else Fraction(int(dist[i]), D) for i in idx]
