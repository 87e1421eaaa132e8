"""SVG snapshots of a recorded growth run.

Vertices are placed by classical multidimensional scaling of the
shortest-path metric, so the drawing is deterministic.  At time ``t`` each
directed edge shows its load as a colored stretch from the tail, offset to
one side so both orientations stay visible.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction
from xml.sax.saxutils import escape

import numpy as np

from .growth import GrowthTrace
from .instance import distances_from, fmt

PALETTE = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"]
RENDER_LIMIT = 2000


def layout(inst, size: float = 560.0, margin: float = 40.0) -> dict:
    """Vertex -> (x, y) in pixels."""
    n = inst.n
    if n == 1:
        return {inst.vertices[0]: (margin + size / 2, margin + size / 2)}
    D = np.zeros((n, n))
    for i, v in enumerate(inst.vertices):
        d = distances_from(inst, v)
        for j, w in enumerate(inst.vertices):
            D[i, j] = float(d.get(w, 0))
    J = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * J @ (D ** 2) @ J
    vals, vecs = np.linalg.eigh(B)
    order = np.argsort(vals)[::-1][:2]
    X = vecs[:, order] * np.sqrt(np.maximum(vals[order], 1e-12))
    for c in range(X.shape[1]):
        # fix the eigenvector sign so the drawing does not flip between runs
        k = int(np.argmax(np.abs(X[:, c])))
        if X[k, c] < 0:
            X[:, c] = -X[:, c]
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi - lo > 1e-9, hi - lo, 1.0)
    P = margin + (X - lo) / span * size
    return {v: (round(float(P[i, 0]), 2), round(float(P[i, 1]), 2)) for i, v in enumerate(inst.vertices)}


def _set_colors(trace: GrowthTrace) -> dict:
    return {ps.members: PALETTE[i % len(PALETTE)] for i, ps in enumerate(trace.family)}


def render_frame(trace: GrowthTrace, t, pos: dict | None = None) -> str:
    """SVG text of the run state at time ``t``."""
    inst = trace.inst
    if inst.n > RENDER_LIMIT:
        raise ValueError(f"rendering is limited to {RENDER_LIMIT} vertices")
    t = Fraction(t)
    pos = pos or layout(inst)
    colors = _set_colors(trace)
    vs = inst.vertices
    loads: dict[tuple, list] = {}
    for (S, (u, v)), (lo, hi) in trace.contributions().items():
        if lo >= t:
            continue
        loads.setdefault((u, v), []).append((lo, min(hi, t), S))
    out = ['<svg xmlns="http://www.w3.org/2000/svg" width="640" height="660" '
           'font-family="sans-serif" font-size="12">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="20" y="24" font-size="16">t = {escape(fmt(t))}</text>',
           '<g transform="translate(0,20)">']
    for k in range(inst.m):
        a, b = vs[inst._eu[k]], vs[inst._ev[k]]
        (x1, y1), (x2, y2) = pos[a], pos[b]
        out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#cccccc" stroke-width="1.5"/>')
        mx, my = (x1 + x2) / 2, (y1 + y2) / 2
        out.append(f'<text x="{mx:.2f}" y="{my - 4:.2f}" fill="#888888" text-anchor="middle">'
                   f'{escape(fmt(inst._ec[k]))}</text>')
        for (u, v) in ((a, b), (b, a)):
            parts = sorted(loads.get((u, v), ()), key=lambda p: p[0])
            if not parts:
                continue
            c = inst._ec[k]
            (ux, uy), (wx, wy) = pos[u], pos[v]
            length = math.hypot(wx - ux, wy - uy) or 1.0
            ox, oy = -(wy - uy) / length * 2.5, (wx - ux) / length * 2.5
            done = Fraction(0)
            for lo, hi, S in parts:
                f0 = float(min(done, c) / c)
                done += hi - lo
                f1 = float(min(done, c) / c)
                if f1 <= f0:
                    continue
                sx, sy = ux + (wx - ux) * f0 + ox, uy + (wy - uy) * f0 + oy
                ex, ey = ux + (wx - ux) * f1 + ox, uy + (wy - uy) * f1 + oy
                out.append(f'<line x1="{sx:.2f}" y1="{sy:.2f}" x2="{ex:.2f}" y2="{ey:.2f}" '
                           f'stroke="{colors[S]}" stroke-width="3"/>')
    terms = set(inst.terminals)
    owner = {}
    if trace.recorded:
        for ps in trace.family:
            # the set of the partition at time t (the last ones once the run is over)
            if not (ps.a <= t < ps.d or (t >= trace.t_end and ps.d == trace.t_end)):
                continue
            atf = trace.atf_index(ps.members)
            for i, a in enumerate(atf):
                if a is not None and a <= t and vs[i] not in owner:
                    owner[vs[i]] = colors[ps.members]
    for v in vs:
        x, y = pos[v]
        fill = owner.get(v, "white")
        if v in terms:
            out.append(f'<rect x="{x - 6}" y="{y - 6}" width="12" height="12" fill="{fill}" stroke="black"/>')
        else:
            out.append(f'<circle cx="{x}" cy="{y}" r="5" fill="{fill}" stroke="black"/>')
        out.append(f'<text x="{x + 8}" y="{y + 14}">{escape(str(v))}</text>')
    out.append("</g></svg>")
    return "\n".join(out) + "\n"


def write_frames(trace: GrowthTrace, times, out_dir: str) -> list[str]:
    """Write one SVG per time; returns the file paths."""
    os.makedirs(out_dir, exist_ok=True)
    pos = layout(trace.inst)
    paths = []
    for i, t in enumerate(times):
        t = Fraction(t)
        name = f"frame_{i:02d}_t{t.numerator}" + (f"-{t.denominator}" if t.denominator != 1 else "") + ".svg"
        path = os.path.join(out_dir, name)
        with open(path, "w") as fh:
            fh.write(render_frame(trace, t, pos))
        paths.append(path)
    return paths
