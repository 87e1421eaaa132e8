"""Exact ground truth on small instances.

``bcr_value`` solves Dual-BCR with one column per cut, ``hyp_value`` the
dual of the hypergraphic relaxation with one column per terminal cut, and
``opt_value`` runs Dreyfus-Wagner on all terminals.  All three go through
:func:`solve_lp`, a revised simplex over :class:`~fractions.Fraction`
with the least-index (Bland) pivot rule.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .instance import (Instance, OracleLimitError, SteinerTable, as_fraction, steiner_cost,
                       tmst)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

DEFAULT_CAPS = {"bcr": 14, "hyp": 6, "opt": 16}


def oracle_cap(kind: str, cap: int | None = None) -> int:
    """Cap for ``kind``: explicit value, else ``MOATLAB_CAP``, else the default.

    ``MOATLAB_CAP`` is either one integer for every oracle or a list such as
    ``bcr=16,hyp=7``.
    """
    if cap is not None:
        return int(cap)
    env = os.environ.get("MOATLAB_CAP", "").strip()
    if env:
        if "=" not in env:
            return int(env)
        for part in env.split(","):
            key, _, val = part.partition("=")
            if key.strip() == kind:
                return int(val)
    return DEFAULT_CAPS[kind]


class LPError(ValueError):
    pass


@dataclass
class LinearProgram:
    """``max`` (or ``min``) ``c.x`` subject to sparse rows, ``x >= 0``.

    ``rows[i]`` maps variable index to coefficient; ``senses[i]`` is one of
    ``"<="``, ``">="``, ``"="``.  ``upper[j]``, when given and not ``None``,
    bounds ``x_j`` from above.
    """
    c: list
    rows: list
    senses: list
    rhs: list
    maximize: bool = True
    upper: list | None = None

    def __post_init__(self):
        self.c = [as_fraction(v) for v in self.c]
        self.rows = [{int(j): as_fraction(a) for j, a in r.items() if a != 0} for r in self.rows]
        self.rhs = [as_fraction(b) for b in self.rhs]
        n = len(self.c)
        if not (len(self.rows) == len(self.senses) == len(self.rhs)):
            raise LPError("rows, senses and rhs differ in length")
        for r in self.rows:
            if any(not 0 <= j < n for j in r):
                raise LPError("row refers to a variable outside the objective")
        for s in self.senses:
            if s not in ("<=", ">=", "="):
                raise LPError(f"bad sense {s!r}")
        if self.upper is not None:
            if len(self.upper) != n:
                raise LPError("upper bounds and objective differ in length")
            self.upper = [None if u is None else as_fraction(u) for u in self.upper]

    @property
    def n(self) -> int:
        return len(self.c)

    def value_at(self, x: Sequence) -> Fraction:
        return sum((cj * xj for cj, xj in zip(self.c, x)), Fraction(0))

    def is_feasible(self, x: Sequence) -> bool:
        if any(v < 0 for v in x):
            return False
        if self.upper is not None and any(u is not None and v > u for v, u in zip(x, self.upper)):
            return False
        for r, s, b in zip(self.rows, self.senses, self.rhs):
            lhs = sum((a * x[j] for j, a in r.items()), Fraction(0))
            if (s == "<=" and lhs > b) or (s == ">=" and lhs < b) or (s == "=" and lhs != b):
                return False
        return True


@dataclass
class LPResult:
    status: str
    value: Fraction | None = None
    x: list | None = None
    duals: list | None = None      # row prices of the final basis (maximize form)
    pivots: int = 0


class _Simplex:
    """Revised simplex on ``max cc.x, A x = b, x >= 0`` with an explicit inverse."""

    def __init__(self, cols: list[dict], b: list[Fraction], basis: list[int]):
        self.cols = cols
        self.m = len(b)
        self.basis = list(basis)
        self.pos = {v: r for r, v in enumerate(basis)}
        self.Binv = [[Fraction(int(i == k)) for k in range(self.m)] for i in range(self.m)]
        self.xB = list(b)
        self.pivots = 0
        self.integral = all(a.denominator == 1 for col in cols for a in col.values())
        if self.integral:
            self.icols = [[(k, int(a)) for k, a in col.items()] for col in cols]

    def prices(self, cc: list[Fraction]) -> list[Fraction]:
        pi = [Fraction(0)] * self.m
        for r, v in enumerate(self.basis):
            cv = cc[v]
            if cv:
                row = self.Binv[r]
                for k in range(self.m):
                    if row[k]:
                        pi[k] += cv * row[k]
        return pi

    def entering(self, cc: list[Fraction], pi: list[Fraction], allowed) -> int | None:
        pos = self.pos
        if self.integral and all(c.denominator == 1 for c in cc):
            L = 1
            for p in pi:
                L = L * p.denominator // _gcd(L, p.denominator)
            P = [int(p * L) for p in pi]
            for j in range(len(self.cols)):
                if j in pos or not allowed(j):
                    continue
                d = int(cc[j]) * L
                for k, a in self.icols[j]:
                    d -= P[k] * a
                if d > 0:
                    return j
            return None
        for j in range(len(self.cols)):
            if j in pos or not allowed(j):
                continue
            d = cc[j] - sum((pi[k] * a for k, a in self.cols[j].items()), Fraction(0))
            if d > 0:
                return j
        return None

    def column(self, j: int) -> list[Fraction]:
        col = self.cols[j]
        u = []
        for r in range(self.m):
            row = self.Binv[r]
            s = Fraction(0)
            for k, a in col.items():
                if row[k]:
                    s += row[k] * a
            u.append(s)
        return u

    def pivot(self, r: int, j: int, u: list[Fraction]) -> None:
        piv = u[r]
        rowr = [v / piv for v in self.Binv[r]]
        self.Binv[r] = rowr
        self.xB[r] = self.xB[r] / piv
        nz = [k for k in range(self.m) if rowr[k]]
        for i in range(self.m):
            f = u[i]
            if i == r or not f:
                continue
            row = self.Binv[i]
            for k in nz:
                row[k] -= f * rowr[k]
            self.xB[i] -= f * self.xB[r]
        del self.pos[self.basis[r]]
        self.basis[r] = j
        self.pos[j] = r
        self.pivots += 1

    def optimize(self, cc: list[Fraction], allowed=lambda j: True) -> str:
        while True:
            pi = self.prices(cc)
            j = self.entering(cc, pi, allowed)
            if j is None:
                return OPTIMAL
            u = self.column(j)
            best = None
            for r in range(self.m):
                if u[r] > 0:
                    key = (self.xB[r] / u[r], self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return UNBOUNDED
            self.pivot(best[1], j, u)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def solve_lp(lp: LinearProgram) -> LPResult:
    """Exact optimum of ``lp`` by two-phase revised simplex with Bland's rule."""
    n = lp.n
    rows = [dict(r) for r in lp.rows]
    senses = list(lp.senses)
    rhs = list(lp.rhs)
    if lp.upper is not None:
        for j, u in enumerate(lp.upper):
            if u is not None:
                rows.append({j: Fraction(1)})
                senses.append("<=")
                rhs.append(u)
    m = len(rows)
    cols: list[dict] = [dict() for _ in range(n)]
    for i, r in enumerate(rows):
        sign = -1 if rhs[i] < 0 else 1
        if sign < 0:
            rhs[i] = -rhs[i]
            senses[i] = {"<=": ">=", ">=": "<=", "=": "="}[senses[i]]
        for j, a in r.items():
            cols[j][i] = a * sign
    basis = [0] * m
    artificial = set()
    for i in range(m):
        if senses[i] == "<=":
            cols.append({i: Fraction(1)})
            basis[i] = len(cols) - 1
        else:
            if senses[i] == ">=":
                cols.append({i: Fraction(-1)})
            cols.append({i: Fraction(1)})
            basis[i] = len(cols) - 1
            artificial.add(len(cols) - 1)
    N = len(cols)
    sx = _Simplex(cols, rhs, basis)
    if artificial:
        c1 = [Fraction(-1) if j in artificial else Fraction(0) for j in range(N)]
        sx.optimize(c1)
        if any(sx.xB[r] > 0 for r, v in enumerate(sx.basis) if v in artificial):
            return LPResult(INFEASIBLE, pivots=sx.pivots)
        # drive zero-level artificials out where a real column can replace them
        for r in range(m):
            if sx.basis[r] not in artificial:
                continue
            for j in range(N):
                if j in artificial or j in sx.pos:
                    continue
                u = sx.column(j)
                if u[r] != 0:
                    sx.pivot(r, j, u)
                    break
    sign = 1 if lp.maximize else -1
    cc = [sign * lp.c[j] if j < n else Fraction(0) for j in range(N)]
    status = sx.optimize(cc, lambda j: j not in artificial)
    if status != OPTIMAL:
        return LPResult(status, pivots=sx.pivots)
    x = [Fraction(0)] * n
    for r, v in enumerate(sx.basis):
        if v < n:
            x[v] = sx.xB[r]
    pi = sx.prices(cc)
    duals = [p * (-1 if lp.rhs[i] < 0 else 1) if i < len(lp.rhs) else p for i, p in enumerate(pi)]
    return LPResult(OPTIMAL, lp.value_at(x), x, duals[:len(lp.rows)], sx.pivots)


# relaxations


def _root_of(inst: Instance, root):
    r = inst.effective_root() if root is None else root
    if r not in inst.terminals:
        raise ValueError(f"root {r!r} is not a terminal")
    return r


@dataclass
class CutLP:
    lp: LinearProgram
    cuts: list = field(default_factory=list)     # column j -> vertex/terminal set
    rows: list = field(default_factory=list)     # row i -> directed edge or (X, v)


def bcr_dual_lp(inst: Instance, root=None, cap: int | None = None) -> CutLP:
    """Dual-BCR with every cut ``S`` (``r`` outside, a terminal inside) explicit."""
    r = _root_of(inst, root)
    cap = oracle_cap("bcr", cap)
    if inst.n > cap:
        raise OracleLimitError(f"bcr oracle is limited to {cap} vertices (got {inst.n})")
    ri = inst.index(r)
    others = [i for i in range(inst.n) if i != ri]
    tmask = 0
    for t in inst.terminals:
        tmask |= 1 << inst.index(t)
    arcs = []
    for k in range(inst.m):
        u, w, c = inst._eu[k], inst._ev[k], inst._ec[k]
        arcs.append((u, w, c))
        arcs.append((w, u, c))
    cuts, cols = [], []
    for bits in range(1, 1 << len(others)):
        S = 0
        for j, v in enumerate(others):
            if bits >> j & 1:
                S |= 1 << v
        if not S & tmask:
            continue
        col = [a for a, (u, w, _) in enumerate(arcs) if S >> u & 1 and not S >> w & 1]
        cuts.append(frozenset(inst.vertices[v] for v in range(inst.n) if S >> v & 1))
        cols.append(col)
    rows = [dict() for _ in arcs]
    for j, col in enumerate(cols):
        for a in col:
            rows[a][j] = 1
    lp = LinearProgram([1] * len(cols), rows, ["<="] * len(arcs), [c for _, _, c in arcs])
    names = [(inst.vertices[u], inst.vertices[w]) for u, w, _ in arcs]
    return CutLP(lp, cuts, names)


def bcr_primal_lp(inst: Instance, root=None, cap: int | None = None) -> CutLP:
    """BCR itself: one variable per directed edge, one row per cut."""
    d = bcr_dual_lp(inst, root, cap)
    m2 = len(d.rows)
    cost = d.lp.rhs
    rows = []
    for j in range(len(d.cuts)):
        rows.append({a: 1 for a in range(m2) if j in d.lp.rows[a]})
    lp = LinearProgram(cost, rows, [">="] * len(rows), [1] * len(rows), maximize=False)
    return CutLP(lp, d.cuts, d.rows)


def bcr_value(inst: Instance, root=None, cap: int | None = None) -> Fraction:
    """Exact BCR optimum (via Dual-BCR)."""
    if len(inst.terminals) <= 1:
        return Fraction(0)
    res = solve_lp(bcr_dual_lp(inst, root, cap).lp)
    if res.status != OPTIMAL:
        raise RuntimeError(f"Dual-BCR solve ended {res.status}")
    return res.value


def hyp_dual_lp(inst: Instance, root=None, cap: int | None = None,
                size_cap: int | None = None) -> CutLP:
    """Dual of the hypergraphic relaxation: one column per ``S`` in ``R - r``,
    one row per ``(X, v)`` with ``|X| >= 2`` and ``|X| <= size_cap``."""
    r = _root_of(inst, root)
    R = list(inst.terminals)
    cap = oracle_cap("hyp", cap)
    if len(R) > cap:
        raise OracleLimitError(f"hyp oracle is limited to {cap} terminals (got {len(R)})")
    k = len(R)
    size_cap = k if size_cap is None else size_cap
    table = SteinerTable(inst, R)
    ri = R.index(r)
    cuts = []
    for bits in range(1, 1 << k):
        if not bits >> ri & 1:
            cuts.append(bits)
    rows, rhs, names = [], [], []
    for X in range(1, 1 << k):
        size = bin(X).count("1")
        if size < 2 or size > size_cap:
            continue
        cost = table.cost(X)
        for v in range(k):
            if not X >> v & 1:
                continue
            row = {j: 1 for j, S in enumerate(cuts) if X & S and not S >> v & 1}
            rows.append(row)
            rhs.append(cost)
            names.append((frozenset(R[i] for i in range(k) if X >> i & 1), R[v]))
    lp = LinearProgram([1] * len(cuts), rows, ["<="] * len(rows), rhs)
    cut_sets = [frozenset(R[i] for i in range(k) if S >> i & 1) for S in cuts]
    return CutLP(lp, cut_sets, names)


def hyp_value(inst: Instance, root=None, component_cap: int | None = None,
              cap: int | None = None) -> Fraction:
    """Exact hypergraphic relaxation value; components up to ``component_cap`` terminals."""
    if len(inst.terminals) <= 1:
        return Fraction(0)
    res = solve_lp(hyp_dual_lp(inst, root, cap, component_cap).lp)
    if res.status != OPTIMAL:
        raise RuntimeError(f"hypergraphic dual solve ended {res.status}")
    return res.value


def opt_value(inst: Instance, terminal_cap: int | None = None) -> Fraction:
    """Exact Steiner tree optimum (Dreyfus-Wagner on all terminals)."""
    cap = oracle_cap("opt", terminal_cap)
    if len(inst.terminals) > cap:
        raise OracleLimitError(f"opt oracle is limited to {cap} terminals")
    return steiner_cost(inst, inst.terminals, size_cap=cap)[0]


def tmst_value(inst: Instance) -> Fraction:
    return tmst(inst)[0]


@dataclass
class OracleChain:
    tmst: Fraction
    bcr: Fraction
    hyp: Fraction | None
    opt: Fraction

    def violations(self) -> list[str]:
        out = []
        if not self.tmst / 2 <= self.bcr:
            out.append("TMST/2 <= BCR")
        if self.hyp is not None:
            if not self.bcr <= self.hyp:
                out.append("BCR <= HYP")
            if not self.hyp <= self.opt:
                out.append("HYP <= OPT")
        elif not self.bcr <= self.opt:
            out.append("BCR <= OPT")
        if not self.opt <= self.tmst:
            out.append("OPT <= TMST")
        return out


def oracle_chain(inst: Instance, root=None) -> OracleChain:
    hyp = None
    if len(inst.terminals) <= oracle_cap("hyp"):
        hyp = hyp_value(inst, root)
    return OracleChain(tmst_value(inst), bcr_value(inst, root), hyp, opt_value(inst))


def vertex_enumeration_max(lp: LinearProgram) -> Fraction | None:
    """Brute-force optimum over basic solutions (tiny LPs only; maximize, ``<=`` rows)."""
    n = lp.n
    cons = [(r, b) for r, s, b in zip(lp.rows, lp.senses, lp.rhs)]
    cons += [({j: Fraction(1)}, Fraction(0)) for j in range(n)]  # x_j = 0 faces
    best = None
    for pick in itertools.combinations(range(len(cons)), n):
        A = [[cons[i][0].get(j, Fraction(0)) for j in range(n)] + [cons[i][1]] for i in pick]
        x = _solve_square(A, n)
        if x is None or not lp.is_feasible(x):
            continue
        v = lp.value_at(x) if lp.maximize else -lp.value_at(x)
        if best is None or v > best:
            best = v
    if best is None:
        return None
    return best if lp.maximize else -best


def _solve_square(A: list[list[Fraction]], n: int) -> list[Fraction] | None:
    A = [row[:] for row in A]
    for col in range(n):
        p = next((i for i in range(col, n) if A[i][col] != 0), None)
        if p is None:
            return None
        A[col], A[p] = A[p], A[col]
        pv = A[col][col]
        A[col] = [v / pv for v in A[col]]
        for i in range(n):
            if i != col and A[i][col] != 0:
                f = A[i][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[col])]
    return [A[i][n] for i in range(n)]
