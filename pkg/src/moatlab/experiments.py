"""Named batch experiments.

Each experiment returns a JSON-ready report::

    {"experiment": name, "params": {...}, "assertions": [...], "pass": bool}

Every assertion is ``{"name", "pass", "detail"}``.  Rationals are written
as ``"p/q"`` strings; decimals only appear under keys ending in
``_approx``.  Reports contain no timings, so a fixed seed reproduces them
byte for byte.
"""

from __future__ import annotations

import json
import random
from fractions import Fraction
from typing import Callable

from . import catalog, gadgets, goodplan, growth, mergeplan, oracles, subdivide
from .instance import (Instance, as_fraction, fmt, random_hub_instance, random_instance,
                       random_mst_optimal_instance, terminal_distances, tmst)

DEFAULT_SEED = 20240601
LENGTH_BOUND_SAMPLE = 120


class Report:
    def __init__(self, name: str, params: dict):
        self.name = name
        self.params = {k: (fmt(v) if isinstance(v, Fraction) else v) for k, v in params.items()}
        self.assertions: list[dict] = []
        self.data: dict = {}

    def check(self, name: str, ok: bool, **detail) -> bool:
        self.assertions.append({"name": name, "pass": bool(ok), "detail": _jsonable(detail)})
        return bool(ok)

    @property
    def passed(self) -> bool:
        return all(a["pass"] for a in self.assertions)

    def failures(self) -> list[dict]:
        return [a for a in self.assertions if not a["pass"]]

    def to_dict(self) -> dict:
        out = {"experiment": self.name, "params": self.params, "assertions": self.assertions,
               "pass": self.passed}
        if self.data:
            out["data"] = _jsonable(self.data)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _jsonable(x):
    if isinstance(x, Fraction):
        return fmt(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted((_jsonable(v) for v in x), key=str)
    return x


def _approx(q: Fraction, digits: int = 10) -> str:
    return f"{float(q):.{digits}f}"


# shared pipeline: canonical x 7/6 x (1 - eps), well-subdivision, dual growth


def _length_bound_targets(trace: growth.GrowthTrace, S: frozenset, rng: random.Random) -> list:
    atf = trace.atf_index(S)
    vs = trace.inst.vertices
    cand = [vs[i] for i, t in enumerate(atf) if t is not None and vs[i] not in S]
    if len(cand) > LENGTH_BOUND_SAMPLE:
        cand = rng.sample(cand, LENGTH_BOUND_SAMPLE)
    return cand


def seven_twelfths_pipeline(rep: Report, label: str, inst: Instance, eps: Fraction, *,
                            rng: random.Random, check_plan_goodness: bool = True) -> dict:
    """Run the 7/12 pipeline on ``inst`` and record its assertions under ``label``."""
    T = tmst(inst)[0]
    plan = mergeplan.scale(mergeplan.canonical_plan(inst), Fraction(7, 6) * (1 - eps))
    if check_plan_goodness:
        g = mergeplan.classify_gamma(plan, inst, 0)
        rep.check(f"{label}: plan strictly 0-good", g.status == "strictly-good",
                  status=g.status, bounded=g.bounded)
    else:
        d = terminal_distances(inst)
        ok = all(t < Fraction(7, 12) * d[a, b] for a, b, t in plan.pairs())
        rep.check(f"{label}: plan pair condition strict (set condition not enumerated)", ok)
    ws = subdivide.make_well_subdivided(inst, plan)
    trace, dual = growth.run(ws, plan)
    feasible, witness = growth.is_feasible_run(trace)
    value = growth.dual_objective(dual)
    want = (1 - eps) * Fraction(7, 12) * T
    rep.check(f"{label}: run feasible", feasible, witness=witness)
    rep.check(f"{label}: dual = (1-eps) 7/12 TMST", value == want, dual=value, expected=want, tmst=T)
    rep.check(f"{label}: dual = value(plan)", value == mergeplan.value(plan), plan_value=mergeplan.value(plan))
    ok, bad = growth.verify_dual_feasibility(dual, ws)
    rep.check(f"{label}: dual satisfies every edge constraint", ok, violations=bad[:5])
    flagged = [r for r in growth.safe_edge_report(trace) if r.flagged]
    rep.check(f"{label}: no unsafe edges", not flagged,
              flagged=[(r.edge, r.tight_at, r.contributors) for r in flagged[:5]])
    broken, checked = [], 0
    for ps in trace.family:
        if trace.root in ps.members:
            continue
        for v in _length_bound_targets(trace, ps.members, rng):
            holds, info = growth.length_bound_holds(trace, ps.members, v)
            checked += 1
            if not holds:
                broken.append((sorted(ps.members, key=str), v, info.get("length"), info.get("bound")))
    rep.check(f"{label}: meeting-point length bound", not broken, checked=checked, broken=broken[:5])
    return {"tmst": T, "dual": value, "vertices": inst.n, "well_subdivided_vertices": ws.n}


def mst_optimal_712(seed: int = DEFAULT_SEED, n: int = 10, terminals: int = 10,
                    eps="1/100", composed_eps="1/6", progress: Callable | None = None) -> Report:
    eps = as_fraction(eps)
    composed_eps = as_fraction(composed_eps)
    rep = Report("mst-optimal-712", {"seed": seed, "n": n, "terminals": terminals, "eps": eps,
                                     "composed_eps": composed_eps})
    rng = random.Random(seed)
    rows = {}
    if terminals:
        inst = gadgets.lower_bound_instance([f"r{i}" for i in range(terminals)], composed_eps)
        rows["composed"] = seven_twelfths_pipeline(rep, "composed", inst, eps, rng=rng,
                                                   check_plan_goodness=False)
        if progress:
            progress("composed")
    for i in range(n):
        nv = rng.randint(6, 10)
        k = rng.randint(3, min(5, nv - 1))
        inst = random_mst_optimal_instance(rng, nv, k, denominator=rng.choice([1, 2, 3]))
        rows[f"random-{i}"] = seven_twelfths_pipeline(rep, f"random-{i}", inst, eps, rng=rng)
        if progress:
            progress(f"random-{i}")
    rep.data["instances"] = rows
    return rep


def gap_1898(tol="1/1000000") -> Report:
    tol = as_fraction(tol)
    rep = Report("gap-1898", {"tol": tol})
    gb = goodplan.gap_bound(tol)
    rep.check("integral enclosed in [0.0505, 0.0515]",
              Fraction(505, 10000) <= gb.integral_lo and gb.integral_hi <= Fraction(515, 10000),
              lo_approx=_approx(gb.integral_lo), hi_approx=_approx(gb.integral_hi))
    rep.check("bound <= 1.898", gb.bound_hi <= Fraction(1898, 1000), bound_hi_approx=_approx(gb.bound_hi))
    rep.check("bound within [1.897, 1.899]",
              Fraction(1897, 1000) <= gb.bound_lo and gb.bound_hi <= Fraction(1899, 1000))
    rep.check("enclosure width <= tol", gb.width <= tol, width_approx=f"{float(gb.width):.3e}")
    rep.data.update(integral_lo=gb.integral_lo, integral_hi=gb.integral_hi,
                    bound_lo=gb.bound_lo, bound_hi=gb.bound_hi, pieces=gb.pieces)
    return rep


CANONICAL_SCALES = [Fraction(1, 2), Fraction(2, 3), Fraction(5, 6), Fraction(1), Fraction(13, 12),
                    Fraction(7, 6), Fraction(5, 4), Fraction(4, 3), Fraction(3, 2), Fraction(2)]


def lower_bound_712(seed: int = DEFAULT_SEED, terminals: int = 25, eps="1/6", n_random: int = 100,
                    t_max="2", progress: Callable | None = None) -> Report:
    eps = as_fraction(eps)
    t_max = as_fraction(t_max)
    rep = Report("lower-bound-712", {"seed": seed, "terminals": terminals, "eps": eps,
                                     "n_random": n_random, "t_max": t_max})
    rng = random.Random(seed)
    R = [f"r{i}" for i in range(terminals)]
    inst = gadgets.lower_bound_instance(R, eps)
    T = tmst(inst)[0]
    rep.check("TMST = 2(|R|-1)", T == 2 * (terminals - 1), tmst=T)
    canon = mergeplan.canonical_plan(inst)
    cap = (Fraction(7, 12) + eps) * T
    ratios = {}
    for s in CANONICAL_SCALES:
        tr = growth.simulate(inst, mergeplan.scale(canon, s), record=False, objective_only=True)
        ratios[fmt(s)] = growth.run_objective(tr) / T
        if progress:
            progress(f"scale {fmt(s)}")
    worst_random = Fraction(0)
    for i in range(n_random):
        plan = mergeplan.random_ultrametric(rng, R, t_max)
        tr = growth.simulate(inst, plan, record=False, objective_only=True)
        worst_random = max(worst_random, growth.run_objective(tr) / T)
        if progress:
            progress(f"random {i}")
    best_canon = max(ratios.values())
    target = Fraction(7, 12) - Fraction(2, terminals - 1)
    rep.check("every sampled dual <= (7/12 + eps) TMST",
              max(best_canon, worst_random) * T <= cap,
              max_ratio=max(best_canon, worst_random), cap_ratio=cap / T)
    rep.check("scaled canonical reaches (7/12 - 2/(|R|-1)) TMST", best_canon >= target,
              best_canonical_ratio=best_canon, target_ratio=target)
    rep.data.update(canonical_ratios=ratios, max_random_ratio=worst_random,
                    proof_budget_ratio=gadgets.lower_bound_budget(terminals, eps),
                    vertices=inst.n, edges=inst.m)
    return rep


def oracle_chain(seed: int = DEFAULT_SEED, n: int = 30, max_vertices: int = 10,
                 max_terminals: int = 5, eps="1/100") -> Report:
    eps = as_fraction(eps)
    rep = Report("oracle-chain", {"seed": seed, "n": n, "max_vertices": max_vertices,
                                  "max_terminals": max_terminals, "eps": eps})
    rng = random.Random(seed)
    rows = {}
    for i in range(n):
        nv = rng.randint(4, max_vertices)
        k = rng.randint(2, min(max_terminals, nv))
        if i % 2 and k < nv:
            inst = random_hub_instance(rng, nv, k)
        else:
            inst = random_instance(rng, nv, k, extra=rng.choice([0.2, 0.35, 0.5]),
                                   denominator=rng.choice([1, 2]))
        ch = oracles.oracle_chain(inst)
        bad = ch.violations()
        label = f"instance-{i}"
        rep.check(f"{label}: TMST/2 <= BCR <= HYP <= OPT <= TMST", not bad, violated=bad,
                  tmst=ch.tmst, bcr=ch.bcr, hyp=ch.hyp, opt=ch.opt)
        rep.check(f"{label}: OPT/BCR <= 1.898", ch.opt * 1000 <= ch.bcr * 1898)
        mst_opt = ch.opt == ch.tmst
        if mst_opt and ch.hyp is not None:
            rep.check(f"{label}: HYP = OPT (MST-optimal)", ch.hyp == ch.opt)
        # weak duality for a spread of plans
        canon = mergeplan.canonical_plan(inst)
        for s in (Fraction(1), Fraction(7, 6), Fraction(3, 2)):
            plan = mergeplan.scale(canon, s)
            trace, dual = growth.run(inst, plan)
            val = growth.dual_objective(dual)
            rep.check(f"{label}: dual <= BCR at scale {fmt(s)}", val <= ch.bcr, dual=val, bcr=ch.bcr)
            feasible, _ = growth.is_feasible_run(trace)
            if feasible:
                rep.check(f"{label}: feasible run has dual = value(plan) at scale {fmt(s)}",
                          val == mergeplan.value(plan))
        if mst_opt and len(inst.terminals) >= 2:
            seven_twelfths_pipeline(rep, label, inst, eps, rng=rng)
        rows[label] = {"vertices": nv, "terminals": k, "tmst": ch.tmst, "bcr": ch.bcr,
                       "hyp": ch.hyp, "opt": ch.opt, "mst_optimal": mst_opt}
    rep.data["instances"] = rows
    return rep


def subdivision_invariance(seed: int = DEFAULT_SEED, n: int = 20, rounds: int = 3) -> Report:
    rep = Report("subdivision-invariance", {"seed": seed, "n": n, "rounds": rounds})
    det = catalog.detour_instance()
    plan = mergeplan.scale(mergeplan.canonical_plan(det), Fraction(7, 6))
    nice = subdivide.make_nice(det, plan)
    rep.check("detour: make_nice inserts 2 vertices", nice.n - det.n == 2, inserted=nice.n - det.n)
    ct = subdivide.continuous_run(det, plan)
    a_cont = ct.atf({"s1"}, "z")
    tr_nice = growth.simulate(nice, plan)
    a_nice = tr_nice.atf({"s1"}, "z")
    rep.check("detour: atf(s1, z) = 22 after make_nice", a_nice == 22, discrete=a_nice, continuous=a_cont)
    rep.check("detour: continuous atf(s1, z) = 22", a_cont == 22)
    rng = random.Random(seed)
    for i in range(n):
        nv = rng.randint(4, 9)
        k = rng.randint(2, min(4, nv))
        inst = random_instance(rng, nv, k, denominator=rng.choice([1, 2]))
        scale = rng.choice([Fraction(1), Fraction(7, 6), Fraction(4, 3), Fraction(2)])
        plan = mergeplan.scale(mergeplan.canonical_plan(inst), scale)
        ws = subdivide.make_well_subdivided(inst, plan)
        base = growth.simulate(ws, plan)
        want = _atf_table(base, ws.vertices)
        cur = ws
        same = True
        for _ in range(rounds):
            cur = subdivide.random_subdivision(cur, rng)
            tr = growth.simulate(cur, plan)
            if _atf_table(tr, ws.vertices) != want or tr.t_end != base.t_end:
                same = False
        rep.check(f"instance-{i}: atf invariant under {rounds} rounds of subdivision", same,
                  scale=scale, vertices=ws.n, final_vertices=cur.n)
    return rep


def _atf_table(trace: growth.GrowthTrace, vertices) -> dict:
    out = {}
    for ps in trace.family:
        for v in vertices:
            out[ps.members, v] = trace.atf(ps.members, v)
    return out


EXPERIMENTS = {
    "mst-optimal-712": mst_optimal_712,
    "gap-1898": gap_1898,
    "lower-bound-712": lower_bound_712,
    "oracle-chain": oracle_chain,
    "subdivision-invariance": subdivision_invariance,
}


def run_experiment(name: str, **params) -> Report:
    try:
        fn = EXPERIMENTS[name]
    except KeyError:
        raise KeyError(f"unknown experiment {name!r}; known: {', '.join(EXPERIMENTS)}") from None
    return fn(**params)
