"""The eight acceptance criteria, each at its stated tolerance and time budget.

Every test appends one ``criterion N: PASS/FAIL ...`` line that the terminal
summary prints at the end of the run.
"""

import random
import time
from fractions import Fraction

import pytest

from moatlab import experiments, gadgets, growth, oracles
from moatlab.instance import random_instance
from moatlab.mergeplan import random_ultrametric, value

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance

_reports: dict = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def failed_names(rep) -> list[str]:
    return [a["name"] for a in rep.failures()]


def suite_712():
    if "712" not in _reports:
        stamps = [("start", time.perf_counter())]
        rep = experiments.mst_optimal_712(n=10, terminals=10, eps="1/100",
                                          progress=lambda label: stamps.append((label, time.perf_counter())))
        per = {label: t - stamps[i][1] for i, (label, t) in enumerate(stamps[1:])}
        _reports["712"] = (rep, per)
    return _reports["712"]


def suite_oracle():
    if "oracle" not in _reports:
        t0 = time.perf_counter()
        rep = experiments.oracle_chain(n=30)
        _reports["oracle"] = (rep, time.perf_counter() - t0)
    return _reports["oracle"]


def test_criterion_1_seven_twelfths_on_mst_optimal():
    rep, per = suite_712()
    core = [a for a in rep.assertions
            if a["name"].endswith(("run feasible", "dual = (1-eps) 7/12 TMST", "dual = value(plan)",
                                   "dual satisfies every edge constraint"))]
    labels = set(per)
    ok_values = all(a["pass"] for a in core)
    slowest = max(per.values())
    ok = ok_values and slowest < 60 and len(labels) == 11 and "composed" in labels
    record(1, ok, f"{len(labels)} instances (composed |R|=10 plus 10 random), "
                  f"{sum(a['pass'] for a in core)}/{len(core)} value checks, slowest {slowest:.1f}s < 60s")
    assert ok_values, [a for a in core if not a["pass"]]
    assert len(labels) == 11
    assert slowest < 60, per


def test_criterion_2_gap_integral():
    t0 = time.perf_counter()
    rep = experiments.gap_1898()
    dt = time.perf_counter() - t0
    lo, hi = rep.data["integral_lo"], rep.data["integral_hi"]
    ok = (rep.passed and Fraction(505, 10000) <= lo and hi <= Fraction(515, 10000)
          and rep.data["bound_hi"] <= Fraction(1898, 1000) and hi - lo <= Fraction(1, 10 ** 6) and dt < 1)
    record(2, ok, f"I in [{float(lo):.9f}, {float(hi):.9f}], bound <= {float(rep.data['bound_hi']):.6f}, "
                  f"{dt:.3f}s < 1s")
    assert rep.passed, failed_names(rep)
    assert hi - lo <= Fraction(1, 10 ** 6)
    assert dt < 1


def test_criterion_3_lower_bound_instance():
    t0 = time.perf_counter()
    rep = experiments.lower_bound_712(terminals=25, eps="1/6")
    dt = time.perf_counter() - t0
    ok = rep.passed and dt < 300
    best = max(rep.data["canonical_ratios"].values())
    worst = max(best, rep.data["max_random_ratio"])
    record(3, ok, f"max dual/TMST {float(worst):.6f} <= {float(Fraction(7, 12) + Fraction(1, 6)):.6f}, "
                  f"best canonical {float(best):.6f} >= {float(Fraction(7, 12) - Fraction(2, 24)):.6f}, "
                  f"{dt:.0f}s < 300s")
    assert rep.passed, failed_names(rep)
    assert dt < 300


@pytest.mark.parametrize("kind,k", [("3x", 1), ("3x", 3), ("jump", 1)])
def test_criterion_4_gadget_lemmas(kind, k):
    g, _ = (gadgets.three_x_gadget if kind == "3x" else gadgets.jump_gadget)(k=k)
    rep = gadgets.verify_gadget_lemma(g)
    reach = [c for c in rep.checks if c[0].startswith(("atf", "min("))]
    ok = rep.ok and bool(reach)
    record(4, ok, f"{kind}-gadget k={k}: {sum(c[1] for c in rep.checks)}/{len(rep.checks)} checks")
    assert rep.ok, rep.failures
    assert reach


def test_criterion_5_oracle_chain():
    rep, dt = suite_oracle()
    chain = [a for a in rep.assertions if "<= BCR <= HYP" in a["name"] or "HYP = OPT" in a["name"]]
    ok = all(a["pass"] for a in chain) and len(rep.data["instances"]) == 30 and dt < 600
    hyp_opt = sum("HYP = OPT" in a["name"] for a in chain)
    record(5, ok, f"30 instances, {sum(a['pass'] for a in chain)}/{len(chain)} chain checks "
                  f"({hyp_opt} MST-optimal HYP = OPT), {dt:.1f}s < 600s")
    assert all(a["pass"] for a in chain), [a for a in chain if not a["pass"]]
    assert dt < 600


def test_criterion_6_weak_duality():
    rng = random.Random(6)
    checked = feasible = 0
    bad = []
    for _ in range(30):
        nv = rng.randint(4, 9)
        inst = random_instance(rng, nv, rng.randint(2, min(5, nv)), extra=0.35)
        bcr = oracles.bcr_value(inst)
        for _ in range(3):
            plan = random_ultrametric(rng, inst.terminals, rng.choice([2, 4, 8]), denominator=6)
            trace, dual = growth.run(inst, plan)
            val = growth.dual_objective(dual)
            checked += 1
            if val > bcr:
                bad.append(("dual > BCR", val, bcr))
            if growth.is_feasible_run(trace)[0]:
                feasible += 1
                if val != value(plan):
                    bad.append(("dual != value(plan)", val, value(plan)))
    rep, _ = suite_oracle()
    suite = [a for a in rep.assertions if "dual <= BCR" in a["name"] or "feasible run has dual" in a["name"]]
    ok = not bad and all(a["pass"] for a in suite)
    record(6, ok, f"{checked} random runs ({feasible} feasible) plus {len(suite)} oracle-suite checks")
    assert not bad, bad[:5]
    assert all(a["pass"] for a in suite)


def test_criterion_7_subdivision():
    t0 = time.perf_counter()
    rep = experiments.subdivision_invariance(n=20, rounds=3)
    dt = time.perf_counter() - t0
    ok = rep.passed and dt < 120
    record(7, ok, f"detour inserts 2 and reaches z at 22, {len(rep.assertions) - 3} instances x 3 rounds "
                  f"invariant, {dt:.1f}s < 120s")
    assert rep.passed, failed_names(rep)
    assert dt < 120


def test_criterion_8_safe_edges_and_length_bound():
    rep1, _ = suite_712()
    rep5, _ = suite_oracle()
    relevant = [a for rep in (rep1, rep5) for a in rep.assertions
                if a["name"].endswith(("no unsafe edges", "meeting-point length bound"))]
    checked = sum(int(a["detail"].get("checked", 0)) for a in relevant)
    ok = bool(relevant) and all(a["pass"] for a in relevant)
    record(8, ok, f"{len(relevant)} checks over suites 1 and 5, {checked} length-bound targets")
    assert relevant
    assert all(a["pass"] for a in relevant), [a for a in relevant if not a["pass"]]
