import random
from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from moatlab import catalog, growth, oracles, subdivide
from moatlab.instance import Instance, terminal_distances, tmst
from moatlab.mergeplan import MergePlan, canonical_plan, random_ultrametric, scale
from moatlab.subdivide import (continuous_run, make_nice, make_well_subdivided, random_subdivision,
                               subdivide_edges, subdivision_identity_violations)

from conftest import small_instances


def detour_plan():
    det = catalog.detour_instance()
    return det, scale(canonical_plan(det), Fraction(7, 6))


def atf_table(tr, vertices):
    return {(ps.members, v): tr.atf(ps.members, v) for ps in tr.family for v in vertices}


def test_detour_make_nice_inserts_two_vertices():
    det, plan = detour_plan()
    nice = make_nice(det, plan)
    new = [v for v in nice.vertices if not det.has_vertex(v)]
    assert len(new) == 2
    # one on v-x where both sides meet at 19, one halfway along x-z where s2 meets itself at 20
    costs = {frozenset((u, v)): c for u, v, c in nice.edges()}
    w, y = sorted(new, key=lambda n: [a for a, b, _ in nice.edges() if n in (a, b)][0] != "v")
    assert costs[frozenset(("v", w))] == 1 and costs[frozenset((w, "x"))] == 1
    assert costs[frozenset(("x", y))] == 2 and costs[frozenset((y, "z"))] == 2
    ct = continuous_run(det, plan)
    assert ct.undirected_tight_time("v", "x") == 19
    assert ct.undirected_tight_time("x", "z") == 20


def test_detour_reach_time_matches_continuous():
    det, plan = detour_plan()
    ct = continuous_run(det, plan)
    assert ct.atf({"s1"}, "z") == 22
    tr = growth.simulate(make_nice(det, plan), plan)
    assert tr.atf({"s1"}, "z") == 22
    # the unsubdivided discrete run never gets there
    assert growth.simulate(det, plan).atf({"s1"}, "z") is None


def test_one_terminal_continuous_equals_discrete():
    inst = Instance(["a", "b"], ["a"], [("a", "b", 2)])
    plan = MergePlan(["a"], {})
    assert continuous_run(inst, plan).trace.t_end == growth.simulate(inst, plan).t_end == 0


def test_unreached_edges_are_not_split():
    inst = Instance(["s1", "a", "b", "s2", "far"], ["s1", "s2"],
                    [("s1", "a", 1), ("a", "b", 10), ("b", "s2", 1), ("b", "far", 5)])
    plan = MergePlan(["s1", "s2"], {("s1", "s2"): Fraction(1, 2)})
    nice = make_nice(inst, plan)
    assert nice.cost("b", "far") == 5
    assert nice.cost("a", "b") == 10


@given(small_instances(max_n=7, max_k=4), st.integers(0, 10 ** 6))
def test_make_nice_condition_one(inst, seed):
    plan = random_ultrametric(random.Random(seed), inst.terminals, 4, denominator=6)
    nice = make_nice(inst, plan)
    tr = growth.simulate(nice, plan)
    assert [v for v in growth.well_subdivided_violations(tr) if v[0] == "i"] == []


@given(small_instances(max_n=7, max_k=4), st.integers(0, 10 ** 6))
def test_well_subdivided_keeps_the_run(inst, seed):
    plan = random_ultrametric(random.Random(seed), inst.terminals, 4, denominator=6)
    ws = make_well_subdivided(inst, plan)
    assert growth.well_subdivided_violations(growth.simulate(ws, plan)) == []
    # idempotent up to zero-length splits
    again = make_well_subdivided(ws, plan)
    assert again.n == ws.n
    # the continuous run on the original matches the discrete run on the output
    ct = continuous_run(inst, plan)
    tr = growth.simulate(ws, plan)
    assert atf_table(tr, inst.vertices) == atf_table(ct.trace, inst.vertices)
    assert growth.run_objective(tr) == growth.run_objective(ct.trace)


@given(small_instances(max_n=6, max_k=3), st.integers(0, 10 ** 6))
def test_subdivision_preserves_metric_and_oracles(inst, seed):
    sub = random_subdivision(inst, random.Random(seed))
    assert tmst(sub)[0] == tmst(inst)[0]
    assert terminal_distances(sub) == terminal_distances(inst)
    assert oracles.opt_value(sub) == oracles.opt_value(inst)
    if sub.n <= 12:
        assert oracles.bcr_value(sub) == oracles.bcr_value(inst)


@given(small_instances(max_n=7, max_k=4), st.integers(0, 10 ** 6))
def test_atf_invariant_under_further_subdivision(inst, seed):
    rng = random.Random(seed)
    plan = scale(canonical_plan(inst), rng.choice([Fraction(1), Fraction(7, 6), Fraction(2)]))
    ws = make_well_subdivided(inst, plan)
    want = atf_table(growth.simulate(ws, plan), ws.vertices)
    cur = ws
    for _ in range(3):
        cur = random_subdivision(cur, rng)
        assert atf_table(growth.simulate(cur, plan), ws.vertices) == want


@given(small_instances(max_n=6, max_k=3), st.integers(0, 10 ** 6), st.data())
def test_single_split_contribution_identities(inst, seed, data):
    plan = random_ultrametric(random.Random(seed), inst.terminals, 4, denominator=6)
    k = data.draw(st.integers(0, inst.m - 1))
    c = inst._ec[k]
    c_u = c * Fraction(data.draw(st.integers(1, 6)), 7)
    sub = subdivide_edges(inst, {k: [c_u]})
    ct, ct_sub = continuous_run(inst, plan), continuous_run(sub, plan)
    times = sorted({Fraction(0), ct.trace.t_end} | set(plan.breakpoints()) | {ct.trace.t_end / 3})
    assert subdivision_identity_violations(ct, ct_sub, k, c_u, times) == []


def test_subdivide_edges_names_and_costs():
    inst = Instance(["a", "b"], ["a", "b"], [("a", "b", 6)])
    out = subdivide_edges(inst, {0: [Fraction(4), Fraction(1), Fraction(0), Fraction(6)]})
    assert out.vertices == ("a", "b", "e0_s0", "e0_s1")
    assert sorted(c for _, _, c in out.edges()) == [1, 2, 3]
