import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from moatlab import catalog, goodplan
from moatlab.instance import drop, random_mst_optimal_instance, terminal_distances, tmst
from moatlab.mergeplan import (MergePlan, PlanError, canonical_plan, classify_gamma, contract_plan,
                               contract_upper_bound, from_upper_bound, local_value, plan_from_json,
                               plan_to_json, random_ultrametric, scale, trivial_plan, value)

from conftest import kruskal_cost, small_instances


def plans(min_k=1, max_k=7):
    @st.composite
    def build(draw):
        k = draw(st.integers(min_k, max_k))
        seed = draw(st.integers(0, 2 ** 32 - 1))
        return random_ultrametric(random.Random(seed), list(range(k)), 3, denominator=draw(st.sampled_from([1, 4, 12])))
    return build()


def sweep_value(plan: MergePlan, X=None) -> Fraction:
    # integrate (parts meeting X) - 1 by rebuilding the partition between breakpoints
    X = set(plan.terminals if X is None else X)
    ts = sorted({Fraction(0)} | {plan.merge(a, b) for a, b in itertools.combinations(plan.terminals, 2)})
    total = Fraction(0)
    for lo, hi in zip(ts, ts[1:]):
        mid = (lo + hi) / 2
        comp = {x: x for x in plan.terminals}

        def find(a):
            while comp[a] != a:
                a = comp[a]
            return a

        for a, b in itertools.combinations(plan.terminals, 2):
            if plan.merge(a, b) < mid:
                comp[find(a)] = find(b)
        parts = {find(x) for x in X}
        total += (hi - lo) * (len(parts) - 1)
    return total


def is_ultrametric(plan: MergePlan) -> bool:
    for a, b, c in itertools.permutations(plan.terminals, 3):
        if plan.merge(a, c) > max(plan.merge(a, b), plan.merge(b, c)):
            return False
    return True


# value and local value


def test_value_single_terminal():
    assert value(MergePlan(["a"], {})) == 0


@given(small_instances(max_k=6))
def test_canonical_value_is_half_tmst(inst):
    assert value(canonical_plan(inst)) == tmst(inst)[0] / 2


@given(plans())
def test_value_matches_partition_sweep(plan):
    assert value(plan) == sweep_value(plan)


@given(plans(min_k=2), st.data())
def test_local_value_matches_sweep(plan, data):
    X = data.draw(st.lists(st.sampled_from(plan.terminals), min_size=1, unique=True))
    assert local_value(plan, X) == sweep_value(plan, X)
    assert local_value(plan, plan.terminals) == value(plan)


@given(small_instances(min_k=2, max_k=6), st.data())
def test_drop_is_twice_canonical_local_value(inst, data):
    X = data.draw(st.lists(st.sampled_from(inst.terminals), min_size=1, unique=True))
    assert drop(inst, X) == 2 * local_value(canonical_plan(inst), X)


@given(plans(min_k=3), st.data())
def test_local_value_superadditive_for_separated_sets(plan, data):
    # X inside a set S active at t*, Xbar disjoint from S
    t = data.draw(st.sampled_from(sorted({plan.merge(a, b) for a, b, _ in plan.pairs()}))) + Fraction(1, 48)
    parts = plan.partition_at(t)
    if len(parts) < 2:
        return
    S = sorted(parts[0], key=str)
    rest = sorted(set(plan.terminals) - parts[0], key=str)
    X = data.draw(st.lists(st.sampled_from(S), min_size=1, unique=True))
    Xb = data.draw(st.lists(st.sampled_from(rest), min_size=1, unique=True))
    assert local_value(plan, X + Xb) >= local_value(plan, X) + local_value(plan, Xb) + t


# from_upper_bound


def minimax_brute(terms, u, a, b):
    # min over simple paths in the complete graph of the max edge weight
    others = [x for x in terms if x not in (a, b)]
    best = u(a, b)
    for r in range(1, len(others) + 1):
        for mid in itertools.permutations(others, r):
            path = (a, *mid, b)
            best = min(best, max(u(x, y) for x, y in zip(path, path[1:])))
    return best


@given(st.integers(2, 6), st.integers(0, 10 ** 6))
def test_from_upper_bound_is_minimax(k, seed):
    rng = random.Random(seed)
    terms = list(range(k))
    w = {frozenset(p): Fraction(rng.randint(0, 12), rng.choice([1, 2, 3])) for p in itertools.combinations(terms, 2)}
    u = lambda a, b: w[frozenset((a, b))]  # noqa: E731
    plan = from_upper_bound(terms, u)
    assert is_ultrametric(plan)
    for a, b in itertools.combinations(terms, 2):
        assert plan.merge(a, b) == minimax_brute(terms, u, a, b)
        assert plan.merge(a, b) <= u(a, b)
    assert value(plan) == kruskal_cost(terms, u)
    # MST under u and under the merge times cost the same
    assert kruskal_cost(terms, plan.merge) == kruskal_cost(terms, u)


@given(st.integers(2, 6), st.integers(0, 10 ** 6))
def test_from_upper_bound_is_pointwise_maximal(k, seed):
    rng = random.Random(seed)
    terms = list(range(k))
    w = {frozenset(p): Fraction(rng.randint(1, 9)) for p in itertools.combinations(terms, 2)}
    u = lambda a, b: w[frozenset((a, b))]  # noqa: E731
    plan = from_upper_bound(terms, u)
    for a, b in itertools.combinations(terms, 2):
        # raising merge(a, b) breaks u on some path: there is a path whose max u equals it
        assert minimax_brute(terms, u, a, b) == plan.merge(a, b)


def test_from_upper_bound_half_distance_is_canonical():
    inst = catalog.four_terminal_instance()
    d = terminal_distances(inst)
    plan = from_upper_bound(inst.terminals, lambda a, b: d[a, b] / 2)
    assert plan == canonical_plan(inst)
    assert value(plan) == tmst(inst)[0] / 2


def test_from_upper_bound_zero():
    plan = from_upper_bound("abcd", lambda a, b: 0)
    assert value(plan) == 0
    assert all(t == 0 for _, _, t in plan.pairs())


# scaling


def test_scale_identity_and_seven_sixths():
    inst = catalog.four_terminal_instance()
    c = canonical_plan(inst)
    assert scale(c, 1) == c
    assert value(scale(c, Fraction(7, 6))) == Fraction(7, 12) * tmst(inst)[0]


@given(small_instances(max_k=6))
def test_scaled_canonical_strict_pair_condition(inst):
    eps = Fraction(1, 100)
    plan = scale(canonical_plan(inst), Fraction(7, 6) * (1 - eps))
    d = terminal_distances(inst)
    for a, b, t in plan.pairs():
        assert t < Fraction(7, 12) * d[a, b] or d[a, b] == 0


def test_scale_rejects_nonpositive():
    with pytest.raises(PlanError):
        scale(trivial_plan("ab"), 0)


# contraction


def test_contract_everything():
    plan = random_ultrametric(random.Random(2), list("abcde"), 2)
    c = contract_plan(plan, plan.terminals)
    assert c.terminals == ("a",) and value(c) == 0


@given(plans(min_k=2), st.data())
def test_contraction_removes_local_value(plan, data):
    X = data.draw(st.lists(st.sampled_from(plan.terminals), min_size=1, unique=True))
    assert value(plan) - value(contract_plan(plan, X)) == local_value(plan, X)
    assert is_ultrametric(contract_plan(plan, X))


@given(st.integers(2, 6), st.integers(0, 10 ** 6), st.data())
def test_contract_commutes_with_upper_bound(k, seed, data):
    rng = random.Random(seed)
    terms = list(range(k))
    w = {frozenset(p): Fraction(rng.randint(1, 9), 2) for p in itertools.combinations(terms, 2)}
    u = lambda a, b: w[frozenset((a, b))]  # noqa: E731
    X = data.draw(st.lists(st.sampled_from(terms), min_size=1, unique=True))
    left = contract_plan(from_upper_bound(terms, u), X)
    tx, ux = contract_upper_bound(terms, u, X)
    right = from_upper_bound(tx, ux)
    assert left.terminals == right.terminals
    for a, b in itertools.combinations(left.terminals, 2):
        assert left.merge(a, b) == right.merge(a, b)


# gamma-goodness


def test_mst_optimal_scaled_canonical_is_zero_good():
    rng = random.Random(8)
    for _ in range(4):
        inst = random_mst_optimal_instance(rng, 7, 4)
        plan = scale(canonical_plan(inst), Fraction(7, 6))
        rep = classify_gamma(plan, inst, 0)
        assert rep.good and rep.cheap_sets == 0
        strict = classify_gamma(scale(plan, Fraction(99, 100)), inst, 0)
        assert strict.strictly_good


def test_trivial_plan_is_good():
    inst = catalog.star_instance(3)
    assert classify_gamma(trivial_plan(inst.terminals), inst, 0).good


def test_oversized_plan_is_bad():
    inst = catalog.star_instance(3)
    rep = classify_gamma(scale(canonical_plan(inst), 3), inst, 0)
    assert rep.status == "bad" and rep.pair_witness is not None


@given(small_instances(min_n=4, max_n=7, min_k=3, max_k=5), st.sampled_from([Fraction(0), Fraction(1, 10), Fraction(1, 5)]))
def test_constructed_gamma_plan_is_good(inst, gamma):
    run = goodplan.relative_greedy(inst)
    plan = goodplan.construct_gamma_plan(run, gamma)
    assert classify_gamma(plan, inst, gamma).good


# construction and serialization


@given(plans())
def test_random_ultrametric_is_ultrametric(plan):
    assert is_ultrametric(plan)


def test_non_ultrametric_rejected():
    with pytest.raises(PlanError):
        MergePlan("abc", {("a", "b"): 1, ("b", "c"): 1, ("a", "c"): 2})


def test_plan_json_roundtrip():
    plan = random_ultrametric(random.Random(5), list("abcdef"), 2)
    assert plan_from_json(plan_to_json(plan)) == plan


def test_family_windows():
    plan = MergePlan("abc", {("a", "b"): 1, ("a", "c"): 2, ("b", "c"): 2})
    fam = {ps.members: (ps.a, ps.d) for ps in plan.family()}
    assert fam[frozenset("a")] == (0, 1)
    assert fam[frozenset("ab")] == (1, 2)
    assert fam[frozenset("c")] == (0, 2)
    assert plan.active_sets(Fraction(3, 2)) == [frozenset("ab"), frozenset("c")]
    assert plan.active_sets(3) == []
