import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from moatlab import catalog, gadgets
from moatlab.instance import (Instance, InstanceError, OracleLimitError, as_fraction, contract, drop,
                              fmt, improving_sets, is_mst_optimal, load, metric_mst_upper_bound,
                              random_instance, read_stp, save, shortest_distance, steiner_cost,
                              terminal_distances, tmst)

from conftest import all_simple_path_min, brute_steiner, floyd_warshall, kruskal_cost, small_instances


# shortest_distance


def test_three_x_gadget_distance_s_w():
    g, w = gadgets.three_x_gadget(k=1)
    assert shortest_distance(g.instance, "s", w) == Fraction(7, 6)


def test_distance_to_self_is_zero():
    inst = catalog.zigzag_instance()
    for v in inst.vertices:
        assert shortest_distance(inst, v, v) == 0


@given(st.integers(0, 10 ** 6))
def test_distance_matches_simple_path_enumeration(seed):
    rng = random.Random(seed)
    inst = random_instance(rng, 8, 3, extra=0.3, denominator=2)
    a, b = rng.sample(list(inst.vertices), 2)
    assert shortest_distance(inst, a, b) == all_simple_path_min(inst, a, b)


@given(small_instances())
def test_triangle_inequality(inst):
    d = floyd_warshall(inst)
    for u, v, w in itertools.permutations(inst.vertices[:6], 3):
        assert shortest_distance(inst, u, w) <= shortest_distance(inst, u, v) + shortest_distance(inst, v, w)
        assert shortest_distance(inst, u, w) == d[u, w]


# tmst


def test_tmst_of_composed_instance():
    for n in (3, 4):
        inst = gadgets.lower_bound_instance([f"r{i}" for i in range(n)], "1/6")
        assert tmst(inst)[0] == 2 * (n - 1)


def test_tmst_single_terminal():
    inst = Instance(["a", "b"], ["a"], [("a", "b", 3)])
    assert tmst(inst) == (0, [])


@given(small_instances(max_k=6))
def test_tmst_matches_kruskal_on_closure(inst):
    d = floyd_warshall(inst)
    cost, tree = tmst(inst)
    assert cost == kruskal_cost(inst.terminals, lambda a, b: d[a, b])
    assert len(tree) == len(inst.terminals) - 1
    assert sum(d[a, b] for a, b in tree) == cost


# contract and drop


def test_contract_all_terminals():
    inst = catalog.four_terminal_instance()
    G = contract(inst, inst.terminals)
    assert len(G.terminals) == 1
    assert tmst(G)[0] == 0


def test_three_x_contract_pair_drops_two():
    g, _ = gadgets.three_x_gadget(k=2)
    before = tmst(g.instance)[0]
    after = tmst(contract(g.instance, ["s", "s*"]))[0]
    assert before - after == 2


def test_drop_trivial_cases():
    inst = catalog.four_terminal_instance()
    assert drop(inst, ["a"]) == 0
    assert drop(inst, inst.terminals) == tmst(inst)[0]


def test_drop_on_composed_instance():
    R = ["a", "b", "c", "d"]
    inst = gadgets.lower_bound_instance(R, "1/6")
    for size in (2, 3, 4):
        for X in itertools.combinations(R, size):
            assert drop(inst, X) == 2 * (size - 1)


@given(small_instances(min_k=3, max_k=6), st.data())
def test_contraction_identity_and_drop_monotonicity(inst, data):
    R = list(inst.terminals)
    X = data.draw(st.lists(st.sampled_from(R), min_size=1, unique=True))
    Y = data.draw(st.lists(st.sampled_from(R), min_size=1, unique=True))
    assert tmst(contract(inst, X))[0] + drop(inst, X) == tmst(inst)[0]
    # drop_{G/Y}(X) <= drop_G(X); X is mapped into the contracted terminal set
    GY = contract(inst, Y)
    rep = min(Y, key=str) if all(isinstance(y, str) for y in Y) else min(Y)
    Xy = {rep if x in Y else x for x in X}
    assert drop(GY, Xy) <= drop(inst, X)


# steiner_cost


def test_steiner_pair_is_distance():
    inst = catalog.zigzag_instance()
    assert steiner_cost(inst, ["s1", "v"])[0] == shortest_distance(inst, "s1", "v")


@pytest.mark.parametrize("k", [1, 2, 3])
def test_three_x_component_cost(k):
    g, w = gadgets.three_x_gadget(k=k)
    cost, comp = steiner_cost(g.instance, ["s", "s*", w])
    assert cost == Fraction(5, 2) - Fraction(1, 6 * k)
    assert comp.cost == cost


@given(st.integers(0, 10 ** 6))
def test_steiner_cost_matches_brute_force(seed):
    rng = random.Random(seed)
    inst = random_instance(rng, 8, rng.randint(2, 4), extra=0.3)
    X = inst.terminals
    cost, comp = steiner_cost(inst, X)
    assert cost == brute_steiner(inst, X)
    assert set(X) <= comp.vertices() or len(X) == 1


@given(small_instances(max_k=5))
def test_steiner_cost_between_half_mst_and_mst(inst):
    X = inst.terminals
    c = steiner_cost(inst, X)[0]
    m = metric_mst_upper_bound(inst, X)
    assert m / 2 <= c <= m


def test_steiner_cost_cap():
    inst = random_instance(random.Random(1), 20, 18)
    with pytest.raises(OracleLimitError):
        steiner_cost(inst, inst.terminals, size_cap=10)


# MST-optimality


def test_composed_instance_is_mst_optimal():
    inst = gadgets.lower_bound_instance(["a", "b", "c", "d"], "1/6")
    assert is_mst_optimal(inst).optimal


def test_star_is_not_mst_optimal():
    inst = catalog.star_instance(3)
    res = is_mst_optimal(inst)
    assert not res.optimal
    assert res.witness.terminals == frozenset({"s1", "s2", "s3"})
    assert res.witness.cost == 3
    assert list(improving_sets(inst)) == [(frozenset({"s1", "s2", "s3"}), 3, Fraction(24, 7))]


def test_spanning_instance_is_mst_optimal():
    inst = random_instance(random.Random(3), 6, 6)
    assert is_mst_optimal(inst).optimal


def test_bounded_check_is_reported():
    inst = random_instance(random.Random(4), 9, 8)
    res = is_mst_optimal(inst, component_size_cap=3)
    assert res.bounded == (len(inst.terminals) > 3)


# input handling


def test_json_roundtrip(tmp_path):
    inst = catalog.meeting_point_instance()
    path = tmp_path / "i.json"
    save(inst, str(path))
    back = load(str(path))
    assert back.vertices == inst.vertices
    assert back.terminals == inst.terminals
    assert list(back.edges()) == list(inst.edges())


def test_stp_parsing():
    text = """33D32945 STP File, STP Format Version 1.0
SECTION Graph
Nodes 4
Edges 4
E 1 2 3
E 2 3 1
E 3 4 2
E 1 4 7
END
SECTION Terminals
Terminals 2
T 1
T 4
END
EOF
"""
    inst = read_stp(text)
    assert len(inst.terminals) == 2
    assert tmst(inst)[0] == 6


def test_rejects_bad_input():
    with pytest.raises(InstanceError):
        Instance(["a", "b"], ["a", "b"], [("a", "b", 0)])
    with pytest.raises(InstanceError):
        Instance(["a", "b", "c"], ["a", "c"], [("a", "b", 1)])
    with pytest.raises(InstanceError):
        Instance(["a"], ["z"], [])
    with pytest.raises(InstanceError):
        as_fraction(0.5)


def test_parallel_edges_keep_cheapest():
    inst = Instance(["a", "b"], ["a", "b"], [("a", "b", 5), ("b", "a", 2)])
    assert inst.m == 1 and inst.cost("a", "b") == 2


def test_fmt():
    assert fmt(Fraction(3, 1)) == "3"
    assert fmt(Fraction(-7, 12)) == "-7/12"


def test_terminal_distances_symmetric():
    inst = catalog.four_terminal_instance()
    d = terminal_distances(inst)
    for a, b in itertools.product(inst.terminals, repeat=2):
        assert d[a, b] == d[b, a]
