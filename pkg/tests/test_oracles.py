import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moatlab import catalog, growth, oracles
from moatlab.instance import Instance, OracleLimitError, random_instance, random_mst_optimal_instance, tmst
from moatlab.mergeplan import canonical_plan, scale
from moatlab.oracles import (INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, LPError, bcr_dual_lp, bcr_primal_lp,
                             bcr_value, hyp_value, opt_value, oracle_cap, oracle_chain, solve_lp,
                             vertex_enumeration_max)

from conftest import small_instances


# exact simplex


def test_trivial_lp():
    lp = LinearProgram([1, 1], [{0: 1, 1: 2}, {0: 3, 1: 1}], ["<=", "<="], [4, 6])
    res = solve_lp(lp)
    assert res.status == OPTIMAL
    assert res.value == Fraction(14, 5)
    assert lp.is_feasible(res.x) and lp.value_at(res.x) == res.value


def test_beale_cycling_example():
    lp = LinearProgram(
        [Fraction(3, 4), -20, Fraction(1, 2), -6],
        [{0: Fraction(1, 4), 1: -8, 2: -1, 3: 9}, {0: Fraction(1, 2), 1: -12, 2: Fraction(-1, 2), 3: 3}, {2: 1}],
        ["<=", "<=", "<="], [0, 0, 1])
    res = solve_lp(lp)
    assert res.status == OPTIMAL and res.value == Fraction(5, 4)


def test_infeasible_and_unbounded():
    assert solve_lp(LinearProgram([1], [{0: 1}, {0: 1}], ["<=", ">="], [1, 2])).status == INFEASIBLE
    assert solve_lp(LinearProgram([1, 1], [{0: 1, 1: -1}], ["<="], [1])).status == UNBOUNDED


def test_minimize_with_equality_and_upper_bounds():
    lp = LinearProgram([2, 3], [{0: 1, 1: 1}], ["="], [5], maximize=False, upper=[3, None])
    res = solve_lp(lp)
    assert res.status == OPTIMAL and res.value == 12 and res.x == [3, 2]


def test_malformed_lp():
    with pytest.raises(LPError):
        LinearProgram([1], [{3: 1}], ["<="], [1])
    with pytest.raises(LPError):
        LinearProgram([1], [{0: 1}], ["<"], [1])


@st.composite
def small_lps(draw):
    n = draw(st.integers(1, 3))
    m = draw(st.integers(1, 3))
    coef = st.integers(-3, 5)
    c = [draw(coef) for _ in range(n)]
    rows = [{j: draw(coef) for j in range(n)} for _ in range(m)]
    rhs = [draw(st.integers(0, 8)) for _ in range(m)]
    # a box keeps the optimum finite
    rows.append({j: 1 for j in range(n)})
    rhs.append(draw(st.integers(1, 10)))
    return LinearProgram(c, rows, ["<="] * (m + 1), rhs)


@given(small_lps())
def test_simplex_matches_vertex_enumeration(lp):
    res = solve_lp(lp)
    assert res.status == OPTIMAL
    assert res.value == vertex_enumeration_max(lp)


# BCR


def test_bcr_single_terminal_is_zero():
    inst = Instance(["a", "b"], ["a"], [("a", "b", 1)])
    assert bcr_value(inst) == 0


@given(st.integers(0, 10 ** 6))
def test_bcr_spanning_equals_mst(seed):
    inst = random_instance(random.Random(seed), 6, 6, extra=0.5)
    assert bcr_value(inst) == tmst(inst)[0]


@settings(max_examples=10)
@given(small_instances(max_n=6, max_k=4))
def test_bcr_root_independent(inst):
    vals = {bcr_value(inst, root=r) for r in inst.terminals}
    assert len(vals) == 1


def test_bcr_primal_and_dual_agree():
    inst = catalog.four_terminal_instance()
    dual = solve_lp(bcr_dual_lp(inst).lp)
    primal = solve_lp(bcr_primal_lp(inst).lp)
    assert dual.value == primal.value == 21


def test_bcr_cap():
    inst = random_instance(random.Random(1), 16, 3)
    with pytest.raises(OracleLimitError):
        bcr_value(inst, cap=10)


def test_bad_root():
    inst = catalog.four_terminal_instance()
    with pytest.raises(ValueError):
        bcr_value(inst, root="not-a-terminal")


# hypergraphic relaxation and OPT


def test_hyp_of_two_terminals_is_distance():
    inst = catalog.zigzag_instance()
    two = Instance(inst.vertices, ["s1", "v"], list(inst.edges()))
    assert hyp_value(two) == opt_value(two) == 27


def test_star_values():
    inst = catalog.star_instance(3)
    chain = oracle_chain(inst)
    assert chain.tmst == Fraction(24, 7)
    assert chain.bcr == chain.hyp == chain.opt == 3
    assert chain.violations() == []


@settings(max_examples=10)
@given(st.integers(0, 10 ** 6))
def test_hyp_equals_opt_on_mst_optimal(seed):
    inst = random_mst_optimal_instance(random.Random(seed), 7, 4)
    assert hyp_value(inst) == opt_value(inst) == tmst(inst)[0]


@given(small_instances(max_n=7, max_k=5))
def test_oracle_chain(inst):
    chain = oracle_chain(inst)
    assert chain.violations() == []
    assert chain.tmst / 2 <= chain.bcr <= chain.hyp <= chain.opt <= chain.tmst
    assert chain.opt <= Fraction(1898, 1000) * chain.bcr


@given(small_instances(max_n=7, max_k=4))
def test_scaled_canonical_dual_below_bcr(inst):
    plan = scale(canonical_plan(inst), Fraction(7, 6))
    _, d = growth.run(inst, plan)
    assert growth.dual_objective(d) <= bcr_value(inst)


def test_opt_cap():
    inst = random_instance(random.Random(2), 12, 8)
    with pytest.raises(OracleLimitError):
        opt_value(inst, terminal_cap=5)


# caps from the environment


def test_cap_parsing(monkeypatch):
    monkeypatch.delenv("MOATLAB_CAP", raising=False)
    assert oracle_cap("bcr") == oracles.DEFAULT_CAPS["bcr"]
    assert oracle_cap("hyp", 3) == 3
    monkeypatch.setenv("MOATLAB_CAP", "9")
    assert oracle_cap("opt") == 9
    monkeypatch.setenv("MOATLAB_CAP", "bcr=16, hyp=7")
    assert oracle_cap("bcr") == 16 and oracle_cap("hyp") == 7
    assert oracle_cap("opt") == oracles.DEFAULT_CAPS["opt"]


def test_env_cap_is_enforced(monkeypatch):
    monkeypatch.setenv("MOATLAB_CAP", "hyp=2")
    inst = catalog.four_terminal_instance()
    with pytest.raises(OracleLimitError):
        hyp_value(inst)
    chain = oracle_chain(inst)
    assert chain.hyp is None and chain.violations() == []
