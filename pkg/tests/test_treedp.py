from fractions import Fraction as F

import pytest

from reachcert import (ModelError, binarize, brute_force_min_witness,
                       dp_tables, is_tree_shaped, parse_model, random_model,
                       random_tree_dtmc, reach_value, tree_minimal_witness)
from reachcert.witness import InfeasiblePolytopeError

CHAIN = """\
dtmc
states: 5
initial: 0
goal: 3
fail: 4
0 - 1 1/2
0 - 2 1/2
1 - 3 4/5
1 - 4 1/5
2 - 3 3/5
2 - 4 2/5
"""

FAN = """\
dtmc
states: 6
initial: 0
goal: 4
fail: 5
0 - 4 0.4
0 - 1 0.3
0 - 2 0.2
0 - 3 0.1
1 - 5 1
2 - 5 1
3 - 5 1
"""


def test_is_tree_shaped(d1):
    assert is_tree_shaped(d1)
    assert is_tree_shaped(parse_model(
        "dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n0 - 1 1\n"))
    shared = parse_model(
        "dtmc\nstates: 5\ninitial: 0\ngoal: 3\nfail: 4\n"
        "0 - 1 1/2\n0 - 2 1/2\n1 - 2 1\n2 - 3 1\n")
    assert not is_tree_shaped(shared)


def test_is_tree_rejects_mdp():
    m = parse_model("mdp\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n"
                    "0 a 1 1\n0 b 2 1\n")
    with pytest.raises(ModelError, match="DTMC"):
        is_tree_shaped(m)


def test_binarize_matches_worked_expansion():
    m = parse_model(FAN)
    binary, bmap = binarize(m)
    u1, u2 = bmap.fresh_states
    assert binary.prob(0, "-", m.goal) == F(2, 5)
    assert binary.prob(0, "-", u1) == F(3, 5)
    assert binary.prob(u1, "-", 1) == F(1, 2)
    assert binary.prob(u1, "-", u2) == F(1, 2)
    assert binary.prob(u2, "-", 2) == F(2, 3)
    assert binary.prob(u2, "-", 3) == F(1, 3)
    assert bmap.origin_of(u1) == (0, 1)
    # fresh states never step to goal in one move
    assert all(binary.prob(u, "-", binary.goal) == 0
               for u in bmap.fresh_states)


def test_binarize_keeps_small_nodes(d1):
    binary, bmap = binarize(d1)
    assert binary == d1
    assert bmap.fresh_states == ()


def test_binarize_preserves_probability_exactly():
    for seed in range(12):
        m = random_tree_dtmc(seed, 1 + seed)
        binary, bmap = binarize(m)
        assert reach_value(binary, "min") == reach_value(m, "min")
        assert binary.state_count <= m.state_count + len(m.transitions())
        assert all(len(binary.steps[s][0]) <= 2 for s in binary.s_states())


def test_dp_tables_leaf_and_goal_entries():
    m = parse_model("dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n"
                    "0 - 1 2/5\n0 - 2 3/5\n")
    table = dp_tables(m)
    assert table.l_of(0) == (F(0), F(2, 5))


def test_dp_tables_uncounted_state_has_no_offset():
    m = parse_model(FAN)
    binary, bmap = binarize(m)
    table = dp_tables(binary, frozenset(bmap.fresh_states))
    u1, u2 = bmap.fresh_states
    # fresh tables have one entry per counted budget, no +1 shift
    assert table.l_of(u2) == (F(0), F(0))  # children are fail-leaves
    assert len(table.l_of(u1)) == 3


def test_dp_tables_rejects_nonbinary():
    m = parse_model(FAN)
    with pytest.raises(ModelError, match="more than two successors"):
        dp_tables(m)


def test_chain_example_table_and_witnesses():
    m = parse_model(CHAIN)
    binary, bmap = binarize(m)
    table = dp_tables(binary, frozenset(bmap.fresh_states))
    assert table.l_of(0) == (F(0), F(0), F(2, 5), F(7, 10))
    result = tree_minimal_witness(m, F(2, 5))
    assert result.state_count == 2
    assert set(result.subsystem.parent_state_map) == {0, 1, 3, 4}
    full = tree_minimal_witness(m, F(7, 10))
    assert full.state_count == 3


def test_tree_witness_d1(d1):
    result = tree_minimal_witness(d1, F(3, 10))
    assert result.state_count == 1
    assert result.optimal and result.method == "tree"


def test_tree_witness_lambda_zero(d1):
    result = tree_minimal_witness(d1, F(0))
    assert result.state_count == 1
    assert reach_value(result.subsystem.mdp, "min") == F(3, 10)


def test_tree_witness_property_false(d1):
    with pytest.raises(InfeasiblePolytopeError):
        tree_minimal_witness(d1, F(3, 5))


def test_tree_witness_rejects_non_tree():
    m = random_model(3, 6, 1, 3)
    if is_tree_shaped(m):
        pytest.skip("random model happened to be a tree")
    with pytest.raises(ModelError, match="tree"):
        tree_minimal_witness(m, F(0))


def test_l_is_monotone_and_ends_at_full_probability(tree_corpus):
    for m in tree_corpus[:30]:
        binary, bmap = binarize(m)
        table = dp_tables(binary, frozenset(bmap.fresh_states))
        root = table.l_of(m.initial)
        assert all(a <= b for a, b in zip(root, root[1:]))
        assert root[-1] == reach_value(m, "min")
        assert all(0 <= v <= 1 for v in root)


def test_tree_witness_matches_brute_force(tree_corpus):
    for i, m in enumerate(tree_corpus[:40]):
        value = reach_value(m, "min")
        for lam in (value / 3, value / 2, value):
            result = tree_minimal_witness(m, lam)
            expected = brute_force_min_witness(m, lam, "min")
            achieved = reach_value(result.subsystem.mdp, "min")
            assert achieved >= lam
            assert result.state_count == max(expected, 1), (i, lam)
