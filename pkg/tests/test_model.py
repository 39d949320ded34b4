import itertools
from fractions import Fraction as F

import pytest

from reachcert import (ModelError, PropertySpec, induced_dtmc, parse_model,
                       parse_property, prune_unreachable, restrict,
                       serialize_model, serialize_subsystem, validate)
from reachcert.model import parse_subsystem
from reachcert.linsys import reach_value

from conftest import small_corpus, value_iteration


def test_parse_d1(d1):
    assert d1.state_count == 4
    assert (d1.initial, d1.goal, d1.fail) == (0, 2, 3)
    assert d1.prob(0, "-", 1) == F(1, 2)
    assert d1.prob(0, "-", 2) == F(3, 10)
    assert d1.prob(1, "-", 3) == F(3, 5)
    assert d1.pairs() == ((0, "-"), (1, "-"))
    assert d1.is_dtmc


def test_parse_decimal_probabilities():
    m = parse_model("dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n"
                    "0 - 1 0.3\n0 - 2 0.7\n")
    assert m.prob(0, "-", 1) == F(3, 10)


def test_parse_non_stochastic_row():
    text = ("dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n"
            "0 - 1 0.5\n0 - 2 0.4\n")
    with pytest.raises(ModelError, match="non-stochastic row"):
        parse_model(text)


def test_parse_goal_not_absorbing():
    text = ("dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n"
            "0 - 2 1\n1 - 0 1\n")
    with pytest.raises(ModelError, match="goal not absorbing"):
        parse_model(text)


def test_parse_duplicate_triple():
    text = ("dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n"
            "0 - 1 1/2\n0 - 1 1/2\n")
    with pytest.raises(ModelError, match="duplicate transition"):
        parse_model(text)


def test_parse_initial_is_goal():
    text = "dtmc\nstates: 3\ninitial: 1\ngoal: 1\nfail: 2\n0 - 1 1\n"
    with pytest.raises(ModelError, match="initial state must differ"):
        parse_model(text)


def test_parse_errors_carry_line_numbers():
    text = ("dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n"
            "0 - 1 not-a-number\n")
    with pytest.raises(ModelError, match="line 6"):
        parse_model(text)


def test_parse_dtmc_requires_dash_label():
    text = "dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n0 a 1 1\n"
    with pytest.raises(ModelError, match="label '-'"):
        parse_model(text)


def test_property_parsing():
    prop = parse_property("min>=2/5")
    assert prop == PropertySpec("min", ">=", F(2, 5))
    assert parse_property("max>0.3").lam == F(3, 10)
    with pytest.raises(ModelError):
        parse_property("mid>=1/2")
    with pytest.raises(ModelError):
        PropertySpec("min", ">=", F(3, 2))


def test_round_trip_d1(d1):
    assert parse_model(serialize_model(d1)) == d1


def test_round_trip_random_corpus():
    for m in small_corpus(40, max_states=10, max_actions=3, seed_base=77):
        assert parse_model(serialize_model(m)) == m


def test_validate_d1_ok(d1):
    report = validate(d1)
    assert report.ok and report.violations == ()


def test_validate_detects_avoidance_loop():
    # state 1 can loop on itself forever, avoiding goal and fail
    text = ("mdp\nstates: 4\ninitial: 0\ngoal: 2\nfail: 3\n"
            "0 a 1 1/2\n0 a 2 1/2\n1 a 1 1\n")
    report = validate(parse_model(text))
    assert not report.ok
    assert ("goal-fail-avoidance", (1,)) in report.violations


def test_validate_detects_unreachable():
    text = ("dtmc\nstates: 4\ninitial: 0\ngoal: 2\nfail: 3\n"
            "0 - 2 1\n1 - 2 1\n")
    report = validate(parse_model(text))
    assert not report.ok
    assert ("unreachable-states", (1,)) in report.violations


def test_validate_clique_instance_ok():
    from reachcert import clique_to_witness_instance, make_graph

    g = make_graph(3, [(0, 1), (0, 2), (1, 2)])
    m, _, _ = clique_to_witness_instance(g, 3)
    assert validate(m).ok


def test_validate_ok_means_almost_sure_absorption():
    # qualitative check (b) implies min probability of goal-or-fail is one
    for m in small_corpus(25, max_states=10, max_actions=3, seed_base=5):
        assert validate(m).ok
        vals = value_iteration(m, "min", target="goalfail")
        assert all(v >= 1 - 1e-9 for v in vals.values())


def test_prune_unreachable_noop(d1):
    assert prune_unreachable(d1) is d1


def test_prune_unreachable_drops_isolated_state(d1):
    text = ("dtmc\nstates: 5\ninitial: 0\ngoal: 2\nfail: 3\n"
            "0 - 1 1/2\n0 - 2 3/10\n0 - 3 1/5\n1 - 2 2/5\n1 - 3 3/5\n"
            "4 - 2 1\n")
    m = parse_model(text)
    pruned = prune_unreachable(m)
    assert pruned == d1
    assert reach_value(pruned, "min") == F(1, 2)


def test_prune_keeps_goal_when_unreachable():
    text = ("dtmc\nstates: 4\ninitial: 0\ngoal: 2\nfail: 3\n"
            "0 - 3 1\n1 - 2 1\n")
    pruned = prune_unreachable(parse_model(text))
    assert pruned.state_count == 3  # initial, goal, fail survive
    assert reach_value(pruned, "min") == 0


def test_restrict_d1_to_initial(d1):
    sub = restrict(d1, {0})
    assert sub.mdp.state_count == 3
    assert sub.mdp.prob(0, "-", sub.mdp.goal) == F(3, 10)
    assert sub.mdp.prob(0, "-", sub.mdp.fail) == F(7, 10)
    assert sub.kept_pairs == {(0, "-")}
    assert sub.parent_state_map == (0, 2, 3)


def test_restrict_full_is_identity(d1):
    sub = restrict(d1, set(d1.s_states()))
    assert sub.mdp == d1


def test_restrict_row_sums_are_one(d1):
    for r in [set(), {0}, {1}, {0, 1}]:
        sub = restrict(d1, r)
        for s in sub.mdp.s_states():
            for row in sub.mdp.steps[s]:
                assert sum(p for _, p in row) == 1


def test_restrict_redirects_deleted_state_mass():
    # the shape of the paper-style example: drop one state of an MDP and
    # check that all transitions into it turn into extra fail mass
    text = ("mdp\nstates: 6\ninitial: 0\ngoal: 4\nfail: 5\n"
            "0 a 0 1/2\n0 a 1 1/2\n"
            "0 b 1 1/2\n0 b 2 1/2\n"
            "1 a 2 1/2\n1 a 3 1/2\n"
            "2 a 3 1/2\n2 a 0 1/2\n"
            "2 b 1 1\n"
            "3 a 4 1/2\n3 a 1 1/2\n"
            "3 c 4 1/2\n3 c 5 1/2\n")
    m = parse_model(text)
    sub = restrict(m, set(m.s_states()) - {1})
    kept_states = set(sub.parent_state_map)
    assert kept_states == {0, 2, 3, 4, 5}
    new = sub.mdp
    idx = {parent: i for i, parent in enumerate(sub.parent_state_map)}
    # (0,a) lost its mass to state 1, redirected to fail
    assert new.prob(idx[0], "a", new.fail) == F(1, 2)
    # (2,b) went entirely to state 1
    assert new.prob(idx[2], "b", new.fail) == 1
    # action sets preserved
    for parent in (0, 2, 3):
        assert new.actions[idx[parent]] == m.actions[parent]


def test_restrict_monotone_by_exhaustive_subset_pairs():
    # probabilities only grow when the kept set grows, in both directions
    for seed in (11, 12, 13):
        m = hardness_model(seed)
        values = {}
        s_states = m.s_states()
        for bits in range(1 << len(s_states)):
            kept = frozenset(s for i, s in enumerate(s_states)
                             if bits & (1 << i))
            sub = restrict(m, kept)
            values[kept] = (reach_value(sub.mdp, "min"),
                            reach_value(sub.mdp, "max"))
        keys = sorted(values, key=len)
        for small in keys:
            for big in keys:
                if small < big:
                    assert values[small][0] <= values[big][0]
                    assert values[small][1] <= values[big][1]


def hardness_model(seed):
    from reachcert import random_model

    return random_model(seed, 6, 2, 3)


def test_induced_dtmc_identity_on_dtmc(d1):
    sched = {0: {"-": F(1)}, 1: {"-": F(1)}}
    assert induced_dtmc(d1, sched) == d1


def test_induced_dtmc_convex_mix():
    text = ("mdp\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n"
            "0 a 1 1\n0 b 2 1\n")
    m = parse_model(text)
    d = induced_dtmc(m, {0: {"a": F(1, 2), "b": F(1, 2)}})
    assert d.prob(0, "-", 1) == F(1, 2)
    assert d.prob(0, "-", 2) == F(1, 2)


def test_induced_dtmc_row_count_per_state():
    from reachcert import random_model

    m = random_model(3, 6, 3, 3)
    sched = {s: {m.actions[s][0]: F(1)} for s in m.s_states()}
    d = induced_dtmc(m, sched)
    assert all(len(d.actions[s]) == 1 for s in d.s_states())


def test_induced_dtmc_rejects_disabled_action(d1):
    with pytest.raises(ModelError, match="disabled"):
        induced_dtmc(d1, {0: {"x": F(1)}, 1: {"-": F(1)}})


def test_subsystem_round_trip(d1):
    sub = restrict(d1, {0})
    back = parse_subsystem(serialize_subsystem(sub))
    assert back.mdp == sub.mdp
    assert back.kept_pairs == sub.kept_pairs
    assert back.parent_state_map == sub.parent_state_map
