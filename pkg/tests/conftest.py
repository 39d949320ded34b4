"""Shared fixtures: the D1 fixture model, random corpora and test oracles.

The value-iteration oracle here is deliberately independent of the package's
LP/policy-iteration machinery: plain Bellman iteration on floats.
"""
from __future__ import annotations

import random
from fractions import Fraction

import pytest

from reachcert import hardness, parse_model

D1_TEXT = """\
dtmc
states: 4
initial: 0
goal: 2
fail: 3
0 - 1 1/2
0 - 2 3/10
0 - 3 1/5
1 - 2 2/5
1 - 3 3/5
"""


@pytest.fixture(scope="session")
def d1():
    return parse_model(D1_TEXT)


@pytest.fixture(scope="session")
def d1_text():
    return D1_TEXT


def value_iteration(m, direction, target="goal", tol=1e-12, max_iter=200000):
    """Bellman iteration oracle; returns floats per state of S."""
    assert target in ("goal", "goalfail")
    hit = {m.goal} if target == "goal" else {m.goal, m.fail}
    opt = min if direction == "min" else max
    vals = {s: 0.0 for s in m.s_states()}
    for _ in range(max_iter):
        delta = 0.0
        for s in m.s_states():
            best = opt(
                sum(float(p) * (1.0 if t in hit else vals.get(t, 0.0))
                    for t, p in row)
                for row in m.steps[s])
            delta = max(delta, abs(best - vals[s]))
            vals[s] = best
        if delta <= tol:
            break
    return vals


def small_corpus(count, max_states, max_actions, seed_base=0):
    models = []
    for i in range(count):
        rng = random.Random(f"corpus-{seed_base}-{i}")
        states = rng.randint(2, max_states)
        actions = rng.randint(1, max_actions)
        branching = rng.randint(2, 4)
        models.append(hardness.random_model(seed_base * 1000 + i, states,
                                            actions, branching))
    return models


@pytest.fixture(scope="session")
def corpus200():
    """200 seeded models, up to 20 states and 3 actions."""
    return small_corpus(200, max_states=20, max_actions=3, seed_base=1)


@pytest.fixture(scope="session")
def corpus_small():
    """100 seeded models with at most 12 non-absorbing states."""
    return small_corpus(100, max_states=12, max_actions=3, seed_base=2)


@pytest.fixture(scope="session")
def tree_corpus():
    """100 seeded tree-shaped DTMCs with at most 12 states."""
    trees = []
    for i in range(100):
        rng = random.Random(f"trees-{i}")
        trees.append(hardness.random_tree_dtmc(i, rng.randint(1, 12)))
    return trees


def lambda_grid(value: Fraction):
    """The thresholds {0, v/4, v/2, 3v/4, v} used across the suite."""
    return [Fraction(0), value / 4, value / 2, 3 * value / 4, value]
