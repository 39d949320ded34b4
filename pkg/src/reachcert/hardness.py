"""Clique-to-witness instances and the brute-force oracles behind the tests.

The instance generator encodes a k-clique question as a witness-size
question on an acyclic DTMC: from the initial state each vertex is reached
with probability 1/n, each vertex moves to each incident edge with
probability 1/n, and edges step to goal; everything else drains to fail.
The graph has a k-clique exactly when the chain has a witness for
Pr(goal) >= k(k-1)/n^2 with at most k + k(k-1)/2 + 3 states.

The oracles enumerate subsystems exhaustively (in increasing size, smallest
index sets first) with exact probability evaluation, pruning branches whose
optimistic completion cannot reach the threshold.  They are deliberately
independent of the LP machinery so they can serve as ground truth for it.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .model import ModelError, ReachMdp, restrict
from .linsys import reach_value, topological_order


class OracleGuardError(ValueError):
    """An oracle was asked to enumerate beyond its size guard."""


MAX_ORACLE_STATES = 22
MAX_ORACLE_TRANSITIONS = 20
MAX_CLIQUE_VERTICES = 16


@dataclass(frozen=True)
class UndirectedGraph:
    vertex_count: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        for u, v in self.edges:
            if u == v:
                raise ModelError(f"self-loop at vertex {u}")
            if not (0 <= u < v < self.vertex_count):
                raise ModelError(f"bad edge ({u},{v})")

    def sorted_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.edges))


def make_graph(n: int, edges) -> UndirectedGraph:
    normalized = frozenset((min(u, v), max(u, v)) for u, v in edges)
    return UndirectedGraph(vertex_count=n, edges=normalized)


def parse_graph(text: str) -> UndirectedGraph:
    items = []
    for no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            items.append((no, stripped))
    if not items:
        raise ModelError("empty graph document")
    no, head = items.pop(0)
    parts = head.split()
    if len(parts) != 2 or parts[0] != "graph":
        raise ModelError(f"expected 'graph <n>', got {head!r}", no)
    n = int(parts[1])
    edges = []
    for no, line in items:
        parts = line.split()
        if len(parts) != 2:
            raise ModelError(f"expected 'u v', got {line!r}", no)
        edges.append((int(parts[0]), int(parts[1])))
    return make_graph(n, edges)


def serialize_graph(g: UndirectedGraph) -> str:
    lines = [f"graph {g.vertex_count}"]
    lines += [f"{u} {v}" for u, v in g.sorted_edges()]
    return "\n".join(lines) + "\n"


def clique_to_witness_instance(g: UndirectedGraph, k: int
                               ) -> tuple[ReachMdp, Fraction, int]:
    """The acyclic DTMC, threshold and state budget encoding k-clique."""
    n = g.vertex_count
    if k < 3:
        raise ModelError("clique reduction needs k >= 3")
    if n < k:
        raise ModelError(f"graph has {n} < k = {k} vertices")

    edges = g.sorted_edges()
    vertex_state = {v: 1 + v for v in range(n)}
    edge_state = {e: 1 + n + i for i, e in enumerate(edges)}
    goal = 1 + n + len(edges)
    fail = goal + 1
    total = fail + 1

    rows: dict[int, dict[int, Fraction]] = {}
    rows[0] = {vertex_state[v]: Fraction(1, n) for v in range(n)}
    for v in range(n):
        row = {edge_state[e]: Fraction(1, n) for e in edges if v in e}
        lost = 1 - sum(row.values())
        if lost:
            row[fail] = lost
        rows[vertex_state[v]] = row
    for e in edges:
        rows[edge_state[e]] = {goal: Fraction(1)}

    labels = (["s0"] + [f"v{v}" for v in range(n)]
              + [f"e{u}_{v}" for u, v in edges] + ["goal", "fail"])
    actions = tuple(() if s in (goal, fail) else ("-",) for s in range(total))
    steps = tuple(() if s in (goal, fail) else
                  (tuple(sorted(rows[s].items())),) for s in range(total))
    m = ReachMdp(state_labels=tuple(labels), initial=0, goal=goal, fail=fail,
                 actions=actions, steps=steps)
    lam = Fraction(k * (k - 1), n * n)
    kprime = k + k * (k - 1) // 2 + 3
    return m, lam, kprime


def brute_force_max_clique(g: UndirectedGraph) -> int:
    """Exact maximum clique size by subset enumeration (n <= 16)."""
    n = g.vertex_count
    if n > MAX_CLIQUE_VERTICES:
        raise OracleGuardError(f"{n} vertices exceed the enumeration guard")
    adj = [0] * n
    for u, v in g.edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    best = 0
    for mask in range(1 << n):
        size = mask.bit_count()
        if size <= best:
            continue
        ok = True
        rest = mask
        while rest:
            v = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            if mask & ~(adj[v] | (1 << v)):
                ok = False
                break
        if ok:
            best = size
    return best


# ---------------------------------------------------------------------------
# exact subsystem evaluation


class _StateSubsetEvaluator:
    """Exact Pr(goal) of state-set subsystems, without building models.

    Deleted states behave as zero-value sinks, which is exactly the
    redirected-to-fail semantics.  Acyclic models use one backward pass;
    cyclic ones fall back to building the subsystem.
    """

    def __init__(self, m: ReachMdp, direction: str):
        self.m = m
        self.direction = direction
        self.opt = min if direction == "min" else max
        order = topological_order(m)
        self.order = None if order is None else tuple(reversed(order))
        self.rows = {
            s: [[(t, p, t == m.goal) for t, p in row if t != m.fail]
                for row in m.steps[s]]
            for s in m.s_states()}

    def value(self, kept: frozenset[int]) -> Fraction:
        if self.m.initial not in kept:
            return Fraction(0)
        if self.order is None:
            sub = restrict(self.m, kept)
            return reach_value(sub.mdp, self.direction)
        vals: dict[int, Fraction] = {}
        for s in self.order:
            if s not in kept:
                continue
            vals[s] = self.opt(
                sum((p if is_goal else p * vals.get(t, Fraction(0)))
                    for t, p, is_goal in row) or Fraction(0)
                for row in self.rows[s])
        return vals.get(self.m.initial, Fraction(0))


def brute_force_min_witness(m: ReachMdp, lam: Fraction, direction: str
                            ) -> int | float:
    """Minimum |R| over state sets R (initial state forced) witnessing lam.

    Exhaustive search in increasing size with exact evaluation; branches are
    pruned when keeping every remaining state still misses the threshold.
    Returns ``math.inf`` when no witness exists.
    """
    m.require_valid()
    lam = Fraction(lam)
    s_states = m.s_states()
    if len(s_states) > MAX_ORACLE_STATES:
        raise OracleGuardError(f"{len(s_states)} states exceed the "
                               "enumeration guard")
    evaluator = _StateSubsetEvaluator(m, direction)
    others = tuple(s for s in s_states if s != m.initial)
    full = frozenset(s_states)
    if evaluator.value(full) < lam:
        return math.inf

    def exists(idx: int, chosen: frozenset[int], need: int) -> bool:
        if need == 0:
            return evaluator.value(chosen) >= lam
        if len(others) - idx < need:
            return False
        if evaluator.value(chosen | frozenset(others[idx:])) < lam:
            return False
        if exists(idx + 1, chosen | {others[idx]}, need - 1):
            return True
        return exists(idx + 1, chosen, need)

    base = frozenset({m.initial})
    for size in range(1, len(s_states) + 1):
        if exists(0, base, size - 1):
            return size
    return math.inf  # pragma: no cover - full set succeeded above


class _TransitionSubsetEvaluator:
    """Exact Pr(goal) when only a chosen set of triples remains."""

    def __init__(self, m: ReachMdp, direction: str):
        self.m = m
        self.direction = direction
        self.opt = min if direction == "min" else max
        order = topological_order(m)
        self.order = None if order is None else tuple(reversed(order))

    def value(self, kept: frozenset) -> Fraction:
        m = self.m
        if self.order is not None:
            vals: dict[int, Fraction] = {}
            for s in self.order:
                best = None
                for a, row in zip(m.actions[s], m.steps[s]):
                    v = sum((p if t == m.goal else
                             p * vals.get(t, Fraction(0)))
                            for t, p in row
                            if t != m.fail and (s, a, t) in kept)
                    v = Fraction(v)
                    if best is None or self.opt(v, best) == v:
                        best = v
                vals[s] = best
            return vals.get(m.initial, Fraction(0))
        actions = []
        steps = []
        for s in range(m.state_count):
            if s in (m.goal, m.fail):
                actions.append(())
                steps.append(())
                continue
            actions.append(m.actions[s])
            state_rows = []
            for a, row in zip(m.actions[s], m.steps[s]):
                entries = {t: p for t, p in row
                           if t != m.fail and (s, a, t) in kept}
                lost = 1 - sum(entries.values())
                if lost:
                    entries[m.fail] = entries.get(m.fail, Fraction(0)) + lost
                state_rows.append(tuple(sorted(entries.items())))
            steps.append(tuple(state_rows))
        sub = ReachMdp(state_labels=m.state_labels, initial=m.initial,
                       goal=m.goal, fail=m.fail, actions=tuple(actions),
                       steps=tuple(steps))
        return reach_value(sub, self.direction)


def _useful_triples(m: ReachMdp):
    return tuple(t for t in m.transitions() if t[2] != m.fail)


def brute_force_min_transition_witness(m: ReachMdp, lam: Fraction,
                                       direction: str) -> int | float:
    """Minimum number of kept transitions witnessing lam (inf if none).

    Triples into fail are never counted: keeping them changes neither the
    probability nor the reduced instance, so minima avoid them.
    """
    m.require_valid()
    lam = Fraction(lam)
    triples = _useful_triples(m)
    if len(triples) > MAX_ORACLE_TRANSITIONS:
        raise OracleGuardError(f"{len(triples)} transitions exceed the "
                               "enumeration guard")
    evaluator = _TransitionSubsetEvaluator(m, direction)
    if evaluator.value(frozenset(triples)) < lam:
        return math.inf

    def exists(idx: int, chosen: frozenset, need: int) -> bool:
        if need == 0:
            return evaluator.value(chosen) >= lam
        if len(triples) - idx < need:
            return False
        if evaluator.value(chosen | frozenset(triples[idx:])) < lam:
            return False
        if exists(idx + 1, chosen | {triples[idx]}, need - 1):
            return True
        return exists(idx + 1, chosen, need)

    for size in range(0, len(triples) + 1):
        if exists(0, frozenset(), size):
            return size
    return math.inf  # pragma: no cover


def brute_force_min_size_witness(m: ReachMdp, lam: Fraction,
                                 direction: str) -> int | float:
    """Minimum (states + kept transitions) witnessing lam (inf if none).

    States are the non-goal/fail states incident to the kept transitions
    plus the forced initial state; triples into fail are not counted.
    """
    m.require_valid()
    lam = Fraction(lam)
    triples = _useful_triples(m)
    if len(triples) > MAX_ORACLE_TRANSITIONS:
        raise OracleGuardError(f"{len(triples)} transitions exceed the "
                               "enumeration guard")
    evaluator = _TransitionSubsetEvaluator(m, direction)

    def size_of(chosen) -> int:
        states = {m.initial}
        for s, _a, t in chosen:
            states.add(s)
            if t != m.goal:
                states.add(t)
        return len(states) + len(chosen)

    best = [math.inf]

    def dfs(idx: int, chosen: frozenset):
        if size_of(chosen) >= best[0]:
            return
        if evaluator.value(chosen) >= lam:
            best[0] = size_of(chosen)
            return
        if idx == len(triples):
            return
        if evaluator.value(chosen | frozenset(triples[idx:])) < lam:
            return
        dfs(idx + 1, chosen | {triples[idx]})
        dfs(idx + 1, chosen)

    dfs(0, frozenset())
    return best[0]


# ---------------------------------------------------------------------------
# random corpora


def random_model(seed: int, states: int, actions: int, branching: int
                 ) -> ReachMdp:
    """A seeded random validated MDP with ``states`` non-goal/fail states.

    Models are layered toward goal/fail: transitions only move to higher
    state indices or to the absorbing states, so the almost-sure absorption
    precondition holds by construction, and every state is wired to be
    reachable from state 0.  Probability denominators stay below 100.
    """
    if states < 1 or actions < 1 or branching < 1:
        raise ModelError("random_model parameters must be positive")
    rng = random.Random(f"model-{seed}-{states}-{actions}-{branching}")
    goal, fail = states, states + 1

    forced: dict[int, list[int]] = {s: [] for s in range(states)}
    for t in range(1, states):
        forced[rng.randrange(t)].append(t)

    action_lists = []
    step_lists = []
    for s in range(states):
        n_actions = rng.randint(1, actions)
        supports: list[set[int]] = [set() for _ in range(n_actions)]
        for t in forced[s]:
            supports[rng.randrange(n_actions)].add(t)
        later = list(range(s + 1, states))
        for support in supports:
            pool = later + [goal, fail]
            for _ in range(rng.randint(0, branching - 1)):
                support.add(rng.choice(pool))
            if not support:
                support.add(rng.choice([goal, fail]))
            while len(support) > 10:
                removable = sorted(support - set(forced[s]))
                if not removable:
                    break
                support.discard(rng.choice(removable))
        rows = []
        for support in supports:
            targets = sorted(support)
            weights = ([rng.randint(1, 9) for _ in targets]
                       if len(targets) <= 10 else [1] * len(targets))
            total = sum(weights)
            rows.append(tuple((t, Fraction(w, total))
                              for t, w in zip(targets, weights)))
        action_lists.append(tuple(chr(ord("a") + i)
                                  for i in range(n_actions)))
        step_lists.append(tuple(rows))
    action_lists += [(), ()]
    step_lists += [(), ()]
    m = ReachMdp(state_labels=tuple(str(i) for i in range(states + 2)),
                 initial=0, goal=goal, fail=fail,
                 actions=tuple(action_lists), steps=tuple(step_lists))
    assert m.validation.ok
    return m


def random_tree_dtmc(seed: int, states: int) -> ReachMdp:
    """A seeded random tree-shaped DTMC with ``states`` non-goal/fail states."""
    if states < 1:
        raise ModelError("states must be positive")
    rng = random.Random(f"tree-{seed}-{states}")
    goal, fail = states, states + 1
    children: dict[int, list[int]] = {s: [] for s in range(states)}
    for t in range(1, states):
        children[rng.randrange(t)].append(t)

    steps = []
    for s in range(states):
        targets = list(children[s])
        if rng.random() < 0.7:
            targets.append(goal)
        if rng.random() < 0.7 or not targets:
            targets.append(fail)
        if targets == list(children[s]):
            targets.append(rng.choice([goal, fail]))
        weights = [rng.randint(1, 9) for _ in targets]
        total = sum(weights)
        steps.append((tuple(sorted((t, Fraction(w, total))
                                   for t, w in zip(targets, weights))),))
    steps += [(), ()]
    m = ReachMdp(state_labels=tuple(str(i) for i in range(states + 2)),
                 initial=0, goal=goal, fail=fail,
                 actions=tuple([("-",)] * states + [(), ()]),
                 steps=tuple(steps))
    assert m.validation.ok
    return m
