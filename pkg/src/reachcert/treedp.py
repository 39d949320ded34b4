"""Polynomial minimal witnesses for tree-shaped DTMCs.

The chain is first binarized: a state with successors s_0 < s_1 < ... < s_n
(goal first in the order) keeps its edge to s_0 and hands the rest to a chain
of fresh states u_1..u_{n-1}, with

    P'(u_j, s_j) = mu_j / (1 - sum_{i<j} mu_i),

which preserves every path probability.  On the binary tree a table l_q(i)
is computed bottom-up: the best probability achievable by a subsystem rooted
at q containing i counted states, where fresh states are free.  With
children c_1, c_2 of a counted state q,

    l_q(i+1) = b(q) + max { mu_1 l_{c_1}(j) + mu_2 l_{c_2}(i-j) },

and the same maximum without the +1 offset for fresh states; b(q) is the
one-step goal mass.  The least k with l_root(k) >= lambda reconstructs a
state-minimal witness through back-pointers, and dropping the fresh states
maps it back to the original chain.  All arithmetic is exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import ModelError, ReachMdp, restrict
from .linsys import reach_value
from .witness import InfeasiblePolytopeError, WitnessResult, _exact_point_for
from .witness import PolytopeSpec


def is_tree_shaped(m: ReachMdp) -> bool:
    """Is the graph on S (goal/fail excluded) a tree rooted at the initial?"""
    if not m.is_dtmc:
        raise ModelError("tree operations are defined for DTMCs only")
    indeg = {s: 0 for s in m.s_states()}
    for s in m.s_states():
        for t, _ in m.steps[s][0]:
            if t in indeg:
                indeg[t] += 1
    if indeg[m.initial] != 0:
        return False
    if any(indeg[s] != 1 for s in m.s_states() if s != m.initial):
        return False
    seen = {m.initial}
    stack = [m.initial]
    while stack:
        s = stack.pop()
        for t, _ in m.steps[s][0]:
            if t in indeg and t not in seen:
                seen.add(t)
                stack.append(t)
    return len(seen) == len(indeg)


@dataclass(frozen=True)
class BinarizationMap:
    fresh_states: tuple[int, ...]
    origin: tuple[tuple[int, tuple[int, int]], ...]   # fresh -> (state, j)
    order: tuple[int, ...]                            # total order, goal first

    def origin_of(self, fresh: int) -> tuple[int, int]:
        return dict(self.origin)[fresh]


def binarize(m: ReachMdp, order: tuple[int, ...] | None = None
             ) -> tuple[ReachMdp, BinarizationMap]:
    """Expand every state with more than two successors into a chain.

    The default order sorts states by index with goal forced minimal, which
    guarantees that no fresh state has a one-step edge to goal.  Reach
    probabilities are preserved exactly.
    """
    if not is_tree_shaped(m):
        raise ModelError("binarize expects a tree-shaped DTMC")
    if order is None:
        order = (m.goal,) + tuple(s for s in range(m.state_count)
                                  if s != m.goal)
    if sorted(order) != list(range(m.state_count)) or order[0] != m.goal:
        raise ModelError("order must rank all states with goal minimal")
    rank = {s: r for r, s in enumerate(order)}

    labels = list(m.state_labels)
    rows: dict[int, list[tuple[int, Fraction]]] = {}
    fresh: list[int] = []
    origin: list[tuple[int, tuple[int, int]]] = []
    next_idx = m.state_count
    for q in m.s_states():
        post = sorted(m.steps[q][0], key=lambda tp: rank[tp[0]])
        if len(post) <= 2:
            rows[q] = list(post)
            continue
        n = len(post) - 1
        mu = [p for _, p in post]
        chain = [q]
        for j in range(1, n):
            labels.append(f"u{next_idx}")
            fresh.append(next_idx)
            origin.append((next_idx, (q, j)))
            chain.append(next_idx)
            next_idx += 1
        remaining = Fraction(1)
        for j in range(n - 1):
            head = mu[j] / remaining
            rows[chain[j]] = [(post[j][0], head), (chain[j + 1], 1 - head)]
            remaining -= mu[j]
        rows[chain[n - 1]] = [(post[n - 1][0], mu[n - 1] / remaining),
                              (post[n][0], mu[n] / remaining)]

    total = next_idx
    actions = []
    steps = []
    for s in range(total):
        if s == m.goal or s == m.fail:
            actions.append(())
            steps.append(())
        else:
            actions.append(("-",))
            steps.append((tuple(sorted(rows[s])),))
    bin_m = ReachMdp(state_labels=tuple(labels), initial=m.initial,
                     goal=m.goal, fail=m.fail, actions=tuple(actions),
                     steps=tuple(steps))
    return bin_m, BinarizationMap(fresh_states=tuple(fresh),
                                  origin=tuple(origin), order=tuple(order))


@dataclass(frozen=True)
class DpTable:
    """Per-state arrays l_q plus the split back-pointers realizing them."""

    u_states: frozenset[int]
    children: tuple[tuple[tuple[int, Fraction], ...], ...]
    l: tuple[tuple[Fraction, ...] | None, ...]
    back: tuple[tuple[int | None, ...] | None, ...]

    def l_of(self, q: int) -> tuple[Fraction, ...]:
        table = self.l[q]
        if table is None:
            raise ModelError(f"state {q} has no table (goal/fail)")
        return table


def dp_tables(m: ReachMdp, u_states: frozenset[int] = frozenset()) -> DpTable:
    """Compute all l_q arrays bottom-up on a binary tree-shaped DTMC.

    ``u_states`` are the uncounted (fresh) states; they must have no one-step
    edge to goal.  Runtime is cubic in the state count at worst.
    """
    if not is_tree_shaped(m):
        raise ModelError("dp_tables expects a tree-shaped DTMC")
    for s in m.s_states():
        if len(m.steps[s][0]) > 2:
            raise ModelError(f"state {s} has more than two successors")
        if s in u_states and m.prob(s, "-", m.goal) != 0:
            raise ModelError(f"uncounted state {s} steps to goal")

    n = m.state_count
    children: list[tuple[tuple[int, Fraction], ...]] = [()] * n
    goal_mass = [Fraction(0)] * n
    for s in m.s_states():
        kids = []
        for t, p in m.steps[s][0]:
            if t == m.goal:
                goal_mass[s] = p
            elif t != m.fail:
                kids.append((t, p))
        children[s] = tuple(kids)

    sizes = [0] * n
    l: list[tuple[Fraction, ...] | None] = [None] * n
    back: list[tuple[int | None, ...] | None] = [None] * n

    def post_order():
        out = []
        stack = [(m.initial, False)]
        while stack:
            s, done = stack.pop()
            if done:
                out.append(s)
            else:
                stack.append((s, True))
                for t, _ in children[s]:
                    stack.append((t, False))
        return out

    for q in post_order():
        counted = 0 if q in u_states else 1
        kids = children[q]
        if not kids:
            inner = [Fraction(0)]
            splits: list[int | None] = [None]
        elif len(kids) == 1:
            (c, mu), = kids
            inner = [mu * v for v in l[c]]
            splits = [None] * len(inner)
        else:
            (c1, mu1), (c2, mu2) = kids
            n1, n2 = sizes[c1], sizes[c2]
            inner = []
            splits = []
            for i in range(n1 + n2 + 1):
                best = None
                best_j = None
                for j in range(max(0, i - n2), min(i, n1) + 1):
                    v = mu1 * l[c1][j] + mu2 * l[c2][i - j]
                    if best is None or v > best:
                        best, best_j = v, j
                inner.append(best)
                splits.append(best_j)
        if counted:
            l[q] = (Fraction(0),) + tuple(goal_mass[q] + v for v in inner)
            back[q] = (None,) + tuple(splits)
        else:
            l[q] = tuple(inner)
            back[q] = tuple(splits)
        sizes[q] = counted + sum(sizes[c] for c, _ in kids)

    return DpTable(u_states=frozenset(u_states), children=tuple(children),
                   l=tuple(l), back=tuple(back))


def _reconstruct(table: DpTable, q: int, budget: int, selected: set[int]):
    counted = q not in table.u_states
    if counted:
        if budget == 0:
            return
        selected.add(q)
        budget -= 1
    kids = table.children[q]
    if not kids:
        return
    if len(kids) == 1:
        _reconstruct(table, kids[0][0], budget, selected)
        return
    j = table.back[q][budget + (1 if counted else 0)]
    _reconstruct(table, kids[0][0], j, selected)
    _reconstruct(table, kids[1][0], budget - j, selected)


def tree_minimal_witness(m: ReachMdp, lam: Fraction) -> WitnessResult:
    """State-minimal witness of ``Pr(goal) >= lam`` on a tree-shaped DTMC.

    Binarizes, fills the l-tables, picks the least k with l_root(k) >= lam
    and reconstructs the witness, dropping fresh states on the way back.
    """
    lam = Fraction(lam)
    if not is_tree_shaped(m):
        raise ModelError("tree_minimal_witness expects a tree-shaped DTMC")
    m.require_valid()
    total = reach_value(m, "min")
    if total < lam:
        raise InfeasiblePolytopeError(
            f"Pr(goal) = {total} < {lam}; no witness exists")

    bin_m, bmap = binarize(m)
    table = dp_tables(bin_m, frozenset(bmap.fresh_states))
    root = table.l_of(bin_m.initial)
    k = next(i for i, v in enumerate(root) if v >= lam)

    selected: set[int] = set()
    _reconstruct(table, bin_m.initial, k, selected)
    assert len(selected) == k

    sub = restrict(m, selected)
    achieved = reach_value(sub.mdp, "min")
    assert achieved == root[k] and achieved >= lam
    point = _exact_point_for(m, PolytopeSpec("min-nonneg", lam), sub)
    state_count = sub.mdp.state_count - 2
    return WitnessResult(subsystem=sub, state_count=state_count, point=point,
                         method="tree", optimal=True,
                         bounds=(state_count, state_count))
