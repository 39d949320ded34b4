"""MDP models with exact rational probabilities, text format I/O and subsystems.

Models follow a fixed shape: a unique initial state plus two distinguished
absorbing states ``goal`` and ``fail``.  All probabilities are
:class:`fractions.Fraction` end-to-end, so row sums and reachability values
can be checked exactly.  Every object in this module is immutable after
construction and safe to share across threads.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence


class ModelError(ValueError):
    """A malformed model, model document, or model operation argument."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def parse_rational(text: str) -> Fraction:
    """Parse ``p/q`` or a finite decimal into an exact Fraction."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ModelError(f"bad rational {text!r}") from exc


Pair = tuple[int, str]
Triple = tuple[int, str, int]


@dataclass(frozen=True)
class ReachMdp:
    """An MDP with absorbing ``goal``/``fail`` states and exact probabilities.

    ``actions[s]`` lists the enabled action labels of state ``s`` in input
    order (empty for ``goal`` and ``fail``), and ``steps[s][k]`` holds the
    successor distribution of the k-th action as ``((target, prob), ...)``
    with targets in ascending order.
    """

    state_labels: tuple[str, ...] = field(compare=False)
    initial: int = field(compare=True)
    goal: int = field(compare=True)
    fail: int = field(compare=True)
    actions: tuple[tuple[str, ...], ...] = field(compare=True)
    steps: tuple[tuple[tuple[tuple[int, Fraction], ...], ...], ...] = \
        field(compare=True)

    def __post_init__(self):
        n = len(self.state_labels)
        if n < 3:
            raise ModelError("need at least initial, goal and fail states")
        for name, idx in (("initial", self.initial), ("goal", self.goal),
                          ("fail", self.fail)):
            if not 0 <= idx < n:
                raise ModelError(f"{name} index {idx} out of range")
        if self.goal == self.fail:
            raise ModelError("goal and fail must be distinct states")
        if self.initial in (self.goal, self.fail):
            raise ModelError("initial state must differ from goal and fail")
        if len(self.actions) != n or len(self.steps) != n:
            raise ModelError("actions/steps not aligned with state count")
        for s in range(n):
            if s in (self.goal, self.fail):
                if self.actions[s]:
                    raise ModelError(
                        f"{'goal' if s == self.goal else 'fail'} not absorbing")
                continue
            if not self.actions[s]:
                raise ModelError(f"state {s} has no enabled action")
            if len(set(self.actions[s])) != len(self.actions[s]):
                raise ModelError(f"duplicate action label at state {s}")
            if len(self.steps[s]) != len(self.actions[s]):
                raise ModelError(f"state {s}: steps not aligned with actions")
            for label, row in zip(self.actions[s], self.steps[s]):
                total = Fraction(0)
                seen = set()
                for t, p in row:
                    if not 0 <= t < n:
                        raise ModelError(f"target {t} out of range")
                    if t in seen:
                        raise ModelError(
                            f"duplicate transition triple ({s},{label},{t})")
                    seen.add(t)
                    if not 0 < p <= 1:
                        raise ModelError(
                            f"probability {p} of ({s},{label},{t}) not in (0,1]")
                    total += p
                if total != 1:
                    raise ModelError(
                        f"non-stochastic row ({s},{label}): sums to {total}")

    @property
    def state_count(self) -> int:
        return len(self.state_labels)

    def s_states(self) -> tuple[int, ...]:
        """All states except goal and fail, ascending."""
        return tuple(s for s in range(self.state_count)
                     if s not in (self.goal, self.fail))

    def pairs(self) -> tuple[Pair, ...]:
        """Enabled state-action pairs in canonical (state, action) order."""
        return tuple((s, a) for s in self.s_states() for a in self.actions[s])

    def transitions(self) -> tuple[Triple, ...]:
        """All positive-probability triples in canonical order."""
        return tuple((s, a, t) for s in self.s_states()
                     for a, row in zip(self.actions[s], self.steps[s])
                     for t, _ in row)

    def row(self, s: int, a: str) -> tuple[tuple[int, Fraction], ...]:
        return self.steps[s][self.actions[s].index(a)]

    def prob(self, s: int, a: str, t: int) -> Fraction:
        for u, p in self.row(s, a):
            if u == t:
                return p
        return Fraction(0)

    @property
    def is_dtmc(self) -> bool:
        return all(len(self.actions[s]) == 1 for s in self.s_states())

    @cached_property
    def validation(self) -> "ValidationReport":
        return validate(self)

    def require_valid(self):
        if not self.validation.ok:
            raise ModelError("model fails validation: "
                             + "; ".join(f"{name} at {list(states)}"
                                         for name, states in
                                         self.validation.violations))

    def require_absorbing(self):
        """Require only the almost-sure absorption precondition.

        Subsystems may contain states that are unreachable from the initial
        state, which is harmless for value computations; avoiding goal and
        fail forever is not.
        """
        for name, states in self.validation.violations:
            if name == "goal-fail-avoidance":
                raise ModelError(f"goal/fail avoidable from {list(states)}")


@dataclass(frozen=True)
class PropertySpec:
    """A threshold property: direction, relation and an exact bound."""

    direction: str   # 'min' | 'max'
    relation: str    # '>=' | '>' | '<=' | '<'
    lam: Fraction

    def __post_init__(self):
        if self.direction not in ("min", "max"):
            raise ModelError(f"bad direction {self.direction!r}")
        if self.relation not in (">=", ">", "<=", "<"):
            raise ModelError(f"bad relation {self.relation!r}")
        if not 0 <= self.lam <= 1:
            raise ModelError(f"threshold {self.lam} not in [0,1]")

    def holds_for(self, value: Fraction) -> bool:
        return {">=": value >= self.lam, ">": value > self.lam,
                "<=": value <= self.lam, "<": value < self.lam}[self.relation]

    @property
    def is_lower_bound(self) -> bool:
        return self.relation in (">=", ">")


def parse_property(text: str) -> PropertySpec:
    """Parse properties like ``min>=2/5`` or ``max>0.3`` (decimals exact)."""
    body = text.strip()
    for direction in ("min", "max"):
        if body.startswith(direction):
            rest = body[len(direction):].lstrip()
            for rel in (">=", "<=", ">", "<"):
                if rest.startswith(rel):
                    return PropertySpec(direction, rel,
                                        parse_rational(rest[len(rel):].strip()))
    raise ModelError(f"bad property {text!r}, expected e.g. 'min>=2/5'")


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[tuple[str, tuple[int, ...]], ...]


@dataclass(frozen=True)
class Subsystem:
    """A subsystem of a parent model, with deleted mass redirected to fail.

    ``kept_pairs`` is the set of parent state-action pairs that remain with
    their original distributions; ``parent_state_map`` sends subsystem state
    indices back to parent indices.
    """

    mdp: ReachMdp
    kept_pairs: frozenset[Pair]
    parent_state_map: tuple[int, ...]

    def parent_of(self, sub_state: int) -> int:
        return self.parent_state_map[sub_state]


# ---------------------------------------------------------------------------
# text format


def parse_model(text: str) -> ReachMdp:
    """Parse the line-based model format (see the package README)."""
    lines = text.splitlines()
    items = []
    for no, raw in enumerate(lines, start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            items.append((no, stripped))
    if not items:
        raise ModelError("empty document")

    no, head = items.pop(0)
    if head not in ("mdp", "dtmc"):
        raise ModelError(f"expected 'mdp' or 'dtmc', got {head!r}", no)
    kind = head

    headers = {}
    for key in ("states", "initial", "goal", "fail"):
        if not items:
            raise ModelError(f"missing header '{key}:'")
        no, line = items.pop(0)
        parts = line.split(":")
        if len(parts) != 2 or parts[0].strip() != key:
            raise ModelError(f"expected '{key}: <n>', got {line!r}", no)
        try:
            headers[key] = int(parts[1].strip())
        except ValueError:
            raise ModelError(f"bad integer in '{key}:' header", no) from None

    n = headers["states"]
    if n < 3:
        raise ModelError("states must be at least 3")
    initial, goal, fail = headers["initial"], headers["goal"], headers["fail"]
    for name, idx in (("initial", initial), ("goal", goal), ("fail", fail)):
        if not 0 <= idx < n:
            raise ModelError(f"{name} index {idx} out of range")
    if initial in (goal, fail):
        raise ModelError("initial state must differ from goal and fail")
    if goal == fail:
        raise ModelError("goal and fail must be distinct")

    actions: list[list[str]] = [[] for _ in range(n)]
    rows: list[dict[str, dict[int, Fraction]]] = [{} for _ in range(n)]
    for no, line in items:
        parts = line.split()
        if len(parts) != 4:
            raise ModelError(f"expected '<src> <action> <dst> <prob>', "
                             f"got {line!r}", no)
        try:
            src, dst = int(parts[0]), int(parts[2])
        except ValueError:
            raise ModelError(f"bad state index in {line!r}", no) from None
        label = parts[1]
        if kind == "dtmc" and label != "-":
            raise ModelError("dtmc transitions must use action label '-'", no)
        if not (0 <= src < n and 0 <= dst < n):
            raise ModelError(f"state index out of range in {line!r}", no)
        try:
            p = parse_rational(parts[3])
        except ModelError as exc:
            raise ModelError(str(exc), no) from None
        if not 0 < p <= 1:
            raise ModelError(f"probability {parts[3]} not in (0,1]", no)
        if src == goal or src == fail:
            which = "goal" if src == goal else "fail"
            if dst == src and p == 1:
                continue  # explicit absorbing self-loop, normalized away
            raise ModelError(f"{which} not absorbing", no)
        if label not in rows[src]:
            actions[src].append(label)
            rows[src][label] = {}
        if dst in rows[src][label]:
            raise ModelError(
                f"duplicate transition triple ({src},{label},{dst})", no)
        rows[src][label][dst] = p

    for s in range(n):
        if s in (goal, fail):
            continue
        if not actions[s]:
            raise ModelError(f"state {s} has no outgoing transitions")
        for label in actions[s]:
            total = sum(rows[s][label].values())
            if total != 1:
                raise ModelError(
                    f"non-stochastic row ({s},{label}): sums to {total}")

    steps = tuple(
        tuple(tuple(sorted(rows[s][label].items())) for label in actions[s])
        for s in range(n))
    return ReachMdp(state_labels=tuple(str(i) for i in range(n)),
                    initial=initial, goal=goal, fail=fail,
                    actions=tuple(tuple(a) for a in actions), steps=steps)


def serialize_model(m: ReachMdp) -> str:
    """Canonical text form; ``parse_model`` round-trips it exactly."""
    kind = "dtmc" if (m.is_dtmc and all(m.actions[s] == ("-",)
                                        for s in m.s_states())) else "mdp"
    out = [kind, f"states: {m.state_count}", f"initial: {m.initial}",
           f"goal: {m.goal}", f"fail: {m.fail}"]
    for s in m.s_states():
        for label, row in zip(m.actions[s], m.steps[s]):
            for t, p in row:
                out.append(f"{s} {label} {t} {p}")
    return "\n".join(out) + "\n"


def serialize_subsystem(sub: Subsystem) -> str:
    out = serialize_model(sub.mdp)
    for s, a in sorted(sub.kept_pairs):
        out += f"# kept-pair {s} {a}\n"
    for i, parent in enumerate(sub.parent_state_map):
        out += f"# parent-state {i} {parent}\n"
    return out


def parse_subsystem(text: str) -> Subsystem:
    mdp = parse_model(text)
    kept = set()
    parent_map: dict[int, int] = {}
    for raw in text.splitlines():
        stripped = raw.strip()
        if stripped.startswith("# kept-pair "):
            _, _, s, a = stripped.split()
            kept.add((int(s), a))
        elif stripped.startswith("# parent-state "):
            _, _, i, parent = stripped.split()
            parent_map[int(i)] = int(parent)
    if sorted(parent_map) != list(range(mdp.state_count)):
        raise ModelError("incomplete parent-state map in subsystem document")
    return Subsystem(mdp=mdp, kept_pairs=frozenset(kept),
                     parent_state_map=tuple(parent_map[i]
                                            for i in range(mdp.state_count)))


# ---------------------------------------------------------------------------
# validation and pruning


def reachable_states(m: ReachMdp) -> frozenset[int]:
    seen = {m.initial}
    queue = deque([m.initial])
    while queue:
        s = queue.popleft()
        if s in (m.goal, m.fail):
            continue
        for row in m.steps[s]:
            for t, _ in row:
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
    return frozenset(seen)


def validate(m: ReachMdp) -> ValidationReport:
    """Check the model preconditions assumed by every numeric operation.

    (a) every non-absorbing state is reachable from the initial state, and
    (b) no scheduler can avoid {goal, fail} forever.  Condition (b) is decided
    qualitatively via the greatest fixed point of
    Z -> {s in Z | some action keeps all successor mass inside Z}.
    """
    violations = []
    reach = reachable_states(m)
    unreachable = tuple(s for s in m.s_states() if s not in reach)
    if unreachable:
        violations.append(("unreachable-states", unreachable))

    z = set(m.s_states())
    changed = True
    while changed:
        changed = False
        for s in tuple(z):
            if not any(all(t in z for t, _ in row) for row in m.steps[s]):
                z.discard(s)
                changed = True
    if z:
        violations.append(("goal-fail-avoidance", tuple(sorted(z))))
    return ValidationReport(ok=not violations, violations=tuple(violations))


def prune_unreachable(m: ReachMdp) -> ReachMdp:
    """Restrict to states reachable from the initial state.

    goal and fail are always retained, so the result is a well-formed model
    even when goal became unreachable.  Whole states are removed, never single
    transitions, hence row sums are untouched.
    """
    keep = sorted(reachable_states(m) | {m.goal, m.fail})
    if len(keep) == m.state_count:
        return m
    index = {old: new for new, old in enumerate(keep)}
    actions = tuple(m.actions[s] for s in keep)
    steps = tuple(
        tuple(tuple((index[t], p) for t, p in row) for row in m.steps[s])
        for s in keep)
    return ReachMdp(state_labels=tuple(m.state_labels[s] for s in keep),
                    initial=index[m.initial], goal=index[m.goal],
                    fail=index[m.fail], actions=actions, steps=steps)


# ---------------------------------------------------------------------------
# subsystems


def expand_to_pairs(m: ReachMdp, r: Iterable) -> frozenset[Pair]:
    """Expand a state set to all its enabled pairs; pass pair sets through."""
    r = set(r)
    pairs: set[Pair] = set()
    for item in r:
        if isinstance(item, int):
            if item in (m.goal, m.fail):
                continue
            if not 0 <= item < m.state_count:
                raise ModelError(f"state {item} out of range")
            pairs.update((item, a) for a in m.actions[item])
        else:
            s, a = item
            if s in (m.goal, m.fail):
                continue
            if a not in m.actions[s]:
                raise ModelError(f"({s},{a}) is not an enabled pair")
            pairs.add((s, a))
    return frozenset(pairs)


def restrict(m: ReachMdp, r: Iterable) -> Subsystem:
    """Build the subsystem in which exactly the pairs of ``r`` remain.

    ``r`` may contain states (expanded to all their enabled pairs) or pairs.
    Kept pairs keep their probabilities into kept non-fail states; all other
    mass, and every non-kept pair, goes to fail.  States without a kept pair
    are dropped, except that the initial state, goal and fail always remain.
    """
    pairs = expand_to_pairs(m, r)
    kept_states = {s for s, _ in pairs} | {m.initial, m.goal, m.fail}
    keep = sorted(kept_states)
    index = {old: new for new, old in enumerate(keep)}

    actions = tuple(m.actions[s] for s in keep)
    steps = []
    for s in keep:
        state_rows = []
        for a in m.actions[s]:
            if (s, a) in pairs:
                row = {index[t]: p for t, p in m.row(s, a)
                       if t in kept_states and t != m.fail}
                lost = 1 - sum(row.values())
                if lost:
                    row[index[m.fail]] = row.get(index[m.fail], 0) + lost
            else:
                row = {index[m.fail]: Fraction(1)}
            state_rows.append(tuple(sorted(row.items())))
        steps.append(tuple(state_rows))

    mdp = ReachMdp(state_labels=tuple(m.state_labels[s] for s in keep),
                   initial=index[m.initial], goal=index[m.goal],
                   fail=index[m.fail], actions=actions, steps=tuple(steps))
    return Subsystem(mdp=mdp, kept_pairs=pairs,
                     parent_state_map=tuple(keep))


def induced_dtmc(m: ReachMdp, sched: Mapping[int, Mapping[str, Fraction]]
                 ) -> ReachMdp:
    """Collapse the action choice under a memoryless randomized scheduler."""
    actions = []
    steps = []
    for s in range(m.state_count):
        if s in (m.goal, m.fail):
            actions.append(())
            steps.append(())
            continue
        dist = sched[s]
        if any(a not in m.actions[s] for a in dist):
            raise ModelError(f"scheduler at state {s} uses disabled actions")
        weights = {a: Fraction(w) for a, w in dist.items() if w}
        if any(w < 0 for w in weights.values()) or sum(weights.values()) != 1:
            raise ModelError(f"scheduler at state {s} is not a distribution")
        row: dict[int, Fraction] = {}
        for a, w in weights.items():
            for t, p in m.row(s, a):
                row[t] = row.get(t, Fraction(0)) + w * p
        actions.append(("-",))
        steps.append((tuple(sorted(row.items())),))
    return ReachMdp(state_labels=m.state_labels, initial=m.initial,
                    goal=m.goal, fail=m.fail, actions=tuple(actions),
                    steps=tuple(steps))


def swap_goal_fail(m: ReachMdp) -> ReachMdp:
    """Exchange the roles of goal and fail (for upper-bound properties)."""
    return ReachMdp(state_labels=m.state_labels, initial=m.initial,
                    goal=m.fail, fail=m.goal, actions=m.actions, steps=m.steps)
