"""Witnessing subsystems from certificate polytopes.

For a lower-bound threshold lambda two polytopes matter:

    min-nonneg   P = { z >= 0 | Az <= b, z(s0) >= lambda }     over S
    max          P = { y >= 0 | yA <= delta0, y.b >= lambda }  over M

The support of any point of the polytope induces a subsystem that again
satisfies the threshold, and conversely, so minimizing the number of states
of a witness is exactly maximizing the number of zeros over the polytope.
This module provides the support extraction, the iterated quotient-sum LP
heuristic, the per-coordinate bound K, an in-process branch-and-bound solver
for the big-M binary program

    min sum(sigma)  s.t.  x in P,  x <= K * sigma,  sigma binary,

an LP-file exporter for industrial solvers, and the two model
transformations that reduce transition- and size-minimality to
state-minimality.
"""
from __future__ import annotations

import heapq
import itertools
import math
import re
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .model import ModelError, PropertySpec, ReachMdp, Subsystem, restrict
from .linsys import (FarkasSystem, LinearProgram, LpSolution,
                     build_farkas_system, reach_value, solve_lp)
from .certificates import frequencies_from_scheduler, md_scheduler, scheduler_from_y
from . import linsys

FLOAT_ZERO = 1e-9      # support / quotient threshold in float mode
BOUND_SLACK = 1e-6     # safety margin before rounding LP bounds to integers
MAX_NODES = 500_000


class WitnessError(ValueError):
    pass


class InfeasiblePolytopeError(WitnessError):
    """The property fails at lambda, so the polytope is empty."""


@dataclass(frozen=True)
class PolytopeSpec:
    flavor: str        # 'min-nonneg' | 'max'
    lam: Fraction

    def __post_init__(self):
        if self.flavor not in ("min-nonneg", "max"):
            raise WitnessError(f"bad polytope flavor {self.flavor!r}")
        if not 0 <= self.lam <= 1:
            raise WitnessError(f"threshold {self.lam} not in [0,1]")

    @property
    def direction(self) -> str:
        return "min" if self.flavor == "min-nonneg" else "max"


def polytope_spec_for(prop: PropertySpec) -> PolytopeSpec:
    """Map a non-strict lower-bound property onto its polytope.

    Strict thresholds are rejected: the polytopes are closed, and no closure
    convention is assumed for them.  Upper bounds are handled upstream by
    exchanging goal and fail.
    """
    if not prop.is_lower_bound:
        raise WitnessError("witnesses are defined for lower bounds; "
                           "swap goal and fail for upper bounds")
    if prop.relation == ">":
        raise WitnessError("witnesses are defined for non-strict thresholds")
    flavor = "min-nonneg" if prop.direction == "min" else "max"
    return PolytopeSpec(flavor=flavor, lam=prop.lam)


@dataclass(frozen=True)
class WitnessResult:
    subsystem: Subsystem
    state_count: int
    point: tuple
    method: str                      # 'qs' | 'exact' | 'tree' | 'point'
    optimal: bool
    bounds: tuple[int, int] | None = None
    iterate_supports: tuple[int, ...] = ()
    renormalized: bool = False


# ---------------------------------------------------------------------------
# polytope plumbing


def polytope_dimension(fs: FarkasSystem, spec: PolytopeSpec) -> int:
    return fs.num_cols if spec.flavor == "min-nonneg" else fs.num_rows


def polytope_lp(fs: FarkasSystem, spec: PolytopeSpec, objective, sense: str,
                fixed_zero=frozenset()) -> LinearProgram:
    """An LP over the polytope; ``fixed_zero`` pins coordinates to 0."""
    dim = polytope_dimension(fs, spec)
    rows = []
    if spec.flavor == "min-nonneg":
        for a_row, rhs in zip(fs.a_rows, fs.b):
            rows.append((a_row, "<=", rhs))
        s0_pos = fs.delta0.index(Fraction(1))
        rows.append((((s0_pos, Fraction(1)),), ">=", spec.lam))
    else:
        cols: list[list[tuple[int, Fraction]]] = [[] for _ in range(fs.num_cols)]
        for i, a_row in enumerate(fs.a_rows):
            for j, c in a_row:
                cols[j].append((i, c))
        for j, col in enumerate(cols):
            rows.append((tuple(col), "<=", fs.delta0[j]))
        rows.append((tuple((i, c) for i, c in enumerate(fs.b) if c),
                     ">=", spec.lam))
    lower = tuple(Fraction(0) for _ in range(dim))
    upper = tuple(Fraction(0) if i in fixed_zero else None for i in range(dim))
    return LinearProgram(sense=sense, objective=tuple(objective),
                         rows=tuple(rows), lower=lower, upper=upper)


def point_in_polytope(fs: FarkasSystem, spec: PolytopeSpec, p, exact: bool
                      ) -> tuple[bool, tuple[str, ...]]:
    dim = polytope_dimension(fs, spec)
    if len(p) != dim:
        raise WitnessError(f"point of length {len(p)}, expected {dim}")
    tol = 0 if exact else FLOAT_ZERO
    violations = []
    if any(v < -tol for v in p):
        violations.append("negative coordinate")
    if spec.flavor == "min-nonneg":
        for (row_id, lhs, rhs) in zip(fs.row_index, fs.mult_z(p), fs.b):
            if lhs > rhs + tol:
                violations.append(f"row {row_id}: {lhs} > {rhs}")
        s0_pos = fs.delta0.index(Fraction(1))
        if p[s0_pos] < spec.lam - tol:
            violations.append(f"z(s0) = {p[s0_pos]} < {spec.lam}")
    else:
        for t, lhs, rhs in zip(fs.col_index, fs.mult_y(p), fs.delta0):
            if lhs > rhs + tol:
                violations.append(f"column {t}: {lhs} > {rhs}")
        if fs.dot_b(p) < spec.lam - tol:
            violations.append(f"y.b = {fs.dot_b(p)} < {spec.lam}")
    return (not violations, tuple(violations))


def polytope_feasible(m: ReachMdp, spec: PolytopeSpec, support=None,
                      mode: str = "exact") -> bool:
    """Is the polytope (restricted to supp(x) within ``support``) nonempty?"""
    fs = build_farkas_system(m)
    dim = polytope_dimension(fs, spec)
    fixed = frozenset() if support is None else \
        frozenset(i for i in range(dim) if i not in set(support))
    lp = polytope_lp(fs, spec, [0] * dim, "min", fixed_zero=fixed)
    return solve_lp(lp, mode).status == "optimal"


def support(p, exact: bool) -> frozenset[int]:
    tol = 0 if exact else FLOAT_ZERO
    return frozenset(i for i, v in enumerate(p) if v > tol)


def _kept_from_support(fs: FarkasSystem, spec: PolytopeSpec,
                       supp: frozenset[int]):
    if spec.flavor == "min-nonneg":
        return {fs.col_index[j] for j in supp}
    return {fs.row_index[i] for i in supp}


def witness_from_point(m: ReachMdp, spec: PolytopeSpec, p,
                       mode: str = "exact", method: str = "point"
                       ) -> WitnessResult:
    """Take the support of a polytope point and build the induced subsystem.

    The subsystem is re-verified from scratch: its optimal reachability value
    must reach lambda (exactly in exact mode, within 1e-9 in float mode).
    """
    exact = mode == "exact"
    fs = build_farkas_system(m)
    ok, violations = point_in_polytope(fs, spec, p, exact)
    if not ok:
        raise WitnessError("point not in polytope: " + "; ".join(violations))
    supp = support(p, exact)
    sub = restrict(m, _kept_from_support(fs, spec, supp))
    value = reach_value(sub.mdp, spec.direction)
    slack = Fraction(0) if exact else Fraction(FLOAT_ZERO).limit_denominator()
    if value < spec.lam - slack:
        raise WitnessError(
            f"support subsystem reaches only {value} < {spec.lam}")
    return WitnessResult(subsystem=sub, state_count=sub.mdp.state_count - 2,
                         point=tuple(p), method=method, optimal=False)


# ---------------------------------------------------------------------------
# quotient-sum heuristic


def _require_feasible(m: ReachMdp, spec: PolytopeSpec):
    m.require_valid()
    value = reach_value(m, spec.direction)
    if value < spec.lam:
        raise InfeasiblePolytopeError(
            f"Pr^{spec.direction}(goal) = {value} < {spec.lam}; "
            "the certificate polytope is empty")


def qs_heuristic(m: ReachMdp, spec: PolytopeSpec, iterations: int = 2,
                 mode: str = "float") -> WitnessResult:
    """Iterated LP minimization with reciprocal reweighting.

    The first objective is all-ones; afterwards coordinate i weighs
    1/previous(i), with coordinates at zero weighted by a constant larger
    than every such quotient.  Small coordinates are driven to exact zeros
    quickly, and the final iterate's support yields the witness.
    """
    if iterations < 1:
        raise WitnessError("iterations must be >= 1")
    _require_feasible(m, spec)
    exact = mode == "exact"
    fs = build_farkas_system(m)
    dim = polytope_dimension(fs, spec)
    zero_tol = 0 if exact else FLOAT_ZERO

    objective = [Fraction(1)] * dim
    supports = []
    point = None
    for _ in range(iterations):
        sol = solve_lp(polytope_lp(fs, spec, objective, "min"), mode)
        if sol.status != "optimal":  # pragma: no cover - guarded above
            raise InfeasiblePolytopeError("polytope LP infeasible")
        point = sol.x
        supports.append(sum(1 for v in point if v > zero_tol))
        quotients = [1 / v for v in point if v > zero_tol]
        big = 10 * max(quotients) if quotients else (
            Fraction(1) if exact else 1.0)
        objective = [1 / v if v > zero_tol else big for v in point]

    result = witness_from_point(m, spec, point, mode=mode, method="qs")
    return WitnessResult(subsystem=result.subsystem,
                         state_count=result.state_count, point=result.point,
                         method="qs", optimal=False,
                         iterate_supports=tuple(supports))


# ---------------------------------------------------------------------------
# the coordinate bound K and the exact solver


def k_bound(m: ReachMdp, spec: PolytopeSpec) -> Fraction:
    """A bound K with x(i) <= K for every polytope point and coordinate.

    Every nonnegative z with Az <= b is dominated by the minimal reachability
    values, so K = 1 works for the min-nonneg flavor.  For the max flavor K
    is the exact optimum of maximizing the coordinate sum over the polytope.
    """
    _require_feasible(m, spec)
    if spec.flavor == "min-nonneg":
        return Fraction(1)
    fs = build_farkas_system(m)
    dim = polytope_dimension(fs, spec)
    sol = solve_lp(polytope_lp(fs, spec, [Fraction(1)] * dim, "max"), "exact")
    if sol.status != "optimal":  # pragma: no cover - polytopes are bounded
        raise WitnessError(f"coordinate-sum LP returned {sol.status}")
    return Fraction(sol.objective_value)


def _ceil_bound(value: float) -> int:
    return max(0, math.ceil(value - BOUND_SLACK))


def _exact_witness_check(m: ReachMdp, fs: FarkasSystem, spec: PolytopeSpec,
                         supp: frozenset[int]):
    """Exactly re-verify a candidate support; None if it is no witness."""
    sub = restrict(m, _kept_from_support(fs, spec, supp))
    if reach_value(sub.mdp, spec.direction) < spec.lam:
        return None
    return sub


def _exact_point_for(m: ReachMdp, spec: PolytopeSpec, sub: Subsystem
                     ) -> tuple[Fraction, ...]:
    """An exact polytope point supported inside the subsystem's kept set."""
    if spec.flavor == "min-nonneg":
        values, _ = linsys.optimal_values_and_policy(sub.mdp, "min")
        by_parent = {sub.parent_of(s): values[s]
                     for s in sub.mdp.s_states()}
        return tuple(by_parent.get(s, Fraction(0)) for s in m.s_states())
    _, policy = linsys.optimal_values_and_policy(sub.mdp, "max")
    freqs = frequencies_from_scheduler(sub.mdp, md_scheduler(sub.mdp, policy))
    by_parent = {(sub.parent_of(s), a): f
                 for (s, a), f in zip(sub.mdp.pairs(), freqs)}
    return tuple(by_parent.get(pair, Fraction(0)) for pair in m.pairs())


def _renormalize_max_support(m: ReachMdp, fs: FarkasSystem,
                             spec: PolytopeSpec, supp: frozenset[int], x):
    """Reduce a multi-action support to one pair per state if it still works.

    Optimal points of the binary program carry one action per support state;
    non-optimal incumbents may not, in which case the dominant action of the
    normalized scheduler is kept.
    """
    by_state: dict[int, list[int]] = {}
    for i in supp:
        by_state.setdefault(fs.row_index[i][0], []).append(i)
    if all(len(v) == 1 for v in by_state.values()):
        return None
    chosen = frozenset(max(idxs, key=lambda i: (x[i], -i))
                       for idxs in by_state.values())
    sub = _exact_witness_check(m, fs, spec, chosen)
    if sub is None:
        return None
    return chosen, sub


def exact_minimal_witness(m: ReachMdp, spec: PolytopeSpec,
                          time_budget: float | None = None) -> WitnessResult:
    """Minimize the witness state count by best-first branch and bound.

    Nodes relax the binary variables to [0,1]; with sigma eliminated the node
    bound is |fixed-to-one| plus the minimum of sum(x_free)/K over the
    restricted polytope.  Branching picks the coordinate whose relaxed sigma
    is most fractional (smallest index on ties).  Candidate supports are only
    accepted as incumbents after an exact re-verification of the induced
    subsystem, so the reported witness is sound regardless of LP round-off.
    On completion the result is a guaranteed minimum; when the time budget
    expires first, ``bounds`` brackets the minimum and ``optimal`` is False.
    """
    _require_feasible(m, spec)
    start = time.monotonic()
    fs = build_farkas_system(m)
    dim = polytope_dimension(fs, spec)
    k_exact = k_bound(m, spec)
    k_float = float(k_exact)

    warm = qs_heuristic(m, spec, iterations=2, mode="float")
    best_supp = support(warm.point, exact=False)
    best_sub = _exact_witness_check(m, fs, spec, best_supp)
    if best_sub is None:  # float support was too tight; fall back to full set
        best_supp = frozenset(range(dim))
        best_sub = _exact_witness_check(m, fs, spec, best_supp)
    best_size = len(best_supp)
    renormalized = False
    if spec.flavor == "max":
        renorm = _renormalize_max_support(m, fs, spec, best_supp, warm.point)
        if renorm is not None:
            best_supp, best_sub = renorm
            best_size = len(best_supp)
            renormalized = True

    def node_bound(fixed0, fixed1):
        free = [i for i in range(dim) if i not in fixed0 and i not in fixed1]
        objective = [0.0] * dim
        for i in free:
            objective[i] = 1.0 / k_float
        sol = solve_lp(polytope_lp(fs, spec, objective, "min",
                                   fixed_zero=fixed0), "float")
        if sol.status != "optimal":
            return None, None
        return len(fixed1) + sol.objective_value, sol.x

    def accept(supp, x):
        nonlocal best_supp, best_sub, best_size, renormalized
        key = tuple(sorted(supp))
        if len(supp) > best_size or (len(supp) == best_size
                                     and key >= tuple(sorted(best_supp))):
            return
        sub = _exact_witness_check(m, fs, spec, supp)
        if sub is None:
            return
        best_supp, best_sub, best_size = supp, sub, len(supp)
        renormalized = False
        if spec.flavor == "max":
            renorm = _renormalize_max_support(m, fs, spec, supp, x)
            if renorm is not None:
                best_supp, best_sub = renorm
                best_size = len(best_supp)
                renormalized = True

    counter = itertools.count()
    bound, x = node_bound(frozenset(), frozenset())
    heap = []
    if bound is not None:
        heapq.heappush(heap, (bound, next(counter), frozenset(), frozenset(), x))
    optimal = True
    lower = best_size
    expanded = 0
    while heap:
        bound, _, fixed0, fixed1, x = heapq.heappop(heap)
        if _ceil_bound(bound) >= best_size:
            lower = best_size
            break
        expired = ((time_budget is not None
                    and time.monotonic() - start > time_budget)
                   or expanded >= MAX_NODES)
        if expired:
            optimal = False
            lower = min(best_size, _ceil_bound(bound))
            break
        expanded += 1
        accept(support(x, exact=False), x)
        if _ceil_bound(bound) >= best_size:
            continue
        free = [(min(x[i] / k_float, 1 - x[i] / k_float), i)
                for i in range(dim) if i not in fixed0 and i not in fixed1]
        if not free:
            continue
        frac, branch = max(((f, -i) for f, i in free))
        branch = -branch
        for child0, child1 in ((fixed0 | {branch}, fixed1),
                               (fixed0, fixed1 | {branch})):
            child_bound, child_x = node_bound(child0, child1)
            if child_bound is not None and _ceil_bound(child_bound) < best_size:
                heapq.heappush(heap, (child_bound, next(counter),
                                      child0, child1, child_x))

    state_count = best_sub.mdp.state_count - 2
    if optimal:
        bounds = (state_count, state_count)
    else:
        bounds = (max(lower, 1), state_count)
    return WitnessResult(subsystem=best_sub, state_count=state_count,
                         point=_exact_point_for(m, spec, best_sub),
                         method="exact", optimal=optimal, bounds=bounds,
                         renormalized=renormalized)


def serialize_witness(result: WitnessResult) -> str:
    """Subsystem document plus the one-line stats trailer."""
    from .model import serialize_subsystem

    trailer = (f"# states {result.state_count} "
               f"# optimal {'true' if result.optimal else 'false'}")
    if result.bounds is not None:
        trailer += f" # bounds {result.bounds[0]} {result.bounds[1]}"
    if result.renormalized:
        trailer += " # renormalized true"
    return serialize_subsystem(result.subsystem) + trailer + "\n"


# ---------------------------------------------------------------------------
# LP-file export

_SECTION_ORDER = ("Minimize", "Subject To", "Bounds", "Binaries", "End")


def _format_terms(terms: list[tuple[float, str]]) -> str:
    if not terms:
        return "0 x_0"
    parts = []
    for k, (coef, name) in enumerate(terms):
        mag = abs(coef)
        piece = name if mag == 1 else f"{mag} {name}"
        if k == 0:
            parts.append(piece if coef >= 0 else f"- {piece}")
        else:
            parts.append(("+ " if coef >= 0 else "- ") + piece)
    return " ".join(parts)


def export_milp(m: ReachMdp, spec: PolytopeSpec) -> str:
    """Emit the witness-minimization MILP in CPLEX-LP text form.

    Variables: x_<i> are the polytope coordinates, s_<i> the binaries with
    the coupling rows x_i - K s_i <= 0.  Coefficients are printed as
    shortest round-trip decimals.
    """
    _require_feasible(m, spec)
    fs = build_farkas_system(m)
    dim = polytope_dimension(fs, spec)
    k = k_bound(m, spec)

    lines = ["Minimize",
             " obj: " + _format_terms([(1.0, f"s_{i}") for i in range(dim)]),
             "Subject To"]
    row_no = 0
    if spec.flavor == "min-nonneg":
        for a_row, rhs in zip(fs.a_rows, fs.b):
            terms = [(float(c), f"x_{j}") for j, c in a_row]
            lines.append(f" c{row_no}: {_format_terms(terms)} <= {float(rhs)}")
            row_no += 1
        s0_pos = fs.delta0.index(Fraction(1))
        lines.append(f" c{row_no}: x_{s0_pos} >= {float(spec.lam)}")
        row_no += 1
    else:
        cols: list[list[tuple[int, Fraction]]] = [[] for _ in range(fs.num_cols)]
        for i, a_row in enumerate(fs.a_rows):
            for j, c in a_row:
                cols[j].append((i, c))
        for j, col in enumerate(cols):
            terms = [(float(c), f"x_{i}") for i, c in col]
            lines.append(f" c{row_no}: {_format_terms(terms)} <= "
                         f"{float(fs.delta0[j])}")
            row_no += 1
        terms = [(float(c), f"x_{i}") for i, c in enumerate(fs.b) if c]
        lines.append(f" c{row_no}: {_format_terms(terms)} >= {float(spec.lam)}")
        row_no += 1
    for i in range(dim):
        lines.append(f" c{row_no}: "
                     f"{_format_terms([(1.0, f'x_{i}'), (-float(k), f's_{i}')])}"
                     " <= 0")
        row_no += 1
    lines.append("Bounds")
    for i in range(dim):
        lines.append(f" x_{i} >= 0")
    lines.append("Binaries")
    lines.append(" " + " ".join(f"s_{i}" for i in range(dim)))
    lines.append("End")
    return "\n".join(lines) + "\n"


def parse_milp(text: str):
    """Read the exported LP format back into a comparable structure.

    Returns (sense, objective, constraints, bounds, binaries) where
    objective and each constraint body map variable names to coefficients.
    """
    section = None
    sense = None
    objective: dict[str, float] = {}
    constraints = []
    bounds = []
    binaries: set[str] = set()

    token_re = re.compile(
        r"[+-]|[A-Za-z_][A-Za-z0-9_]*|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")

    def parse_terms(body: str) -> dict[str, float]:
        tokens = token_re.findall(body)
        terms: dict[str, float] = {}
        sign, coef = 1.0, None
        for tok in tokens:
            if tok == "+":
                sign, coef = 1.0, None
            elif tok == "-":
                sign, coef = -1.0, None
            else:
                try:
                    value = float(tok)
                except ValueError:
                    terms[tok] = terms.get(tok, 0.0) + sign * (
                        coef if coef is not None else 1.0)
                    sign, coef = 1.0, None
                else:
                    coef = value if coef is None else coef * value
        return terms

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        if line in ("Minimize", "Maximize"):
            sense = "min" if line == "Minimize" else "max"
            section = "objective"
            continue
        if line == "Subject To":
            section = "rows"
            continue
        if line in ("Bounds", "Binaries", "End"):
            section = line.lower()
            continue
        if section == "objective":
            body = line.split(":", 1)[1] if ":" in line else line
            objective.update(parse_terms(body))
        elif section == "rows":
            name, body = (line.split(":", 1) + [""])[:2] if ":" in line \
                else (f"c{len(constraints)}", line)
            for rel in ("<=", ">=", "="):
                if rel in body:
                    lhs, rhs = body.split(rel, 1)
                    constraints.append((name.strip(), parse_terms(lhs),
                                        rel, float(rhs)))
                    break
            else:
                raise WitnessError(f"constraint without relation: {line!r}")
        elif section == "bounds":
            for rel in ("<=", ">="):
                if rel in line:
                    var, value = line.split(rel, 1)
                    bounds.append((var.strip(), rel, float(value)))
                    break
        elif section == "binaries":
            binaries.update(line.split())
    if sense is None:
        raise WitnessError("missing objective section")
    return sense, objective, constraints, bounds, binaries


# ---------------------------------------------------------------------------
# reductions to state-minimality


def reduce_size_to_state(m: ReachMdp) -> ReachMdp:
    """Blow transitions up into states so state counts measure size.

    New layout: original states keep their indices; each transition triple
    (in ``m.transitions()`` order) becomes one extra state reached by its
    source and leading to its target with probability 1.  Paths correspond
    one-to-one with unchanged probabilities, so a state-minimal witness here
    is a size-minimal (states plus transitions) witness of ``m``.
    """
    m.require_valid()
    triples = m.transitions()
    n = m.state_count
    triple_index = {trip: n + i for i, trip in enumerate(triples)}

    labels = list(m.state_labels) + [f"t{i}" for i in range(len(triples))]
    actions: list[tuple[str, ...]] = []
    steps = []
    for s in range(n):
        if s in (m.goal, m.fail):
            actions.append(())
            steps.append(())
            continue
        actions.append(m.actions[s])
        steps.append(tuple(
            tuple((triple_index[(s, a, t)], p) for t, p in row)
            for a, row in zip(m.actions[s], m.steps[s])))
    for (s, a, t) in triples:
        actions.append((a,))
        steps.append((((t, Fraction(1)),),))
    return ReachMdp(state_labels=tuple(labels), initial=m.initial,
                    goal=m.goal, fail=m.fail, actions=tuple(actions),
                    steps=tuple(steps))


def reduce_transition_to_state(m: ReachMdp) -> ReachMdp:
    """Make transitions the states so state counts measure transitions.

    New layout: state 0 is the initial state, 1 goal, 2 fail, then one state
    per transition triple of ``m`` in ``m.transitions()`` order.  A triple
    (s,a,t) moves with t's actions onto t's triples; triples into goal/fail
    step there with probability 1.  Probabilities of corresponding paths are
    preserved, so state-minimal witnesses here are transition-minimal
    witnesses of ``m`` (quadratically many edges, linearly many states).
    """
    m.require_valid()
    triples = m.transitions()
    triple_index = {trip: 3 + i for i, trip in enumerate(triples)}

    def successor_row(t: int, a: str):
        return tuple(sorted((triple_index[(t, a, u)], p)
                            for u, p in m.row(t, a)))

    labels = ["s0", "goal", "fail"] + [f"t{i}" for i in range(len(triples))]
    actions: list[tuple[str, ...]] = [m.actions[m.initial], (), ()]
    steps = [tuple(successor_row(m.initial, a) for a in m.actions[m.initial]),
             (), ()]
    for (_s, a, t) in triples:
        if t == m.goal:
            actions.append((a,))
            steps.append((((1, Fraction(1)),),))
        elif t == m.fail:
            actions.append((a,))
            steps.append((((2, Fraction(1)),),))
        else:
            actions.append(m.actions[t])
            steps.append(tuple(successor_row(t, b) for b in m.actions[t]))
    return ReachMdp(state_labels=tuple(labels), initial=0, goal=1, fail=2,
                    actions=tuple(actions), steps=tuple(steps))
