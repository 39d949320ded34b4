"""Linear algebra layer: the reachability constraint system and an LP solver.

The constraint system (A, b, delta0) of a model collects one row per enabled
state-action pair,

    A((s,a), t) = [s = t] - P(s, a, t)       b(s, a) = P(s, a, goal),

over the columns S (all states except goal/fail), with delta0 the indicator
vector of the initial state.  Minimal and maximal reachability values are the
unique optima of ``max d.z s.t. Az <= b`` and ``min d.z s.t. Az >= b`` for any
strictly positive d; this module computes them exactly.

``solve_lp`` is a self-contained dense two-phase simplex with Bland's rule
(smallest index first), available in float and exact-rational arithmetic.  It
is stateless and reentrant; two calls on the same input return bit-identical
results.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import ModelError, ReachMdp

#: tolerances of float mode (exact mode uses 0 everywhere)
FEAS_TOL = 1e-9
PIVOT_TOL = 1e-9
PHASE1_TOL = 1e-7

SparseRow = tuple[tuple[int, Fraction], ...]


@dataclass(frozen=True)
class FarkasSystem:
    """The matrix A, vector b and initial indicator of a model.

    Rows are indexed by ``row_index`` (enabled pairs in canonical order),
    columns by ``col_index`` (non-goal/fail states ascending).  ``a_rows``
    stores A sparsely as ``((col_position, coefficient), ...)`` per row.
    """

    row_index: tuple[tuple[int, str], ...]
    col_index: tuple[int, ...]
    a_rows: tuple[SparseRow, ...]
    b: tuple[Fraction, ...]
    delta0: tuple[Fraction, ...]

    @property
    def num_rows(self) -> int:
        return len(self.row_index)

    @property
    def num_cols(self) -> int:
        return len(self.col_index)

    def col_position(self, state: int) -> int:
        return self.col_index.index(state)

    def mult_z(self, z: Sequence) -> tuple:
        """A z, one entry per row."""
        return tuple(sum(c * z[j] for j, c in row) for row in self.a_rows)

    def mult_y(self, y: Sequence) -> tuple:
        """y A, one entry per column."""
        acc = [Fraction(0)] * self.num_cols
        for yi, row in zip(y, self.a_rows):
            if yi:
                for j, c in row:
                    acc[j] += yi * c
        return tuple(acc)

    def dot_b(self, y: Sequence):
        return sum(yi * bi for yi, bi in zip(y, self.b))


def build_farkas_system(m: ReachMdp) -> FarkasSystem:
    """Assemble (A, b, delta0) for a validated model."""
    m.require_valid()
    cols = m.s_states()
    pos = {s: j for j, s in enumerate(cols)}
    row_index = []
    a_rows = []
    b = []
    for s in cols:
        for a, row in zip(m.actions[s], m.steps[s]):
            entries = {pos[s]: Fraction(1)}
            b_entry = Fraction(0)
            for t, p in row:
                if t == m.goal:
                    b_entry = p
                elif t == m.fail:
                    pass
                else:
                    entries[pos[t]] = entries.get(pos[t], Fraction(0)) - p
            row_index.append((s, a))
            a_rows.append(tuple(sorted((j, c) for j, c in entries.items() if c)))
            b.append(b_entry)
    delta0 = tuple(Fraction(1) if s == m.initial else Fraction(0) for s in cols)
    return FarkasSystem(row_index=tuple(row_index), col_index=cols,
                        a_rows=tuple(a_rows), b=tuple(b), delta0=delta0)


# ---------------------------------------------------------------------------
# linear programs


@dataclass(frozen=True)
class LinearProgram:
    """min/max objective.x subject to sparse relational rows and var bounds.

    Lower bounds are 0 or None (unbounded below); upper bounds are None
    (unbounded above) or a finite value.
    """

    sense: str                                  # 'min' | 'max'
    objective: tuple
    rows: tuple[tuple[SparseRow, str, object], ...]
    lower: tuple
    upper: tuple

    def __post_init__(self):
        n = len(self.objective)
        if self.sense not in ("min", "max"):
            raise ValueError(f"bad sense {self.sense!r}")
        if len(self.lower) != n or len(self.upper) != n:
            raise ValueError("bound vectors not aligned with objective")
        for coeffs, rel, _rhs in self.rows:
            if rel not in ("<=", "=", ">="):
                raise ValueError(f"bad row relation {rel!r}")
            for j, _c in coeffs:
                if not 0 <= j < n:
                    raise ValueError(f"row index {j} out of range")
        for lo in self.lower:
            if lo is not None and lo != 0:
                raise ValueError("lower bounds must be 0 or None")


@dataclass(frozen=True)
class LpSolution:
    status: str            # 'optimal' | 'infeasible' | 'unbounded'
    x: tuple
    objective_value: object


def _bland_min(tableau, obj, basis, eps):
    """Run Bland-rule minimization pivots in place; return False if unbounded."""
    n_rows, width = tableau.shape
    n_cols = width - 1
    limit = 5000 + 200 * (n_rows + n_cols)
    for _ in range(limit):
        enter = -1
        for j in range(n_cols):
            if obj[j] < -eps:
                enter = j
                break
        if enter < 0:
            return True
        leave = -1
        best_ratio = None
        for i in range(n_rows):
            a = tableau[i, enter]
            if a > eps:
                ratio = tableau[i, -1] / a
                if (best_ratio is None or ratio < best_ratio
                        or (ratio == best_ratio and basis[i] < basis[leave])):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            return False
        piv = tableau[leave, enter]
        tableau[leave] = tableau[leave] / piv
        col = tableau[:, enter].copy()
        col[leave] = 0 * col[leave]
        tableau -= np.outer(col, tableau[leave])
        obj -= obj[enter] * tableau[leave]
        basis[leave] = enter
    raise RuntimeError("simplex iteration limit exceeded")


def solve_lp(lp: LinearProgram, mode: str = "float") -> LpSolution:
    """Solve an LP; deterministic for identical input in both modes.

    Float mode reports optima within the module tolerances; exact mode runs
    the same simplex over rationals and is exact.
    """
    if mode not in ("float", "exact"):
        raise ValueError(f"bad mode {mode!r}")
    exact = mode == "exact"
    conv = Fraction if exact else float
    zero, one = conv(0), conv(1)
    eps = zero if exact else PIVOT_TOL

    n = len(lp.objective)
    # expand free variables into differences of nonnegative columns
    col_plus = []
    col_minus = []
    ncols = 0
    for i in range(n):
        col_plus.append(ncols)
        ncols += 1
        if lp.lower[i] is None:
            col_minus.append(ncols)
            ncols += 1
        else:
            col_minus.append(-1)

    def expand(coeffs):
        d = {}
        for i, c in coeffs:
            c = conv(c)
            d[col_plus[i]] = d.get(col_plus[i], zero) + c
            if col_minus[i] >= 0:
                d[col_minus[i]] = d.get(col_minus[i], zero) - c
        return d

    rows = [(expand(coeffs), rel, conv(rhs)) for coeffs, rel, rhs in lp.rows]
    for i in range(n):
        if lp.upper[i] is not None:
            rows.append((expand(((i, 1),)), "<=", conv(lp.upper[i])))

    # standard form: append one slack per inequality, flip rows to rhs >= 0
    n_slack = sum(1 for _d, rel, _r in rows if rel != "=")
    total = ncols + n_slack
    m_rows = len(rows)
    tableau = np.empty((m_rows, total + 1), dtype=object if exact else float)
    tableau[:] = zero
    basis = [-1] * m_rows
    slack_at = ncols
    art_rows = []
    for r, (d, rel, rhs) in enumerate(rows):
        sign = one
        slack_coef = None
        if rel == ">=":
            sign, rhs = -sign, -rhs
        if rel != "=":
            slack_coef = one
        if rhs < zero:
            sign, rhs = -sign, -rhs
            if slack_coef is not None:
                slack_coef = -slack_coef
        for j, c in d.items():
            tableau[r, j] = sign * c
        tableau[r, -1] = rhs
        if slack_coef is not None:
            tableau[r, slack_at] = slack_coef
            if slack_coef > zero:
                basis[r] = slack_at
            slack_at += 1
        if basis[r] < 0:
            art_rows.append(r)

    if art_rows:
        art_cols = {}
        extra = np.empty((m_rows, len(art_rows)), dtype=tableau.dtype)
        extra[:] = zero
        for k, r in enumerate(art_rows):
            extra[r, k] = one
            basis[r] = total + k
            art_cols[total + k] = True
        tableau = np.concatenate([tableau[:, :-1], extra,
                                  tableau[:, -1:]], axis=1)
        obj = np.empty(total + len(art_rows) + 1, dtype=tableau.dtype)
        obj[:] = zero
        for c in art_cols:
            obj[c] = one
        for r in art_rows:
            obj -= tableau[r]
            obj[basis[r]] = zero
        if not _bland_min(tableau, obj, basis, eps):
            raise RuntimeError("phase-1 objective unbounded")
        phase1 = -obj[-1]
        if phase1 > (zero if exact else PHASE1_TOL):
            return LpSolution(status="infeasible", x=(), objective_value=None)
        # drive leftover artificials out of the basis, drop redundant rows
        drop_rows = []
        for r in range(m_rows):
            if basis[r] in art_cols:
                for j in range(total):
                    a = tableau[r, j]
                    if a > eps or a < -eps:
                        piv = tableau[r, j]
                        tableau[r] = tableau[r] / piv
                        col = tableau[:, j].copy()
                        col[r] = 0 * col[r]
                        tableau -= np.outer(col, tableau[r])
                        basis[r] = j
                        break
                else:
                    drop_rows.append(r)
        if drop_rows:
            keep = [r for r in range(m_rows) if r not in drop_rows]
            tableau = tableau[keep]
            basis = [basis[r] for r in keep]
            m_rows = len(keep)
        tableau = np.concatenate([tableau[:, :total], tableau[:, -1:]], axis=1)

    # phase 2
    sense = one if lp.sense == "min" else -one
    obj = np.empty(total + 1, dtype=tableau.dtype)
    obj[:] = zero
    for i in range(n):
        c = sense * conv(lp.objective[i])
        obj[col_plus[i]] += c
        if col_minus[i] >= 0:
            obj[col_minus[i]] -= c
    for r in range(m_rows):
        if obj[basis[r]] != zero:
            obj -= obj[basis[r]] * tableau[r]
            obj[basis[r]] = zero
    if not _bland_min(tableau, obj, basis, eps):
        return LpSolution(status="unbounded", x=(), objective_value=None)

    x_ext = [zero] * total
    for r in range(m_rows):
        if basis[r] < total:
            x_ext[basis[r]] = tableau[r, -1]
    x = []
    for i in range(n):
        v = x_ext[col_plus[i]]
        if col_minus[i] >= 0:
            v = v - x_ext[col_minus[i]]
        x.append(v)
    value = sum(conv(c) * v for c, v in zip(lp.objective, x))
    return LpSolution(status="optimal", x=tuple(x), objective_value=value)


# ---------------------------------------------------------------------------
# exact reachability values


def solve_linear_system(rows: list[list[Fraction]],
                        rhs: list[Fraction]) -> list[Fraction]:
    """Solve a dense square rational system by Gaussian elimination."""
    n = len(rows)
    aug = [list(map(Fraction, rows[i])) + [Fraction(rhs[i])] for i in range(n)]
    for col in range(n):
        piv_row = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv_row is None:
            raise ArithmeticError("singular linear system")
        if piv_row != col:
            aug[col], aug[piv_row] = aug[piv_row], aug[col]
        piv = aug[col][col]
        if piv != 1:
            aug[col] = [v / piv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    return [aug[i][-1] for i in range(n)]


def topological_order(m: ReachMdp) -> tuple[int, ...] | None:
    """Topological order of the graph on S, or None if it has a cycle."""
    s_states = m.s_states()
    indeg = {s: 0 for s in s_states}
    succs = {s: set() for s in s_states}
    for s in s_states:
        for row in m.steps[s]:
            for t, _ in row:
                if t in indeg and t not in succs[s]:
                    succs[s].add(t)
                    indeg[t] += 1
    ready = [s for s in s_states if indeg[s] == 0]
    order = []
    while ready:
        s = ready.pop()
        order.append(s)
        for t in sorted(succs[s]):
            indeg[t] -= 1
            if indeg[t] == 0:
                ready.append(t)
    if len(order) != len(s_states):
        return None
    return tuple(order)


def _action_value(m: ReachMdp, s: int, k: int, values: dict[int, Fraction]
                  ) -> Fraction:
    total = Fraction(0)
    for t, p in m.steps[s][k]:
        if t == m.goal:
            total += p
        elif t != m.fail:
            total += p * values[t]
    return total


def optimal_values_and_policy(m: ReachMdp, direction: str
                              ) -> tuple[dict[int, Fraction], dict[int, int]]:
    """Exact optimal reachability values on S plus an optimal MD policy.

    Acyclic models are solved by one backward pass.  Otherwise deterministic
    policy iteration runs with exact linear solves; this terminates because
    every policy of a validated model absorbs almost surely, so each policy
    has a unique value vector and improvements are strict.
    """
    if direction not in ("min", "max"):
        raise ModelError(f"bad direction {direction!r}")
    m.require_absorbing()
    better = (lambda a, b: a < b) if direction == "min" else (lambda a, b: a > b)
    s_states = m.s_states()

    order = topological_order(m)
    if order is not None:
        values: dict[int, Fraction] = {}
        policy: dict[int, int] = {}
        for s in reversed(order):
            best_k, best_v = 0, _action_value(m, s, 0, values)
            for k in range(1, len(m.actions[s])):
                v = _action_value(m, s, k, values)
                if better(v, best_v):
                    best_k, best_v = k, v
            values[s] = best_v
            policy[s] = best_k
        return values, policy

    policy = {s: 0 for s in s_states}
    pos = {s: j for j, s in enumerate(s_states)}
    while True:
        rows = []
        rhs = []
        for s in s_states:
            row = [Fraction(0)] * len(s_states)
            row[pos[s]] = Fraction(1)
            goal_mass = Fraction(0)
            for t, p in m.steps[s][policy[s]]:
                if t == m.goal:
                    goal_mass = p
                elif t != m.fail:
                    row[pos[t]] -= p
            rows.append(row)
            rhs.append(goal_mass)
        sol = solve_linear_system(rows, rhs)
        values = {s: sol[pos[s]] for s in s_states}
        changed = False
        for s in s_states:
            current = values[s]
            best_k, best_v = policy[s], current
            for k in range(len(m.actions[s])):
                v = _action_value(m, s, k, values)
                if better(v, best_v):
                    best_k, best_v = k, v
            if best_k != policy[s]:
                policy[s] = best_k
                changed = True
        if not changed:
            return values, policy


def reach_probabilities(m: ReachMdp, direction: str) -> tuple[Fraction, ...]:
    """Exact Pr^min or Pr^max of reaching goal, per state of S (ascending)."""
    m.require_valid()
    values, _ = optimal_values_and_policy(m, direction)
    return tuple(values[s] for s in m.s_states())


def reach_value(m: ReachMdp, direction: str) -> Fraction:
    """Exact optimal probability of reaching goal from the initial state."""
    values, _ = optimal_values_and_policy(m, direction)
    return values[m.initial]
