"""Certificates for threshold properties, checkable by plain linear algebra.

A certificate for ``Pr^min/max(goal) <rel> lambda`` is a single rational
vector whose inequalities against the constraint system (A, b, delta0) prove
the property without re-running any reachability analysis:

    min, >= / >   z over S       Az <= b  and  z(s0) >= / > lambda
    max, >= / >   y >= 0 over M  yA <= d0 and  y.b  >= / > lambda
    min, <= / <   y >= 0 over M  yA >= d0 and  y.b  <= / < lambda
    max, <= / <   z over S       Az >= b  and  z(s0) <= / < lambda

Verification is exact rational arithmetic over the model's transition
function only.  Nonnegative y-vectors with yA = delta0 are exactly the
expected state-action frequencies of memoryless randomized schedulers, which
is how generation constructs them.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import ModelError, PropertySpec, ReachMdp, parse_rational
from .linsys import (FarkasSystem, build_farkas_system, optimal_values_and_policy,
                     solve_linear_system, topological_order)

RATIONALIZE_CAP = 10 ** 12


class CertificateError(ValueError):
    pass


class PropertyFalseError(CertificateError):
    """The property does not hold, so no certificate exists."""


class StrictInfeasibleError(PropertyFalseError):
    """The optimum equals the bound, so the strict property fails."""


class RepairError(CertificateError):
    pass


def certificate_kind(prop: PropertySpec) -> str:
    """'z' for {min,lower} and {max,upper}; 'y' for the other two cells."""
    if prop.direction == "min":
        return "z" if prop.is_lower_bound else "y"
    return "y" if prop.is_lower_bound else "z"


@dataclass(frozen=True)
class FarkasCertificate:
    prop: PropertySpec
    kind: str                       # 'z' | 'y'
    vector: tuple[Fraction, ...]

    def __post_init__(self):
        if self.kind not in ("z", "y"):
            raise CertificateError(f"bad certificate kind {self.kind!r}")
        if self.kind != certificate_kind(self.prop):
            raise CertificateError(
                f"kind {self.kind!r} does not fit property "
                f"{self.prop.direction}{self.prop.relation}")


@dataclass(frozen=True)
class MRScheduler:
    """A memoryless randomized scheduler; empty rows for goal/fail."""

    dists: tuple[tuple[tuple[str, Fraction], ...], ...]

    def weight(self, s: int, a: str) -> Fraction:
        for label, w in self.dists[s]:
            if label == a:
                return w
        return Fraction(0)

    def as_mapping(self) -> dict[int, dict[str, Fraction]]:
        return {s: dict(row) for s, row in enumerate(self.dists) if row}


def md_scheduler(m: ReachMdp, policy: dict[int, int]) -> MRScheduler:
    """Wrap a deterministic policy (state -> action position)."""
    dists = []
    for s in range(m.state_count):
        if s in policy:
            dists.append(((m.actions[s][policy[s]], Fraction(1)),))
        else:
            dists.append(())
    return MRScheduler(dists=tuple(dists))


@dataclass(frozen=True)
class CertificateReport:
    ok: bool
    violations: tuple[str, ...]


def _compare(value, relation: str, lam) -> bool:
    return {">=": value >= lam, ">": value > lam,
            "<=": value <= lam, "<": value < lam}[relation]


def verify_certificate(m: ReachMdp, cert: FarkasCertificate
                       ) -> CertificateReport:
    """Exactly evaluate the certificate conditions; list every violation.

    Only the transition function of ``m`` enters the check; reachability
    values are never recomputed.
    """
    fs = build_farkas_system(m)
    prop = cert.prop
    expected = fs.num_cols if cert.kind == "z" else fs.num_rows
    if len(cert.vector) != expected:
        raise CertificateError(
            f"dimension mismatch: {cert.kind}-vector of length "
            f"{len(cert.vector)}, expected {expected}")

    violations = []
    if cert.kind == "z":
        az = fs.mult_z(cert.vector)
        if prop.direction == "min":
            for (s, a), lhs, rhs in zip(fs.row_index, az, fs.b):
                if lhs > rhs:
                    violations.append(f"row ({s},{a}): {lhs} > {rhs}")
        else:
            for (s, a), lhs, rhs in zip(fs.row_index, az, fs.b):
                if lhs < rhs:
                    violations.append(f"row ({s},{a}): {lhs} < {rhs}")
        bound_side = cert.vector[fs.col_position(m.initial)]
        bound_name = "z(s0)"
    else:
        for (s, a), v in zip(fs.row_index, cert.vector):
            if v < 0:
                violations.append(f"y({s},{a}) = {v} < 0")
        ya = fs.mult_y(cert.vector)
        if prop.direction == "max":
            for t, lhs, rhs in zip(fs.col_index, ya, fs.delta0):
                if lhs > rhs:
                    violations.append(f"column {t}: {lhs} > {rhs}")
        else:
            for t, lhs, rhs in zip(fs.col_index, ya, fs.delta0):
                if lhs < rhs:
                    violations.append(f"column {t}: {lhs} < {rhs}")
        bound_side = fs.dot_b(cert.vector)
        bound_name = "y.b"
    if not _compare(bound_side, prop.relation, prop.lam):
        violations.append(
            f"{bound_name} = {bound_side} fails {prop.relation} {prop.lam}")
    return CertificateReport(ok=not violations, violations=tuple(violations))


def repair_certificate(m: ReachMdp, cert: FarkasCertificate,
                       margin: Fraction) -> FarkasCertificate:
    """Push an approximately feasible certificate into exact feasibility.

    Applies the closed-form slack repair of the certificate's cell (shift z
    by -/+ margin, scale y by 1-/+margin) and re-verifies exactly.  The z
    shifts are sound because every row of A sums to the one-step goal/fail
    mass, which is nonnegative.
    """
    margin = Fraction(margin)
    if margin < 0:
        raise CertificateError("margin must be nonnegative")
    prop = cert.prop
    if cert.kind == "z":
        delta = -margin if prop.direction == "min" else margin
        vector = tuple(v + delta for v in cert.vector)
    else:
        factor = 1 - margin if prop.direction == "max" else 1 + margin
        vector = tuple(factor * v for v in cert.vector)
    repaired = FarkasCertificate(prop=prop, kind=cert.kind, vector=vector)
    report = verify_certificate(m, repaired)
    if not report.ok:
        bound_only = all(v.startswith(("z(s0)", "y.b"))
                         for v in report.violations)
        msg = ("repair breaks the threshold side (insufficient margin): "
               if bound_only else "repair left violations: ")
        raise RepairError(msg + "; ".join(report.violations))
    return repaired


# ---------------------------------------------------------------------------
# schedulers and frequencies


def scheduler_from_y(m: ReachMdp, y) -> MRScheduler:
    """Normalize a nonnegative vector over M into a scheduler.

    States whose y-mass is zero get the first enabled action (the fixed
    tie-break that keeps results deterministic).
    """
    pairs = m.pairs()
    if len(y) != len(pairs):
        raise CertificateError(f"y-vector of length {len(y)}, "
                               f"expected {len(pairs)}")
    values = [Fraction(v) for v in y]
    if any(v < 0 for v in values):
        raise CertificateError("negative entry in y-vector")
    by_state: dict[int, list[tuple[str, Fraction]]] = {}
    for (s, a), v in zip(pairs, values):
        by_state.setdefault(s, []).append((a, v))
    dists = []
    for s in range(m.state_count):
        if s not in by_state:
            dists.append(())
            continue
        total = sum(v for _, v in by_state[s])
        if total > 0:
            dists.append(tuple((a, v / total) for a, v in by_state[s] if v))
        else:
            dists.append(((m.actions[s][0], Fraction(1)),))
    return MRScheduler(dists=tuple(dists))


def frequencies_from_scheduler(m: ReachMdp, sched: MRScheduler
                               ) -> tuple[Fraction, ...]:
    """Exact expected visit frequencies y(s,a) of the induced chain.

    Solves h(I - Q) = delta0 for the induced transition matrix Q on S and
    returns y(s,a) = h(s) * sched(s)(a).  The result satisfies yA = delta0
    exactly, and y.b is the scheduler's probability of reaching goal.
    """
    m.require_absorbing()
    s_states = m.s_states()
    pos = {s: j for j, s in enumerate(s_states)}
    q: dict[int, dict[int, Fraction]] = {s: {} for s in s_states}
    for s in s_states:
        for a, w in sched.dists[s]:
            if w == 0:
                continue
            if a not in m.actions[s]:
                raise CertificateError(
                    f"scheduler at state {s} uses disabled action {a!r}")
            for t, p in m.row(s, a):
                if t in pos:
                    q[s][t] = q[s].get(t, Fraction(0)) + w * p

    order = topological_order(m)
    h: dict[int, Fraction] = {}
    if order is not None:
        for s in order:
            h[s] = (Fraction(1) if s == m.initial else Fraction(0))
        for s in order:
            for t, p in q[s].items():
                h[t] += h[s] * p
    else:
        n = len(s_states)
        rows = [[Fraction(0)] * n for _ in range(n)]
        rhs = [Fraction(0)] * n
        for t in s_states:
            rows[pos[t]][pos[t]] = Fraction(1)
            rhs[pos[t]] = Fraction(1) if t == m.initial else Fraction(0)
        for s in s_states:
            for t, p in q[s].items():
                rows[pos[t]][pos[s]] -= p
        sol = solve_linear_system(rows, rhs)
        h = {s: sol[pos[s]] for s in s_states}

    return tuple(h[s] * sched.weight(s, a) for s, a in m.pairs())


# ---------------------------------------------------------------------------
# generation


def _float_values_and_policy(m: ReachMdp, direction: str):
    """Plain value iteration; the floating-point leg of the bridge."""
    better = (lambda a, b: a < b) if direction == "min" else (lambda a, b: a > b)
    vals = {s: 0.0 for s in m.s_states()}
    policy = {s: 0 for s in m.s_states()}
    for _ in range(200000):
        delta = 0.0
        for s in m.s_states():
            best_k, best_v = 0, None
            for k in range(len(m.actions[s])):
                v = 0.0
                for t, p in m.steps[s][k]:
                    if t == m.goal:
                        v += float(p)
                    elif t != m.fail:
                        v += float(p) * vals[t]
                if best_v is None or better(v, best_v):
                    best_k, best_v = k, v
            delta = max(delta, abs(best_v - vals[s]))
            vals[s], policy[s] = best_v, best_k
        if delta <= 1e-13:
            break
    return vals, policy


def rationalize(value: float, cap: int = RATIONALIZE_CAP) -> Fraction:
    """Continued-fraction rounding with a denominator cap."""
    return Fraction(value).limit_denominator(cap)


def generate_certificate(m: ReachMdp, prop: PropertySpec, mode: str = "exact",
                         margin: Fraction = Fraction(1, 10 ** 7)
                         ) -> FarkasCertificate:
    """Construct a certificate for ``prop``, verified exactly before return.

    z-cells take the optimal value vector of the matching direction; y-cells
    take the exact frequencies of an optimal deterministic scheduler.  In
    float mode the vector comes from value iteration instead, is rationalized
    with the denominator cap, repaired by ``margin`` and then verified; this
    demonstrates the float-to-exact bridge and can fail on models whose tight
    rows carry no one-step goal/fail mass.
    """
    if mode not in ("exact", "float"):
        raise CertificateError(f"bad mode {mode!r}")
    m.require_valid()
    values, policy = optimal_values_and_policy(m, prop.direction)
    optimum = values[m.initial]
    if not prop.holds_for(optimum):
        if prop.relation in (">", "<") and optimum == prop.lam:
            raise StrictInfeasibleError(
                f"optimum equals {prop.lam}; strict {prop.relation} "
                "certificate cannot exist")
        raise PropertyFalseError(
            f"Pr^{prop.direction}(goal) = {optimum} violates "
            f"{prop.relation} {prop.lam}")

    kind = certificate_kind(prop)
    if mode == "exact":
        if kind == "z":
            vector = tuple(values[s] for s in m.s_states())
        else:
            vector = frequencies_from_scheduler(m, md_scheduler(m, policy))
        cert = FarkasCertificate(prop=prop, kind=kind, vector=vector)
        report = verify_certificate(m, cert)
        if not report.ok:  # pragma: no cover - construction is exact
            raise CertificateError("internal error: exact construction "
                                   "failed verification: "
                                   + "; ".join(report.violations))
        return cert

    fvals, fpolicy = _float_values_and_policy(m, prop.direction)
    if kind == "z":
        vector = tuple(rationalize(fvals[s]) for s in m.s_states())
    else:
        import numpy as np

        s_states = m.s_states()
        pos = {s: j for j, s in enumerate(s_states)}
        n = len(s_states)
        mat = np.eye(n)
        rhs = np.zeros(n)
        rhs[pos[m.initial]] = 1.0
        for s in s_states:
            for t, p in m.steps[s][fpolicy[s]]:
                if t in pos:
                    mat[pos[t], pos[s]] -= float(p)
        h = np.linalg.solve(mat, rhs)
        chosen = {s: m.actions[s][fpolicy[s]] for s in s_states}
        vector = tuple(
            max(Fraction(0), rationalize(float(h[pos[s]]))) if a == chosen[s]
            else Fraction(0)
            for s, a in m.pairs())
    rough = FarkasCertificate(prop=prop, kind=kind, vector=vector)
    return repair_certificate(m, rough, margin)


# ---------------------------------------------------------------------------
# file format

_REL_TO_TOKEN = {">=": "ge", ">": "gt", "<=": "le", "<": "lt"}
_TOKEN_TO_REL = {v: k for k, v in _REL_TO_TOKEN.items()}


def serialize_certificate(cert: FarkasCertificate) -> str:
    lines = ["farkas-certificate",
             f"property: {cert.prop.direction} "
             f"{_REL_TO_TOKEN[cert.prop.relation]} {cert.prop.lam}",
             f"kind: {cert.kind}"]
    for i, v in enumerate(cert.vector):
        if v != 0:
            lines.append(f"{i} {v}")
    return "\n".join(lines) + "\n"


def parse_certificate(text: str, z_dim: int, y_dim: int) -> FarkasCertificate:
    """Read the certificate format; omitted indices are zero entries.

    ``z_dim``/``y_dim`` size the vector depending on the declared kind
    (states of S versus enabled pairs, in the canonical orderings).
    """
    items = []
    for no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            items.append((no, stripped))
    if not items or items[0][1] != "farkas-certificate":
        raise CertificateError("missing 'farkas-certificate' header")
    items.pop(0)
    if len(items) < 2:
        raise CertificateError("truncated certificate document")
    no, prop_line = items.pop(0)
    parts = prop_line.split()
    if len(parts) != 4 or parts[0] != "property:" or parts[2] not in _TOKEN_TO_REL:
        raise CertificateError(f"line {no}: bad property line {prop_line!r}")
    prop = PropertySpec(direction=parts[1], relation=_TOKEN_TO_REL[parts[2]],
                        lam=parse_rational(parts[3]))
    no, kind_line = items.pop(0)
    parts = kind_line.split()
    if len(parts) != 2 or parts[0] != "kind:" or parts[1] not in ("z", "y"):
        raise CertificateError(f"line {no}: bad kind line {kind_line!r}")
    kind = parts[1]
    dimension = z_dim if kind == "z" else y_dim
    vector = [Fraction(0)] * dimension
    for no, line in items:
        parts = line.split()
        if len(parts) != 2:
            raise CertificateError(f"line {no}: expected '<index> <rational>'")
        try:
            idx = int(parts[0])
        except ValueError:
            raise CertificateError(f"line {no}: bad index {parts[0]!r}") from None
        if not 0 <= idx < dimension:
            raise CertificateError(f"line {no}: index {idx} out of range")
        vector[idx] = parse_rational(parts[1])
    return FarkasCertificate(prop=prop, kind=kind, vector=tuple(vector))
