"""Finite local-hidden-variable models over pairs of POVMs.

A model assigns each hidden value ``lam`` a probability and two response
tables, ``E1(A_mu | lam)`` and ``E2(B_nu | lam)``. Checks never raise; they
return a :class:`Report` listing every violation so callers can show all of
them at once.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, tensor
from .povm import ConstraintSet, Effect, Povm, discover_constraints

RANGE_TOL = 1e-10
NORMALIZATION_TOL = 1e-9
PROBABILITY_TOL = 1e-10
CONSISTENCY_TOL = 1e-8


@dataclass(frozen=True)
class Violation:
    """One failed condition.

    ``kind`` is one of ``"probability"``, ``"range"``, ``"normalization"``,
    ``"consistency"``, ``"born"``, ``"shape"``; ``side`` is ``"A"``, ``"B"`` or
    ``None``; ``lam`` and ``index`` locate the entry (effect or constraint
    index, depending on the kind).
    """

    kind: str
    value: float
    bound: float
    lam: int | None = None
    side: str | None = None
    index: int | None = None
    message: str = ""

    def describe(self):
        where = []
        if self.lam is not None:
            where.append(f"lambda={self.lam}")
        if self.side is not None:
            where.append(f"side={self.side}")
        if self.index is not None:
            noun = "constraint" if self.kind == "consistency" else "effect"
            where.append(f"{noun}={self.index}")
        loc = f" ({', '.join(where)})" if where else ""
        return f"{self.kind}{loc}: {self.message or f'value {self.value:.6g} vs bound {self.bound:.3g}'}"


@dataclass
class Report:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def extend(self, other):
        self.violations.extend(other.violations)
        return self

    def kinds(self):
        return {v.kind for v in self.violations}

    def summary(self):
        if self.ok:
            return "no violations"
        head = "; ".join(v.describe() for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        return f"{len(self.violations)} violation(s): {head}{more}"


@dataclass(frozen=True, eq=False)
class LambdaEntry:
    """Probability of one hidden value and its two response tables."""

    p: float
    responses_a: np.ndarray
    responses_b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", float(self.p))
        for name in ("responses_a", "responses_b"):
            r = np.array(getattr(self, name), dtype=float).ravel()
            r.setflags(write=False)
            object.__setattr__(self, name, r)

    def __eq__(self, other):
        if not isinstance(other, LambdaEntry):
            return NotImplemented
        return (
            self.p == other.p
            and np.array_equal(self.responses_a, other.responses_a)
            and np.array_equal(self.responses_b, other.responses_b)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class LhvModel:
    """Finite hidden-variable model; only table shapes are enforced here.

    Use :func:`check_admissible` and :func:`check_consistency` for the
    probabilistic conditions.
    """

    povm_a: Povm
    povm_b: Povm
    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise ValueError("an LHV model needs at least one hidden value")
        for k, e in enumerate(entries):
            if len(e.responses_a) != len(self.povm_a) or len(e.responses_b) != len(self.povm_b):
                raise ValueError(
                    f"lambda {k}: response lengths ({len(e.responses_a)}, {len(e.responses_b)}) "
                    f"do not match POVM sizes ({len(self.povm_a)}, {len(self.povm_b)})"
                )
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, LhvModel):
            return NotImplemented
        return self.povm_a == other.povm_a and self.povm_b == other.povm_b and self.entries == other.entries

    __hash__ = None

    @property
    def probabilities(self):
        return np.array([e.p for e in self.entries])

    @property
    def table_a(self):
        """Responses of side A, shape ``(n_lambda, n_effects_a)``."""
        return np.array([e.responses_a for e in self.entries])

    @property
    def table_b(self):
        return np.array([e.responses_b for e in self.entries])

    @classmethod
    def from_tables(cls, povm_a, povm_b, p, table_a, table_b):
        return cls(povm_a, povm_b, [LambdaEntry(*row) for row in zip(p, table_a, table_b)])


def _operator(x):
    return x.operator if isinstance(x, Effect) else as_matrix(x)


def born_correlation(rho, eff_a, eff_b):
    """``tr(rho A (x) B)`` on the bare operators; weights are not applied."""
    a, b = _operator(eff_a), _operator(eff_b)
    m = as_matrix(rho)
    if a.shape[0] * b.shape[0] != m.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape[0]} x {b.shape[0]} vs state size {m.shape[0]}")
    val = np.trace(m @ tensor(a, b))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"Born value has imaginary part {val.imag:.3e}; operators not Hermitian?")
    return float(val.real)


def born_table(rho, povm_a, povm_b):
    """Matrix of ``tr(rho A_mu (x) B_nu)`` for every effect pair."""
    m = as_matrix(rho)
    da, db = povm_a.dim, povm_b.dim
    if da * db != m.shape[0]:
        raise ValueError(f"dimension mismatch: {da} x {db} vs state size {m.shape[0]}")
    t = m.reshape(da, db, da, db)
    vals = np.einsum("ajbk,mba,nkj->mn", t, povm_a.operators(), povm_b.operators())
    return vals.real


def model_correlation(model, mu, nu):
    """``sum_lam p_lam E1(A_mu|lam) E2(B_nu|lam)``."""
    n_a, n_b = len(model.povm_a), len(model.povm_b)
    if not (0 <= mu < n_a and 0 <= nu < n_b):
        raise IndexError(f"effect pair ({mu}, {nu}) outside {n_a} x {n_b}")
    return float(sum(e.p * e.responses_a[mu] * e.responses_b[nu] for e in model.entries))


def correlation_table(model):
    """All ``model_correlation`` values, shape ``(n_effects_a, n_effects_b)``."""
    return model.table_a.T @ (model.probabilities[:, None] * model.table_b)


def _check_side(k, responses, povm, side, report):
    norms = np.array([e.norm for e in povm.effects])
    for mu, (r, bound) in enumerate(zip(responses, norms)):
        if not np.isfinite(r) or r < -RANGE_TOL or r > bound + RANGE_TOL:
            report.violations.append(
                Violation("range", float(r), float(bound), lam=k, side=side, index=mu,
                          message=f"response {r:.6g} outside [0, {bound:.6g}]")
            )
    total = float(povm.weights @ responses)
    if not abs(total - 1.0) <= NORMALIZATION_TOL:
        report.violations.append(
            Violation("normalization", total, 1.0, lam=k, side=side,
                      message=f"weighted responses sum to {total:.12g}, expected 1")
        )


def check_admissible(model):
    """Report violations of the probability simplex, ranges and normalization."""
    report = Report()
    p = model.probabilities
    for k, pk in enumerate(p):
        if not pk >= -PROBABILITY_TOL:
            report.violations.append(
                Violation("probability", float(pk), 0.0, lam=k, message=f"negative probability {pk:.6g}")
            )
    if not abs(p.sum() - 1.0) <= PROBABILITY_TOL:
        report.violations.append(
            Violation("probability", float(p.sum()), 1.0, message=f"probabilities sum to {p.sum():.12g}")
        )
    for k, e in enumerate(model.entries):
        _check_side(k, e.responses_a, model.povm_a, "A", report)
        _check_side(k, e.responses_b, model.povm_b, "B", report)
    return report


def _consistency_side(table, povm, constraints, side, tol, report):
    c = constraints.coefficients
    if len(constraints) == 0:
        return
    if c.shape[1] != len(povm):
        report.violations.append(
            Violation("shape", float(c.shape[1]), float(len(povm)), side=side,
                      message=f"constraint length {c.shape[1]} != {len(povm)} effects")
        )
        return
    resid = (table * povm.weights) @ c.T
    for k, j in zip(*np.nonzero(~(np.abs(resid) <= tol))):
        report.violations.append(
            Violation("consistency", float(resid[k, j]), tol, lam=int(k), side=side, index=int(j),
                      message=f"constraint residual {resid[k, j]:.3e} exceeds {tol:g}")
        )


def check_consistency(model, constraints_a=None, constraints_b=None, tol=CONSISTENCY_TOL):
    """Check every hidden value's responses against the operator identities.

    For each constraint vector ``f`` of a side, ``|sum_mu f_mu w_mu E(A_mu|lam)|``
    must not exceed ``tol``. Constraint sets default to
    :func:`~lhvsep.povm.discover_constraints` of each POVM.
    """
    if constraints_a is None:
        constraints_a = discover_constraints(model.povm_a)
    if constraints_b is None:
        constraints_b = discover_constraints(model.povm_b)
    report = Report()
    _consistency_side(model.table_a, model.povm_a, _as_constraints(constraints_a), "A", tol, report)
    _consistency_side(model.table_b, model.povm_b, _as_constraints(constraints_b), "B", tol, report)
    return report


def _as_constraints(c):
    return c if isinstance(c, ConstraintSet) else ConstraintSet(c)
