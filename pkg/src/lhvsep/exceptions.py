"""Exception hierarchy shared by every module."""


class LhvSepError(ValueError):
    """Base class for all errors raised by :mod:`lhvsep`."""


class InvariantError(LhvSepError):
    """A domain object violates one of its invariants.

    Parameters
    ----------
    invariant : str
        Short machine-readable name of the violated invariant
        (``"hermitian"``, ``"unit-trace"``, ``"positivity"``, ...).
    message : str
        Human-readable detail.
    """

    def __init__(self, invariant, message):
        super().__init__(f"[{invariant}] {message}")
        self.invariant = invariant


class CompletenessError(InvariantError):
    """Weighted effects do not sum to the identity."""

    def __init__(self, residual, message=None):
        import numpy as np

        self.residual = np.asarray(residual)
        err = float(np.max(np.abs(self.residual))) if self.residual.size else 0.0
        super().__init__(
            "completeness",
            message or f"sum of weighted effects differs from identity by {err:.3e}",
        )


class PositivityError(InvariantError):
    """A reconstructed operator is not positive semidefinite.

    ``lam`` names the offending hidden-variable index (when there is one),
    ``bloch_norm`` carries the polarization length for qubits and
    ``matrix`` the unprojected operator.
    """

    def __init__(self, message, *, lam=None, bloch_norm=None, min_eigenvalue=None, matrix=None):
        super().__init__("positivity", message)
        self.lam = lam
        self.bloch_norm = bloch_norm
        self.min_eigenvalue = min_eigenvalue
        self.matrix = matrix


class InconsistentModelError(InvariantError):
    """A response table is not admissible or not consistent; carries the report."""

    def __init__(self, report, message=None):
        self.report = report
        super().__init__("consistency", message or report.summary())


class AdditivityError(InvariantError):
    """Rank-1/rank-2 projector responses are not additive.

    ``residuals`` maps ``(i, j)`` rank-1 index pairs to
    ``E(A_i) + E(A_j) - E(A_ij)``.
    """

    def __init__(self, residuals, tol):
        self.residuals = dict(residuals)
        bad = {k: v for k, v in self.residuals.items() if abs(v) > tol}
        worst = max(bad, key=lambda k: abs(bad[k]))
        super().__init__(
            "additivity",
            f"{len(bad)} orthogonal pair(s) violate additivity; worst pair {worst} "
            f"residual {bad[worst]:.3e}",
        )
        self.violations = bad


class UnderdeterminedError(LhvSepError):
    """The supplied measurements do not determine the operator uniquely."""

    def __init__(self, rank, needed, message=None):
        self.rank = rank
        self.needed = needed
        super().__init__(message or f"measurement span has rank {rank}, need {needed}")


class DocumentSyntaxError(LhvSepError):
    """Malformed serialized document, with 1-based position."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")
