"""Finite POVMs, the discretized all-projector qubit family and constraint discovery."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import CompletenessError, InvariantError
from .linalg import (
    HERMITIAN_TOL,
    POSITIVITY_TOL,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    as_matrix,
    hermitian_eigenvalues,
    hermitian_residual,
    identity,
)

COMPLETENESS_TOL = 1e-10
CONSTRAINT_TOL = 1e-9
NULLSPACE_RTOL = 1e-10
_DIRECTION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Effect:
    """One POVM element stored as ``weight * operator``.

    ``operator`` is the bare non-negative observable (for the sphere family
    a rank-1 projector); ``weight`` is its share of the discretized measure.
    """

    weight: float
    operator: np.ndarray
    label: str = ""

    def __post_init__(self):
        w = float(self.weight)
        if not w > 0 or not np.isfinite(w):
            raise InvariantError("effect-weight", f"effect {self.label!r} has weight {w}, must be > 0")
        op = np.array(as_matrix(self.operator), dtype=complex)
        res = hermitian_residual(op)
        if res > HERMITIAN_TOL:
            raise InvariantError("hermitian", f"effect {self.label!r} is not Hermitian (residual {res:.3e})")
        lam = hermitian_eigenvalues(op)
        if lam[0] < POSITIVITY_TOL:
            raise InvariantError("positivity", f"effect {self.label!r} has eigenvalue {lam[0]:.6g}")
        op.setflags(write=False)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "operator", op)
        object.__setattr__(self, "label", str(self.label))
        object.__setattr__(self, "_norm", float(lam[-1]))

    @property
    def norm(self):
        """Operator norm of the bare operator (largest eigenvalue)."""
        return self._norm

    @property
    def weighted(self):
        return self.weight * self.operator

    def __eq__(self, other):
        if not isinstance(other, Effect):
            return NotImplemented
        return (
            self.weight == other.weight
            and self.label == other.label
            and np.array_equal(self.operator, other.operator)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Povm:
    """Finite family of effects whose weighted sum is the identity.

    Raises :class:`CompletenessError` (carrying the residual matrix) when
    ``sum_mu w_mu A_mu`` misses the identity by more than ``1e-10`` in any
    entry.
    """

    dim: int
    effects: tuple

    def __post_init__(self):
        effects = tuple(self.effects)
        if not effects:
            raise InvariantError("completeness", "a POVM needs at least one effect")
        for e in effects:
            if not isinstance(e, Effect):
                raise TypeError(f"expected Effect, got {type(e).__name__}")
            if e.operator.shape != (self.dim, self.dim):
                raise InvariantError(
                    "dims", f"effect {e.label!r} has shape {e.operator.shape}, POVM dim is {self.dim}"
                )
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "dim", int(self.dim))
        residual = self.completeness_residual()
        if np.max(np.abs(residual)) > COMPLETENESS_TOL:
            raise CompletenessError(residual)

    def __len__(self):
        return len(self.effects)

    def __iter__(self):
        return iter(self.effects)

    def __getitem__(self, i):
        return self.effects[i]

    def __eq__(self, other):
        if not isinstance(other, Povm):
            return NotImplemented
        return self.dim == other.dim and self.effects == other.effects

    __hash__ = None

    @property
    def weights(self):
        return np.array([e.weight for e in self.effects])

    @property
    def labels(self):
        return [e.label for e in self.effects]

    def operators(self):
        """Bare operators stacked as an array of shape ``(n_effects, dim, dim)``."""
        return np.array([e.operator for e in self.effects])

    def weighted_operators(self):
        return self.operators() * self.weights[:, None, None]

    def completeness_residual(self):
        return self.weighted_operators().sum(axis=0) - identity(self.dim)

    def index_of_direction(self, m):
        """Index of the effect equal to ``bloch_projector(m)``; ``KeyError`` if absent."""
        target = bloch_projector(m)
        for i, e in enumerate(self.effects):
            if e.operator.shape == target.shape and np.max(np.abs(e.operator - target)) <= _DIRECTION_TOL:
                return i
        raise KeyError(f"direction {np.round(np.asarray(m, float), 12).tolist()} not in POVM")


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Real coefficient vectors ``f`` with ``sum_mu f_mu w_mu A_mu = 0``.

    Rows of ``coefficients`` are constraints; the weight is folded in, so
    each row acts on the *weighted* effects.
    """

    coefficients: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim == 1:
            c = c.reshape(1, -1) if c.size else c.reshape(0, 0)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def __len__(self):
        return self.coefficients.shape[0]

    def __iter__(self):
        return iter(self.coefficients)

    def __eq__(self, other):
        if not isinstance(other, ConstraintSet):
            return NotImplemented
        return np.array_equal(self.coefficients, other.coefficients)

    __hash__ = None

    def residuals(self, povm):
        """Max-entry size of ``sum f_mu w_mu A_mu`` for every stored vector."""
        if len(self) == 0:
            return np.zeros(0)
        combo = np.einsum("km,mij->kij", self.coefficients, povm.weighted_operators())
        return np.abs(combo).reshape(len(self), -1).max(axis=1)


def bloch_projector(m):
    """Rank-1 projector ``(I + m . sigma) / 2`` for a unit 3-vector ``m``."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3,):
        raise ValueError(f"direction must be a 3-vector, got shape {m.shape}")
    norm = np.linalg.norm(m)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"direction must be a unit vector, |m| = {norm:.12g}")
    return 0.5 * (identity(2) + m[0] * PAULI_X + m[1] * PAULI_Y + m[2] * PAULI_Z)


def _direction_label(m):
    names = {(1, 0, 0): "+x", (-1, 0, 0): "-x", (0, 1, 0): "+y",
             (0, -1, 0): "-y", (0, 0, 1): "+z", (0, 0, -1): "-z"}
    key = tuple(int(round(v)) for v in m)
    if np.allclose(m, key, atol=1e-12) and key in names:
        return names[key]
    return "m(" + ",".join(f"{v:+.6f}" for v in m) + ")"


def sphere_povm(directions, weights, labels=None):
    """Finite stand-in for the POVM of all qubit pure-state projectors.

    Parameters
    ----------
    directions : (n, 3) array_like
        Unit Bloch vectors. The set must be antipodally balanced,
        ``sum_mu w_mu m_mu = 0``.
    weights : (n,) array_like
        Positive measure weights summing to 2, so that
        ``sum w (I + m.sigma)/2 = I``.
    labels : sequence of str, optional

    Raises
    ------
    CompletenessError
        If the weights or directions break completeness; ``residual`` holds
        ``sum w A - I``.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    weights = np.asarray(weights, dtype=float).ravel()
    if directions.shape != (len(weights), 3):
        raise ValueError("need one weight per 3-vector direction")
    if labels is None:
        labels = [_direction_label(m) for m in directions]
    effects = [Effect(w, bloch_projector(m), lab) for m, w, lab in zip(directions, weights, labels)]
    residual = sum(e.weighted for e in effects) - identity(2)
    total = weights.sum()
    balance = weights @ directions
    if abs(total - 2.0) > COMPLETENESS_TOL or np.max(np.abs(balance)) > COMPLETENESS_TOL:
        raise CompletenessError(
            residual,
            f"direction set is not balanced: sum(w) = {total:.12g} (need 2), "
            f"sum(w m) = {np.round(balance, 12).tolist()}",
        )
    return Povm(2, effects)


AXES = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)
CUBE = np.array(
    [[sx, sy, sz] for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)], dtype=float
) / np.sqrt(3.0)


def axes6():
    """The six Pauli-axis projectors, weight 1/3 each."""
    return sphere_povm(AXES, np.full(6, 1 / 3))


def cube8():
    """The eight cube-diagonal projectors, weight 1/4 each."""
    return sphere_povm(CUBE, np.full(8, 1 / 4))


def default14():
    """Axes plus cube diagonals, uniform weight 1/7 (total weight 2)."""
    return sphere_povm(np.vstack([AXES, CUBE]), np.full(14, 1 / 7))


def ideal_z():
    """Projective sigma_z measurement written as a two-effect POVM."""
    return sphere_povm(AXES[4:6], [1.0, 1.0])


NAMED_POVMS = {"axes6": axes6, "cube8": cube8, "default14": default14, "ideal-z": ideal_z}


def named_povm(name):
    try:
        return NAMED_POVMS[name]()
    except KeyError:
        raise ValueError(f"unknown POVM {name!r}; choose from {sorted(NAMED_POVMS)}") from None


def hermitian_coordinates(ops):
    """Real coordinates of Hermitian matrices in an orthonormal basis.

    Each ``d x d`` Hermitian matrix maps to a real vector of length ``d**2``
    with ``<x(A), x(B)> = Re tr(A^dagger B)``.
    """
    ops = np.asarray(ops, dtype=complex)
    d = ops.shape[-1]
    iu = np.triu_indices(d, 1)
    diag = np.real(np.einsum("...ii->...i", ops))
    upper = ops[..., iu[0], iu[1]]
    return np.concatenate([diag, np.sqrt(2) * upper.real, np.sqrt(2) * upper.imag], axis=-1)


def discover_constraints(povm):
    """Orthonormal basis of all linear relations among the weighted effects.

    Eigen-decomposes the Gram matrix ``G = Re tr((w_mu A_mu)^dagger (w_nu A_nu))``
    and keeps eigenvectors whose eigenvalue is below ``1e-10`` times the
    largest one.
    """
    x = hermitian_coordinates(povm.weighted_operators())
    gram = x @ x.T
    vals, vecs = np.linalg.eigh(gram)
    null = vals < NULLSPACE_RTOL * vals.max()
    return ConstraintSet(vecs[:, null].T.copy())


def span_dimension(povm):
    """Dimension of the real span of the weighted effects."""
    return len(povm) - len(discover_constraints(povm))


def bloch_relation(m, povm):
    """Coefficients of the Bloch-linearity identity for direction ``m``.

    The identity ``A_m - sum_i m_i A_{e_i} - (1 - sum_i m_i)/2 * I = 0`` with
    ``I`` replaced by ``sum_mu w_mu A_mu``, expressed on the weighted effects
    of ``povm``.

    Raises
    ------
    KeyError
        If ``m`` or one of ``+e_1, +e_2, +e_3`` is not a direction of ``povm``.
    """
    m = np.asarray(m, dtype=float)
    w = povm.weights
    coef = np.full(len(povm), -0.5 * (1.0 - m.sum()))
    coef[povm.index_of_direction(m)] += 1.0 / w[povm.index_of_direction(m)]
    for i in range(3):
        j = povm.index_of_direction(np.eye(3)[i])
        coef[j] -= m[i] / w[j]
    return coef
