"""From consistent response tables back to density operators and product mixtures.

Qubit responses go through the polarization vector ``s_i = 2 E(A_{e_i}) - 1``
and ``rho = (I + s.sigma) / 2``; higher dimensions use a least-squares fit
over an informationally complete set of projectors. Positivity of every
reconstructed operator is checked, never assumed: a non-positive result
means the responses did not come from any quantum state.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    AdditivityError,
    InconsistentModelError,
    InvariantError,
    PositivityError,
    UnderdeterminedError,
)
from .lhv import Report, Violation, check_admissible, check_consistency
from .linalg import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    POSITIVITY_TOL,
    DensityOperator,
    as_matrix,
    hermitian_eigenvalues,
    identity,
    tensor,
)
from .povm import AXES, bloch_projector, hermitian_coordinates

BLOCH_TOL = 1e-10
BORN_TOL = 1e-8
ADDITIVITY_TOL = 1e-8
INVERSION_TOL = 1e-9
_RANK_RTOL = 1e-10
_PAULIS = (identity(2), PAULI_X, PAULI_Y, PAULI_Z)


@dataclass(frozen=True, eq=False)
class ProductEnsemble:
    """Weighted list of ``(p, rho1, rho2)`` product terms."""

    terms: tuple

    def __post_init__(self):
        terms = []
        for k, term in enumerate(self.terms):
            p, r1, r2 = term
            if not isinstance(r1, DensityOperator):
                r1 = DensityOperator(r1, (as_matrix(r1).shape[0], 1))
            if not isinstance(r2, DensityOperator):
                r2 = DensityOperator(r2, (as_matrix(r2).shape[0], 1))
            if not float(p) >= -1e-10:
                raise InvariantError("probability", f"term {k} has negative weight {p}")
            terms.append((float(p), r1, r2))
        if not terms:
            raise InvariantError("probability", "ensemble has no terms")
        total = sum(t[0] for t in terms)
        if abs(total - 1.0) > 1e-10:
            raise InvariantError("probability", f"weights sum to {total:.12g}, expected 1")
        if len({(t[1].dim, t[2].dim) for t in terms}) != 1:
            raise InvariantError("dims", "ensemble terms have mixed subsystem dimensions")
        object.__setattr__(self, "terms", tuple(terms))

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __eq__(self, other):
        if not isinstance(other, ProductEnsemble):
            return NotImplemented
        return len(self) == len(other) and all(
            a[0] == b[0] and a[1] == b[1] and a[2] == b[2] for a, b in zip(self.terms, other.terms)
        )

    __hash__ = None

    @property
    def dims(self):
        return (self.terms[0][1].dim, self.terms[0][2].dim)

    @property
    def probabilities(self):
        return np.array([t[0] for t in self.terms])


def bloch_vector(rho):
    """``(tr(rho sigma_x), tr(rho sigma_y), tr(rho sigma_z))`` of a qubit operator."""
    m = as_matrix(rho)
    return np.array([np.trace(m @ s).real for s in _PAULIS[1:]])


def qubit_state(s):
    """``(I + s.sigma)/2`` as a raw matrix (no positivity check)."""
    s = np.asarray(s, dtype=float)
    return 0.5 * (identity(2) + s[0] * PAULI_X + s[1] * PAULI_Y + s[2] * PAULI_Z)


def polarization_vector(responses, povm):
    """``s_i = 2 E(A_{e_i}) - 1`` read off the axis effects of a qubit POVM.

    Raises ``KeyError`` when ``+e_1``, ``+e_2`` or ``+e_3`` is missing.
    """
    responses = np.asarray(responses, dtype=float)
    idx = [povm.index_of_direction(e) for e in np.eye(3)]
    return 2.0 * responses[idx] - 1.0


def conditional_density_qubit(s, lam=None):
    """Qubit density operator with Bloch vector ``s``.

    Raises
    ------
    PositivityError
        If ``|s| > 1 + 1e-10``; the smallest eigenvalue would be
        ``(1 - |s|)/2 < 0``.
    """
    s = np.asarray(s, dtype=float)
    norm = float(np.linalg.norm(s))
    if norm > 1.0 + BLOCH_TOL:
        who = f"lambda {lam}: " if lam is not None else ""
        raise PositivityError(
            f"{who}polarization length |s| = {norm:.12g} > 1; minimum eigenvalue "
            f"{0.5 * (1 - norm):.6g}. The responses are not those of any state",
            lam=lam, bloch_norm=norm, min_eigenvalue=0.5 * (1 - norm), matrix=qubit_state(s),
        )
    return DensityOperator(qubit_state(s), (2, 1))


def verify_born_extension(rho_lambda, responses, povm, tol=BORN_TOL, lam=None, side=None):
    """Compare every response with ``tr(A_mu rho_lambda)``; deviations are reported."""
    m = as_matrix(rho_lambda)
    predicted = np.einsum("mij,ji->m", povm.operators(), m).real
    report = Report()
    for mu, (r, q) in enumerate(zip(np.asarray(responses, dtype=float), predicted)):
        if not abs(r - q) <= tol:
            report.violations.append(
                Violation("born", float(r - q), tol, lam=lam, side=side, index=mu,
                          message=f"response {r:.6g} but tr(A rho) = {q:.6g}")
            )
    return report


def gell_mann_basis(dim):
    """Orthonormal traceless Hermitian basis, ``tr(G_k G_l) = delta_kl``."""
    basis = []
    for j in range(dim):
        for k in range(j + 1, dim):
            g = np.zeros((dim, dim), complex)
            g[j, k] = g[k, j] = 1 / np.sqrt(2)
            basis.append(g)
            g = np.zeros((dim, dim), complex)
            g[j, k], g[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            basis.append(g)
    for l in range(1, dim):
        diag = np.zeros(dim)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return np.array(basis)


def _require_complete(ops, dim):
    coords = hermitian_coordinates(ops)
    sv = np.linalg.svd(coords, compute_uv=False)
    rank = int(np.sum(sv > _RANK_RTOL * sv[0])) if sv.size else 0
    if rank < dim * dim:
        raise UnderdeterminedError(rank, dim * dim, f"projectors span {rank} of the {dim * dim} Hermitian dimensions")


def fit_unit_trace(ops, values):
    """Least-squares Hermitian unit-trace ``rho`` with ``tr(A_k rho) ~ values[k]``.

    The trace constraint is eliminated by writing ``rho = I/d + sum x_k G_k``
    over a traceless orthonormal basis, leaving an unconstrained problem
    solved through its normal equations. No positivity is imposed.
    """
    ops = np.asarray(ops, dtype=complex)
    dim = ops.shape[-1]
    _require_complete(ops, dim)
    g = gell_mann_basis(dim)
    design = np.einsum("aij,kji->ak", ops, g).real
    offset = np.einsum("aii->a", ops).real / dim
    rhs = np.asarray(values, dtype=float) - offset
    x = np.linalg.solve(design.T @ design, design.T @ rhs)
    rho = identity(dim) / dim + np.einsum("k,kij->ij", x, g)
    return 0.5 * (rho + rho.conj().T)


def _checked_state(matrix, lam=None, what="fitted operator"):
    lam_min = hermitian_eigenvalues(matrix)[0]
    if lam_min < POSITIVITY_TOL:
        who = f"lambda {lam}: " if lam is not None else ""
        raise PositivityError(
            f"{who}{what} has minimum eigenvalue {lam_min:.6g} < 0",
            lam=lam, min_eigenvalue=float(lam_min), matrix=matrix,
        )
    return DensityOperator(matrix, (matrix.shape[0], 1))


def _has_axes(povm):
    try:
        for e in np.eye(3):
            povm.index_of_direction(e)
    except (KeyError, ValueError):
        return False
    return povm.dim == 2


def conditional_state(responses, povm, lam=None):
    """Density operator reproducing one hidden value's responses on ``povm``."""
    if _has_axes(povm):
        return conditional_density_qubit(polarization_vector(responses, povm), lam=lam)
    rho = fit_unit_trace(povm.operators(), responses)
    if povm.dim == 2:
        s = bloch_vector(rho)
        if np.linalg.norm(s) > 1.0 + BLOCH_TOL:
            return conditional_density_qubit(s, lam=lam)
    return _checked_state(rho, lam=lam, what="conditional operator")


def extract_ensemble(model, constraints_a=None, constraints_b=None, check=True):
    """Turn an admissible, consistent LHV model into a product ensemble.

    One ``(p_lam, rho1_lam, rho2_lam)`` term per hidden value. Each
    conditional operator must be positive; for consistent responses on a
    qubit POVM containing the axes this is ``|s| <= 1``.

    Raises
    ------
    PositivityError
        Names the first hidden value whose conditional operator is not
        positive. When ``check`` is set the error also carries the
        admissibility/consistency report as ``report``.
    InconsistentModelError
        The model fails admissibility, consistency, or its responses are not
        reproduced by the reconstructed operators.
    """
    report = None
    if check:
        report = check_admissible(model).extend(check_consistency(model, constraints_a, constraints_b))
    terms = []
    for k, entry in enumerate(model.entries):
        try:
            r1 = conditional_state(entry.responses_a, model.povm_a, lam=k)
            r2 = conditional_state(entry.responses_b, model.povm_b, lam=k)
        except PositivityError as err:
            err.report = report
            raise
        terms.append((entry.p, r1, r2))
        if check:
            report.extend(verify_born_extension(r1, entry.responses_a, model.povm_a, lam=k, side="A"))
            report.extend(verify_born_extension(r2, entry.responses_b, model.povm_b, lam=k, side="B"))
    if check and not report.ok:
        raise InconsistentModelError(report)
    return ProductEnsemble(terms)


def assemble_mixture(ensemble):
    """``sum_lam p_lam rho1_lam (x) rho2_lam`` as a bipartite density operator."""
    d1, d2 = ensemble.dims
    m = sum(p * tensor(r1, r2) for p, r1, r2 in ensemble.terms)
    return DensityOperator(m, (d1, d2))


def tomographic_state_from_correlations(corr, directions_a=AXES, directions_b=AXES, tol=INVERSION_TOL):
    """Two-qubit state from product-projector expectations by linear inversion.

    Parameters
    ----------
    corr : callable or (n_a, n_b) array_like
        ``corr(m, n)`` returns ``tr(rho A_m (x) B_n)``; a precomputed table
        indexed like the direction lists is accepted too.
    directions_a, directions_b : (n, 3) array_like
        Unit vectors whose extended vectors ``(1, m)`` span ``R^4``; the six
        Pauli axes are the default.

    Raises
    ------
    UnderdeterminedError
        A direction set does not span.
    InvariantError
        The correlations are not reproduced within ``tol`` (no operator fits
        them all) or the inverted operator is not a state.
    """
    da = np.atleast_2d(np.asarray(directions_a, dtype=float))
    db = np.atleast_2d(np.asarray(directions_b, dtype=float))
    ext_a = np.hstack([np.ones((len(da), 1)), da])
    ext_b = np.hstack([np.ones((len(db), 1)), db])
    for ext in (ext_a, ext_b):
        rank = np.linalg.matrix_rank(ext, tol=1e-10)
        if rank < 4:
            raise UnderdeterminedError(rank, 4, f"direction set spans {rank} of 4 Pauli components")
    if callable(corr):
        table = np.array([[corr(m, n) for n in db] for m in da], dtype=float)
    else:
        table = np.asarray(corr, dtype=float)
    # tr(rho A_m (x) B_n) = (1/4) (1, m) T (1, n)^T with T_ij = tr(rho s_i (x) s_j)
    t = 4.0 * np.linalg.pinv(ext_a) @ table @ np.linalg.pinv(ext_b).T
    resid = float(np.max(np.abs(0.25 * ext_a @ t @ ext_b.T - table)))
    if resid > tol:
        raise InvariantError("correlation-fit", f"no operator reproduces the correlations (residual {resid:.3e})")
    m = 0.25 * sum(t[i, j] * tensor(_PAULIS[i], _PAULIS[j]) for i in range(4) for j in range(4))
    return DensityOperator(m, (2, 2))


def correlation_tensor(rho):
    """``T_ij = tr(rho sigma_i (x) sigma_j)`` with ``sigma_0 = I``, shape (4, 4)."""
    m = as_matrix(rho)
    return np.array([[np.trace(m @ tensor(a, b)).real for b in _PAULIS] for a in _PAULIS])


@dataclass(frozen=True, eq=False)
class ProjectorFrame:
    """Rank-1 projectors plus rank-2 projectors built from orthogonal pairs.

    ``pairs[k] = (i, j)`` states that ``rank2[k] = rank1[i] + rank1[j]``
    with ``rank1[i]`` orthogonal to ``rank1[j]``. Responses over a frame are
    ordered rank-1 first, then rank-2.
    """

    dim: int
    rank1: np.ndarray
    pairs: tuple = ()

    def __post_init__(self):
        r1 = np.array(self.rank1, dtype=complex)
        dim = int(self.dim)
        if dim < 2 or r1.ndim != 3 or r1.shape[1:] != (dim, dim):
            raise InvariantError("dims", f"rank-1 projectors must have shape (n, {dim}, {dim})")
        for k, a in enumerate(r1):
            if np.max(np.abs(a @ a - a)) > 1e-10 or abs(np.trace(a) - 1) > 1e-10:
                raise InvariantError("projector", f"rank-1 entry {k} is not a rank-1 projector")
        pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        for i, j in pairs:
            if np.max(np.abs(r1[i] @ r1[j])) > 1e-10:
                raise InvariantError("projector", f"pair ({i}, {j}) is not orthogonal")
        r1.setflags(write=False)
        object.__setattr__(self, "rank1", r1)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "pairs", pairs)

    @property
    def rank2(self):
        return np.array([self.rank1[i] + self.rank1[j] for i, j in self.pairs]).reshape(-1, self.dim, self.dim)

    def projectors(self):
        """All projectors in response order: rank-1 then rank-2."""
        return np.concatenate([self.rank1, self.rank2])

    def __len__(self):
        return len(self.rank1) + len(self.pairs)

    def __eq__(self, other):
        if not isinstance(other, ProjectorFrame):
            return NotImplemented
        return self.dim == other.dim and self.pairs == other.pairs and np.array_equal(self.rank1, other.rank1)

    __hash__ = None


def _is_prime(n):
    return n >= 2 and all(n % k for k in range(2, int(n**0.5) + 1))


def _frame_from_bases(dim, bases):
    rank1, pairs = [], []
    for basis in bases:
        start = len(rank1)
        for v in basis.T:
            rank1.append(np.outer(v, v.conj()))
        for a in range(dim):
            for b in range(a + 1, dim):
                pairs.append((start + a, start + b))
    return ProjectorFrame(dim, np.array(rank1), tuple(pairs))


def mub_bases(dim, count=None):
    """Mutually unbiased bases (as unitary column matrices) for prime ``dim``.

    The computational basis followed by the ``dim`` quadratic-phase Fourier
    bases; ``count`` truncates the list.
    """
    if not _is_prime(dim):
        raise ValueError(f"mutually unbiased bases are built for prime dimensions only, got {dim}")
    omega = np.exp(2j * np.pi / dim)
    n = np.arange(dim)
    bases = [np.eye(dim, dtype=complex)]
    for k in range(dim):
        if dim == 2:
            phases = np.array([[1, 1], [1, -1]]) if k == 0 else np.array([[1, 1], [1j, -1j]])
            bases.append(phases / np.sqrt(2))
            continue
        cols = [omega ** (k * n * n + j * n) for j in range(dim)]
        bases.append(np.array(cols).T / np.sqrt(dim))
    return bases[:count] if count is not None else bases


def mub_frame(dim, count=None):
    """Frame of all projectors from ``count`` mutually unbiased bases (default: all ``dim + 1``)."""
    return _frame_from_bases(dim, mub_bases(dim, count))


def pair_frame(dim):
    """Informationally complete frame for any dimension.

    Computational basis vectors plus ``(e_j +/- e_k)/sqrt2`` and
    ``(e_j +/- i e_k)/sqrt2``; orthogonal pairs within each family give the
    rank-2 projectors.
    """
    e = np.eye(dim, dtype=complex)
    rank1 = [np.outer(v, v.conj()) for v in e]
    pairs = [(a, b) for a in range(dim) for b in range(a + 1, dim)]
    for j in range(dim):
        for k in range(j + 1, dim):
            for phase in (1, 1j):
                for sign in (1, -1):
                    v = (e[j] + sign * phase * e[k]) / np.sqrt(2)
                    rank1.append(np.outer(v, v.conj()))
                pairs.append((len(rank1) - 2, len(rank1) - 1))
    return ProjectorFrame(dim, np.array(rank1), tuple(pairs))


def default_frame(dim):
    """All mutually unbiased bases for prime ``dim``, else :func:`pair_frame`."""
    return mub_frame(dim) if _is_prime(dim) else pair_frame(dim)


def frame_responses(frame, rho):
    """Born values ``tr(A rho)`` over the frame, rank-1 then rank-2."""
    return np.einsum("aij,ji->a", frame.projectors(), as_matrix(rho)).real


def additivity_residuals(frame, responses):
    """``E(A_i) + E(A_j) - E(A_ij)`` for every listed orthogonal pair."""
    r = np.asarray(responses, dtype=float)
    n1 = len(frame.rank1)
    return {(i, j): float(r[i] + r[j] - r[n1 + k]) for k, (i, j) in enumerate(frame.pairs)}


def gleason_fit(frame, responses, tol=ADDITIVITY_TOL):
    """Density operator whose projector expectations match ``responses``.

    Additivity ``E(A_psi) + E(A_phi) = E(A_psi + A_phi)`` is checked on every
    orthogonal pair first, then a Hermitian unit-trace operator is fitted by
    least squares over all frame projectors. Positivity is verified after the
    fit and reported, not enforced.

    Raises
    ------
    AdditivityError
        Some pair residual exceeds ``tol``; ``residuals`` lists all pairs.
    UnderdeterminedError
        The rank-1 projectors do not span the Hermitian operators.
    PositivityError
        The fitted operator has a negative eigenvalue; ``matrix`` holds it.
    """
    r = np.asarray(responses, dtype=float)
    if r.shape != (len(frame),):
        raise ValueError(f"expected {len(frame)} responses, got {r.shape}")
    residuals = additivity_residuals(frame, r)
    if any(abs(v) > tol for v in residuals.values()):
        raise AdditivityError(residuals, tol)
    _require_complete(frame.rank1, frame.dim)
    rho = fit_unit_trace(frame.projectors(), r)
    return _checked_state(rho)
