"""Dense complex linear algebra for small Hermitian operators.

Matrices are plain ``numpy`` complex arrays. Subsystem 1 is the slow
(leading) tensor index and subsystem 2 the fast one, matching ``np.kron``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvariantError

#: Entrywise tolerance for ``M == M^dagger``.
HERMITIAN_TOL = 1e-10
#: Smallest eigenvalue still accepted as positive semidefinite.
POSITIVITY_TOL = -1e-10
#: Allowed deviation of a state's trace from one.
TRACE_TOL = 1e-10

MAX_DIM = 9
_JACOBI_OFF_TOL = 1e-14
_JACOBI_MAX_SWEEPS = 100

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def identity(dim):
    """Complex identity of size ``dim``."""
    return np.eye(dim, dtype=complex)


def pauli():
    """Return the Pauli triple ``(sigma_x, sigma_y, sigma_z)`` as fresh arrays."""
    return PAULI_X.copy(), PAULI_Y.copy(), PAULI_Z.copy()


def as_matrix(m):
    """Coerce ``m`` to a square complex 2-D array (DensityOperator unwrapped)."""
    if isinstance(m, DensityOperator):
        return m.matrix
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def hermitian_residual(m):
    m = as_matrix(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m, tol=HERMITIAN_TOL):
    return hermitian_residual(m) <= tol


def tensor(a, b):
    """Kronecker product with subsystem 1 as the slow index."""
    return np.kron(as_matrix(a), as_matrix(b))


def _jacobi(h, want_vectors):
    a = np.array(h, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex) if want_vectors else None
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.real(np.diag(a)).copy(), v
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.linalg.norm(a[~np.eye(n, dtype=bool)])
        if off <= _JACOBI_OFF_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                mag = abs(b)
                if mag < 1e-300:
                    continue
                phase = b / mag
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # phase fix on q, then a real rotation in the (p, q) plane
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
                if want_vectors:
                    v[:, idx] = v[:, idx] @ g
    return np.real(np.diag(a)).copy(), v


def _check_hermitian_input(m):
    m = as_matrix(m)
    if m.shape[0] > MAX_DIM * MAX_DIM:
        raise ValueError(f"dimension {m.shape[0]} exceeds supported maximum")
    res = hermitian_residual(m)
    if res > HERMITIAN_TOL:
        raise InvariantError("hermitian", f"matrix is not Hermitian (residual {res:.3e})")
    return m


def hermitian_eigenvalues(m):
    """Ascending real eigenvalues of a Hermitian matrix by cyclic complex Jacobi.

    Raises
    ------
    InvariantError
        If ``m`` deviates from Hermitian by more than ``HERMITIAN_TOL``.
    """
    m = _check_hermitian_input(m)
    vals, _ = _jacobi(m, want_vectors=False)
    return np.sort(vals)


def hermitian_eigh(m):
    """Eigenvalues (ascending) and unit eigenvectors (columns) of a Hermitian matrix."""
    m = _check_hermitian_input(m)
    vals, vecs = _jacobi(m, want_vectors=True)
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]


def _bipartite(rho, dims):
    if isinstance(rho, DensityOperator):
        return rho.matrix, rho.dims
    m = as_matrix(rho)
    if dims is None:
        dims = default_dims(m.shape[0])
    d1, d2 = dims
    if d1 * d2 != m.shape[0]:
        raise ValueError(f"dims {dims} incompatible with matrix size {m.shape[0]}")
    return m, (int(d1), int(d2))


def partial_transpose(rho, subsystem=2, dims=None):
    """Transpose the indices of one tensor factor.

    Parameters
    ----------
    rho : DensityOperator or array_like
        Bipartite operator; ``dims`` is required for bare arrays whose size is
        not a perfect square.
    subsystem : {1, 2}
        Factor to transpose.
    """
    if subsystem not in (1, 2):
        raise ValueError(f"subsystem must be 1 or 2, got {subsystem!r}")
    m, (d1, d2) = _bipartite(rho, dims)
    t = m.reshape(d1, d2, d1, d2)
    if subsystem == 1:
        t = t.transpose(2, 1, 0, 3)
    else:
        t = t.transpose(0, 3, 2, 1)
    return t.reshape(d1 * d2, d1 * d2).copy()


def partial_trace(rho, keep=1, dims=None):
    """Reduced density operator of subsystem ``keep``."""
    if keep not in (1, 2):
        raise ValueError(f"keep must be 1 or 2, got {keep!r}")
    m, (d1, d2) = _bipartite(rho, dims)
    t = m.reshape(d1, d2, d1, d2)
    if keep == 1:
        red = np.einsum("ajbj->ab", t)
        d = d1
    else:
        red = np.einsum("iaib->ab", t)
        d = d2
    return DensityOperator(red, (d, 1))


def default_dims(n):
    """``(d, d)`` when ``n`` is a perfect square, otherwise ``(n, 1)``."""
    r = int(round(np.sqrt(n)))
    return (r, r) if r * r == n and n > 1 else (n, 1)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Positive unit-trace Hermitian matrix on a (possibly bipartite) space.

    The constructor validates Hermiticity, trace and positivity and stores a
    read-only copy of the matrix. Use ``dims=(d, 1)`` for a single subsystem.
    """

    matrix: np.ndarray
    dims: tuple

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvariantError("shape", f"density matrix must be square, got {m.shape}")
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 2 or dims[0] * dims[1] != m.shape[0] or min(dims) < 1:
            raise InvariantError("dims", f"dims {self.dims} do not match size {m.shape[0]}")
        res = hermitian_residual(m)
        if res > HERMITIAN_TOL:
            raise InvariantError("hermitian", f"state is not Hermitian (residual {res:.3e})")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvariantError("unit-trace", f"trace is {tr.real:.12g}{tr.imag:+.3e}j, expected 1")
        lam = hermitian_eigenvalues(m)[0]
        if lam < POSITIVITY_TOL:
            raise InvariantError("positivity", f"minimum eigenvalue {lam:.6g} is negative")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DensityOperator):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.matrix, other.matrix)

    __hash__ = None

    def __repr__(self):
        return f"DensityOperator(dims={self.dims}, matrix=\n{self.matrix!r})"

    def eigenvalues(self):
        return hermitian_eigenvalues(self.matrix)


def check_density(x, dims=None):
    """Validate ``x`` as a density operator and return a :class:`DensityOperator`.

    Accepts an existing instance (returned unchanged when ``dims`` agrees) or
    anything ``np.asarray`` understands.
    """
    if isinstance(x, DensityOperator):
        if dims is not None and tuple(dims) != x.dims:
            return DensityOperator(x.matrix, dims)
        return x
    m = as_matrix(x)
    return DensityOperator(m, dims if dims is not None else default_dims(m.shape[0]))


def frobenius(a, b):
    """Frobenius distance between two operators."""
    return float(np.linalg.norm(as_matrix(a) - as_matrix(b)))
