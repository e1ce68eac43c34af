"""Named states, random states and random product ensembles used as fixtures."""

import numpy as np

from .linalg import DensityOperator, identity
from .reconstruction import ProductEnsemble, qubit_state

SINGLET_VECTOR = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


def maximally_mixed(d1=2, d2=2):
    n = d1 * d2
    return DensityOperator(identity(n) / n, (d1, d2))


def pure_state(psi, dims=(2, 2)):
    psi = np.asarray(psi, dtype=complex)
    return DensityOperator(np.outer(psi, psi.conj()), dims)


def singlet():
    """Projector onto ``(|01> - |10>)/sqrt2``."""
    return pure_state(SINGLET_VECTOR)


def werner(p):
    """``p * singlet + (1 - p) * I/4``; entangled exactly for ``p > 1/3``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Werner parameter must lie in [0, 1], got {p}")
    return DensityOperator(p * singlet().matrix + (1 - p) * identity(4) / 4, (2, 2))


def random_density(dim, rng, rank=None):
    """Random density matrix from a Ginibre matrix (Hilbert-Schmidt measure for full rank)."""
    rng = np.random.default_rng(rng)
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real, (dim, 1))


def random_bloch(rng, pure=False):
    """Bloch vector uniform in the unit ball (on the sphere if ``pure``)."""
    rng = np.random.default_rng(rng)
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return v if pure else v * rng.random() ** (1 / 3)


def random_state(dims, rng):
    """Random full-rank state on a ``d1 x d2`` space (generally entangled)."""
    d1, d2 = dims
    rho = random_density(d1 * d2, rng)
    return DensityOperator(rho.matrix, (d1, d2))


def random_ensemble(k, rng, dims=(2, 2), pure=False):
    """Random ``k``-term product ensemble with Dirichlet(1) weights.

    Qubit factors are drawn uniformly from the Bloch ball (or sphere when
    ``pure``); other dimensions use :func:`random_density`.
    """
    rng = np.random.default_rng(rng)
    p = rng.dirichlet(np.ones(k))
    p[-1] = 1.0 - p[:-1].sum()

    def factor(d):
        if d == 2:
            return DensityOperator(qubit_state(random_bloch(rng, pure)), (2, 1))
        return random_density(d, rng, rank=1 if pure else None)

    return ProductEnsemble([(pk, factor(dims[0]), factor(dims[1])) for pk in p])


NAMED_STATES = {
    "maximally-mixed": lambda **kw: maximally_mixed(),
    "singlet": lambda **kw: singlet(),
    "werner": lambda p=0.5, **kw: werner(p),
    "random": lambda seed=0, **kw: random_state((2, 2), seed),
}
