import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lhvsep.exceptions import InvariantError
from lhvsep.linalg import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityOperator,
    check_density,
    hermitian_eigenvalues,
    hermitian_eigh,
    identity,
    partial_trace,
    partial_transpose,
    tensor,
)
from lhvsep.states import SINGLET_VECTOR, random_density, singlet

from conftest import random_hermitian

A_E3 = np.diag([1.0, 0.0]).astype(complex)


def test_tensor_examples():
    np.testing.assert_array_equal(tensor(identity(2), identity(2)), identity(4))
    np.testing.assert_array_equal(tensor(PAULI_Z, PAULI_Z), np.diag([1, -1, -1, 1]))
    np.testing.assert_array_equal(tensor(A_E3, A_E3), np.diag([1, 0, 0, 0]))


def test_tensor_entrywise_definition(rng):
    a = random_hermitian(rng, 2)
    b = random_hermitian(rng, 3)
    t = tensor(a, b)
    for i in range(2):
        for j in range(2):
            np.testing.assert_allclose(t[3 * i:3 * i + 3, 3 * j:3 * j + 3], a[i, j] * b, atol=1e-15)


@pytest.mark.parametrize("seed", range(20))
def test_tensor_associative_and_trace_multiplicative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_hermitian(rng, 2) for _ in range(3))
    np.testing.assert_allclose(tensor(a, tensor(b, c)), tensor(tensor(a, b), c), atol=1e-12)
    np.testing.assert_allclose(np.trace(tensor(a, b)), np.trace(a) * np.trace(b), atol=1e-12)


def test_eigenvalue_examples():
    np.testing.assert_allclose(hermitian_eigenvalues(identity(2)), [1, 1], atol=1e-14)
    np.testing.assert_allclose(hermitian_eigenvalues(PAULI_X), [-1, 1], atol=1e-14)
    np.testing.assert_allclose(hermitian_eigenvalues(PAULI_Y), [-1, 1], atol=1e-14)
    pt = partial_transpose(singlet())
    np.testing.assert_allclose(hermitian_eigenvalues(pt), [-0.5, 0.5, 0.5, 0.5], atol=1e-12)


def test_singlet_pt_matches_characteristic_polynomial():
    # det(x I - PT) rebuilt from our eigenvalues must equal the one from the matrix;
    # root-finding itself is ill-conditioned at the triple root 1/2
    pt = partial_transpose(singlet())
    lam = hermitian_eigenvalues(pt)
    np.testing.assert_allclose(np.poly(lam), np.poly(pt).real, atol=1e-12)
    np.testing.assert_allclose(np.poly(pt).real, [1, -1, 0, 0.25, -0.0625], atol=1e-12)


@pytest.mark.parametrize("seed", range(50))
def test_dim2_against_closed_form(seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, 2)
    tr, det = np.trace(h).real, np.linalg.det(h).real
    disc = np.sqrt(tr * tr / 4 - det)
    expected = np.array([tr / 2 - disc, tr / 2 + disc])
    np.testing.assert_allclose(hermitian_eigenvalues(h), expected, rtol=1e-10, atol=1e-10 * np.abs(expected).max())


@pytest.mark.parametrize("n", range(1, 10))
def test_eigh_against_numpy(n, rng):
    for _ in range(5):
        h = random_hermitian(rng, n)
        vals, vecs = hermitian_eigh(h)
        np.testing.assert_allclose(vals, np.linalg.eigvalsh(h), atol=1e-11)
        np.testing.assert_allclose(h @ vecs, vecs * vals, atol=1e-11)
        np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(n), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_eigenvalue_power_sums(n, seed, scale):
    h = scale * random_hermitian(np.random.default_rng(seed), n)
    lam = hermitian_eigenvalues(h)
    assert np.all(np.diff(lam) >= 0)
    assert abs(lam.sum() - np.trace(h).real) <= 1e-10 * max(1.0, scale)
    assert abs((lam ** 2).sum() - np.trace(h @ h).real) <= 1e-9 * max(1.0, scale) ** 2


def test_degenerate_and_diagonal_inputs():
    np.testing.assert_allclose(hermitian_eigenvalues(np.zeros((3, 3))), np.zeros(3))
    np.testing.assert_allclose(hermitian_eigenvalues(np.diag([3.0, -1.0, 2.0])), [-1, 2, 3])


def test_non_hermitian_rejected():
    with pytest.raises(InvariantError) as info:
        hermitian_eigenvalues(np.array([[0, 1], [0, 0]]))
    assert info.value.invariant == "hermitian"


def test_partial_transpose_examples(rng):
    mm = identity(4) / 4
    np.testing.assert_array_equal(partial_transpose(mm, 1), mm)
    r1, r2 = random_density(2, rng).matrix, random_density(2, rng).matrix
    np.testing.assert_allclose(partial_transpose(tensor(r1, r2), 1), tensor(r1.T, r2), atol=1e-15)
    np.testing.assert_allclose(partial_transpose(tensor(r1, r2), 2), tensor(r1, r2.T), atol=1e-15)
    assert hermitian_eigenvalues(partial_transpose(singlet(), 2))[0] == pytest.approx(-0.5, abs=1e-12)


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_partial_transpose_involution(dims, rng):
    rho = random_density(dims[0] * dims[1], rng).matrix
    for sub in (1, 2):
        once = partial_transpose(rho, sub, dims)
        np.testing.assert_allclose(once, once.conj().T, atol=1e-15)
        assert np.trace(once) == pytest.approx(1.0)
        np.testing.assert_allclose(partial_transpose(once, sub, dims), rho, atol=1e-14)
    # transposing both factors is the full transpose
    both = partial_transpose(partial_transpose(rho, 1, dims), 2, dims)
    np.testing.assert_allclose(both, rho.T, atol=1e-15)


def test_partial_trace_examples(rng):
    r1, r2 = random_density(2, rng).matrix, random_density(3, rng).matrix
    np.testing.assert_allclose(partial_trace(tensor(r1, r2), 1, (2, 3)).matrix, r1, atol=1e-15)
    np.testing.assert_allclose(partial_trace(tensor(r1, r2), 2, (2, 3)).matrix, r2, atol=1e-15)
    np.testing.assert_allclose(partial_trace(singlet(), 1).matrix, identity(2) / 2, atol=1e-15)
    np.testing.assert_allclose(partial_trace(identity(4) / 4, 2).matrix, identity(2) / 2, atol=1e-15)


def test_partial_trace_by_index_contraction(rng):
    rho = random_density(6, rng).matrix
    t = rho.reshape(2, 3, 2, 3)
    np.testing.assert_allclose(partial_trace(rho, 1, (2, 3)).matrix, np.einsum("ikjk->ij", t), atol=1e-15)
    np.testing.assert_allclose(partial_trace(rho, 2, (2, 3)).matrix, np.einsum("kikj->ij", t), atol=1e-15)


def test_density_operator_validation():
    DensityOperator(identity(2) / 2, (2, 1))
    with pytest.raises(InvariantError, match="trace") as info:
        DensityOperator(identity(2), (2, 1))
    assert info.value.invariant == "unit-trace"
    with pytest.raises(InvariantError) as info:
        DensityOperator(np.diag([1.5, -0.5]), (2, 1))
    assert info.value.invariant == "positivity"
    with pytest.raises(InvariantError) as info:
        DensityOperator(np.array([[0.5, 0.1], [0.2, 0.5]]), (2, 1))
    assert info.value.invariant == "hermitian"


def test_density_operator_is_immutable_and_comparable():
    rho = check_density(np.outer(SINGLET_VECTOR, SINGLET_VECTOR.conj()))
    assert rho.dims == (2, 2)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1
    assert rho == singlet()
    np.testing.assert_allclose(rho.eigenvalues(), [0, 0, 0, 1], atol=1e-12)
