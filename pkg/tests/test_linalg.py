import numpy as np
import pytest

from qsep.linalg import (
    TOL,
    DensityMatrix,
    NotHermitianError,
    hs_inner,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    purity,
    tensor_product,
)
from qsep.states import isotropic, random_density_matrix, random_ket

from conftest import phi_plus


def test_tolerances():
    assert TOL.hermiticity == TOL.psd == TOL.trace == 1e-10
    assert TOL.equality == 1e-12


def test_tensor_product_identity_and_projector():
    np.testing.assert_array_equal(tensor_product(np.eye(2), np.eye(2)), np.eye(4))
    p = np.diag([1.0, 0.0])
    np.testing.assert_array_equal(tensor_product(p, p), np.diag([1.0, 0, 0, 0]))


def test_tensor_product_index_formula(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    out = tensor_product(a, b)
    assert out.shape == (4, 6)
    rb, cb = b.shape
    for i in range(2):
        for j in range(2):
            for k in range(rb):
                for l in range(cb):
                    assert abs(out[i * rb + k, j * cb + l] - a[i, j] * b[k, l]) < 1e-14


def test_tensor_trace_multiplicative_and_associative(rng):
    a, b, c = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for n in (2, 3, 2))
    assert abs(np.trace(tensor_product(a, b)) - np.trace(a) * np.trace(b)) < 1e-12
    np.testing.assert_allclose(tensor_product(tensor_product(a, b), c), tensor_product(a, tensor_product(b, c)), atol=1e-12)


def test_density_matrix_validation():
    with pytest.raises(ValueError, match="trace"):
        DensityMatrix(np.eye(2))
    with pytest.raises(ValueError, match="eigenvalue"):
        DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(NotHermitianError):
        DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(ValueError, match="dims"):
        DensityMatrix(np.eye(4) / 4, (2, 3))
    rho = DensityMatrix(np.eye(6) / 6, (2, 3))
    assert rho.dims == (2, 3) and rho.dim == 6
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1


def test_partial_trace_examples(rng):
    red = partial_trace(phi_plus(), [0])
    np.testing.assert_allclose(red.matrix, np.eye(2) / 2, atol=1e-12)

    ra = random_density_matrix(2, rng)
    rb = random_density_matrix(3, rng)
    rho = DensityMatrix(tensor_product(ra, rb), (2, 3))
    np.testing.assert_allclose(partial_trace(rho, [0]).matrix, ra, atol=1e-12)
    np.testing.assert_allclose(partial_trace(rho, [1]).matrix, rb, atol=1e-12)


def test_partial_trace_summation_oracle(rng):
    rho = DensityMatrix(random_density_matrix(6, rng), (2, 3))
    red = partial_trace(rho, [0]).matrix
    m = rho.matrix
    oracle = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            oracle[i, j] = sum(m[i * 3 + k, j * 3 + k] for k in range(3))
    np.testing.assert_allclose(red, oracle, atol=1e-12)
    assert abs(np.trace(red) - 1) < 1e-12
    np.testing.assert_allclose(red, red.conj().T, atol=1e-12)


def test_partial_trace_tripartite(rng):
    ops = [random_density_matrix(d, rng) for d in (2, 3, 2)]
    rho = DensityMatrix(tensor_product(*ops), (2, 3, 2))
    red = partial_trace(rho, [0, 2])
    assert red.dims == (2, 2)
    np.testing.assert_allclose(red.matrix, tensor_product(ops[0], ops[2]), atol=1e-12)


def test_partial_trace_bad_index():
    with pytest.raises(ValueError):
        partial_trace(phi_plus(), [])
    with pytest.raises(ValueError):
        partial_trace(phi_plus(), [2])


def test_partial_transpose_examples(rng):
    psi = np.kron(random_ket(2, rng), random_ket(3, rng))
    prod = DensityMatrix.from_ket(psi, (2, 3))
    assert min_eigenvalue(partial_transpose(prod)) >= -1e-12

    assert abs(min_eigenvalue(partial_transpose(phi_plus())) + 0.5) < 1e-12

    rho = DensityMatrix(random_density_matrix(6, rng), (2, 3))
    twice = partial_transpose(partial_transpose(rho, (1,)), (1,), dims=(2, 3))
    np.testing.assert_array_equal(twice, rho.matrix)


def test_partial_transpose_cut_choice_and_errors():
    rho = phi_plus()
    # transposing either side gives the same spectrum
    a = np.linalg.eigvalsh(partial_transpose(rho, (0,)))
    b = np.linalg.eigvalsh(partial_transpose(rho, (1,)))
    np.testing.assert_allclose(a, b, atol=1e-12)
    with pytest.raises(ValueError):
        partial_transpose(rho, ())
    with pytest.raises(ValueError):
        partial_transpose(rho, (0, 1))


def _power_iteration_min(h, iters=5000):
    shift = np.linalg.norm(h, 2)
    B = shift * np.eye(len(h)) - h
    v = np.ones(len(h), dtype=complex)
    for _ in range(iters):
        v = B @ v
        v /= np.linalg.norm(v)
    return shift - np.vdot(v, B @ v).real


def test_min_eigenvalue(rng):
    assert min_eigenvalue(np.eye(3)) == pytest.approx(1.0)
    assert min_eigenvalue(np.diag([3.0, -2.0])) == pytest.approx(-2.0)
    g = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    h = (g + g.conj().T) / 2
    assert abs(min_eigenvalue(h) - _power_iteration_min(h)) < 1e-8
    with pytest.raises(NotHermitianError):
        min_eigenvalue(np.array([[0, 1], [0, 0]]))


def test_purity():
    assert purity(phi_plus()) == pytest.approx(1.0, abs=1e-12)
    assert purity(np.eye(3) / 3) == pytest.approx(1 / 3, abs=1e-12)
    rho = isotropic(2, 0.5)
    assert abs(purity(rho) - np.sum(np.abs(rho.matrix) ** 2)) < 1e-12


def test_purity_range(rng):
    for d in (2, 3, 4, 6):
        rho = DensityMatrix(random_density_matrix(d, rng))
        assert 1 / d - 1e-10 <= purity(rho) <= 1 + 1e-10


def test_hs_inner(rng):
    rho = DensityMatrix(random_density_matrix(3, rng))
    assert hs_inner(np.eye(3), rho) == pytest.approx(1.0, abs=1e-12)
    basis = [np.diag(v) for v in np.eye(3)]
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            assert hs_inner(a, b) == (1.0 if i == j else 0.0)

    psi = random_ket(3, rng)
    phi = random_ket(3, rng)
    P = np.outer(phi, phi.conj())
    val = hs_inner(P, np.outer(psi, psi.conj()))
    assert 0 <= val <= 1
    assert abs(val - abs(np.vdot(phi, psi)) ** 2) < 1e-12

    with pytest.raises(ValueError, match="mismatch"):
        hs_inner(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        hs_inner(np.eye(2), np.diag([1.0, 1j]))
