import numpy as np
import pytest

from phaseloss.errors import InvalidInput
from phaseloss.linalg import hermitian_eig, hermitianize, solve_sld, trace_norm


def random_hermitian(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return hermitianize(a)


def random_density(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_eig_identity():
    es = hermitian_eig(np.eye(3))
    np.testing.assert_allclose(es.eigenvalues, [1, 1, 1])


def test_eig_diagonal():
    es = hermitian_eig(np.diag([2.0, -1.0]))
    np.testing.assert_allclose(es.eigenvalues, [2.0, -1.0])
    np.testing.assert_allclose(np.abs(es.eigenvectors), np.eye(2), atol=1e-12)


def test_eig_exchange_matrix():
    es = hermitian_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(es.eigenvalues, [1.0, -1.0], atol=1e-12)
    np.testing.assert_allclose(np.abs(es.eigenvectors),
                               np.full((2, 2), 1 / np.sqrt(2)), atol=1e-12)


def test_eig_reconstruction_and_trace():
    rng = np.random.default_rng(0)
    for dim in (2, 5, 9):
        h = random_hermitian(rng, dim)
        es = hermitian_eig(h)
        rebuilt = (es.eigenvectors * es.eigenvalues) @ es.eigenvectors.conj().T
        np.testing.assert_allclose(rebuilt, h, atol=1e-10 * np.abs(h).max())
        assert abs(es.eigenvalues.sum() - np.trace(h).real) < 1e-10 * max(1, abs(np.trace(h)))
        ortho = es.eigenvectors.conj().T @ es.eigenvectors
        np.testing.assert_allclose(ortho, np.eye(dim), atol=1e-10)


def test_eig_rejects_non_finite():
    with pytest.raises(InvalidInput):
        hermitian_eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_sld_maximally_mixed():
    drho = np.array([[0.0, 0.1], [0.1, 0.0]])
    np.testing.assert_allclose(solve_sld(np.eye(2) / 2, drho), 2 * drho, atol=1e-12)


def test_sld_rank_deficient_kernel_convention():
    # support block solves 2 drho/(p_i+p_j); kernel-kernel block pinned to zero
    rho = np.diag([1.0, 0.0])
    eps = 1e-3
    drho = np.diag([eps, -eps])
    l_op = solve_sld(rho, drho)
    np.testing.assert_allclose(l_op, np.diag([eps, 0.0]), atol=1e-14)
    residual = drho - 0.5 * (rho @ l_op + l_op @ rho)
    assert abs(residual[0, 0]) < 1e-14        # satisfied on the support


def test_sld_residual_full_rank():
    rng = np.random.default_rng(1)
    for _ in range(10):
        rho = random_density(rng, 4)
        drho = random_hermitian(rng, 4)
        drho -= np.trace(drho).real / 4 * np.eye(4)
        l_op = solve_sld(rho, drho)
        residual = drho - 0.5 * (rho @ l_op + l_op @ rho)
        assert np.linalg.norm(residual) < 1e-9


def test_sld_shape_mismatch():
    with pytest.raises(InvalidInput):
        solve_sld(np.eye(2) / 2, np.eye(3))


def test_trace_norm_values():
    assert trace_norm(np.diag([3.0, -4.0])) == pytest.approx(7.0)
    assert trace_norm(np.zeros((3, 3))) == 0.0
    assert trace_norm(np.array([[0.0, 2.0], [0.0, 0.0]])) == pytest.approx(2.0)


def test_trace_norm_unitary_invariance():
    rng = np.random.default_rng(2)
    m = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    base = trace_norm(m)
    for _ in range(5):
        q, _ = np.linalg.qr(rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)))
        assert abs(trace_norm(q @ m @ q.conj().T) - base) < 1e-10 * base
