import numpy as np
import pytest
import scipy.sparse as sp

from foldcont.planar import circle_fold_map
from foldcont.spectral import (
    det_sign,
    full_spectrum,
    morse_index,
    rank_one_shifted_solve,
    smallest_modulus_eigenpair,
    stabilize_sign,
)
from foldcont.sturm import build_operator


def closed_form(n):
    h = np.pi / (n + 1)
    return 2 / h**2 * (1 - np.cos(np.arange(1, n + 1) * h))


def test_diagonal_smallest_modulus():
    p = smallest_modulus_eigenpair(np.diag([3.0, -0.1, 5.0]))
    assert p.lambda_s == pytest.approx(-0.1)
    np.testing.assert_allclose(np.abs(p.phi_s), [0, 1, 0], atol=1e-12)
    assert p.gap == pytest.approx(2.9)


def test_shifted_two_point_operator():
    A = build_operator(2).dense()
    J = A - 2 * np.eye(2)
    np.testing.assert_allclose(full_spectrum(J).eigenvalues, [0.9119 - 2, 2.7357 - 2], atol=1e-4)
    # |2.7357 - 2| < |0.9119 - 2|, so the smallest-modulus pair is the upper one
    assert smallest_modulus_eigenpair(J).lambda_s == pytest.approx(2.7357 - 2, abs=1e-4)


def test_fifteen_point_operator_lowest():
    p = smallest_modulus_eigenpair(build_operator(15).dense())
    assert p.lambda_s == pytest.approx(0.99679136, abs=1e-8)


@pytest.mark.parametrize("n", [2, 7, 15, 31])
def test_full_spectrum_matches_closed_form(n):
    s = full_spectrum(build_operator(n).dense())
    np.testing.assert_allclose(s.eigenvalues, closed_form(n), rtol=0, atol=1e-10)
    assert s.morse_index == 0


def test_two_point_spectrum_from_characteristic_polynomial():
    h = np.pi / 3
    # det([[2-x, -1], [-1, 2-x]]) = 0 for x = mu*h^2  ->  mu = 1, 3
    np.testing.assert_allclose(full_spectrum(build_operator(2).dense()).eigenvalues, [1 / h**2, 3 / h**2])
    np.testing.assert_allclose(build_operator(2).eigenvalues(), [0.9119, 2.7357], atol=1e-4)


def test_negative_identity():
    s = full_spectrum(-np.eye(4))
    np.testing.assert_array_equal(s.eigenvalues, [-1.0] * 4)
    assert s.morse_index == 4
    assert morse_index(-np.eye(4)) == 4


def test_eigen_residual_on_random_symmetric():
    rng = np.random.default_rng(3)
    for _ in range(20):
        B = rng.normal(size=(8, 8))
        J = B + B.T
        p = smallest_modulus_eigenpair(J)
        assert np.linalg.norm(p.phi_s) == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(J @ p.phi_s - p.lambda_s * p.phi_s) <= 1e-10 * (1 + np.linalg.norm(J, 2))
        assert abs(p.lambda_s) == pytest.approx(np.min(np.abs(np.linalg.eigvalsh(J))))


def test_sparse_probe_matches_dense():
    n = 700
    A = build_operator(n).sparse() - 3.3 * sp.identity(n, format="csc")
    p = smallest_modulus_eigenpair(A)
    w = closed_form(n) - 3.3
    assert p.lambda_s == pytest.approx(w[np.argmin(np.abs(w))], rel=1e-9)
    assert np.linalg.norm(A @ p.phi_s - p.lambda_s * p.phi_s) <= 1e-10 * (1 + abs(w).max())


def test_sign_stabilization():
    v = np.array([0.1, -0.9, 0.2])
    np.testing.assert_array_equal(stabilize_sign(v), -v)
    prev = np.array([0.0, -1.0, 0.0])
    np.testing.assert_array_equal(stabilize_sign(-v, prev), v)


def test_rank_one_scalar():
    np.testing.assert_allclose(rank_one_shifted_solve(np.zeros((1, 1)), np.ones(1), 1.0, np.array([3.0])), [3.0])


def test_rank_one_diagonal():
    u = rank_one_shifted_solve(np.diag([0.0, 2.0]), np.array([1.0, 0.0]), 1.0, np.array([1.0, 2.0]))
    np.testing.assert_allclose(u, [1.0, 1.0])


def test_rank_one_sparse_matches_dense():
    n = 40
    J = build_operator(n).sparse() - 0.99 * sp.identity(n, format="csc") * build_operator(n).eigenvalues()[0]
    w, V = np.linalg.eigh(J.toarray())
    phi = V[:, 0]
    rhs = np.linspace(-1, 1, n)
    ud = rank_one_shifted_solve(J.toarray(), phi, 1.0, rhs)
    us = rank_one_shifted_solve(J, phi, 1.0, rhs)
    np.testing.assert_allclose(us, ud, rtol=1e-9, atol=1e-12)
    S = J.toarray() + np.outer(phi, phi)
    assert np.linalg.norm(S @ us - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_fold_identity_near_a_fold():
    # symmetric model: the gradient of x^3/3 - x + y^2, which folds at x = 1
    def jac(u):
        return np.diag([u[0] ** 2 - 1.0, 2.0])

    u = np.array([1.001, 0.3])
    J = jac(u)
    p = smallest_modulus_eigenpair(J)
    gp = np.array([1.0, 0.5])
    lam, phi = p.lambda_s, p.phi_s
    rhs = -lam * gp - (phi @ gp) * phi
    uh = rank_one_shifted_solve(J, phi, 1.0, rhs)
    np.testing.assert_allclose(J @ uh, -lam * gp, atol=1e-9)
    assert phi @ uh == pytest.approx(-(phi @ gp), abs=1e-9)


def test_fold_identity_on_circle_map_symmetric_part():
    # the circle map Jacobian at (-1/2 + 1e-3, 0) is diagonal, hence symmetric
    J = circle_fold_map().dense_jacobian(np.array([-0.499, 0.0]))
    p = smallest_modulus_eigenpair(J)
    gp = np.array([1.0, 0.0])
    uh = rank_one_shifted_solve(J, p.phi_s, 1.0, -p.lambda_s * gp - (p.phi_s @ gp) * p.phi_s)
    np.testing.assert_allclose(J @ uh, -p.lambda_s * gp, atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_det_sign_matches_numpy(seed):
    rng = np.random.default_rng(seed)
    J = rng.normal(size=(7, 7))
    assert det_sign(J) == int(np.sign(np.linalg.det(J)))
    assert det_sign(sp.csc_matrix(J)) == int(np.sign(np.linalg.det(J)))
