import numpy as np
import pytest

from foldcont.core import (
    MapHandle,
    Solution,
    SolutionSet,
    affine_map,
    fd_jacobian,
    linear_map,
    newton_solve,
    relative_residue,
)
from foldcont.errors import NonFinite, ZeroRhs
from foldcont.planar import circle_fold_map, cubic_map, pleat_map
from foldcont.sturm import PLNonlinearity, al_map, build_operator, calibrate_arctan, pl_map


def test_newton_on_linear_map_matches_dense_solve():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(6, 6)) + 6 * np.eye(6)
    g = rng.normal(size=6)
    u, ok, _ = newton_solve(linear_map(A), g, np.zeros(6))
    assert ok
    np.testing.assert_allclose(u, np.linalg.solve(A, g), rtol=1e-12, atol=1e-12)


def test_exact_solution_has_zero_residue():
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    u = np.array([1.0, -2.0])
    rep = relative_residue(linear_map(A), u, A @ u)
    assert rep.residue < 1e-15
    assert rep.accepted


def test_zero_rhs_is_rejected():
    with pytest.raises(ZeroRhs):
        relative_residue(circle_fold_map(), np.array([1.0, 0.0]), np.zeros(2))


def test_residue_threshold_flag():
    F = affine_map(np.eye(2), [1e-6, 0.0])
    rep = relative_residue(F, np.zeros(2), np.array([1.0, 0.0]), threshold=0.5)
    assert rep.accepted == (rep.residue <= rep.threshold)
    with pytest.raises(ValueError):
        relative_residue(F, np.zeros(2), np.ones(2), threshold=0.0)


def test_residue_scale_covariance():
    F = circle_fold_map()
    u = np.array([0.3, -0.7])
    g = np.array([0.2, 0.5])
    for c in (-3.0, 0.01, 7.5):
        Fc = MapHandle(2, lambda v, c=c: c * F(v))
        assert relative_residue(Fc, u, c * g).residue == pytest.approx(relative_residue(F, u, g).residue, rel=1e-12)


def test_fd_jacobian_of_circle_map_at_origin():
    J = fd_jacobian(circle_fold_map(), np.zeros(2), step=1e-5)
    np.testing.assert_allclose(J, [[1.0, 0.0], [0.0, -1.0]], atol=1e-8)


def test_fd_jacobian_of_linear_map():
    A = np.arange(9.0).reshape(3, 3) + np.eye(3)
    np.testing.assert_allclose(fd_jacobian(linear_map(A), np.ones(3)), A, rtol=1e-9, atol=1e-8)


def test_fd_jacobian_step_must_be_positive():
    with pytest.raises(ValueError):
        fd_jacobian(linear_map(np.eye(2)), np.zeros(2), step=0.0)


def test_pl_jacobian_inside_orthant_is_linear_piece():
    op = build_operator(5)
    nl = PLNonlinearity(-1.0, 7.0)
    F = pl_map(op, nl)
    u = np.array([1.0, -2.0, 0.5, -0.1, 3.0])
    D = np.diag(np.where(u > 0, 7.0, -1.0))
    np.testing.assert_array_equal(F.jacobian(u), op.dense() - D)
    # locally linear, so differences reproduce the piece up to roundoff
    np.testing.assert_allclose(fd_jacobian(F, u, 1e-3), op.dense() - D, atol=1e-9)


def test_pl_zero_coordinate_counts_as_positive():
    op = build_operator(3)
    F = pl_map(op, PLNonlinearity(-1.0, 4.0))
    J = F.jacobian(np.array([0.0, -1.0, 1.0]))
    assert J[0, 0] == pytest.approx(op.dense()[0, 0] - 4.0)


@pytest.mark.parametrize("family", ["circle", "cubic", "pleat", "arctan"])
def test_analytic_jacobians_agree_with_differences(family):
    rng = np.random.default_rng(7)
    if family == "circle":
        F, n = circle_fold_map(), 2
    elif family == "cubic":
        F, n = cubic_map(), 2
    elif family == "pleat":
        F, n = pleat_map(), 2
    else:
        F, n = al_map(build_operator(6), calibrate_arctan(-1.0, 30.0)), 6
    for _ in range(100):
        u = rng.uniform(-2, 2, size=n)
        J = F.dense_jacobian(u)
        assert np.linalg.norm(J - fd_jacobian(F, u)) <= 1e-5 * (1 + np.linalg.norm(J))


def test_non_finite_evaluation_is_reported():
    F = MapHandle(1, lambda u: np.log(u))
    with pytest.raises(NonFinite), np.errstate(divide="ignore"):
        F(np.array([0.0]))
    with pytest.raises(NonFinite):
        F(np.array([np.nan]))


def test_solution_set_dedupes_and_keeps_smaller_residue():
    s = SolutionSet()
    assert s.add(Solution(np.array([1.0, 2.0]), 0, 1e-9, source="a"))
    assert not s.add(Solution(np.array([1.0, 2.0 + 1e-12]), 0, 1e-15))
    assert len(s) == 1
    assert s.items[0].residue == 1e-15
    assert s.items[0].source == "a"
    s.add(Solution(np.array([-1.0, 0.0]), 2, 0.0))
    assert s.morse_histogram() == [1, 0, 1]
    assert [tuple(x.u) for x in s.canonical()][0] == (-1.0, 0.0)
