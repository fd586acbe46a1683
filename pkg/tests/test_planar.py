import numpy as np
import pytest

from foldcont.planar import (
    circle_fold_map,
    compute_flower,
    count_domain_tiles,
    count_preimages,
    critical_curves,
    cubic_map,
    is_fold_point,
    linear_planar,
    make_tile_report,
    planar_det,
    pleat_map,
    probe_pair_report,
    square_map,
    verify_tile_parity,
)

CUBIC_ZEROS = np.array([
    [0.2141, 0.3313], [-0.5367, 0.0], [-0.7893, 2.5802], [1.7752, 1.3903],
    [0.2141, -0.3313], [-0.7893, -2.5802], [1.7752, -1.3903], [-1.8633, 0.0],
])


@pytest.fixture(scope="module")
def circle_curves():
    return critical_curves(circle_fold_map())


@pytest.fixture(scope="module")
def cubic_curves():
    return critical_curves(cubic_map())


def test_circle_determinant():
    F = circle_fold_map()
    rng = np.random.default_rng(0)
    for u in rng.uniform(-2, 2, size=(20, 2)):
        assert planar_det(F, u) == pytest.approx(4 * u @ u - 1)


def test_circle_critical_curve(circle_curves):
    assert len(circle_curves) == 1
    c = circle_curves[0]
    assert c.closed
    assert np.max(np.abs(np.linalg.norm(c.points, axis=1) - 0.5)) <= 1e-6


def test_critical_curves_lie_on_det_zero(cubic_curves, circle_curves):
    for F, curves in ((cubic_map(), cubic_curves), (circle_fold_map(), circle_curves)):
        for c in curves:
            for p in c.points:
                assert abs(planar_det(F, p)) <= 1e-8


def test_cubic_has_two_closed_critical_curves(cubic_curves):
    assert len(cubic_curves) == 2
    assert all(c.closed for c in cubic_curves)


def test_pleat_critical_set_is_vertical_lines():
    F = pleat_map()
    curves = critical_curves(F, box=(-4.0, 4.0, -2.0, 2.0))
    xs = sorted(float(np.mean(c.points[:, 0])) for c in curves)
    np.testing.assert_allclose(xs, [-np.pi, 0.0, np.pi], atol=1e-8)
    for c in curves:
        np.testing.assert_allclose(c.points[:, 0], c.points[0, 0], atol=1e-8)


def test_linear_map_has_no_critical_set():
    F = linear_planar([[2.0, 1.0], [0.0, 1.0]])
    assert critical_curves(F) == []
    assert compute_flower(F, []) == []


def test_circle_map_counts():
    F = circle_fold_map()
    zeros = count_preimages(F, np.zeros(2))
    assert zeros.count == 4
    expected = np.array([[0, 0], [-1, 0], [0.5, np.sqrt(3) / 2], [0.5, -np.sqrt(3) / 2]])
    for p in expected:
        assert np.min(np.linalg.norm(zeros.roots - p, axis=1)) < 1e-10
    assert count_preimages(F, np.array([3.0, 2.0])).count == 2


def test_cubic_map_counts():
    F = cubic_map()
    zeros = count_preimages(F, np.zeros(2))
    assert zeros.count == 9
    for p in CUBIC_ZEROS:
        assert np.min(np.linalg.norm(zeros.roots - p, axis=1)) < 1e-3
    counts = {tuple(y): count_preimages(F, np.array(y)).count for y in ([0.5, 0.0], [0.6, 0.0], [10.0, 0.0])}
    assert sorted(counts.values()) == [3, 5, 7]


def test_same_tile_same_count():
    F = cubic_map()
    assert count_preimages(F, np.array([20.0, 5.0])).count == count_preimages(F, np.array([-30.0, 10.0])).count


def test_circle_parity(circle_curves):
    F = circle_fold_map()
    rep = make_tile_report(F, circle_curves)
    assert rep.adjacency_checks
    assert sorted({c for _, c in rep.probe_points}) == [2, 4]
    assert verify_tile_parity(F, rep).ok


def test_cubic_parity(cubic_curves):
    F = cubic_map()
    rep = make_tile_report(F, cubic_curves)
    assert rep.adjacency_checks
    assert verify_tile_parity(F, rep).ok
    assert {c for _, c in rep.probe_points} <= {3, 5, 7, 9}


def test_square_map_boundary_is_not_a_fold():
    F = square_map()
    rep = probe_pair_report(F, [(np.array([1.0, 0.1]), np.array([1.0, -0.1]))])
    res = verify_tile_parity(F, rep)
    assert not res.ok
    assert "NonFoldBoundary" in res.notes[0]
    assert rep.adjacency_checks[0][1] == 4


def test_fold_test_at_cusp_and_fold():
    F = circle_fold_map()
    assert is_fold_point(F, np.array([-0.5, 0.0]))
    # (1/2, 0) is a cusp: the kernel e2 is tangent to the circle
    assert not is_fold_point(F, np.array([0.5, 0.0]))


def test_circle_flower_and_domain_tiles(circle_curves):
    F = circle_fold_map()
    flower = compute_flower(F, circle_curves)
    assert flower
    img = np.vstack([F(p) for c in circle_curves for p in c.points])
    for poly in flower:
        for v in poly[:: max(1, len(poly) // 50)]:
            assert np.min(np.linalg.norm(img - F(v), axis=1)) <= 1e-2
    assert count_domain_tiles(circle_curves, flower) == 5
