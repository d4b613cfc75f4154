import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vpcf.errors import DegenerateEdge, TooFewVertices, ZeroVolume
from vpcf.geometry import (ClosedCurve, average_curvature_nonlocal, build_cache,
                           detect_touch, polygon_diameter, read_snapshot,
                           resample_uniform, shoelace_area, write_snapshot)
from vpcf.scenarios import capsule, circle, dumbbell, ellipse, figure_eight


def star_polygon(radii):
    n = len(radii)
    th = np.arange(n) * (2.0 * np.pi / n)
    return ClosedCurve(np.column_stack([radii * np.cos(th),
                                        radii * np.sin(th)]))


def test_circle_identities():
    g = build_cache(circle(1.0, 256))
    assert np.max(np.abs(g.kappa - 1.0)) <= 1e-3
    assert abs(g.length - 2 * np.pi) <= 1e-3
    assert abs(g.area - np.pi) <= 1e-3
    assert abs(g.kappa_bar - 1.0) <= 1e-3
    assert g.turning_number == 1
    assert abs(g.diameter - 2.0) <= 1e-3
    assert abs(g.dual_lengths.sum() - g.length) <= 1e-12 * g.length


def test_circle_stencil_is_exact():
    # uniformly sampled circles are exact for the three-point stencil
    g = build_cache(circle(2.5, 512))
    assert np.max(np.abs(g.kappa - 1 / 2.5)) <= 1e-12


def test_reversed_orientation_flips_signs():
    pts = circle(1.0, 256).vertices[::-1]
    g = build_cache(ClosedCurve(pts))
    assert np.max(np.abs(g.kappa + 1.0)) <= 1e-3
    assert abs(g.area + np.pi) <= 1e-3
    assert g.turning_number == -1


def test_ellipse_curvature_at_apex():
    g = build_cache(ellipse(2.0, 1.0, 512))
    # closed form a/b^2 at the (a, 0) vertex
    assert abs(g.kappa[0] - 2.0) <= 2e-3
    assert g.turning_number == 1


def test_figure_eight_has_zero_area_and_turning():
    g = build_cache(figure_eight(256))
    assert abs(g.area) <= 1e-12
    assert g.turning_number == 0


def test_double_wound_circle_turning_number():
    th = np.arange(64) * (4.0 * np.pi / 64)
    g = build_cache(ClosedCurve(np.column_stack([np.cos(th), np.sin(th)])))
    assert g.turning_number == 2


def test_too_few_vertices():
    with pytest.raises(TooFewVertices):
        ClosedCurve(np.zeros((8, 2)) + np.arange(8)[:, None])


def test_degenerate_edge():
    pts = circle(1.0, 64).vertices.copy()
    pts[3] = pts[4]
    with pytest.raises(DegenerateEdge):
        ClosedCurve(pts)


def test_diameter_matches_brute_force():
    rng = np.random.default_rng(7)
    curve = star_polygon(rng.uniform(0.5, 2.0, size=151))
    d, pair = polygon_diameter(curve.vertices)
    best, best_pair = -1.0, None
    x, y = curve.vertices[:, 0], curve.vertices[:, 1]
    for i in range(len(curve)):
        for j in range(len(curve)):
            d2 = (x[i] - x[j]) ** 2 + (y[i] - y[j]) ** 2
            if d2 > best:
                best, best_pair = d2, (min(i, j), max(i, j))
    assert d == np.sqrt(best)
    assert pair == best_pair


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.5, 2.0), min_size=16, max_size=48))
def test_shoelace_equals_edge_normal_moment(radii):
    # 1/2 sum <edge midpoint, outward edge normal * edge length> is the
    # shoelace area, term by term
    X = star_polygon(np.asarray(radii)).vertices
    E = np.roll(X, -1, axis=0) - X
    mid = X + 0.5 * E
    moment = 0.5 * np.sum(mid[:, 0] * E[:, 1] - mid[:, 1] * E[:, 0])
    area = shoelace_area(X)
    assert abs(area - moment) <= 1e-12 * (1.0 + abs(area))


def test_resample_preserves_length():
    t = np.arange(1024) * (2 * np.pi / 1024)
    tc = t + 0.5 * np.sin(t)  # clustered parametrization
    curve = ClosedCurve(np.column_stack([np.cos(tc), np.sin(tc)]))
    out = resample_uniform(curve)
    g0, g1 = build_cache(curve), build_cache(out)
    assert abs(g1.length - g0.length) <= 1e-6 * g0.length
    assert g1.edge_lengths.max() / g1.edge_lengths.min() <= 1 + 1e-6
    assert np.allclose(out.vertices[0], curve.vertices[0], atol=1e-12)


def test_resample_capsule_edge_ratio():
    out = resample_uniform(capsule(0.1, 512))
    g = build_cache(out)
    assert g.edge_lengths.max() / g.edge_lengths.min() <= 1.01


def test_resample_rejects_tiny_target():
    with pytest.raises(TooFewVertices):
        resample_uniform(circle(1.0, 64), 8)


def test_nonlocal_average_stationary_circle():
    c = circle(1.0, 256)
    g = build_cache(c)
    val = average_curvature_nonlocal(c, np.zeros(len(c)))
    assert val == pytest.approx(g.length / (2 * g.area), abs=1e-14)
    assert abs(val - 1.0) <= 1e-3


def test_nonlocal_average_vanishes_for_unforced_velocity():
    c = circle(1.0, 256)
    g = build_cache(c)
    assert abs(average_curvature_nonlocal(c, -g.kappa)) <= 1e-12


@pytest.mark.parametrize("lam", [0.7, -0.3])
def test_nonlocal_average_recovers_forcing(lam):
    c = circle(1.0, 512)
    g = build_cache(c)
    val = average_curvature_nonlocal(c, -(g.kappa - lam))
    assert abs(val - lam) <= 1e-3


def test_nonlocal_average_zero_volume():
    f8 = figure_eight(256)
    with pytest.raises(ZeroVolume):
        average_curvature_nonlocal(f8, np.zeros(len(f8)))


def test_touch_empty_on_circle():
    rep = detect_touch(circle(1.0, 256), 0.1)
    assert len(rep) == 0
    assert not rep.has_loss_pair


def test_touch_flags_dumbbell_neck():
    rep = detect_touch(dumbbell(0.01, 512), 0.05)
    assert rep.has_loss_pair
    neck = rep.flagged
    assert np.min(rep.alignments[neck]) <= -0.999
    assert np.all(rep.side_signs[rep.flagged] < 0)
    assert np.all(rep.separations < 0.05)


def test_snapshot_roundtrip(tmp_path):
    c = ClosedCurve(circle(1.3, 64).vertices, time=0.125)
    path = tmp_path / "snap_0.csv"
    write_snapshot(path, c)
    back = read_snapshot(path)
    assert back.time == c.time
    assert np.array_equal(back.vertices, c.vertices)
