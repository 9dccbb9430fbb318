import math

import numpy as np
import pytest

from tripcover.level_curves import (
    branch_field,
    curves_to_csv,
    intersect_curves,
    rectangle_boundary_points,
    trace_level_curve,
)
from conftest import antipodal_problem

RECT = (5.0, 5.0)


def plane_sum(x, y):
    return np.asarray(x, dtype=float) + np.asarray(y, dtype=float)


def plane_diff(x, y):
    return np.asarray(x, dtype=float) - np.asarray(y, dtype=float) + 5.0


def cone(x, y):
    return np.hypot(np.asarray(x, dtype=float) - 2.5, np.asarray(y, dtype=float) - 2.5)


@pytest.fixture(scope="module")
def fig4_curves(two_pair_a04):
    rp = antipodal_problem(two_pair_a04)
    curves = {}
    for pair in two_pair_a04.pairs:
        for orientation in ("12", "21"):
            for branch in ("a", "b"):
                field = branch_field(two_pair_a04, rp.domain, pair, orientation, branch)
                curve = trace_level_curve(
                    field,
                    pair.acceptance,
                    rp.rect,
                    256,
                    pair=(pair.origin, pair.dest),
                    orientation=orientation,
                    branch=branch,
                )
                curves[(pair.origin, pair.dest, orientation, branch)] = curve
    return rp, curves


def test_affine_field_single_diagonal_polyline():
    curve = trace_level_curve(plane_sum, 5.0, RECT, 64)
    assert len(curve.polylines) == 1
    for x, y in curve.polylines[0]:
        assert abs(x + y - 5.0) < 1e-9
    ends = sorted(rectangle_boundary_points(curve))
    assert len(ends) == 2
    assert ends[0] == (pytest.approx(0.0, abs=1e-9), pytest.approx(5.0, abs=1e-9))
    assert ends[1] == (pytest.approx(5.0, abs=1e-9), pytest.approx(0.0, abs=1e-9))


def test_level_below_field_range_empty():
    curve = trace_level_curve(plane_sum, 0.0, RECT, 64)
    assert curve.empty
    assert rectangle_boundary_points(curve) == []


def test_level_above_field_range_empty():
    curve = trace_level_curve(plane_sum, 100.0, RECT, 64)
    assert curve.empty


def test_low_resolution_rejected():
    with pytest.raises(ValueError, match=">= 16"):
        trace_level_curve(plane_sum, 5.0, RECT, 8)


def test_negative_level_rejected():
    with pytest.raises(ValueError, match="nonnegative"):
        trace_level_curve(plane_sum, -1.0, RECT, 64)


def test_non_finite_field_rejected():
    bad = lambda x, y: np.where(np.asarray(x) > 2.5, np.nan, 1.0) + 0 * np.asarray(y)
    with pytest.raises(ValueError, match="non-finite"):
        trace_level_curve(bad, 0.5, RECT, 64)


def test_closed_interior_curve_has_no_boundary_points():
    curve = trace_level_curve(cone, 1.0, RECT, 128)
    assert len(curve.polylines) == 1
    poly = curve.polylines[0]
    assert np.allclose(poly[0], poly[-1])  # closed loop
    assert rectangle_boundary_points(curve) == []
    radii = np.hypot(poly[:, 0] - 2.5, poly[:, 1] - 2.5)
    assert np.abs(radii - 1.0).max() < 1e-9


def test_affine_curves_cross_once():
    c1 = trace_level_curve(plane_sum, 5.0, RECT, 64)
    c2 = trace_level_curve(plane_diff, 5.0, RECT, 64)
    hits = intersect_curves(c1, c2)
    assert len(hits) == 1
    p = hits.points[0]
    assert (p.x, p.y) == (pytest.approx(2.5, abs=1e-9), pytest.approx(2.5, abs=1e-9))
    assert p.refined and p.residual < 1e-9


def test_intersect_requires_same_rectangle():
    c1 = trace_level_curve(plane_sum, 5.0, RECT, 64)
    c2 = trace_level_curve(plane_sum, 5.0, (4.0, 4.0), 64)
    with pytest.raises(ValueError, match="rectangle"):
        intersect_curves(c1, c2)


def test_fig4a_branch_curves_exist_and_cross(fig4_curves):
    rp, curves = fig4_curves
    ca = curves[(0, 1, "12", "a")]
    cb = curves[(0, 1, "12", "b")]
    assert not ca.empty and not cb.empty
    # the two branch sublevel sets overlap: their boundaries cross
    hits = intersect_curves(ca, cb)
    assert len(hits) >= 1
    for p in hits.points:
        assert p.residual < 1e-9
    # boarding at the bottom segment first never meets the level
    assert curves[(0, 1, "21", "a")].empty
    assert curves[(0, 1, "21", "b")].empty


def test_fig4_second_pair_only_reverse_branch(fig4_curves):
    rp, curves = fig4_curves
    assert curves[(2, 3, "12", "a")].empty
    assert curves[(2, 3, "12", "b")].empty
    assert not curves[(2, 3, "21", "a")].empty
    # the surviving branch is clipped by the rectangle
    assert rectangle_boundary_points(curves[(2, 3, "21", "a")])


def test_traced_vertices_meet_residual_bound(fig4_curves):
    rp, curves = fig4_curves
    for curve in curves.values():
        for poly in curve.polylines:
            values = np.asarray(curve.field(poly[:, 0], poly[:, 1]), dtype=float)
            assert np.abs(values - curve.level).max() < curve.trace_tol


def test_traced_vertices_inside_rectangle(fig4_curves):
    rp, curves = fig4_curves
    w, h = rp.rect
    for curve in curves.values():
        for poly in curve.polylines:
            assert np.all(poly[:, 0] >= -1e-12) and np.all(poly[:, 0] <= w + 1e-12)
            assert np.all(poly[:, 1] >= -1e-12) and np.all(poly[:, 1] <= h + 1e-12)


def test_sublevel_chords_stay_inside(fig4_curves):
    # convex field: midpoints of chords between curve vertices stay at or
    # below the level
    rp, curves = fig4_curves
    rng = np.random.default_rng(21)
    for curve in curves.values():
        if curve.empty:
            continue
        vertices = np.vstack(curve.polylines)
        n = len(vertices)
        a = vertices[rng.integers(0, n, 100)]
        b = vertices[rng.integers(0, n, 100)]
        mid = 0.5 * (a + b)
        values = np.asarray(curve.field(mid[:, 0], mid[:, 1]), dtype=float)
        assert np.all(values <= curve.level + 1e-6)


def test_intersection_symmetric(fig4_curves):
    rp, curves = fig4_curves
    c1 = curves[(0, 1, "12", "a")]
    c2 = curves[(2, 3, "21", "a")]
    forward = intersect_curves(c1, c2)
    backward = intersect_curves(c2, c1)
    assert len(forward) == len(backward)
    for p, q in zip(forward.points, backward.points):
        assert math.hypot(p.x - q.x, p.y - q.y) <= 1e-7


def test_intersections_stable_under_refinement(two_pair_a04, fig4_curves):
    rp, curves = fig4_curves
    pairs_to_check = [
        ((0, 1, "12", "a"), (2, 3, "21", "a")),
        ((0, 1, "12", "b"), (2, 3, "21", "a")),
    ]
    for key1, key2 in pairs_to_check:
        coarse = intersect_curves(curves[key1], curves[key2])
        fine1 = trace_level_curve(
            curves[key1].field, curves[key1].level, rp.rect, 512
        )
        fine2 = trace_level_curve(
            curves[key2].field, curves[key2].level, rp.rect, 512
        )
        fine = intersect_curves(fine1, fine2)
        assert len(coarse) == len(fine)
        for p in coarse.points:
            nearest = min(
                math.hypot(p.x - q.x, p.y - q.y) for q in fine.points
            )
            assert nearest < 10 * 1e-9


def test_csv_export_schema(fig4_curves):
    rp, curves = fig4_curves
    text = curves_to_csv(curves.values())
    lines = text.strip().split("\n")
    assert lines[0] == "pair_i,pair_j,orientation,branch,polyline_id,vertex_index,x,y"
    assert len(lines) > 1
    row = lines[1].split(",")
    assert len(row) == 8
    int(row[0]), int(row[1]), int(row[4]), int(row[5])
    float(row[6]), float(row[7])


def test_csv_export_empty_curve_header_only():
    curve = trace_level_curve(plane_sum, 0.0, RECT, 64, pair=(0, 1), orientation="12", branch="a")
    text = curves_to_csv([curve])
    assert text == "pair_i,pair_j,orientation,branch,polyline_id,vertex_index,x,y\n"
