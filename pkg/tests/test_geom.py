import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupnav.geom import (
    DegenerateTangent,
    Disk,
    Vec2,
    segment_disk_intersects,
    select_tangent,
    tangent_points,
)


def _tangent_residuals(p, disk, t):
    ortho = (t - disk.center).dot(t - p)
    on_circle = (t - disk.center).norm() - disk.radius
    return ortho, on_circle


def test_vec2_rejects_non_finite():
    with pytest.raises(ValueError):
        Vec2(float("nan"), 0.0)
    with pytest.raises(ValueError):
        Vec2(0.0, float("inf"))


def test_disk_rejects_negative_radius():
    with pytest.raises(ValueError):
        Disk(Vec2(0, 0), -0.1)


@pytest.mark.parametrize(
    "p, disk, expected",
    [
        (Vec2(3, 0), Disk(Vec2(0, 0), 1), ((1 / 3, math.sqrt(8) / 3), (1 / 3, -math.sqrt(8) / 3))),
        (Vec2(0, 2), Disk(Vec2(0, 0), 1), ((-math.sqrt(3) / 2, 0.5), (math.sqrt(3) / 2, 0.5))),
    ],
)
def test_tangent_points_examples(p, disk, expected):
    ccw, cw = tangent_points(p, disk)
    for t in (ccw, cw):
        ortho, on_circle = _tangent_residuals(p, disk, t)
        assert abs(ortho) < 1e-12
        assert abs(on_circle) < 1e-12
    assert ccw.x == pytest.approx(expected[0][0], abs=1e-4)
    assert ccw.y == pytest.approx(expected[0][1], abs=1e-4)
    assert cw.x == pytest.approx(expected[1][0], abs=1e-4)
    assert cw.y == pytest.approx(expected[1][1], abs=1e-4)


def test_tangent_points_on_boundary_is_degenerate():
    with pytest.raises(DegenerateTangent):
        tangent_points(Vec2(2, 0), Disk(Vec2(0, 0), 2))


def test_tangent_points_inside_is_degenerate():
    with pytest.raises(DegenerateTangent):
        tangent_points(Vec2(0.1, 0.2), Disk(Vec2(0, 0), 1))


coord = st.floats(min_value=-50, max_value=50, allow_nan=False)
radius = st.floats(min_value=0.01, max_value=5)


@st.composite
def external_point_and_disk(draw):
    c = Vec2(draw(coord), draw(coord))
    r = draw(radius)
    gap = draw(st.floats(min_value=1e-3, max_value=30))
    ang = draw(st.floats(min_value=0, max_value=2 * math.pi))
    p = c + Vec2(math.cos(ang), math.sin(ang)) * (r + gap)
    return p, Disk(c, r)


@settings(max_examples=300, deadline=None)
@given(external_point_and_disk())
def test_tangent_points_residuals(case):
    p, disk = case
    d_sq = (p - disk.center).norm_sq()
    for t in tangent_points(p, disk):
        ortho, on_circle = _tangent_residuals(p, disk, t)
        assert abs(ortho) < 1e-9 * d_sq
        assert abs(on_circle) < 1e-9 * disk.radius


@settings(max_examples=200, deadline=None)
@given(
    external_point_and_disk(),
    st.floats(min_value=0, max_value=2 * math.pi),
    coord,
    coord,
)
def test_tangent_points_rigid_equivariance(case, angle, tx, ty):
    p, disk = case
    c, s = math.cos(angle), math.sin(angle)
    shift = Vec2(tx, ty)

    def move(v):
        return v.rotated(c, s) + shift

    moved = tangent_points(move(p), Disk(move(disk.center), disk.radius))
    for original, transformed in zip(tangent_points(p, disk), moved):
        expected = move(original)
        assert (expected - transformed).norm() < 1e-9 * max(1.0, (p - disk.center).norm() + abs(tx) + abs(ty))


@pytest.mark.parametrize(
    "a, b, disk, expected",
    [
        (Vec2(-4, 0), Vec2(4, 0), Disk(Vec2(0, 0), 1), True),
        (Vec2(-4, 3), Vec2(4, 3), Disk(Vec2(0, 0), 1), False),
        (Vec2(-4, 0), Vec2(-2, 0), Disk(Vec2(0, 0), 1), False),
        (Vec2(-4, 1), Vec2(4, 1), Disk(Vec2(0, 0), 1), True),
        (Vec2(0.2, 0.1), Vec2(0.2, 0.1), Disk(Vec2(0, 0), 1), True),
    ],
)
def test_segment_disk_intersects_examples(a, b, disk, expected):
    assert segment_disk_intersects(a, b, disk) is expected


@settings(max_examples=300, deadline=None)
@given(coord, coord, coord, coord, coord, coord, radius)
def test_segment_disk_agrees_with_sampling(ax, ay, bx, by, cx, cy, r):
    a, b, disk = Vec2(ax, ay), Vec2(bx, by), Disk(Vec2(cx, cy), r)
    samples = [a + (b - a) * (i / 999) for i in range(1000)]
    min_dist = min((q - disk.center).norm() for q in samples)
    spacing = (b - a).norm() / 999
    # sampling can miss by at most half a sample spacing; skip the ambiguous band
    if abs(min_dist - r) <= spacing:
        return
    assert segment_disk_intersects(a, b, disk) is (min_dist <= r)


def test_select_tangent_prefers_goal_side():
    p_r, group, goal = Vec2(-4, 0), Disk(Vec2(0, 0), 1), Vec2(4, 1)
    ccw, cw = tangent_points(p_r, Disk(group.center, 1.3))
    to_goal = (goal - p_r).unit()
    expected = max((ccw, cw), key=lambda t: (t - p_r).unit().dot(to_goal))
    chosen = select_tangent(p_r, group, 0.3, goal)
    assert chosen == expected
    assert chosen.y > 0


def test_select_tangent_tie_goes_counterclockwise():
    p_r, group = Vec2(-4, 0), Disk(Vec2(0, 0), 1)
    ccw, _ = tangent_points(p_r, Disk(group.center, 1.3))
    assert select_tangent(p_r, group, 0.3, Vec2(4, 0)) == ccw


def test_select_tangent_inside_inflated_disk():
    with pytest.raises(DegenerateTangent):
        select_tangent(Vec2(-1.2, 0), Disk(Vec2(0, 0), 1), 0.3, Vec2(4, 0))


@settings(max_examples=200, deadline=None)
@given(external_point_and_disk(), coord, coord, st.floats(min_value=0, max_value=1))
def test_select_tangent_on_inflated_boundary(case, gx, gy, inflate):
    p, disk = case
    if (p - disk.center).norm() <= disk.radius + inflate + 1e-6:
        return
    t = select_tangent(p, disk, inflate, Vec2(gx, gy))
    assert abs((t - disk.center).norm() - (disk.radius + inflate)) < 1e-9 * max(1.0, disk.radius + inflate)
