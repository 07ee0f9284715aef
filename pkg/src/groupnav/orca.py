"""
Optimal Reciprocal Collision Avoidance (ORCA).

Each neighbor contributes one half-plane of permitted velocities. The chosen
velocity is the point of the intersection of those half-planes (and the
speed disk) closest to the preferred velocity, found with the incremental
2D linear program of van den Berg et al. When the half-planes have no common
point, a 3D program picks the velocity that minimizes the largest
penetration into any half-plane.

The solver works on plain float tuples ``(px, py, dx, dy)``: a point on the
boundary line and the unit direction of the line. Permitted velocities lie
to the left of the direction, i.e. on the side of the inward normal
``(-dy, dx)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from groupnav.agents import AgentState
from groupnav.geom import Vec2

RVO_EPSILON = 1e-5
TAU = 2.0
NEIGHBOR_DIST = 5.0

Line = tuple[float, float, float, float]


@dataclass(frozen=True)
class HalfPlane:
    """Velocities ``v`` with ``(v - point) . normal >= 0``."""

    point: Vec2
    normal: Vec2

    def __post_init__(self):
        if abs(self.normal.norm() - 1.0) > 1e-9:
            raise ValueError("half-plane normal must be a unit vector")

    def violation(self, v: Vec2) -> float:
        """Signed distance into the forbidden side (positive means violated)."""
        return -(v - self.point).dot(self.normal)

    def contains(self, v: Vec2, tol: float = 0.0) -> bool:
        return self.violation(v) <= tol

    @classmethod
    def _from_line(cls, line: Line) -> HalfPlane:
        px, py, dx, dy = line
        return cls(Vec2(px, py), Vec2(-dy, dx))

    def _as_line(self) -> Line:
        nx, ny = self.normal.x, self.normal.y
        return (self.point.x, self.point.y, ny, -nx)


def _orca_line(
    px: float, py: float, vx: float, vy: float, radius: float,
    opx: float, opy: float, ovx: float, ovy: float, oradius: float,
    inv_tau: float, inv_dt: float,
) -> Line:
    rel_px = opx - px
    rel_py = opy - py
    rel_vx = vx - ovx
    rel_vy = vy - ovy
    dist_sq = rel_px * rel_px + rel_py * rel_py
    combined_radius = radius + oradius
    combined_radius_sq = combined_radius * combined_radius

    if dist_sq > combined_radius_sq:
        # vector from cutoff center to relative velocity
        wx = rel_vx - inv_tau * rel_px
        wy = rel_vy - inv_tau * rel_py
        w_len_sq = wx * wx + wy * wy
        dot1 = wx * rel_px + wy * rel_py
        if dot1 < 0.0 and dot1 * dot1 > combined_radius_sq * w_len_sq:
            # project on cutoff circle
            w_len = math.sqrt(w_len_sq)
            ux_w = wx / w_len
            uy_w = wy / w_len
            dx, dy = uy_w, -ux_w
            scale = combined_radius * inv_tau - w_len
            ux, uy = scale * ux_w, scale * uy_w
        else:
            # project on the nearer leg of the cone
            leg = math.sqrt(dist_sq - combined_radius_sq)
            if rel_px * wy - rel_py * wx > 0.0:
                dx = (rel_px * leg - rel_py * combined_radius) / dist_sq
                dy = (rel_px * combined_radius + rel_py * leg) / dist_sq
            else:
                dx = -(rel_px * leg + rel_py * combined_radius) / dist_sq
                dy = -(-rel_px * combined_radius + rel_py * leg) / dist_sq
            dot2 = rel_vx * dx + rel_vy * dy
            ux = dot2 * dx - rel_vx
            uy = dot2 * dy - rel_vy
    else:
        # already overlapping: resolve within one time step
        wx = rel_vx - inv_dt * rel_px
        wy = rel_vy - inv_dt * rel_py
        w_len = math.hypot(wx, wy)
        if w_len == 0.0:
            # fully coincident with equal velocity; any fixed separation axis will do
            ux_w, uy_w = 1.0, 0.0
        else:
            ux_w = wx / w_len
            uy_w = wy / w_len
        dx, dy = uy_w, -ux_w
        scale = combined_radius * inv_dt - w_len
        ux, uy = scale * ux_w, scale * uy_w

    return (vx + 0.5 * ux, vy + 0.5 * uy, dx, dy)


def orca_halfplane(self: AgentState, other: AgentState, tau: float = TAU, dt: float = 0.25) -> HalfPlane:
    """Half-plane of velocities for ``self`` that keeps it clear of ``other`` for ``tau`` seconds."""
    if self.id == other.id:
        raise ValueError("an agent cannot constrain itself")
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    line = _orca_line(
        self.position.x, self.position.y, self.velocity.x, self.velocity.y, self.radius,
        other.position.x, other.position.y, other.velocity.x, other.velocity.y, other.radius,
        1.0 / tau, 1.0 / dt,
    )
    return HalfPlane._from_line(line)


def _lp1(lines: Sequence[Line], line_no: int, radius: float,
         opt: tuple[float, float], direction_opt: bool) -> tuple[float, float] | None:
    px, py, dx, dy = lines[line_no]
    dot = px * dx + py * dy
    discriminant = dot * dot + radius * radius - (px * px + py * py)
    if discriminant < 0.0:
        # max speed circle fully invalidates this line
        return None
    sqrt_disc = math.sqrt(discriminant)
    t_left = -dot - sqrt_disc
    t_right = -dot + sqrt_disc

    for i in range(line_no):
        qx, qy, ex, ey = lines[i]
        denominator = dx * ey - dy * ex
        numerator = ex * (py - qy) - ey * (px - qx)
        if abs(denominator) <= RVO_EPSILON:
            # lines are (almost) parallel
            if numerator < 0.0:
                return None
            continue
        t = numerator / denominator
        if denominator >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return None

    ox, oy = opt
    if direction_opt:
        t = t_right if ox * dx + oy * dy > 0.0 else t_left
    else:
        t = dx * (ox - px) + dy * (oy - py)
        if t < t_left:
            t = t_left
        elif t > t_right:
            t = t_right
    return (px + t * dx, py + t * dy)


def _lp2(lines: Sequence[Line], radius: float, opt: tuple[float, float],
         direction_opt: bool) -> tuple[int, tuple[float, float]]:
    ox, oy = opt
    if direction_opt:
        result = (ox * radius, oy * radius)
    elif ox * ox + oy * oy > radius * radius:
        n = math.hypot(ox, oy)
        result = (ox / n * radius, oy / n * radius)
    else:
        result = (ox, oy)

    for i, (px, py, dx, dy) in enumerate(lines):
        if dx * (py - result[1]) - dy * (px - result[0]) > 0.0:
            candidate = _lp1(lines, i, radius, opt, direction_opt)
            if candidate is None:
                return i, result
            result = candidate
    return len(lines), result


def _lp3(lines: Sequence[Line], begin: int, radius: float,
         result: tuple[float, float]) -> tuple[float, float]:
    distance = 0.0
    for i in range(begin, len(lines)):
        px, py, dx, dy = lines[i]
        if dx * (py - result[1]) - dy * (px - result[0]) <= distance:
            continue
        projected: list[Line] = []
        for j in range(i):
            qx, qy, ex, ey = lines[j]
            determinant = dx * ey - dy * ex
            if abs(determinant) <= RVO_EPSILON:
                if dx * ex + dy * ey > 0.0:
                    # same direction: line j is redundant here
                    continue
                point = (0.5 * (px + qx), 0.5 * (py + qy))
            else:
                s = (ex * (py - qy) - ey * (px - qx)) / determinant
                point = (px + s * dx, py + s * dy)
            nx, ny = ex - dx, ey - dy
            n = math.hypot(nx, ny)
            projected.append((point[0], point[1], nx / n, ny / n))
        previous = result
        fail, candidate = _lp2(projected, radius, (-dy, dx), True)
        result = previous if fail < len(projected) else candidate
        distance = dx * (py - result[1]) - dy * (px - result[0])
    return result


def solve_lines(lines: Sequence[Line], v_pref: tuple[float, float], v_max: float) -> tuple[float, float]:
    fail, result = _lp2(lines, v_max, v_pref, False)
    if fail < len(lines):
        result = _lp3(lines, fail, v_max, result)
    return result


def solve_halfplanes(planes: Sequence[HalfPlane], v_pref: Vec2, v_max: float) -> Vec2:
    """Velocity in all ``planes`` and the speed disk closest to ``v_pref``."""
    x, y = solve_lines([p._as_line() for p in planes], (v_pref.x, v_pref.y), v_max)
    return Vec2(x, y)


def orca_velocity(
    self: AgentState,
    neighbors: Sequence[AgentState],
    v_pref: Vec2,
    tau: float = TAU,
    dt: float = 0.25,
    v_max: float = 1.0,
    neighbor_dist: float = math.inf,
) -> Vec2:
    """
    ORCA velocity for ``self`` given its neighbors.

    Neighbors are processed in ascending id order so the sequential program
    is deterministic. Neighbors farther than ``neighbor_dist`` are ignored.
    """
    px, py = self.position.x, self.position.y
    vx, vy = self.velocity.x, self.velocity.y
    inv_tau, inv_dt = 1.0 / tau, 1.0 / dt
    cutoff_sq = neighbor_dist * neighbor_dist
    lines = []
    for other in sorted(neighbors, key=lambda a: a.id):
        if other.id == self.id:
            continue
        ox, oy = other.position.x, other.position.y
        if (ox - px) ** 2 + (oy - py) ** 2 > cutoff_sq:
            continue
        lines.append(_orca_line(
            px, py, vx, vy, self.radius,
            ox, oy, other.velocity.x, other.velocity.y, other.radius,
            inv_tau, inv_dt,
        ))
    x, y = solve_lines(lines, (v_pref.x, v_pref.y), v_max)
    return Vec2(x, y).clamped(v_max)


def preferred_velocity(position: Vec2, goal: Vec2, speed: float) -> Vec2:
    """Velocity toward ``goal`` at ``speed``, slowing to arrive rather than overshoot."""
    to_goal = goal - position
    dist = to_goal.norm()
    if dist == 0.0:
        return Vec2(0.0, 0.0)
    return to_goal * (min(speed, dist) / dist)
