"""Trapezoidal velocity profiles and polyline arc-length geometry.

The drive profile is evaluated in closed form at tick boundaries rather than
integrated numerically, which keeps traversal times exact against the
analytic schedule and makes re-simulation bit-identical. Cancel braking is
the one integrated piece: speed drops by decel*dt per tick and position
advances by the tick's average speed, which reproduces the v^2/(2*decel)
stopping distance to within a fraction of one tick's travel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonPositiveParameter


@dataclass(frozen=True)
class MotionProfile:
    v_max: float  # m/s
    a_max: float  # m/s^2
    decel: float  # m/s^2

    def __post_init__(self):
        for name in ("v_max", "a_max", "decel"):
            if getattr(self, name) <= 0:
                raise NonPositiveParameter(f"profile.{name}")


@dataclass(frozen=True)
class TrapezoidalPlan:
    """Closed-form schedule s(t), v(t) for one drive of `length` meters.

    Phases: accelerate from v0 at a_max, cruise at v_cruise, decelerate at
    decel to stop exactly at s == length. Degenerates to a triangle when the
    distance is too short to reach v_max.
    """

    length: float
    v0: float
    v_cruise: float
    t_accel: float
    t_cruise: float
    t_decel: float
    d_accel: float
    d_cruise: float
    a_max: float
    decel: float

    @property
    def total_time(self) -> float:
        return self.t_accel + self.t_cruise + self.t_decel

    def sample(self, t: float) -> tuple[float, float]:
        """(arc position, speed) at time t seconds from the plan start."""
        if t <= 0.0:
            return 0.0, self.v0
        if t < self.t_accel:
            return self.v0 * t + 0.5 * self.a_max * t * t, self.v0 + self.a_max * t
        t -= self.t_accel
        if t < self.t_cruise:
            return self.d_accel + self.v_cruise * t, self.v_cruise
        t -= self.t_cruise
        if t < self.t_decel:
            s = self.d_accel + self.d_cruise + self.v_cruise * t - 0.5 * self.decel * t * t
            return min(s, self.length), self.v_cruise - self.decel * t
        return self.length, 0.0


def clamp_entry_speed(length: float, v0: float, profile: MotionProfile) -> float:
    """Largest carry-over speed the drive can absorb and still stop in `length`."""
    absorbable = math.sqrt(2.0 * profile.decel * length) if length > 0 else 0.0
    return min(v0, profile.v_max, absorbable)


def plan_trapezoid(length: float, v0: float, profile: MotionProfile) -> TrapezoidalPlan:
    """Build the drive schedule. v0 is clamped to what `length` can absorb."""
    a, b, vm = profile.a_max, profile.decel, profile.v_max
    v0 = clamp_entry_speed(length, v0, profile)
    if length <= 0.0:
        return TrapezoidalPlan(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, a, b)

    # peak speed if there were no cruise cap
    v_peak = math.sqrt((2.0 * a * b * length + b * v0 * v0) / (a + b))
    vc = min(v_peak, vm)
    d_accel = (vc * vc - v0 * v0) / (2.0 * a)
    d_decel = vc * vc / (2.0 * b)
    d_cruise = max(length - d_accel - d_decel, 0.0)
    return TrapezoidalPlan(
        length=length,
        v0=v0,
        v_cruise=vc,
        t_accel=(vc - v0) / a,
        t_cruise=d_cruise / vc if vc > 0 else 0.0,
        t_decel=vc / b,
        d_accel=d_accel,
        d_cruise=d_cruise,
        a_max=a,
        decel=b,
    )


def brake_step(v: float, decel: float, dt: float) -> tuple[float, float]:
    """One braking tick: new speed and distance covered during the tick."""
    v_new = max(0.0, v - decel * dt)
    return v_new, 0.5 * (v + v_new) * dt


@dataclass
class Polyline:
    """Piecewise-linear curve with arc-length addressing."""

    points: list[tuple[float, float]]
    cum: list[float]

    @classmethod
    def from_points(cls, points: list[tuple[float, float]]) -> "Polyline":
        cum = [0.0]
        for a, b in zip(points, points[1:]):
            cum.append(cum[-1] + math.hypot(b[0] - a[0], b[1] - a[1]))
        return cls(points=points, cum=cum)

    @property
    def length(self) -> float:
        return self.cum[-1] if self.cum else 0.0

    def point_at(self, s: float) -> tuple[float, float, float]:
        """(x, y, heading) at arc length s; extrapolates past either end."""
        pts, cum = self.points, self.cum
        if len(pts) == 1:
            return pts[0][0], pts[0][1], 0.0
        # find segment: last i with cum[i] <= s (clamped)
        lo, hi = 0, len(cum) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if cum[mid] <= s:
                lo = mid
            else:
                hi = mid - 1
        i = min(lo, len(pts) - 2)
        ax, ay = pts[i]
        bx, by = pts[i + 1]
        seg = cum[i + 1] - cum[i]
        heading = math.atan2(by - ay, bx - ax)
        if seg <= 0.0:
            return bx, by, heading
        f = (s - cum[i]) / seg
        return ax + f * (bx - ax), ay + f * (by - ay), heading

    def first_arc_within(self, target: tuple[float, float], radius: float) -> float | None:
        """Smallest arc length whose point lies within `radius` of target.

        Solved per segment as a quadratic; None if the curve never enters
        the disc. The start point itself counts.
        """
        tx, ty = target
        pts, cum = self.points, self.cum
        for i in range(len(pts)):
            px, py = pts[i]
            if math.hypot(px - tx, py - ty) <= radius:
                return cum[i]
            if i == len(pts) - 1:
                break
            ax, ay = pts[i]
            bx, by = pts[i + 1]
            dx, dy = bx - ax, by - ay
            seg = cum[i + 1] - cum[i]
            if seg <= 0.0:
                continue
            fx, fy = ax - tx, ay - ty
            # |f + u*d|^2 = radius^2 with u in [0, 1]
            qa = dx * dx + dy * dy
            qb = 2.0 * (fx * dx + fy * dy)
            qc = fx * fx + fy * fy - radius * radius
            disc = qb * qb - 4.0 * qa * qc
            if disc < 0.0:
                continue
            u = (-qb - math.sqrt(disc)) / (2.0 * qa)
            if 0.0 <= u <= 1.0:
                return cum[i] + u * seg
        return None

    def truncated(self, s_max: float) -> "Polyline":
        """Prefix of the curve up to arc length s_max."""
        if s_max >= self.length:
            return self
        pts = [self.points[0]]
        for i in range(1, len(self.points)):
            if self.cum[i] < s_max:
                pts.append(self.points[i])
            else:
                x, y, _ = self.point_at(s_max)
                pts.append((x, y))
                break
        return Polyline.from_points(pts)
