"""Closed-form linear inverted pendulum math.

The point-mass dynamics x'' = c^2 x have hyperbolic closed-form solutions.
This module provides forward prediction, the inverse time-of-arrival
questions (when is a position or velocity reached), the conserved orbital
energy, and a two-axis predictor with a constant pivot (ZMP) offset.

All functions are pure and all value types immutable, so results can be
shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import PendulumParams

# Forward-prediction residual accepted when validating time-inversion roots.
_ROOT_TOL = 1e-9
# |c1| below this is treated as the degenerate single-exponential trajectory.
_DEGENERATE_C1 = 1e-15
# roundoff snap window for roots at t = 0; forward verification guards it
_NEG_SNAP = 1e-6


@dataclass(frozen=True)
class State1D:
    """Position and velocity of the point mass along one axis."""

    x: float
    v: float


@dataclass(frozen=True)
class ComState:
    """Sagittal/lateral point-mass state relative to the support-foot frame."""

    cx: float
    vx: float
    cy: float
    vy: float

    def sagittal(self) -> State1D:
        return State1D(self.cx, self.vx)

    def lateral(self) -> State1D:
        return State1D(self.cy, self.vy)


@dataclass(frozen=True)
class ZmpOffset:
    """Pivot offset within the support foot, m."""

    zx: float = 0.0
    zy: float = 0.0


def predict_pos(s: State1D, p: PendulumParams, t: float) -> float:
    """Position after time t; negative t predicts backwards."""
    ct = p.c * t
    return s.x * math.cosh(ct) + (s.v / p.c) * math.sinh(ct)


def predict_vel(s: State1D, p: PendulumParams, t: float) -> float:
    """Velocity after time t."""
    ct = p.c * t
    return s.x * p.c * math.sinh(ct) + s.v * math.cosh(ct)


def _verified_times(
    candidates: list[float], target: float, s: State1D, p: PendulumParams, project
) -> float | None:
    """Smallest non-negative candidate whose forward prediction hits target."""
    best = None
    for t in candidates:
        if not math.isfinite(t):
            continue
        if -_NEG_SNAP <= t < 0.0:
            t = 0.0
        if t < 0.0:
            continue
        if abs(project(s, p, t) - target) > _ROOT_TOL * max(1.0, abs(target)):
            continue
        if best is None or t < best:
            best = t
    return best


def arrival_times(x_target: float, s: State1D, p: PendulumParams) -> list[float]:
    """All non-negative times at which the position reaches x_target, sorted.

    Both signs of the quadratic in e^(ct) are evaluated and each real root
    is validated by forward prediction.  A hyperbolic trajectory crosses a
    location at most twice (once inbound, once outbound past an apex).
    """
    c1 = s.x + s.v / p.c
    c2 = s.x - s.v / p.c
    candidates: list[float] = [0.0]  # "already there" resolved by verification
    if abs(c1) <= _DEGENERATE_C1:
        # pure decaying exponential: x(t) = (c2/2) e^(-ct)
        if x_target != 0.0 and c2 / (2.0 * x_target) > 0.0:
            candidates.append(math.log(c2 / (2.0 * x_target)) / p.c)
    else:
        disc = x_target * x_target - c1 * c2
        if disc >= 0.0:
            root = math.sqrt(disc)
            for u in ((x_target + root) / c1, (x_target - root) / c1):
                if u > 0.0:
                    candidates.append(math.log(u) / p.c)
    valid = []
    for t in candidates:
        if not math.isfinite(t):
            continue
        if -_NEG_SNAP <= t < 0.0:
            t = 0.0
        if t < 0.0:
            continue
        if abs(predict_pos(s, p, t) - x_target) > _ROOT_TOL * max(1.0, abs(x_target)):
            continue
        valid.append(t)
    return sorted(valid)


def time_to_position(x_target: float, s: State1D, p: PendulumParams) -> float | None:
    """Smallest non-negative time at which the position reaches x_target.

    Returns None when the trajectory never gets there (the pendulum falls
    away from the target); callers treat that as an infinite arrival time.
    """
    times = arrival_times(x_target, s, p)
    return times[0] if times else None


def time_to_velocity(v_target: float, s: State1D, p: PendulumParams) -> float | None:
    """Smallest non-negative time at which the velocity reaches v_target.

    None when the velocity never gets there.  v_target = 0 asks for the next
    apex of the trajectory.
    """
    c1 = s.x + s.v / p.c
    c2 = s.x - s.v / p.c
    candidates: list[float] = [0.0]  # "already there" resolved by verification
    if abs(c1) <= _DEGENERATE_C1:
        # v(t) = -(c/2) c2 e^(-ct)
        if v_target != 0.0 and -p.c * c2 / (2.0 * v_target) > 0.0:
            candidates.append(-math.log(-2.0 * v_target / (p.c * c2)) / p.c)
    else:
        w = v_target / p.c
        disc = w * w + c1 * c2
        if disc >= 0.0:
            root = math.sqrt(disc)
            for u in ((w + root) / c1, (w - root) / c1):
                if u > 0.0:
                    candidates.append(math.log(u) / p.c)
    return _verified_times(candidates, v_target, s, p, predict_vel)


def orbital_energy(s: State1D, p: PendulumParams) -> float:
    """Conserved orbit constant (v^2 - c^2 x^2) / 2.

    Positive energy means the mass crosses the pivot; for the lateral axis
    that is the tip-over condition.
    """
    return 0.5 * (s.v * s.v - p.c * p.c * s.x * s.x)


def lipm_predict(c: ComState, z: ZmpOffset, p: PendulumParams, t: float) -> ComState:
    """Predict both axes over time t with a constant pivot offset.

    The axes are uncoupled and identical in form: each is shifted by its
    offset, propagated, and shifted back.
    """
    sx = State1D(c.cx - z.zx, c.vx)
    sy = State1D(c.cy - z.zy, c.vy)
    return ComState(
        cx=predict_pos(sx, p, t) + z.zx,
        vx=predict_vel(sx, p, t),
        cy=predict_pos(sy, p, t) + z.zy,
        vy=predict_vel(sy, p, t),
    )
