"""Central-pattern stepping motion generator.

A phase variable mu in [-pi, pi) drives rhythmic leg-lift and leg-swing
primitives whose amplitudes are set by a three-axis step-size command.  The
abstract leg pose (extension, leg angle, foot angle) maps to joint angles
without any link lengths, so the same pattern runs on any humanoid-shaped
chain.

Phase semantics: one support exchange is expected at mu = 0 and one at the
+-pi wrap, so a full phase cycle covers two steps.  The right leg reads the
phase directly, the left leg reads it shifted by pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import CpgConfig

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LegInterfaceParams:
    """Abstract pose of one leg: extension in [0, 1] plus leg/foot angles."""

    eta: float
    leg_roll: float = 0.0
    leg_pitch: float = 0.0
    leg_yaw: float = 0.0
    foot_roll: float = 0.0
    foot_pitch: float = 0.0


@dataclass(frozen=True)
class JointAngles:
    """Joint targets of one leg, rad."""

    hip_yaw: float
    hip_roll: float
    hip_pitch: float
    knee: float
    ankle_pitch: float
    ankle_roll: float

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.hip_yaw,
            self.hip_roll,
            self.hip_pitch,
            self.knee,
            self.ankle_pitch,
            self.ankle_roll,
        )


@dataclass(frozen=True)
class ArmInterfaceParams:
    """Abstract pose of one arm: extension in [0, 1] plus a pitch angle."""

    eta: float
    pitch: float


@dataclass(frozen=True)
class ArmJoints:
    shoulder_pitch: float
    elbow: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.shoulder_pitch, self.elbow)


@dataclass(frozen=True)
class WholeBodyPose:
    left_leg: JointAngles
    right_leg: JointAngles
    left_arm: ArmJoints
    right_arm: ArmJoints
    eta_clamped: bool = False

    def joints(self) -> tuple[float, ...]:
        return (
            self.left_leg.as_tuple()
            + self.right_leg.as_tuple()
            + self.left_arm.as_tuple()
            + self.right_arm.as_tuple()
        )


@dataclass(frozen=True)
class MotionPhase:
    """Stepping phase state.

    mu wraps into [-pi, pi); the support sign flips exactly at the exchange
    events (mu crossing 0 and the wrap).  time_in_step paces the minimum
    step duration.
    """

    mu: float = -math.pi
    support_sign: int = 1
    time_in_step: float = 0.0


@dataclass(frozen=True)
class SwingAmplitude:
    """Normalized step-size command: sagittal, lateral, rotational."""

    ax: float = 0.0
    ay: float = 0.0
    apsi: float = 0.0

    def sup_norm(self) -> float:
        return max(abs(self.ax), abs(self.ay), abs(self.apsi))


def wrap_phase(mu: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    mu = math.fmod(mu + math.pi, TWO_PI)
    if mu < 0.0:
        mu += TWO_PI
    return mu - math.pi


def shift_phase(mu: float) -> float:
    """Half-cycle phase shift used for the left leg."""
    return wrap_phase(mu + math.pi if mu <= 0.0 else mu - math.pi)


def remaining_phase(mu: float) -> float:
    """Phase distance to the next expected support exchange.

    Exactly 0 counts as the start of the swing half, so a step that just
    completed at the boundary sees a full half-phase ahead.
    """
    return -mu if mu < 0.0 else math.pi - mu


# Remaining phase below which the step is considered complete.
_PHASE_SNAP = 1e-3


def advance_phase(
    m: MotionPhase, t_step: float, cfg: CpgConfig
) -> tuple[MotionPhase, bool]:
    """Advance the phase one control tick toward the next exchange.

    ``t_step`` is the commanded remaining step time.  The increment is
    rho * nu / T, which keeps the phase rate consistent with a countdown
    command.  The step completes (event emitted, support sign flipped) when
    less than one tick is commanded or the remaining phase is negligible,
    but never before t_min has elapsed since the last exchange, which caps
    the stepping frequency for T = 0 commands.
    """
    if t_step < 0.0:
        t_step = 0.0
    nu = remaining_phase(m.mu)
    paced = m.time_in_step + cfg.rho >= cfg.t_min - 1e-12
    if paced and (t_step <= cfg.rho or nu <= _PHASE_SNAP):
        # complete the step: snap to the boundary (pi wraps to -pi)
        new_mu = 0.0 if m.mu <= 0.0 else -math.pi
        return (
            MotionPhase(mu=new_mu, support_sign=-m.support_sign, time_in_step=0.0),
            True,
        )
    t_eff = max(t_step, cfg.t_min) if t_step > cfg.rho else cfg.t_min
    delta = cfg.rho * nu / t_eff
    new_mu = m.mu + delta
    # delta < nu always holds here, so the boundary is not crossed
    return (
        MotionPhase(
            mu=new_mu,
            support_sign=m.support_sign,
            time_in_step=m.time_in_step + cfg.rho,
        ),
        False,
    )


def leg_interface_map(p: LegInterfaceParams) -> JointAngles:
    """Map the abstract leg pose to hip/knee/ankle angles.

    The (pitch, roll) pair is pre-rotated by the negative leg yaw with a
    counterclockwise-positive 2D rotation, then the extension bends hip,
    knee, and ankle symmetrically.  Extension outside [0, 1] is clamped.
    """
    eta = min(max(p.eta, 0.0), 1.0)
    cy = math.cos(-p.leg_yaw)
    sy = math.sin(-p.leg_yaw)
    pitch_r = cy * p.leg_pitch - sy * p.leg_roll
    roll_r = sy * p.leg_pitch + cy * p.leg_roll
    zeta = math.acos(1.0 - eta)
    return JointAngles(
        hip_yaw=p.leg_yaw,
        hip_roll=roll_r,
        hip_pitch=pitch_r - zeta,
        knee=2.0 * zeta,
        ankle_pitch=p.foot_pitch - pitch_r - zeta,
        ankle_roll=p.foot_roll - roll_r,
    )


def arm_interface_map(p: ArmInterfaceParams) -> ArmJoints:
    """Arm analogue of the leg interface: extension bends the elbow."""
    eta = min(max(p.eta, 0.0), 1.0)
    zeta = math.acos(1.0 - eta)
    return ArmJoints(shoulder_pitch=p.pitch - zeta, elbow=2.0 * zeta)


def leg_lift(mu: float, a: SwingAmplitude, cfg: CpgConfig) -> float:
    """Signed leg-extension contribution of the lift primitive.

    Negative during the support half (a push against the ground), positive
    during the swing half (the actual lift).  Faster walking lifts higher
    through the amplitude-proportional gains.
    """
    amp = a.sup_norm()
    if mu <= 0.0:
        return math.sin(mu) * (cfg.k1 + cfg.k3 * amp)
    return math.sin(mu) * (cfg.k2 + cfg.k4 * amp)


def unit_swing(mu: float, cfg: CpgConfig) -> float:
    """Unit swing oscillator in [-1, 1].

    Sinusoidal forward swing between k_mu0 and k_mu1, linear push-back
    elsewhere; continuous at both joints and across the +-pi wrap.
    """
    span = TWO_PI - cfg.k_mu1 + cfg.k_mu0
    if mu < cfg.k_mu0:
        return 2.0 * (mu + TWO_PI - cfg.k_mu1) / span - 1.0
    if mu < cfg.k_mu1:
        return math.cos(math.pi * (mu - cfg.k_mu0) / (cfg.k_mu1 - cfg.k_mu0))
    return 2.0 * (mu - cfg.k_mu1) / span - 1.0


def leg_swing(
    leg_sign: int, mu: float, a: SwingAmplitude, cfg: CpgConfig
) -> tuple[float, float, float]:
    """Leg angle (roll, pitch, yaw) of the swing primitive for one leg.

    ``leg_sign`` is -1 for the left and +1 for the right leg; ``mu`` is that
    leg's own phase.  The sagittal amplitude drives the pitch swing, the
    lateral amplitude the roll swing.  Roll and yaw carry constant spread
    offsets so the legs cannot collide when sidestepping or turning.
    """
    z = unit_swing(mu, cfg)
    spread = max(abs(a.ay) * cfg.k6, abs(a.apsi) * cfg.k7)
    roll = -z * a.ay * cfg.k5 - leg_sign * spread
    pitch = z * a.ax * cfg.k8
    yaw = z * a.apsi * cfg.k9 - leg_sign * abs(a.apsi) * cfg.k10
    return (roll, pitch, yaw)


def arm_swing(
    arm_sign: int, mu: float, a: SwingAmplitude, cfg: CpgConfig
) -> ArmInterfaceParams:
    """Arm pitch primitive, antagonistic to the same-side leg.

    ``mu`` is the global motion phase.  Each arm follows the opposite leg's
    swing profile: the right arm (+1) reads the left leg's phase and the
    left arm (-1) the right leg's.
    """
    leg_mu = shift_phase(mu) if arm_sign > 0 else mu
    z = unit_swing(leg_mu, cfg)
    return ArmInterfaceParams(eta=0.0, pitch=z * a.ax * cfg.arm_swing_gain)


def compose_pose(
    m: MotionPhase, a: SwingAmplitude, t_step: float, cfg: CpgConfig
) -> WholeBodyPose:
    """Sum the motion primitives into a whole-body joint target.

    The pose depends on the phase and the amplitude only; the commanded step
    time shapes the trajectory through the phase advance, not the pose map.
    """
    del t_step  # timing enters through advance_phase
    mu_r = m.mu
    mu_l = shift_phase(m.mu)

    clamped = False
    legs = {}
    for sign, mu in ((-1, mu_l), (1, mu_r)):
        eta = cfg.neutral_eta + leg_lift(mu, a, cfg)
        if not 0.0 <= eta <= 1.0:
            clamped = True
        roll, pitch, yaw = leg_swing(sign, mu, a, cfg)
        legs[sign] = leg_interface_map(
            LegInterfaceParams(
                eta=eta, leg_roll=roll, leg_pitch=pitch, leg_yaw=yaw
            )
        )

    left_arm = arm_interface_map(arm_swing(-1, m.mu, a, cfg))
    right_arm = arm_interface_map(arm_swing(1, m.mu, a, cfg))
    return WholeBodyPose(
        left_leg=legs[-1],
        right_leg=legs[1],
        left_arm=left_arm,
        right_arm=right_arm,
        eta_clamped=clamped,
    )
