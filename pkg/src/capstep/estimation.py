"""Kinematic state estimation: tilted pose, CoM state, support exchange.

Forward kinematics poses a generic humanoid chain with the measured joint
angles, then the whole chain is rotated about the support-foot center until
the trunk matches the measured attitude.  The rotation pivot is deliberately
the foot center rather than an edge; the edge choice would add jitter for a
negligible gain.  The CoM proxy is the ground-projected hip midpoint,
expressed in a yaw-preserving footstep frame that stays fixed between
support exchanges.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .config import EstimationConfig, KinematicModel
from .cpg import JointAngles
from .lipm import ComState


@dataclass(frozen=True)
class SensorFrame:
    """One sample of joint encoders plus trunk attitude."""

    timestamp: float
    left: JointAngles
    right: JointAngles
    trunk_roll: float = 0.0
    trunk_pitch: float = 0.0


@dataclass(frozen=True)
class FramePose:
    """Ground-projected 2D pose (x, y, yaw) in the odometry frame."""

    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0


@dataclass(frozen=True)
class SupportState:
    """Current support side and its footstep frame.

    support_sign is -1 for the left and +1 for the right foot.  ``cleared``
    latches whether the inter-foot vertical distance has exceeded the
    hysteresis clearance since the last exchange.
    """

    support_sign: int = 1
    frame: FramePose = FramePose()
    time_since_exchange: float = 0.0
    cleared: bool = False


@dataclass(frozen=True)
class FrameDelta:
    """Pose of the new footstep frame expressed in the old one."""

    dx: float
    dy: float
    dyaw: float


@dataclass(frozen=True)
class ReconstructedPose:
    """Body point set after tilt correction, rooted at the pelvis."""

    pelvis: np.ndarray
    trunk_top: np.ndarray
    l_hip: np.ndarray
    l_knee: np.ndarray
    l_ankle: np.ndarray
    l_foot: np.ndarray
    r_hip: np.ndarray
    r_knee: np.ndarray
    r_ankle: np.ndarray
    r_foot: np.ndarray
    l_foot_yaw: float
    r_foot_yaw: float
    trunk_rotation: np.ndarray

    def points(self) -> np.ndarray:
        return np.stack(
            [
                self.pelvis,
                self.trunk_top,
                self.l_hip,
                self.l_knee,
                self.l_ankle,
                self.l_foot,
                self.r_hip,
                self.r_knee,
                self.r_ankle,
                self.r_foot,
            ]
        )

    def foot(self, sign: int) -> np.ndarray:
        return self.r_foot if sign > 0 else self.l_foot

    def foot_yaw(self, sign: int) -> float:
        return self.r_foot_yaw if sign > 0 else self.l_foot_yaw


def _rx(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _ry(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rz(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def trunk_attitude(rotation: np.ndarray) -> tuple[float, float]:
    """Recover (roll, pitch) from a Ry(pitch) @ Rx(roll) trunk rotation."""
    roll = math.atan2(-rotation[1, 2], rotation[1, 1])
    pitch = math.atan2(-rotation[2, 0], rotation[0, 0])
    return roll, pitch


def _leg_chain(
    hip: np.ndarray, q: JointAngles, m: KinematicModel
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Knee, ankle, and sole positions for one leg below a hip point."""
    r_hip = _rz(q.hip_yaw) @ _rx(q.hip_roll) @ _ry(q.hip_pitch)
    knee = hip + r_hip @ np.array([0.0, 0.0, -m.thigh])
    r_knee = r_hip @ _ry(q.knee)
    ankle = knee + r_knee @ np.array([0.0, 0.0, -m.shank])
    r_ankle = r_knee @ _ry(q.ankle_pitch) @ _rx(q.ankle_roll)
    foot = ankle + r_ankle @ np.array([0.0, 0.0, -m.foot])
    return knee, ankle, foot


def reconstruct_pose(
    frame: SensorFrame, model: KinematicModel, support_sign: int
) -> ReconstructedPose:
    """Pose the chain with the joint angles, then tilt it to the trunk attitude.

    The pelvis is the kinematic root; after forward kinematics every point is
    rotated about the current support-foot center so the trunk roll/pitch
    equal the measured attitude.
    """
    half = 0.5 * model.hip_spacing
    l_hip = np.array([0.0, half, 0.0])
    r_hip = np.array([0.0, -half, 0.0])
    l_knee, l_ankle, l_foot = _leg_chain(l_hip, frame.left, model)
    r_knee, r_ankle, r_foot = _leg_chain(r_hip, frame.right, model)
    pelvis = np.zeros(3)
    trunk_top = np.array([0.0, 0.0, model.trunk])

    r_att = _ry(frame.trunk_pitch) @ _rx(frame.trunk_roll)
    pivot = r_foot if support_sign > 0 else l_foot

    def tilt(p: np.ndarray) -> np.ndarray:
        return r_att @ (p - pivot) + pivot

    return ReconstructedPose(
        pelvis=tilt(pelvis),
        trunk_top=tilt(trunk_top),
        l_hip=tilt(l_hip),
        l_knee=tilt(l_knee),
        l_ankle=tilt(l_ankle),
        l_foot=tilt(l_foot),
        r_hip=tilt(r_hip),
        r_knee=tilt(r_knee),
        r_ankle=tilt(r_ankle),
        r_foot=tilt(r_foot),
        l_foot_yaw=frame.left.hip_yaw,
        r_foot_yaw=frame.right.hip_yaw,
        trunk_rotation=r_att,
    )


def com_position(pose: ReconstructedPose, support_sign: int) -> tuple[float, float]:
    """Ground-projected hip midpoint in the support-foot frame.

    The support foot is the earth anchor: expressing the pelvis relative to
    the planted foot, rotated by the foot yaw, yields footstep-frame
    coordinates that preserve that yaw.
    """
    foot = pose.foot(support_sign)
    yaw = pose.foot_yaw(support_sign)
    mid = 0.5 * (pose.l_hip + pose.r_hip)
    dx = mid[0] - foot[0]
    dy = mid[1] - foot[1]
    c, s = math.cos(-yaw), math.sin(-yaw)
    return (c * dx - s * dy, s * dx + c * dy)


def detect_support_exchange(
    pose: ReconstructedPose, s: SupportState, cfg: EstimationConfig, dt: float
) -> tuple[SupportState, FrameDelta | None]:
    """Advance the support hysteresis and switch roles when warranted.

    The roles switch when the swing sole drops below the support sole, but
    only after the soles have been vertically separated by more than the
    clearance since the previous switch (assumes a flat, horizontal floor).
    On a switch the footstep frame relocates to the ground projection of the
    new support foot, preserving its yaw.
    """
    sup = pose.foot(s.support_sign)
    swing = pose.foot(-s.support_sign)
    cleared = s.cleared or abs(swing[2] - sup[2]) > cfg.exchange_clearance

    if cleared and swing[2] < sup[2]:
        old_yaw = pose.foot_yaw(s.support_sign)
        c, sn = math.cos(-old_yaw), math.sin(-old_yaw)
        ddx = swing[0] - sup[0]
        ddy = swing[1] - sup[1]
        delta = FrameDelta(
            dx=c * ddx - sn * ddy,
            dy=sn * ddx + c * ddy,
            dyaw=pose.foot_yaw(-s.support_sign) - old_yaw,
        )
        fc, fs = math.cos(s.frame.yaw), math.sin(s.frame.yaw)
        new_frame = FramePose(
            x=s.frame.x + fc * delta.dx - fs * delta.dy,
            y=s.frame.y + fs * delta.dx + fc * delta.dy,
            yaw=s.frame.yaw + delta.dyaw,
        )
        return (
            SupportState(
                support_sign=-s.support_sign,
                frame=new_frame,
                time_since_exchange=0.0,
                cleared=False,
            ),
            delta,
        )
    return (
        replace(s, time_since_exchange=s.time_since_exchange + dt, cleared=cleared),
        None,
    )


def extract_com(
    pose: ReconstructedPose,
    s: SupportState,
    prev: ComState | None,
    dt: float,
    delta: FrameDelta | None = None,
) -> ComState:
    """CoM state from the pose: projected position plus differenced velocity.

    Velocities come from a backward difference, which is noisy by nature;
    the predictive filter downstream is the designated smoother.  At an
    exchange tick the previous velocity is carried over into the new frame
    instead of differencing across frames, and dt <= 0 reuses the previous
    velocities.
    """
    x, y = com_position(pose, s.support_sign)
    if prev is None:
        return ComState(cx=x, vx=0.0, cy=y, vy=0.0)
    if delta is not None:
        c, sn = math.cos(-delta.dyaw), math.sin(-delta.dyaw)
        return ComState(
            cx=x,
            vx=c * prev.vx - sn * prev.vy,
            cy=y,
            vy=sn * prev.vx + c * prev.vy,
        )
    if dt <= 0.0:
        return ComState(cx=x, vx=prev.vx, cy=y, vy=prev.vy)
    return ComState(
        cx=x, vx=(x - prev.cx) / dt, cy=y, vy=(y - prev.cy) / dt
    )


@dataclass(frozen=True)
class EstimatorTick:
    pose: ReconstructedPose
    com: ComState
    support: SupportState
    exchanged: bool
    frame_delta: FrameDelta | None


class StateEstimator:
    """Sequential estimator over a stream of sensor frames.

    One instance per stream; ticks are strictly sequential.  The emitted
    ComState values are immutable and safe to share.
    """

    def __init__(
        self,
        model: KinematicModel,
        cfg: EstimationConfig,
        initial_support: int = 1,
    ):
        self.model = model
        self.cfg = cfg
        self.support = SupportState(support_sign=initial_support)
        self._prev_com: ComState | None = None
        self._prev_time: float | None = None

    def update(self, frame: SensorFrame) -> EstimatorTick:
        dt = 0.0
        if self._prev_time is not None:
            dt = frame.timestamp - self._prev_time
        pose = reconstruct_pose(frame, self.model, self.support.support_sign)
        new_support, delta = detect_support_exchange(pose, self.support, self.cfg, dt)
        if delta is not None:
            # frame changed: re-pose relative to the new support foot
            pose = reconstruct_pose(frame, self.model, new_support.support_sign)
        com = extract_com(pose, new_support, self._prev_com, dt, delta)
        self.support = new_support
        self._prev_com = com
        self._prev_time = frame.timestamp
        return EstimatorTick(
            pose=pose,
            com=com,
            support=new_support,
            exchanged=delta is not None,
            frame_delta=delta,
        )


SENSOR_LOG_COLUMNS = [
    "time",
    "l_hip_yaw",
    "l_hip_roll",
    "l_hip_pitch",
    "l_knee",
    "l_ankle_pitch",
    "l_ankle_roll",
    "r_hip_yaw",
    "r_hip_roll",
    "r_hip_pitch",
    "r_knee",
    "r_ankle_pitch",
    "r_ankle_roll",
    "trunk_roll",
    "trunk_pitch",
]


def read_sensor_log(path: str) -> list[SensorFrame]:
    """Read recorded sensor frames from CSV (columns SENSOR_LOG_COLUMNS)."""
    frames = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(SENSOR_LOG_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"sensor log missing columns: {sorted(missing)}")
        for row in reader:
            v = {k: float(row[k]) for k in SENSOR_LOG_COLUMNS}
            frames.append(
                SensorFrame(
                    timestamp=v["time"],
                    left=JointAngles(
                        hip_yaw=v["l_hip_yaw"],
                        hip_roll=v["l_hip_roll"],
                        hip_pitch=v["l_hip_pitch"],
                        knee=v["l_knee"],
                        ankle_pitch=v["l_ankle_pitch"],
                        ankle_roll=v["l_ankle_roll"],
                    ),
                    right=JointAngles(
                        hip_yaw=v["r_hip_yaw"],
                        hip_roll=v["r_hip_roll"],
                        hip_pitch=v["r_hip_pitch"],
                        knee=v["r_knee"],
                        ankle_pitch=v["r_ankle_pitch"],
                        ankle_roll=v["r_ankle_roll"],
                    ),
                    trunk_roll=v["trunk_roll"],
                    trunk_pitch=v["trunk_pitch"],
                )
            )
    return frames


def write_sensor_log(path: str, frames: list[SensorFrame]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SENSOR_LOG_COLUMNS)
        for f in frames:
            writer.writerow(
                [f"{v:.10g}" for v in (f.timestamp, *f.left.as_tuple(), *f.right.as_tuple(), f.trunk_roll, f.trunk_pitch)]
            )
