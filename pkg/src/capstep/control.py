"""Balance control: reference trajectory, predictive filter, ZMP offsets,
step timing, and footstep placement.

Each control tick turns the commanded walking velocity and the measured
point-mass state into a swing amplitude and a remaining step time for the
motion generator.  The pivot offsets steer the mass toward a nominal
end-of-step state; the step time follows the lateral oscillation; the next
footstep is placed so the lateral orbit returns to the nominal apex.  Only
the amplitude and the timing leave the controller; the pivot offsets are
implicit in them and are logged for diagnostics only.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum

from .config import GaitConfig, PendulumParams, RefConfig
from .cpg import SwingAmplitude
from .estimation import FrameDelta, SupportState
from .lipm import (
    ComState,
    State1D,
    ZmpOffset,
    arrival_times,
    lipm_predict,
    orbital_energy,
    predict_pos,
    predict_vel,
    time_to_position,
    time_to_velocity,
)


def _sgn(v: float) -> int:
    return (v > 0.0) - (v < 0.0)


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


@dataclass(frozen=True)
class GaitTarget:
    """Commanded walking velocity, each component clamped into [-1, 1]."""

    vx: float = 0.0
    vy: float = 0.0
    vpsi: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "vx", _clamp(self.vx, -1.0, 1.0))
        object.__setattr__(self, "vy", _clamp(self.vy, -1.0, 1.0))
        object.__setattr__(self, "vpsi", _clamp(self.vpsi, -1.0, 1.0))


@dataclass(frozen=True)
class NominalState:
    """Ideal end-of-step state for the commanded velocity.

    ``t_nom`` is the remaining nominal step time: reset to 2 tau at each
    support exchange and decremented once per tick by the caller.  ``tau``
    is the lateral apex-to-exchange time.
    """

    sx: float
    svx: float
    sy: float
    svy: float
    t_nom: float
    tau: float


class StepTimeCase(Enum):
    """Which branch selected the commanded step time."""

    SAGITTAL_LIMIT = "sagittal_limit"
    LATERAL_TARGET = "lateral_target"
    LATERAL_APEX = "lateral_apex"
    TIPOVER_HOLD = "tipover_hold"
    IMMEDIATE = "immediate"
    OPEN_LOOP = "open_loop"


@dataclass(frozen=True)
class FilterState:
    """Predictive-filter blocks: raw, model, and latency-projected states."""

    rx: ComState
    mx: ComState
    tx: ComState
    b: float = 0.0


@dataclass(frozen=True)
class StepParams:
    """Controller output: swing amplitude and remaining step time.

    The pivot offset rides along for diagnostics; the motion generator does
    not consume it.
    """

    amplitude: SwingAmplitude
    duration: float
    zmp: ZmpOffset = ZmpOffset()


@dataclass(frozen=True)
class ControlDiagnostics:
    """Per-tick internals for CSV logging and analysis."""

    raw: ComState
    filter: FilterState
    nominal: NominalState
    zy_raw: float
    zx_raw: float
    zmp: ZmpOffset
    zmp_clamped: bool
    duration: float
    case: StepTimeCase
    step_rel: tuple[float, float]
    step_coords: tuple[float, float]
    amplitude: SwingAmplitude
    amplitude_clamped: bool


def reference_trajectory(
    target: GaitTarget, support_sign: int, cfg: RefConfig, p: PendulumParams
) -> NominalState:
    """Nominal end-of-step state and step time for the commanded velocity.

    Laterally the exchange happens between delta and omega: a leading step
    stretches with the commanded side speed, the trailing step always
    exchanges at delta.  Sagittally the displacement scales with sigma.  The
    end-of-step velocities close a periodic orbit: the lateral one matches
    the apex energy, the sagittal one is the value that carries the mass
    from -sx back to +sx over one step.
    """
    if support_sign == _sgn(target.vy):
        xi_y = support_sign * (cfg.delta + abs(target.vy) * (cfg.omega - cfg.delta))
    else:
        xi_y = support_sign * cfg.delta
    xi_x = target.vx * cfg.sigma

    tau = time_to_position(xi_y, State1D(support_sign * cfg.alpha, 0.0), p)
    assert tau is not None  # delta > alpha guarantees a real arrival time
    ct = p.c * tau
    svx = p.c * xi_x * math.cosh(ct) / math.sinh(ct)
    svy = support_sign * p.c * math.sqrt(xi_y * xi_y - cfg.alpha * cfg.alpha)
    return NominalState(
        sx=xi_x, svx=svx, sy=xi_y, svy=svy, t_nom=2.0 * tau, tau=tau
    )


def _suppression(t_since_exchange: float, epsilon: float) -> float:
    """Noise gate that is zero right after an exchange and rises smoothly."""
    arg = max(t_since_exchange - epsilon, 0.0)
    return 1.0 - math.exp(-(arg * arg) / (2.0 * epsilon * epsilon))


def effective_latency(cfg: GaitConfig) -> float:
    """Actuation delay as realized by a tick-aligned control loop.

    A command computed at tick k takes effect at the first tick boundary at
    or after k * rho + latency; the filter predicts to that same instant.
    """
    if cfg.filter.latency <= 0.0:
        return 0.0
    return math.ceil(cfg.filter.latency / cfg.rho - 1e-9) * cfg.rho


def predictive_filter(
    raw: ComState,
    fs: FilterState | None,
    t_since_exchange: float,
    cfg: GaitConfig,
    z: ZmpOffset,
    frame_delta: FrameDelta | None = None,
    z_pipeline: "list[ZmpOffset] | None" = None,
) -> FilterState:
    """One filter tick: propagate the model state, blend, project latency.

    The model state follows the pendulum under the pivot offset that was
    actuated during the last tick and is pulled toward the raw measurement
    by b = f_s * f_d, clamped into [0, 1]: f_s suppresses the noisy window
    right after a support exchange, f_d suppresses blending when model and
    measurement already agree.  When an exchange occurred during the last
    tick the propagation splits at the exchange instant (known from the
    time since the exchange): old frame under the old pivot, then the new
    frame with a neutral pivot.  The projection ahead by the effective
    actuation delay yields the state the plant will be in when the command
    computed now takes effect; when the caller supplies the pivots already
    in flight (``z_pipeline``, one per tick of the horizon) the projection
    integrates through them, otherwise it assumes ``z`` stays constant.
    """
    p = cfg.pendulum
    if fs is None:
        mx = raw
    elif frame_delta is not None:
        # split the last tick at the exchange: the old pivot acted until
        # the exchange, the fresh stance pivots at the foot center
        frac = _clamp(cfg.rho - t_since_exchange, 0.0, cfg.rho)
        mx = lipm_predict(fs.mx, z, p, frac)
        c, s = math.cos(-frame_delta.dyaw), math.sin(-frame_delta.dyaw)
        px, py = mx.cx - frame_delta.dx, mx.cy - frame_delta.dy
        mx = ComState(
            cx=c * px - s * py,
            vx=c * mx.vx - s * mx.vy,
            cy=s * px + c * py,
            vy=s * mx.vx + c * mx.vy,
        )
        mx = lipm_predict(mx, ZmpOffset(), p, cfg.rho - frac)
    else:
        mx = lipm_predict(fs.mx, z, p, cfg.rho)
    dist = math.sqrt(
        (raw.cx - mx.cx) ** 2
        + (raw.vx - mx.vx) ** 2
        + (raw.cy - mx.cy) ** 2
        + (raw.vy - mx.vy) ** 2
    )
    f_s = _suppression(t_since_exchange, cfg.filter.epsilon)
    f_d = cfg.filter.distance_gain * dist
    b = _clamp(f_s * f_d, 0.0, 1.0)
    mx = ComState(
        cx=b * raw.cx + (1.0 - b) * mx.cx,
        vx=b * raw.vx + (1.0 - b) * mx.vx,
        cy=b * raw.cy + (1.0 - b) * mx.cy,
        vy=b * raw.vy + (1.0 - b) * mx.vy,
    )
    horizon = effective_latency(cfg)
    if horizon <= 0.0:
        tx = mx
    elif z_pipeline is not None:
        tx = mx
        for z_seg in z_pipeline:
            tx = lipm_predict(tx, z_seg, p, cfg.rho)
    else:
        tx = lipm_predict(mx, z, p, horizon)
    return FilterState(rx=raw, mx=mx, tx=tx, b=b)


def _zmp_for_target(
    x: float, v: float, target: float, t: float, p: PendulumParams
) -> float:
    """Pivot offset that lands the axis on the target at time t."""
    ct = p.c * t
    return (x * math.cosh(ct) + (v / p.c) * math.sinh(ct) - target) / (
        math.cosh(ct) - 1.0
    )


def lateral_zmp(
    c: ComState,
    nom: NominalState,
    cfg: RefConfig,
    p: PendulumParams,
    prev: float = 0.0,
) -> tuple[float, float, bool]:
    """Lateral pivot offset reaching the exchange location at the nominal time.

    Returns (bounded, unbounded, clamped).  A non-positive nominal time
    degenerates the formula, in which case the previous value is kept.
    """
    if nom.t_nom <= 0.0:
        return prev, prev, False
    zy = _zmp_for_target(c.cy, c.vy, nom.sy, nom.t_nom, p)
    bounded = _clamp(zy, cfg.zy_min, cfg.zy_max)
    return bounded, zy, bounded != zy


def sagittal_zmp(
    c: ComState,
    nom: NominalState,
    t_step: float,
    cfg: RefConfig,
    p: PendulumParams,
    prev: float = 0.0,
) -> tuple[float, float, bool]:
    """Sagittal pivot offset reaching the exchange location at the step time.

    Unlike the lateral axis this aims at the chosen step time, not the
    nominal one.
    """
    if t_step <= 0.0:
        return prev, prev, False
    zx = _zmp_for_target(c.cx, c.vx, nom.sx, t_step, p)
    bounded = _clamp(zx, cfg.zx_min, cfg.zx_max)
    return bounded, zx, bounded != zx


def step_time(
    c: ComState,
    nom: NominalState,
    zy: float,
    cfg: RefConfig,
    p: PendulumParams,
) -> tuple[float, StepTimeCase]:
    """Remaining step time, resolved through the five control cases.

    Normally the step ends when the lateral state reaches the exchange
    location (with the pivot offset applied) moving outward — the inbound
    crossing of a state that starts beyond the exchange location does not
    end the step.  If the location is never reached but an irregular
    lateral apex lies ahead, step at the apex; a tipping state holds a long
    constant time; anything else steps immediately.  The sagittal
    displacement limit preempts whichever of those was chosen when it comes
    first — unreachable lateral arrivals count as infinite, so the limit
    can still trigger — but it only ever shortens the step: an immediate
    step is never delayed to it.  Ties prefer the lateral arrival.
    """
    outward = 1 if nom.sy > 0.0 else -1
    lateral = State1D(c.cy - zy, c.vy)
    t_sy = None
    for t_cand in arrival_times(nom.sy - zy, lateral, p):
        if outward * predict_vel(lateral, p, t_cand) >= 0.0:
            t_sy = t_cand
            break
    if t_sy is not None and t_sy > 0.0:
        t_lat, case = t_sy, StepTimeCase.LATERAL_TARGET
    else:
        t_lat, case = None, None
        if t_sy is None:
            t_apex = time_to_velocity(0.0, State1D(c.cy - zy, c.vy), p)
            if t_apex is not None and t_apex > 0.0:
                t_lat, case = t_apex, StepTimeCase.LATERAL_APEX
        if case is None:
            if orbital_energy(State1D(c.cy, c.vy), p) > 0.0:
                t_lat, case = cfg.t_tipover, StepTimeCase.TIPOVER_HOLD
            else:
                t_lat, case = 0.0, StepTimeCase.IMMEDIATE
    t_cx = time_to_position(cfg.cx_max, State1D(c.cx, c.vx), p)
    if t_cx is not None and t_cx < t_lat:
        return t_cx, StepTimeCase.SAGITTAL_LIMIT
    return t_lat, case


def footstep_location(
    c: ComState,
    z: ZmpOffset,
    t_step: float,
    cfg: RefConfig,
    p: PendulumParams,
    support_sign: int,
) -> tuple[ComState, tuple[float, float]]:
    """Achievable end-of-step state and the footstep relative to it.

    Sagittally the step symmetry assumption centers the mass between the
    feet; laterally the offset is chosen so the orbit right after the
    exchange carries exactly the nominal apex energy.
    """
    c_end = lipm_predict(c, z, p, t_step)
    sx_rel = c_end.cx
    sy_rel = support_sign * math.sqrt(
        (c_end.vy * c_end.vy) / (p.c * p.c) + cfg.alpha * cfg.alpha
    )
    return c_end, (sx_rel, sy_rel)


def amplitude_conversion(
    coords: tuple[float, float], target: GaitTarget, cfg: RefConfig
) -> tuple[SwingAmplitude, bool]:
    """Normalize footstep coordinates into the swing amplitude.

    ``coords`` is the footstep position in the support-foot frame.  Both
    axes divide by their configured range so full-scale commands map to
    amplitude 1; the rotational component passes straight through.  Values
    outside [-1, 1] are clamped and flagged.
    """
    ax = (coords[0] / 2.0) / cfg.sigma
    ay = (abs(coords[1]) / 2.0 - cfg.delta) / (cfg.omega - cfg.delta)
    apsi = target.vpsi
    clamped = not (-1.0 <= ax <= 1.0 and -1.0 <= ay <= 1.0)
    return (
        SwingAmplitude(
            ax=_clamp(ax, -1.0, 1.0), ay=_clamp(ay, -1.0, 1.0), apsi=apsi
        ),
        clamped,
    )


def step_coords_from_amplitude(
    a: SwingAmplitude, cfg: RefConfig, support_sign: int
) -> tuple[float, float]:
    """Footstep position in the support-foot frame for a swing amplitude.

    Inverse of amplitude_conversion; the lateral offset carries the support
    sign because the new foot lands on the swing side.
    """
    sx = 2.0 * cfg.sigma * a.ax
    sy = 2.0 * (cfg.delta + a.ay * (cfg.omega - cfg.delta))
    return sx, support_sign * sy


class FootstepController:
    """Tick-sequential balance controller.

    One instance per gait; multiple independent instances may run in
    parallel.  Holds the filter state, the nominal-time countdown, and the
    previous pivot offsets for the degenerate branches.
    """

    def __init__(self, cfg: GaitConfig, initial_support: int = 1):
        self.cfg = cfg
        self._filter: FilterState | None = None
        self._t_nom: float | None = None
        self._prev_support = initial_support
        self._prev_frame = None
        self._prev_zy = 0.0
        self._prev_zx = 0.0
        self._prev_amplitude = SwingAmplitude()
        # issued pivot offsets; the entry latency-ticks back is the one the
        # plant actuated during the last tick
        self._latency_ticks = int(round(effective_latency(cfg) / cfg.rho))
        self._z_hist: deque = deque(maxlen=self._latency_ticks + 2)
        self.last_diagnostics: ControlDiagnostics | None = None

    def tick(
        self, target: GaitTarget, com: ComState, support: SupportState
    ) -> StepParams:
        cfg = self.cfg
        p = cfg.pendulum
        ref = cfg.reference
        lam = support.support_sign

        nom = reference_trajectory(target, lam, ref, p)

        frame_delta = None
        if lam != self._prev_support:
            frame_delta = self._frame_delta(support)
            # the exchange is detected one tick late; subtract the elapsed part
            self._t_nom = nom.t_nom - support.time_since_exchange
        self._prev_support = lam
        self._prev_frame = support.frame
        if self._t_nom is None:
            self._t_nom = nom.t_nom
        # the control laws act on the latency-projected state, so the
        # nominal countdown is referenced to the actuation instant; floored
        # at one tick to keep the pivot formula conditioned
        t_nom_eff = self._t_nom - self._latency_ticks * cfg.rho
        nom = replace(nom, t_nom=max(t_nom_eff, cfg.rho))
        self._t_nom -= cfg.rho
        # with less than a tick of nominal time left the pivot formula
        # degenerates; the step is ending anyway, so keep the previous value
        nominal_expired = t_nom_eff < cfg.rho

        if len(self._z_hist) > self._latency_ticks:
            z_actuated = self._z_hist[-(self._latency_ticks + 1)]
        else:
            z_actuated = ZmpOffset()
        if frame_delta is not None:
            # commands that were in flight across the exchange actuate a
            # neutral pivot; mirror that before projecting ahead
            self._z_hist = deque(
                [ZmpOffset()] * len(self._z_hist), maxlen=self._z_hist.maxlen
            )
        pipeline = None
        if self._latency_ticks > 0:
            tail = list(self._z_hist)[-self._latency_ticks:]
            pipeline = [ZmpOffset()] * (self._latency_ticks - len(tail)) + tail
        self._filter = predictive_filter(
            com,
            self._filter,
            support.time_since_exchange,
            cfg,
            z_actuated,
            frame_delta,
            pipeline,
        )
        c = self._filter.tx

        if nominal_expired:
            zy, zy_raw, zy_clamped = self._prev_zy, self._prev_zy, False
        else:
            zy, zy_raw, zy_clamped = lateral_zmp(c, nom, ref, p, self._prev_zy)
        t_step, case = step_time(c, nom, zy, ref, p)
        zx, zx_raw, zx_clamped = sagittal_zmp(c, nom, t_step, ref, p, self._prev_zx)
        z = ZmpOffset(zx=zx, zy=zy)
        self._prev_zy, self._prev_zx = zy, zx
        self._z_hist.append(z)

        if case is StepTimeCase.TIPOVER_HOLD:
            # predicting across the long hold is meaningless; keep the last
            # footstep while waiting for the mass to come back
            amplitude, amp_clamped = self._prev_amplitude, False
            coords = step_coords_from_amplitude(amplitude, ref, lam)
            c_end, rel = c, (coords[0] - c.cx, coords[1] - c.cy)
        else:
            c_end, rel = footstep_location(c, z, t_step, ref, p, lam)
            coords = (c_end.cx + rel[0], c_end.cy + rel[1])
            amplitude, amp_clamped = amplitude_conversion(coords, target, ref)
        self._prev_amplitude = amplitude

        self.last_diagnostics = ControlDiagnostics(
            raw=com,
            filter=self._filter,
            nominal=nom,
            zy_raw=zy_raw,
            zx_raw=zx_raw,
            zmp=z,
            zmp_clamped=zy_clamped or zx_clamped,
            duration=t_step,
            case=case,
            step_rel=rel,
            step_coords=coords,
            amplitude=amplitude,
            amplitude_clamped=amp_clamped,
        )
        return StepParams(amplitude=amplitude, duration=t_step, zmp=z)

    def _frame_delta(self, support: SupportState) -> FrameDelta | None:
        if self._prev_frame is None:
            return None
        old, new = self._prev_frame, support.frame
        c, s = math.cos(-old.yaw), math.sin(-old.yaw)
        dx, dy = new.x - old.x, new.y - old.y
        return FrameDelta(
            dx=c * dx - s * dy, dy=s * dx + c * dy, dyaw=new.yaw - old.yaw
        )
