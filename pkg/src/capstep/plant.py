"""Closed-loop point-mass plant with latency, noise, pushes, and sweeps.

The plant is the same linear pendulum the controller reasons about, which
makes the plant exact (closed-form propagation, segmented at command
switches) and leaves the controller as the only approximation under test.
Support exchanges are instantaneous frame changes driven by the stepping
phase; the new foot is placed by inverting the amplitude normalization.
Pushes are instantaneous velocity deltas, since a point mass offers no
surface to apply a force to.

A scenario plus a seed is bit-reproducible; independent scenario runs may
execute in parallel.
"""

from __future__ import annotations

import csv
import math
import random
import time as _time
from collections import deque
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Any

import yaml

from .config import GaitConfig
from .control import (
    FootstepController,
    GaitTarget,
    StepParams,
    StepTimeCase,
    effective_latency,
    reference_trajectory,
    step_coords_from_amplitude,
)
from .cpg import MotionPhase, SwingAmplitude, advance_phase
from .estimation import FramePose, SupportState
from .lipm import ComState, ZmpOffset, lipm_predict

_TIME_EPS = 1e-9


class ScenarioError(Exception):
    """Raised for malformed scenario documents."""


@dataclass(frozen=True)
class Push:
    """Velocity impulse applied at the first tick at or after t."""

    t: float
    dvx: float = 0.0
    dvy: float = 0.0


@dataclass(frozen=True)
class Injection:
    """State disturbance at a phase-referenced moment.

    Triggers ``offset`` seconds after the ``step``-th support exchange into
    the given support side.  Absolute components (cx, vx, cy, vy) replace
    the plant state; delta components (dcx, ...) add to it, which is how
    impulse grids are swept.
    """

    step: int
    support: int
    offset: float
    cx: float | None = None
    vx: float | None = None
    cy: float | None = None
    vy: float | None = None
    dcx: float = 0.0
    dvx: float = 0.0
    dcy: float = 0.0
    dvy: float = 0.0


@dataclass(frozen=True)
class CommandPoint:
    t: float
    target: GaitTarget


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    mode: str = "closed_loop"  # or "open_loop"
    duration: float = 10.0
    seed: int = 0
    initial_support: int = 1
    commands: tuple[CommandPoint, ...] = (CommandPoint(0.0, GaitTarget()),)
    pushes: tuple[Push, ...] = ()
    injections: tuple[Injection, ...] = ()
    noise_pos: float = 0.0
    noise_vel: float = 0.0
    sensor_delay: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("closed_loop", "open_loop"):
            raise ScenarioError(f"unknown mode '{self.mode}'")
        if self.duration <= 0.0:
            raise ScenarioError("duration must be positive")
        if self.initial_support not in (-1, 1):
            raise ScenarioError("initial_support must be -1 or 1")
        for seq, name in ((self.commands, "commands"), (self.pushes, "pushes")):
            times = [item.t for item in seq]
            if times != sorted(times):
                raise ScenarioError(f"{name} must be time-sorted")
        if not self.commands or self.commands[0].t > 0.0:
            raise ScenarioError("commands must start at t = 0")


def scenario_from_dict(data: dict[str, Any]) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a mapping")
    known = {
        "name",
        "mode",
        "duration",
        "seed",
        "initial_support",
        "commands",
        "pushes",
        "injections",
        "noise",
        "sensor_delay",
    }
    unknown = set(data) - known
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
    try:
        commands = tuple(
            CommandPoint(
                t=float(c.get("t", 0.0)),
                target=GaitTarget(
                    vx=float(c.get("vx", 0.0)),
                    vy=float(c.get("vy", 0.0)),
                    vpsi=float(c.get("vpsi", 0.0)),
                ),
            )
            for c in data.get("commands", [{"t": 0.0}])
        )
        pushes = tuple(
            Push(
                t=float(p["t"]),
                dvx=float(p.get("dvx", 0.0)),
                dvy=float(p.get("dvy", 0.0)),
            )
            for p in data.get("pushes", [])
        )
        injections = tuple(
            Injection(
                step=int(i["step"]),
                support=int(i.get("support", 1)),
                offset=float(i.get("offset", 0.0)),
                cx=None if i.get("cx") is None else float(i["cx"]),
                vx=None if i.get("vx") is None else float(i["vx"]),
                cy=None if i.get("cy") is None else float(i["cy"]),
                vy=None if i.get("vy") is None else float(i["vy"]),
                dcx=float(i.get("dcx", 0.0)),
                dvx=float(i.get("dvx", 0.0)),
                dcy=float(i.get("dcy", 0.0)),
                dvy=float(i.get("dvy", 0.0)),
            )
            for i in data.get("injections", [])
        )
        noise = data.get("noise", {}) or {}
        return Scenario(
            name=str(data.get("name", "scenario")),
            mode=str(data.get("mode", "closed_loop")),
            duration=float(data.get("duration", 10.0)),
            seed=int(data.get("seed", 0)),
            initial_support=int(data.get("initial_support", 1)),
            commands=commands,
            pushes=pushes,
            injections=injections,
            noise_pos=float(noise.get("pos", 0.0)),
            noise_vel=float(noise.get("vel", 0.0)),
            sensor_delay=float(data.get("sensor_delay", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad scenario field: {exc}") from exc


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario '{path}': {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"malformed YAML in '{path}': {exc}") from exc
    if data is None:
        raise ScenarioError(f"scenario '{path}' is empty")
    return scenario_from_dict(data)


@dataclass(frozen=True)
class PlantState:
    """Ground-truth plant state.

    The point-mass state lives in the current support-foot frame (the same
    frame the controller works in); the foot pose accumulates odometry.
    """

    com: ComState
    support_sign: int
    foot_world: FramePose
    phase: MotionPhase
    time: float
    time_since_exchange: float


def _rot2(x: float, y: float, a: float) -> tuple[float, float]:
    c, s = math.cos(a), math.sin(a)
    return (c * x - s * y, s * x + c * y)


def execute_exchange(
    ps: PlantState, amplitude: SwingAmplitude, cfg: GaitConfig
) -> PlantState:
    """Instantaneous support exchange: place the foot, relocate the frame.

    The new foot position inverts the amplitude normalization; the mass
    state is re-expressed in the new frame, so its world-frame position and
    velocity are preserved exactly.
    """
    sx, sy = step_coords_from_amplitude(amplitude, cfg.reference, ps.support_sign)
    dyaw = cfg.simulation.yaw_step_gain * amplitude.apsi
    px, py = _rot2(ps.com.cx - sx, ps.com.cy - sy, -dyaw)
    vx, vy = _rot2(ps.com.vx, ps.com.vy, -dyaw)
    fx, fy = _rot2(sx, sy, ps.foot_world.yaw)
    return replace(
        ps,
        com=ComState(cx=px, vx=vx, cy=py, vy=vy),
        support_sign=-ps.support_sign,
        foot_world=FramePose(
            x=ps.foot_world.x + fx,
            y=ps.foot_world.y + fy,
            yaw=ps.foot_world.yaw + dyaw,
        ),
        time_since_exchange=0.0,
    )


def step_plant(
    ps: PlantState, cmd: StepParams, cfg: GaitConfig, dt: float | None = None
) -> tuple[PlantState, bool]:
    """Advance the plant one control tick under a single active command.

    Integrates both axes in closed form with the command's pivot offset,
    advances the stepping phase with the commanded remaining time, and on
    phase completion executes the support exchange.
    """
    if dt is None:
        dt = cfg.rho
    com = lipm_predict(ps.com, cmd.zmp, cfg.pendulum, dt)
    phase, exchanged = advance_phase(ps.phase, cmd.duration, cfg.cpg)
    ps = replace(
        ps,
        com=com,
        phase=phase,
        time=ps.time + dt,
        time_since_exchange=ps.time_since_exchange + dt,
    )
    if exchanged:
        ps = execute_exchange(ps, cmd.amplitude, cfg)
    return ps, exchanged


def initial_plant_state(cfg: GaitConfig, support: int = 1) -> PlantState:
    """Standing start: mass at rest centered between feet one step apart."""
    return PlantState(
        com=ComState(cx=0.0, vx=0.0, cy=support * cfg.reference.delta, vy=0.0),
        support_sign=support,
        foot_world=FramePose(),
        phase=MotionPhase(mu=-math.pi, support_sign=support, time_in_step=0.0),
        time=0.0,
        time_since_exchange=0.0,
    )


def nominal_start_state(
    cfg: GaitConfig, target: GaitTarget, support: int = 1
) -> PlantState:
    """Start exactly on the nominal orbit at the beginning of a step.

    The state mirrors the end of the preceding opposite-side step: position
    at the previous exchange distance on the new support side, velocity
    carried over.  The feedforward gait needs this start, having no feedback
    to fall into its cycle from elsewhere.
    """
    nom_prev = reference_trajectory(target, -support, cfg.reference, cfg.pendulum)
    start = PlantState(
        com=ComState(
            cx=-nom_prev.sx,
            vx=nom_prev.svx,
            cy=support * abs(nom_prev.sy),
            vy=nom_prev.svy,
        ),
        support_sign=support,
        foot_world=FramePose(),
        phase=MotionPhase(mu=-math.pi, support_sign=support, time_in_step=0.0),
        time=0.0,
        time_since_exchange=0.0,
    )
    return start


class Sensor:
    """Measurement channel: Gaussian noise plus an optional fixed delay."""

    def __init__(
        self, noise_pos: float, noise_vel: float, delay: float, rho: float, seed: int
    ):
        self.noise_pos = noise_pos
        self.noise_vel = noise_vel
        self._rng = random.Random(seed)
        self._buffer: deque = deque()
        self._delay_ticks = int(round(delay / rho)) if delay > 0.0 else 0

    def sense(
        self, com: ComState, support: SupportState
    ) -> tuple[ComState, SupportState]:
        if self.noise_pos > 0.0 or self.noise_vel > 0.0:
            g = self._rng.gauss
            com = ComState(
                cx=com.cx + g(0.0, self.noise_pos),
                vx=com.vx + g(0.0, self.noise_vel),
                cy=com.cy + g(0.0, self.noise_pos),
                vy=com.vy + g(0.0, self.noise_vel),
            )
        if self._delay_ticks == 0:
            return com, support
        self._buffer.append((com, support))
        if len(self._buffer) > self._delay_ticks:
            return self._buffer.popleft()
        return self._buffer[0]


@dataclass
class TickRecord:
    time: float
    com: ComState
    support_sign: int
    command: StepParams
    case: str
    event: str


@dataclass
class ActuationRecord:
    """True plant state at the instant a command took effect."""

    issue_time: float
    actuation_time: float
    com: ComState
    support_sign: int


@dataclass
class RunReport:
    """Summary of one scenario run."""

    name: str
    mode: str
    outcome: str
    ticks: int
    steps: int
    falls: int
    apex_distances: list[float] = field(default_factory=list)
    step_periods: list[float] = field(default_factory=list)
    tick_mean_s: float | None = None
    tick_max_s: float | None = None
    tick_p99_s: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.name,
            "mode": self.mode,
            "outcome": self.outcome,
            "ticks": self.ticks,
            "steps": self.steps,
            "falls": self.falls,
            "apex_distances": self.apex_distances,
            "step_periods": self.step_periods,
            "tick_mean_s": self.tick_mean_s,
            "tick_max_s": self.tick_max_s,
            "tick_p99_s": self.tick_p99_s,
        }


@dataclass
class RunResult:
    report: RunReport
    records: list[TickRecord]
    tx_trace: list[tuple[float, ComState, int]] = field(default_factory=list)
    actuations: list[ActuationRecord] = field(default_factory=list)


class _FallDetector:
    """Declares a fall only when the escape condition persists a full step.

    The persistence window avoids misclassifying the long tip-over hold,
    where the controller slows down and waits for the mass to come back.
    """

    def __init__(self, cfg: GaitConfig):
        nom = reference_trajectory(GaitTarget(), 1, cfg.reference, cfg.pendulum)
        self.window = nom.t_nom
        self.rho = cfg.rho
        self.rx = cfg.simulation.fall_radius_x
        self.ry = cfg.simulation.fall_radius_y
        self.p = cfg.pendulum
        self._timer = 0.0

    def update(self, com: ComState) -> bool:
        # a tipped-over mass (positive lateral energy) beyond the radius is
        # gone; so is one that escaped off-board with negative energy, since
        # the radius already exceeds any kinematic leg span.  Either way the
        # lateral test reduces to the radius; the sagittal has no energy
        # qualifier to begin with.
        if abs(com.cy) > self.ry or abs(com.cx) > self.rx:
            self._timer += self.rho
        else:
            self._timer = 0.0
        return self._timer >= self.window


def _open_loop_amplitude(target: GaitTarget, support: int) -> SwingAmplitude:
    """Feedforward amplitude: the nominal step for the commanded velocity."""
    leading = support == ((target.vy > 0.0) - (target.vy < 0.0))
    return SwingAmplitude(
        ax=target.vx,
        ay=abs(target.vy) if leading else 0.0,
        apsi=target.vpsi,
    )


def run_scenario(
    sc: Scenario,
    cfg: GaitConfig,
    keep_log: bool = True,
    collect_tx: bool = False,
    time_controller: bool = False,
    start: PlantState | None = None,
) -> RunResult:
    """Execute one scenario tick by tick and classify the outcome.

    In closed-loop mode the balance controller is in the loop behind the
    configured actuation latency (commands take effect exactly ``latency``
    seconds after they were computed, mid-tick if necessary); in open-loop
    mode the controller is never invoked and the plant steps on the nominal
    feedforward schedule.
    """
    rho = cfg.rho
    p = cfg.pendulum
    latency_ticks = int(round(effective_latency(cfg) / rho))
    n_ticks = int(round(sc.duration / rho))
    if sc.mode == "closed_loop":
        state = start or initial_plant_state(cfg, sc.initial_support)
        controller = FootstepController(cfg, sc.initial_support)
    else:
        # the feedforward gait cannot reach its cycle from a standing start
        state = start or nominal_start_state(
            cfg, sc.commands[0].target, sc.initial_support
        )
        controller = None
    sensor = Sensor(sc.noise_pos, sc.noise_vel, sc.sensor_delay, rho, sc.seed)
    detector = _FallDetector(cfg)

    target = sc.commands[0].target
    nom0 = reference_trajectory(target, state.support_sign, cfg.reference, p)
    active = StepParams(
        amplitude=_open_loop_amplitude(target, state.support_sign),
        duration=nom0.t_nom,
        zmp=ZmpOffset(),
    )
    active_mature_t = 0.0
    active_issue_t = 0.0
    last_exchange_t = -1.0
    ff_t0, ff_t_nom = 0.0, nom0.t_nom  # feedforward step clock for stale windows
    open_t_nom = nom0.t_nom
    queue: deque = deque()  # (mature_tick, issue_time, command)

    cmd_idx = 0
    push_idx = 0
    exchange_counts: dict[int, int] = {-1: 0, 1: 0}
    pending_injections: list[tuple[float, Injection]] = []
    done_injections: set[int] = set()

    records: list[TickRecord] = []
    tx_trace: list[tuple[float, ComState, int]] = []
    actuations: list[ActuationRecord] = []
    tick_times: list[float] = []
    apexes: list[float] = []
    exchange_times: list[float] = []
    prev_vy = state.com.vy
    outcome = "RECOVERED"
    ticks_done = 0

    for k in range(n_ticks):
        t = k * rho
        event_parts: list[str] = []

        while cmd_idx + 1 < len(sc.commands) and sc.commands[cmd_idx + 1].t <= t + _TIME_EPS:
            cmd_idx += 1
            target = sc.commands[cmd_idx].target

        while push_idx < len(sc.pushes) and sc.pushes[push_idx].t <= t + _TIME_EPS:
            push = sc.pushes[push_idx]
            state = replace(
                state,
                com=replace(
                    state.com, vx=state.com.vx + push.dvx, vy=state.com.vy + push.dvy
                ),
            )
            event_parts.append("push")
            push_idx += 1

        for due, inj in list(pending_injections):
            if due <= t + _TIME_EPS:
                com = state.com
                state = replace(
                    state,
                    com=ComState(
                        cx=(com.cx if inj.cx is None else inj.cx) + inj.dcx,
                        vx=(com.vx if inj.vx is None else inj.vx) + inj.dvx,
                        cy=(com.cy if inj.cy is None else inj.cy) + inj.dcy,
                        vy=(com.vy if inj.vy is None else inj.vy) + inj.dvy,
                    ),
                )
                pending_injections.remove((due, inj))
                event_parts.append("inject")

        support_view = SupportState(
            support_sign=state.support_sign,
            frame=state.foot_world,
            time_since_exchange=state.time_since_exchange,
        )
        if controller is not None:
            meas, meas_support = sensor.sense(state.com, support_view)
            t0 = _time.perf_counter() if time_controller else 0.0
            cmd = controller.tick(target, meas, meas_support)
            if time_controller:
                tick_times.append(_time.perf_counter() - t0)
            case = controller.last_diagnostics.case.value
            if collect_tx:
                tx_trace.append(
                    (t, controller.last_diagnostics.filter.tx, state.support_sign)
                )
        else:
            cmd = StepParams(
                amplitude=_open_loop_amplitude(target, state.support_sign),
                duration=open_t_nom,
                zmp=ZmpOffset(),
            )
            open_t_nom = max(open_t_nom - rho, 0.0)
            case = StepTimeCase.OPEN_LOOP.value
        if controller is not None:
            queue.append((k + latency_ticks, t, cmd))
        else:
            # the feedforward clock lives in the plant; no transport delay
            queue.append((k, t, cmd))

        # tick-aligned actuation: due commands apply for the whole tick
        while queue and queue[0][0] <= k:
            mature_tick, issued, active = queue.popleft()
            active_mature_t = mature_tick * rho
            active_issue_t = issued
            if collect_tx:
                actuations.append(
                    ActuationRecord(issued, t, state.com, state.support_sign)
                )

        pre_com = state.com
        pre_support = state.support_sign

        # a support exchange invalidates commands computed for the previous
        # stance: until informed commands mature, the plant pivots at the
        # foot center and steps on the fresh step's nominal clock
        stale = active_issue_t <= last_exchange_t
        if stale:
            z_eff = ZmpOffset()
            t_remaining = max(ff_t_nom - (t - ff_t0), 0.0)
        else:
            z_eff = active.zmp
            t_remaining = max(active.duration - (t - active_mature_t), 0.0)
        phase, exchanged = advance_phase(state.phase, t_remaining, cfg.cpg)

        com = state.com
        support_now = state.support_sign
        world_now = state.foot_world
        frac = min(t_remaining, rho)
        if exchanged:
            # exchange at the exact commanded completion instant
            if frac > _TIME_EPS:
                com = lipm_predict(com, z_eff, p, frac)
            placed = execute_exchange(
                replace(state, com=com, support_sign=support_now, foot_world=world_now),
                active.amplitude,
                cfg,
            )
            com = placed.com
            support_now = placed.support_sign
            world_now = placed.foot_world
            last_exchange_t = t + frac
            com = lipm_predict(com, ZmpOffset(), p, rho - frac)
        else:
            com = lipm_predict(com, z_eff, p, rho)

        state = replace(
            state,
            com=com,
            support_sign=support_now,
            foot_world=world_now,
            phase=phase,
            time=t + rho,
            time_since_exchange=(
                rho - frac if exchanged else state.time_since_exchange + rho
            ),
        )
        if exchanged:
            event_parts.append("exchange")
            exchange_times.append(t + frac)
            exchange_counts[state.support_sign] += 1
            nom = reference_trajectory(target, state.support_sign, cfg.reference, p)
            # the fresh step clock starts at the exchange instant, part-way
            # into this tick
            open_t_nom = nom.t_nom - (t + rho - last_exchange_t)
            ff_t0, ff_t_nom = last_exchange_t, nom.t_nom
            for i, inj in enumerate(sc.injections):
                if (
                    i not in done_injections
                    and inj.support == state.support_sign
                    and exchange_counts[state.support_sign] == inj.step
                ):
                    pending_injections.append((state.time + inj.offset, inj))
                    done_injections.add(i)

        if prev_vy * state.com.vy < 0.0 or (prev_vy != 0.0 and state.com.vy == 0.0):
            apexes.append(abs(state.com.cy))
        prev_vy = state.com.vy

        if keep_log:
            records.append(
                TickRecord(
                    time=t,
                    com=pre_com,
                    support_sign=pre_support,
                    command=cmd,
                    case=case,
                    event="+".join(event_parts),
                )
            )
        ticks_done = k + 1
        if detector.update(state.com):
            outcome = "FELL"
            break

    periods = [
        exchange_times[i + 1] - exchange_times[i]
        for i in range(len(exchange_times) - 1)
    ]
    report = RunReport(
        name=sc.name,
        mode=sc.mode,
        outcome=outcome,
        ticks=ticks_done,
        steps=len(exchange_times),
        falls=1 if outcome == "FELL" else 0,
        apex_distances=apexes,
        step_periods=periods,
    )
    if tick_times and len(tick_times) >= 1000:
        ordered = sorted(tick_times)
        report.tick_mean_s = sum(tick_times) / len(tick_times)
        report.tick_max_s = ordered[-1]
        report.tick_p99_s = ordered[int(0.99 * (len(ordered) - 1))]
    return RunResult(
        report=report, records=records, tx_trace=tx_trace, actuations=actuations
    )


TRAJECTORY_COLUMNS = [
    "time",
    "cx",
    "vx",
    "cy",
    "vy",
    "lambda",
    "zx",
    "zy",
    "t_step",
    "case",
    "ax",
    "ay",
    "apsi",
    "event",
]


def write_trajectory_csv(path: str, records: list[TickRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    f"{r.time:.10g}",
                    f"{r.com.cx:.12g}",
                    f"{r.com.vx:.12g}",
                    f"{r.com.cy:.12g}",
                    f"{r.com.vy:.12g}",
                    str(r.support_sign),
                    f"{r.command.zmp.zx:.12g}",
                    f"{r.command.zmp.zy:.12g}",
                    f"{r.command.duration:.12g}",
                    r.case,
                    f"{r.command.amplitude.ax:.12g}",
                    f"{r.command.amplitude.ay:.12g}",
                    f"{r.command.amplitude.apsi:.12g}",
                    r.event,
                ]
            )


@dataclass(frozen=True)
class SweepCell:
    axis: str  # "lateral" or "sagittal"
    i: int
    j: int
    c: float
    v: float


@dataclass(frozen=True)
class SweepSpec:
    """Grid of state injections swept in open and closed loop.

    Each cell overrides the respective axis pair at a canonical mid-step
    moment of a settled walk-in-place gait.
    """

    inject_step: int = 6
    duration: float = 10.0
    seed: int = 0


def grid_cells(
    axis: str, c_range: tuple[float, float, int], v_range: tuple[float, float, int]
) -> tuple[SweepCell, ...]:
    c0, c1, nc = c_range
    v0, v1, nv = v_range
    cells = []
    for i in range(nc):
        c = c0 + (c1 - c0) * i / (nc - 1) if nc > 1 else c0
        for j in range(nv):
            v = v0 + (v1 - v0) * j / (nv - 1) if nv > 1 else v0
            cells.append(SweepCell(axis=axis, i=i, j=j, c=c, v=v))
    return tuple(cells)


def _cell_scenario(
    cell: SweepCell, spec: SweepSpec, cfg: GaitConfig, mode: str
) -> Scenario:
    """Impulse-grid scenario: the cell's (c, v) adds to the state mid-step."""
    tau = reference_trajectory(GaitTarget(), 1, cfg.reference, cfg.pendulum).tau
    offset = round(tau / cfg.rho) * cfg.rho
    if cell.axis == "lateral":
        inj = Injection(
            step=spec.inject_step, support=1, offset=offset, dcy=cell.c, dvy=cell.v
        )
    else:
        inj = Injection(
            step=spec.inject_step, support=1, offset=offset, dcx=cell.c, dvx=cell.v
        )
    return Scenario(
        name=f"sweep-{cell.axis}-{cell.i}-{cell.j}",
        mode=mode,
        duration=spec.duration,
        seed=spec.seed,
        injections=(inj,),
    )


def _sweep_worker(args: tuple) -> tuple[int, str, str]:
    idx, cell, spec, cfg = args
    outcomes = []
    for mode in ("open_loop", "closed_loop"):
        sc = _cell_scenario(cell, spec, cfg, mode)
        res = run_scenario(sc, cfg, keep_log=False)
        outcomes.append(res.report.outcome)
    return idx, outcomes[0], outcomes[1]


@dataclass
class StabilityMap:
    cells: list[SweepCell]
    open_outcomes: list[str]
    closed_outcomes: list[str]

    def count(self, mode: str, outcome: str = "RECOVERED") -> int:
        seq = self.open_outcomes if mode == "open_loop" else self.closed_outcomes
        return sum(1 for o in seq if o == outcome)

    def contains_open(self) -> bool:
        """True when every open-loop-recovered cell also recovers closed loop."""
        return all(
            c == "RECOVERED"
            for o, c in zip(self.open_outcomes, self.closed_outcomes)
            if o == "RECOVERED"
        )


def sweep_phase_space(
    cells: tuple[SweepCell, ...],
    spec: SweepSpec,
    cfg: GaitConfig,
    workers: int = 1,
) -> StabilityMap:
    """Classify every grid cell in both modes; order-independent merge."""
    args = [(i, cell, spec, cfg) for i, cell in enumerate(cells)]
    if workers > 1:
        with Pool(workers) as pool:
            results = pool.map(_sweep_worker, args, chunksize=8)
    else:
        results = [_sweep_worker(a) for a in args]
    results.sort(key=lambda r: r[0])
    return StabilityMap(
        cells=list(cells),
        open_outcomes=[r[1] for r in results],
        closed_outcomes=[r[2] for r in results],
    )


def write_sweep_csv(path: str, m: StabilityMap) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "i", "j", "c", "v", "open_loop", "closed_loop"])
        for cell, o, c in zip(m.cells, m.open_outcomes, m.closed_outcomes):
            writer.writerow(
                [cell.axis, cell.i, cell.j, f"{cell.c:.10g}", f"{cell.v:.10g}", o, c]
            )
