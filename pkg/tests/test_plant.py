import math
import random
from dataclasses import replace

import pytest
from pytest import approx

from capstep import (
    ComState,
    GaitConfig,
    GaitTarget,
    Scenario,
    ScenarioError,
    StepParams,
    SwingAmplitude,
    ZmpOffset,
    run_scenario,
    step_plant,
)
from capstep.control import step_coords_from_amplitude
from capstep.estimation import SupportState
from capstep.lipm import State1D, predict_pos, predict_vel
from capstep.plant import (
    Injection,
    Push,
    Sensor,
    SweepSpec,
    TRAJECTORY_COLUMNS,
    grid_cells,
    initial_plant_state,
    load_scenario,
    nominal_start_state,
    scenario_from_dict,
    sweep_phase_space,
    write_sweep_csv,
    write_trajectory_csv,
)

from oracles import rk4_pendulum


def log_bytes(records, tmp_path, name):
    path = tmp_path / name
    write_trajectory_csv(str(path), records)
    return path.read_bytes()


class TestStepPlant:
    def test_matches_closed_form_from_apex(self, cfg):
        ps = initial_plant_state(cfg, 1)
        ps = replace(ps, com=ComState(0.0, 0.0, 0.04, 0.0))
        cmd = StepParams(amplitude=SwingAmplitude(), duration=0.5, zmp=ZmpOffset())
        out, _ = step_plant(ps, cmd, cfg)
        expected = predict_pos(State1D(0.04, 0.0), cfg.pendulum, cfg.rho)
        assert out.com.cy == approx(expected, abs=1e-9)
        # and against the independent integrator
        x, v = rk4_pendulum(0.04, 0.0, cfg.pendulum.c, 0.0, cfg.rho)
        assert out.com.cy == approx(float(x), abs=1e-9)

    def test_exchange_preserves_world_state(self, cfg):
        ps = initial_plant_state(cfg, 1)
        ps = replace(
            ps,
            com=ComState(0.01, 0.15, 0.055, 0.12),
            phase=replace(ps.phase, mu=-0.0005, time_in_step=0.3),
        )
        amp = SwingAmplitude(ax=0.2, ay=0.1)
        cmd = StepParams(amplitude=amp, duration=0.0, zmp=ZmpOffset())
        out, exchanged = step_plant(ps, cmd, cfg)
        assert exchanged
        # world-frame mass position: frame origin + frame-relative coords
        sx, sy = step_coords_from_amplitude(amp, cfg.reference, 1)
        pre = step_plant(ps, replace(cmd, duration=1.0), cfg)[0]  # no exchange
        world_before = (pre.com.cx, pre.com.cy)
        world_after = (out.foot_world.x + out.com.cx, out.foot_world.y + out.com.cy)
        assert world_after[0] == approx(world_before[0], abs=1e-12)
        assert world_after[1] == approx(world_before[1], abs=1e-12)
        assert (out.com.vx, out.com.vy) == approx((pre.com.vx, pre.com.vy))

    def test_push_is_discontinuous_velocity_delta(self, cfg):
        sc = Scenario(name="p", duration=1.0, pushes=(Push(t=0.5, dvx=0.2),))
        res = run_scenario(sc, cfg)
        rows = {round(r.time, 4): r for r in res.records}
        before = rows[0.49].com.vx
        after = rows[0.5].com.vx
        assert after - before == approx(0.2, abs=5e-3)


class TestSensor:
    def test_zero_noise_identity(self, cfg):
        s = Sensor(0.0, 0.0, 0.0, cfg.rho, seed=1)
        c = ComState(0.01, 0.2, 0.03, -0.1)
        sup = SupportState()
        assert s.sense(c, sup) == (c, sup)

    def test_seeded_sequence_reproducible(self, cfg):
        c = ComState(0.0, 0.0, 0.0, 0.0)
        sup = SupportState()
        a = Sensor(0.01, 0.02, 0.0, cfg.rho, seed=9)
        b = Sensor(0.01, 0.02, 0.0, cfg.rho, seed=9)
        seq_a = [a.sense(c, sup)[0] for _ in range(50)]
        seq_b = [b.sense(c, sup)[0] for _ in range(50)]
        assert seq_a == seq_b

    def test_noise_statistics(self, cfg):
        sigma = 0.01
        s = Sensor(sigma, 0.0, 0.0, cfg.rho, seed=3)
        c = ComState(0.0, 0.0, 0.0, 0.0)
        sup = SupportState()
        xs = [s.sense(c, sup)[0].cx for _ in range(100_000)]
        mean = sum(xs) / len(xs)
        std = math.sqrt(sum((x - mean) ** 2 for x in xs) / len(xs))
        assert std == approx(sigma, rel=0.05)

    def test_delay_shifts_measurements(self, cfg):
        s = Sensor(0.0, 0.0, 3 * cfg.rho, cfg.rho, seed=0)
        sup = SupportState()
        outs = []
        for k in range(6):
            c = ComState(float(k), 0.0, 0.0, 0.0)
            outs.append(s.sense(c, sup)[0].cx)
        assert outs == [0.0, 0.0, 0.0, 0.0, 1.0, 2.0]


class TestScenarioFormat:
    def test_load_bundled(self, repo_root):
        sc = load_scenario(f"{repo_root}/scenarios/nominal_walk.yaml")
        assert sc.mode == "closed_loop"
        assert sc.duration == 12.0

    def test_unknown_key_rejected(self):
        with pytest.raises(ScenarioError, match="unknown scenario keys"):
            scenario_from_dict({"name": "x", "bogus": 1})

    def test_unsorted_pushes_rejected(self):
        with pytest.raises(ScenarioError, match="time-sorted"):
            scenario_from_dict(
                {"pushes": [{"t": 2.0, "dvx": 0.1}, {"t": 1.0, "dvx": 0.1}]}
            )

    def test_bad_mode_rejected(self):
        with pytest.raises(ScenarioError, match="unknown mode"):
            scenario_from_dict({"mode": "sideways"})


class TestRunScenario:
    def test_nominal_recovers_with_limit_cycle(self, cfg):
        res = run_scenario(Scenario(name="nom", duration=10.0), cfg)
        rep = res.report
        assert rep.outcome == "RECOVERED"
        assert rep.falls == 0
        # period settles to twice the apex-to-exchange time
        late = rep.step_periods[4:]
        assert all(p == approx(2 * 0.3208078833730690, rel=0.01) for p in late)

    def test_huge_lateral_impulse_falls(self, cfg):
        sc = Scenario(name="fall", duration=6.0, pushes=(Push(t=2.0, dvy=10.0),))
        res = run_scenario(sc, cfg)
        assert res.report.outcome == "FELL"
        assert res.report.falls == 1

    def test_determinism_byte_identical(self, cfg, tmp_path):
        sc = Scenario(name="det", duration=4.0, seed=5, noise_pos=0.0005, noise_vel=0.005)
        a = run_scenario(sc, cfg)
        b = run_scenario(sc, cfg)
        assert log_bytes(a.records, tmp_path, "a.csv") == log_bytes(
            b.records, tmp_path, "b.csv"
        )

    def test_seed_changes_log(self, cfg, tmp_path):
        base = Scenario(name="det", duration=4.0, seed=5, noise_pos=0.0005, noise_vel=0.005)
        a = run_scenario(base, cfg)
        b = run_scenario(replace(base, seed=6), cfg)
        assert log_bytes(a.records, tmp_path, "a.csv") != log_bytes(
            b.records, tmp_path, "b.csv"
        )

    def test_open_loop_never_invokes_controller(self, cfg, monkeypatch):
        import capstep.plant as plant_mod

        def boom(*a, **k):
            raise AssertionError("controller must not run in open loop")

        monkeypatch.setattr(plant_mod, "FootstepController", boom)
        sc = Scenario(name="ol", mode="open_loop", duration=2.0)
        res = run_scenario(sc, cfg)
        assert res.report.mode == "open_loop"
        assert all(r.case == "open_loop" for r in res.records)

    def test_injection_delta_applied(self, cfg):
        inj = Injection(step=2, support=1, offset=0.1, dvy=0.2)
        sc = Scenario(name="inj", duration=6.0, injections=(inj,))
        res = run_scenario(sc, cfg)
        hits = [r for r in res.records if "inject" in r.event]
        assert len(hits) == 1

    def test_command_schedule_changes_target(self, cfg):
        sc = scenario_from_dict(
            {
                "name": "sched",
                "duration": 8.0,
                "commands": [
                    {"t": 0.0, "vx": 0.0},
                    {"t": 4.0, "vx": 0.5},
                ],
            }
        )
        res = run_scenario(sc, cfg)
        assert res.report.outcome == "RECOVERED"
        early = [abs(r.command.amplitude.ax) for r in res.records if 2 < r.time < 3.5]
        late = [abs(r.command.amplitude.ax) for r in res.records if r.time > 7]
        assert max(early) < 0.1
        assert sum(late) / len(late) > 0.3


class TestSweep:
    def test_origin_neighborhood_recovers(self, cfg):
        cells = grid_cells("lateral", (-0.005, 0.005, 3), (-0.02, 0.02, 3))
        m = sweep_phase_space(cells, SweepSpec(), cfg, workers=1)
        assert m.count("closed_loop") == 9
        assert m.open_outcomes[4] == "RECOVERED"  # the zero-impulse cell

    def test_row_count_and_rerun_identical(self, cfg, tmp_path):
        cells = grid_cells("sagittal", (-0.01, 0.01, 2), (-0.05, 0.05, 2))
        m1 = sweep_phase_space(cells, SweepSpec(), cfg, workers=1)
        m2 = sweep_phase_space(cells, SweepSpec(), cfg, workers=2)
        p1, p2 = tmp_path / "m1.csv", tmp_path / "m2.csv"
        write_sweep_csv(str(p1), m1)
        write_sweep_csv(str(p2), m2)
        assert p1.read_bytes() == p2.read_bytes()
        assert len(p1.read_text().splitlines()) == len(cells) + 1

    def test_lateral_mirror_symmetry(self, cfg):
        # mirroring the impulse and the support side gives the same outcome
        for (dc, dv) in ((0.02, 0.15), (0.05, 0.3), (-0.02, -0.2)):
            outcomes = []
            for sign in (1, -1):
                inj = Injection(
                    step=6, support=sign, offset=0.32, dcy=sign * dc, dvy=sign * dv
                )
                sc = Scenario(
                    name="mir",
                    duration=10.0,
                    initial_support=sign,
                    injections=(inj,),
                )
                outcomes.append(run_scenario(sc, cfg).report.outcome)
            assert outcomes[0] == outcomes[1]


def test_trajectory_csv_schema(cfg, tmp_path):
    res = run_scenario(Scenario(name="s", duration=1.0), cfg)
    path = tmp_path / "log.csv"
    write_trajectory_csv(str(path), res.records)
    header = path.read_text().splitlines()[0].split(",")
    assert header == TRAJECTORY_COLUMNS
    assert len(path.read_text().splitlines()) == res.report.ticks + 1
