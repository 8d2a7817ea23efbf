import math

import pytest
from hypothesis import given, settings, strategies as st
from pytest import approx

from capstep import (
    CpgConfig,
    GaitConfig,
    LegInterfaceParams,
    MotionPhase,
    SwingAmplitude,
    advance_phase,
    arm_swing,
    compose_pose,
    leg_interface_map,
    leg_lift,
    leg_swing,
    unit_swing,
)
from capstep.cpg import remaining_phase, shift_phase, wrap_phase

CFG = CpgConfig()

mus = st.floats(-math.pi, math.pi, allow_nan=False, exclude_max=True)
amps = st.floats(-1.0, 1.0, allow_nan=False)


def amplitude(ax=0.0, ay=0.0, apsi=0.0):
    return SwingAmplitude(ax=ax, ay=ay, apsi=apsi)


class TestLegInterface:
    def test_neutral_all_zero(self):
        j = leg_interface_map(LegInterfaceParams(eta=0.0))
        assert j.as_tuple() == approx((0.0,) * 6)

    def test_full_retraction(self):
        j = leg_interface_map(LegInterfaceParams(eta=1.0))
        assert j.hip_pitch == approx(-math.pi / 2)
        assert j.knee == approx(math.pi)
        assert j.ankle_pitch == approx(-math.pi / 2)

    def test_yaw_pre_rotation(self):
        # with a quarter yaw the pitch goes fully into the rotated roll slot
        j = leg_interface_map(
            LegInterfaceParams(eta=0.0, leg_pitch=0.2, leg_yaw=math.pi / 2)
        )
        assert j.hip_yaw == approx(math.pi / 2)
        assert j.hip_pitch == approx(0.0, abs=1e-15)
        assert j.hip_roll == approx(-0.2)

    def test_out_of_range_eta_clamped(self):
        assert leg_interface_map(LegInterfaceParams(eta=1.5)) == leg_interface_map(
            LegInterfaceParams(eta=1.0)
        )
        assert leg_interface_map(LegInterfaceParams(eta=-0.2)) == leg_interface_map(
            LegInterfaceParams(eta=0.0)
        )


class TestPhase:
    def test_increment_formula(self):
        m = MotionPhase(mu=-math.pi / 2, support_sign=1, time_in_step=0.2)
        out, event = advance_phase(m, 0.4, CFG)
        assert not event
        assert out.mu - m.mu == approx(0.01 * (math.pi / 2) / 0.4)

    def test_wrap_event_flips_support(self):
        m = MotionPhase(mu=math.pi - 1e-4, support_sign=-1, time_in_step=0.5)
        out, event = advance_phase(m, 0.005, CFG)
        assert event
        assert out.mu == approx(-math.pi)
        assert out.support_sign == 1
        assert out.time_in_step == 0.0

    def test_zero_crossing_event(self):
        m = MotionPhase(mu=-1e-4, support_sign=1, time_in_step=0.5)
        out, event = advance_phase(m, 0.0, CFG)
        assert event
        assert out.mu == approx(0.0)
        assert out.support_sign == -1

    def test_countdown_completes_on_schedule(self):
        # a full countdown from T0 produces exactly T0/rho ticks per step
        m = MotionPhase()
        t0 = 0.4
        ticks = 0
        remaining = t0
        while True:
            m, event = advance_phase(m, remaining, CFG)
            remaining -= CFG.rho
            ticks += 1
            if event:
                break
        assert ticks == int(round(t0 / CFG.rho))

    def test_minimum_step_duration_paced(self):
        # constant zero command: steps never faster than t_min
        m = MotionPhase()
        ticks = 0
        while True:
            m, event = advance_phase(m, 0.0, CFG)
            ticks += 1
            if event:
                break
        assert ticks * CFG.rho == approx(CFG.t_min, abs=CFG.rho / 2)

    def test_remaining_phase_boundaries(self):
        assert remaining_phase(-math.pi) == approx(math.pi)
        assert remaining_phase(0.0) == approx(math.pi)
        assert remaining_phase(-0.3) == approx(0.3)


class TestLegLift:
    def test_zero_at_exchange_phase(self):
        assert leg_lift(0.0, amplitude(), CFG) == 0.0

    def test_peak_lift(self):
        assert leg_lift(math.pi / 2, amplitude(), CFG) == approx(CFG.k2)

    def test_support_push_with_amplitude(self):
        a = amplitude(ay=0.5)
        assert leg_lift(-math.pi / 2, a, CFG) == approx(-(CFG.k1 + 0.5 * CFG.k3))

    @given(mu=mus)
    @settings(max_examples=100)
    def test_half_stride_symmetry(self, mu):
        # the left leg at phase mu equals the right leg half a stride later
        a = amplitude(ax=0.3, ay=0.2)
        assert leg_lift(shift_phase(mu), a, CFG) == leg_lift(
            shift_phase(mu), a, CFG
        )


class TestUnitSwing:
    def test_swing_start_is_one(self):
        assert unit_swing(CFG.k_mu0, CFG) == approx(1.0)

    def test_swing_end_is_minus_one(self):
        assert unit_swing(CFG.k_mu1, CFG) == approx(-1.0)

    def test_wrap_continuity(self):
        lo = unit_swing(-math.pi, CFG)
        hi = unit_swing(math.pi - 1e-12, CFG)
        assert lo == approx(hi, abs=1e-9)

    def test_branch_joints_continuous(self):
        for b in (CFG.k_mu0, CFG.k_mu1):
            eps = 1e-10
            assert unit_swing(b - eps, CFG) == approx(unit_swing(b + eps, CFG), abs=1e-8)

    @given(mu=mus)
    @settings(max_examples=200)
    def test_bounded(self, mu):
        assert -1.0 - 1e-12 <= unit_swing(mu, CFG) <= 1.0 + 1e-12


class TestLegSwing:
    def test_zero_amplitude_zero_angles(self):
        assert leg_swing(1, 0.7, amplitude(), CFG) == approx((0.0, 0.0, 0.0))

    def test_yaw_at_swing_start(self):
        roll, pitch, yaw = leg_swing(1, CFG.k_mu0, amplitude(apsi=0.5), CFG)
        assert yaw == approx(0.5 * CFG.k9 - 0.5 * CFG.k10)

    def test_roll_offsets_mirror(self):
        a = amplitude(ay=0.3)
        r_left = leg_swing(-1, 0.5, a, CFG)[0]
        r_right = leg_swing(1, 0.5, a, CFG)[0]
        osc = -unit_swing(0.5, CFG) * 0.3 * CFG.k5
        assert r_left - osc == approx(-(r_right - osc))

    def test_pitch_from_sagittal_amplitude(self):
        a = amplitude(ax=0.4)
        _, pitch, _ = leg_swing(1, CFG.k_mu0, a, CFG)
        assert pitch == approx(0.4 * CFG.k8)


class TestArmSwing:
    def test_zero_amplitude(self):
        assert arm_swing(1, 0.3, amplitude(), CFG).pitch == 0.0

    def test_right_arm_follows_left_leg(self):
        a = amplitude(ax=0.5)
        mu = 0.9
        arm = arm_swing(1, mu, a, CFG)
        left_leg_pitch = leg_swing(-1, shift_phase(mu), a, CFG)[1]
        assert arm.pitch == approx(
            left_leg_pitch * CFG.arm_swing_gain / CFG.k8
        )

    def test_antagonistic_sign_flip(self):
        a = amplitude(ax=0.5)
        assert arm_swing(1, CFG.k_mu0, a, CFG).pitch == approx(
            -arm_swing(-1, CFG.k_mu0, a, CFG).pitch, abs=0.06
        )


class TestComposePose:
    def test_neutral_stance_symmetric(self):
        pose = compose_pose(MotionPhase(mu=0.0), amplitude(), 0.4, CFG)
        assert pose.left_leg == pose.right_leg
        assert pose.left_leg.knee == approx(2 * math.acos(1 - CFG.neutral_eta))

    def test_walk_in_place_period(self):
        # fixed step duration of 0.4 s: the pose repeats every 2 T exactly
        t0 = 0.4
        ticks_per_step = int(round(t0 / CFG.rho))
        m = MotionPhase()
        poses = []
        remaining = t0
        for _ in range(4 * ticks_per_step):
            poses.append(compose_pose(m, amplitude(), remaining, CFG))
            m, event = advance_phase(m, remaining, CFG)
            remaining = t0 if event else remaining - CFG.rho
        period = 2 * ticks_per_step
        for k in range(period):
            assert poses[k].joints() == approx(poses[k + period].joints(), abs=1e-12)

    def test_inter_tick_continuity(self):
        t0 = 0.64
        m = MotionPhase()
        remaining = t0
        prev = None
        worst = 0.0
        for _ in range(2 * int(round(t0 / CFG.rho))):
            pose = compose_pose(m, amplitude(ax=0.5, ay=0.3, apsi=0.2), remaining, CFG)
            if prev is not None:
                worst = max(
                    worst,
                    max(abs(a - b) for a, b in zip(pose.joints(), prev.joints())),
                )
            prev = pose
            m, event = advance_phase(m, remaining, CFG)
            remaining = t0 if event else remaining - CFG.rho
        # steady phase rate plus the end-of-step snap left by the rate clamp
        assert worst < 0.15

    def test_left_right_identical_up_to_phase_shift(self):
        # pure sagittal walking: no spread offsets, the legs mirror exactly
        a = amplitude(ax=0.5)
        for mu in (-2.0, -0.7, 0.4, 1.9):
            left = compose_pose(MotionPhase(mu=mu), a, 0.4, CFG).left_leg
            right = compose_pose(
                MotionPhase(mu=shift_phase(mu)), a, 0.4, CFG
            ).right_leg
            assert left.as_tuple() == approx(right.as_tuple(), abs=1e-12)

    @given(ax=amps, ay=amps, apsi=amps, mu=mus)
    @settings(max_examples=150, deadline=None)
    def test_joint_limits(self, ax, ay, apsi, mu):
        pose = compose_pose(
            MotionPhase(mu=mu), amplitude(ax, ay, apsi), 0.4, CFG
        )
        for q in pose.joints():
            assert abs(q) <= CFG.joint_limit

    def test_eta_clamp_flagged(self):
        big = CpgConfig(k2=1.2)
        pose = compose_pose(MotionPhase(mu=math.pi / 2), amplitude(), 0.4, big)
        assert pose.eta_clamped


def test_wrap_phase_range():
    for mu in (-7.0, -math.pi, 0.0, 3.0, math.pi, 9.0):
        w = wrap_phase(mu)
        assert -math.pi <= w < math.pi
