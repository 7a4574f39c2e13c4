"""Tests for the gait controller emulation."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inchtwin.firmware import (
    FirmwareState,
    GaitConfig,
    Mode,
    ThermalBudgetParams,
    firmware_tick,
    gait_waveform,
    handle_command,
    thermal_update,
)
from inchtwin.magnetics import DriveState
from inchtwin.protocol import Ack, Command, Err


def cmd(ctype: str, cmd_id: int = 1, **fields) -> Command:
    return Command(type=ctype, cmd_id=cmd_id, **fields)


class TestGaitConfig:
    def test_defaults_valid(self):
        GaitConfig()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"freq_hz": 0.05},
            {"freq_hz": 50.0},
            {"duty": 0.0},
            {"duty": 1.2},
            {"amplitude": 0.0},
            {"amplitude": 1.5},
            {"phase_mode": "sideways"},
        ],
    )
    def test_rejects_out_of_range(self, kwargs):
        with pytest.raises(ValueError):
            GaitConfig(**kwargs)


class TestWaveform:
    def test_walking_halves(self):
        cfg = GaitConfig(freq_hz=4.0, duty=0.5, amplitude=1.0)
        first = gait_waveform(cfg, Mode.WALKING, 0.05)
        second = gait_waveform(cfg, Mode.WALKING, 0.05 + 0.125)
        assert (first.duty_front, first.duty_back) == (1.0, -1.0)
        assert (second.duty_front, second.duty_back) == (-1.0, 1.0)

    def test_swimming_off_fraction_is_zero(self):
        cfg = GaitConfig(freq_hz=2.0, duty=0.4, phase_mode="in_phase")
        on = gait_waveform(cfg, Mode.SWIMMING, 0.1)
        off = gait_waveform(cfg, Mode.SWIMMING, 0.3)
        assert on.duty_front == on.duty_back == 1.0
        assert off.duty_front == off.duty_back == 0.0

    def test_amplitude_scales_exactly(self):
        full = GaitConfig(freq_hz=4.0, amplitude=1.0)
        half = GaitConfig(freq_hz=4.0, amplitude=0.5)
        for t in (0.0, 0.03, 0.11, 0.2):
            d1 = gait_waveform(full, Mode.WALKING, t)
            d05 = gait_waveform(half, Mode.WALKING, t)
            assert d05.duty_front == 0.5 * d1.duty_front
            assert d05.duty_back == 0.5 * d1.duty_back

    def test_idle_is_silent(self):
        d = gait_waveform(GaitConfig(), Mode.IDLE, 1.0)
        assert (d.duty_front, d.duty_back) == (0.0, 0.0)

    @given(
        st.floats(0.1, 20.0),
        st.floats(0.05, 1.0),
        st.floats(0.05, 1.0),
        st.floats(0.0, 100.0),
    )
    @settings(max_examples=300, deadline=None)
    def test_walking_exact_antiphase_and_bounds(self, f, duty, amp, t):
        cfg = GaitConfig(freq_hz=f, duty=duty, amplitude=amp)
        d = gait_waveform(cfg, Mode.WALKING, t)
        assert d.duty_front == -d.duty_back
        assert -1.0 <= d.duty_front <= 1.0

    @given(st.floats(0.1, 20.0), st.floats(0.05, 1.0), st.floats(0.0, 100.0))
    @settings(max_examples=300, deadline=None)
    def test_swimming_non_negative(self, f, duty, t):
        cfg = GaitConfig(freq_hz=f, duty=duty, phase_mode="in_phase")
        d = gait_waveform(cfg, Mode.SWIMMING, t)
        assert d.duty_front >= 0.0
        assert d.duty_back >= 0.0


class TestThermal:
    def test_full_duty_trips_at_runtime(self):
        params = ThermalBudgetParams()
        state = FirmwareState(mode=Mode.WALKING)
        dt = 1e-3
        steps = 0
        while state.mode is not Mode.COOLDOWN:
            state, _ = firmware_tick(state, dt, params)
            steps += 1
            assert steps < 100_000
        assert steps * dt == pytest.approx(90.0, abs=2 * dt)

    def test_zero_drive_budget_non_decreasing(self):
        params = ThermalBudgetParams()
        state = FirmwareState(mode=Mode.IDLE, thermal_budget=0.4)
        for _ in range(1000):
            before = state.thermal_budget
            state, drive = firmware_tick(state, 1e-3, params)
            assert drive.duty_front == drive.duty_back == 0.0
            assert state.thermal_budget >= before

    def test_recovery_completes_on_schedule(self):
        params = ThermalBudgetParams()
        state = FirmwareState(mode=Mode.COOLDOWN, thermal_budget=0.0)
        dt = 1e-3
        steps = 0
        while state.mode is Mode.COOLDOWN:
            state, _ = firmware_tick(state, dt, params)
            steps += 1
            assert steps < 400_000
        assert steps * dt == pytest.approx(params.cooldown_time, abs=2 * dt)
        assert state.thermal_budget == 1.0

    def test_trip_zeroes_drive_same_tick(self):
        params = ThermalBudgetParams(full_duty_runtime=90.0)
        state = FirmwareState(mode=Mode.WALKING, thermal_budget=1e-9)
        state, drive = firmware_tick(state, 1e-3, params)
        assert state.mode is Mode.COOLDOWN
        assert (drive.duty_front, drive.duty_back) == (0.0, 0.0)

    def test_drain_is_quadratic_in_duty(self):
        params = ThermalBudgetParams()
        s = FirmwareState()
        half = thermal_update(s, DriveState(0.5, -0.5), 1.0, params)
        full = thermal_update(s, DriveState(1.0, -1.0), 1.0, params)
        assert 1.0 - full.thermal_budget == pytest.approx(
            4.0 * (1.0 - half.thermal_budget)
        )

    def test_cooldown_time_bounds(self):
        with pytest.raises(ValueError):
            ThermalBudgetParams(cooldown_time=60.0)


class TestCommands:
    def test_start_from_idle_walks(self):
        state, resp = handle_command(FirmwareState(), cmd("start"))
        assert isinstance(resp, Ack) and resp.state == "walking"
        assert state.mode is Mode.WALKING

    def test_start_in_water_swims(self):
        fw = FirmwareState(medium="water")
        state, resp = handle_command(fw, cmd("start"))
        assert state.mode is Mode.SWIMMING

    def test_start_during_cooldown_rejected(self):
        fw = FirmwareState(mode=Mode.COOLDOWN, thermal_budget=0.3)
        state, resp = handle_command(fw, cmd("start"))
        assert isinstance(resp, Err) and resp.code == "cooldown_active"
        assert state == fw

    def test_bad_gait_rejected(self):
        fw = FirmwareState()
        state, resp = handle_command(fw, cmd("set_gait", freq_hz=50.0))
        assert isinstance(resp, Err) and resp.code == "bad_param"
        assert state == fw

    def test_set_gait_partial_update(self):
        fw = FirmwareState()
        state, resp = handle_command(fw, cmd("set_gait", freq_hz=6.0))
        assert isinstance(resp, Ack)
        assert state.gait.freq_hz == 6.0
        assert state.gait.duty == fw.gait.duty

    def test_offset_clamped(self):
        state, resp = handle_command(FirmwareState(), cmd("set_coil_offset", offset=3.0))
        assert isinstance(resp, Ack)
        assert state.coil_offset == 1.0

    def test_stop_goes_idle(self):
        fw = FirmwareState(mode=Mode.WALKING)
        state, resp = handle_command(fw, cmd("stop"))
        assert state.mode is Mode.IDLE

    def test_reset_restores_defaults(self):
        fw = FirmwareState(
            mode=Mode.WALKING,
            gait=GaitConfig(freq_hz=9.0),
            coil_offset=-0.5,
            thermal_budget=0.2,
            uptime=42.0,
            medium="water",
        )
        state, resp = handle_command(fw, cmd("reset"))
        assert state.mode is Mode.IDLE
        assert state.gait == GaitConfig()
        assert state.coil_offset == 0.0
        assert state.thermal_budget == 1.0
        assert state.uptime == 42.0

    def test_set_env_updates_medium(self):
        state, resp = handle_command(FirmwareState(), cmd("set_env", medium="water"))
        assert isinstance(resp, Ack)
        assert state.medium == "water"

    def test_unknown_command_total(self):
        bogus = Command(type="fly", cmd_id=3)
        state, resp = handle_command(FirmwareState(), bogus)
        assert isinstance(resp, Err) and resp.code == "unknown_cmd"

    def test_every_mode_command_pair_is_defined(self):
        commands = [
            cmd("start"), cmd("stop"), cmd("reset"),
            cmd("set_gait", freq_hz=5.0), cmd("set_coil_offset", offset=0.1),
            cmd("set_env", medium="ground"), Command(type="warp", cmd_id=9),
        ]
        for mode in Mode:
            for c in commands:
                state, resp = handle_command(FirmwareState(mode=mode), c)
                assert isinstance(resp, (Ack, Err))


class TestTick:
    def test_idle_keeps_budget(self):
        state, drive = firmware_tick(FirmwareState(), 1e-3)
        assert (drive.duty_front, drive.duty_back) == (0.0, 0.0)
        assert state.thermal_budget == 1.0

    def test_walking_period_count(self):
        """4 Hz sampled at 1 kHz over 1 s: exactly 4 full periods."""
        state = FirmwareState(mode=Mode.WALKING, gait=GaitConfig(freq_hz=4.0))
        signs = []
        for _ in range(1000):
            state, drive = firmware_tick(state, 1e-3)
            signs.append(math.copysign(1.0, drive.duty_front))
        flips = sum(1 for a, b in zip(signs[:-1], signs[1:]) if a != b)
        assert flips == 7  # 4 periods = 8 half-periods = 7 internal flips

    def test_dt_bounds(self):
        with pytest.raises(ValueError):
            firmware_tick(FirmwareState(), 0.1)
        with pytest.raises(ValueError):
            firmware_tick(FirmwareState(), 1e-6)


class TestDriveScheduleEquivalence:
    """The engine's chunked schedule matches the per-tick reference."""

    @pytest.mark.parametrize(
        "mode,phase,budget,freq",
        [
            (Mode.WALKING, "out_of_phase", 1.0, 4.0),
            (Mode.SWIMMING, "in_phase", 1.0, 3.0),
            (Mode.WALKING, "out_of_phase", 0.001, 8.0),   # trips mid-chunk
            (Mode.IDLE, "out_of_phase", 0.5, 4.0),
            (Mode.COOLDOWN, "out_of_phase", 0.9995, 2.0),  # recovers mid-chunk
        ],
    )
    def test_matches_tick_loop(self, mode, phase, budget, freq):
        from inchtwin.engine import drive_schedule

        params = ThermalBudgetParams()
        gait = GaitConfig(freq_hz=freq, phase_mode=phase, amplitude=0.8)
        fw = FirmwareState(mode=mode, gait=gait, thermal_budget=budget)
        n, dt = 400, 1e-4

        ref = fw
        ref_f, ref_b = [], []
        for _ in range(n):
            ref, drive = firmware_tick(ref, dt, params)
            ref_f.append(drive.duty_front)
            ref_b.append(drive.duty_back)

        out, duty_f, duty_b = drive_schedule(fw, n, dt, params)
        assert list(duty_f) == ref_f
        assert list(duty_b) == ref_b
        assert out.thermal_budget == pytest.approx(ref.thermal_budget, abs=1e-9)
        assert out.uptime == pytest.approx(ref.uptime, rel=1e-12)
        assert out.mode is ref.mode
