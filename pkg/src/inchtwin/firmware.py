"""Emulation of the onboard gait controller.

Reproduces what the microcontroller firmware does: generate the square
drive waveforms from hardware timers, enforce the coil heating budget
with a cooldown lockout, and run the Idle/Walking/Swimming/Cooldown mode
machine driven by teleop commands.

The drive waveform pattern follows the configured ``phase_mode``:
out-of-phase square waves (the crawling gait, front and back opposed) or
in-phase pulses with passive return (the paddling gait).  One caller owns
a ``FirmwareState`` and advances it through ``firmware_tick``; snapshots
are plain values and safe to hand to other threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .magnetics import DriveState
from .protocol import Ack, Command, Err, MEDIA, PHASE_MODES


class Mode(str, enum.Enum):
    IDLE = "idle"
    WALKING = "walking"
    SWIMMING = "swimming"
    COOLDOWN = "cooldown"


@dataclass(frozen=True)
class GaitConfig:
    freq_hz: float = 4.0
    duty: float = 0.5
    phase_mode: str = "out_of_phase"
    amplitude: float = 1.0

    def __post_init__(self):
        if not 0.1 <= self.freq_hz <= 20.0:
            raise ValueError(f"freq_hz {self.freq_hz} outside [0.1, 20]")
        if not 0.0 < self.duty <= 1.0:
            raise ValueError(f"duty {self.duty} outside (0, 1]")
        if not 0.0 < self.amplitude <= 1.0:
            raise ValueError(f"amplitude {self.amplitude} outside (0, 1]")
        if self.phase_mode not in PHASE_MODES:
            raise ValueError(f"unknown phase_mode {self.phase_mode!r}")


@dataclass(frozen=True)
class ThermalBudgetParams:
    """Leaky-bucket coil heating model.

    Full-duty drive empties the bucket in ``full_duty_runtime`` seconds;
    recovery refills it linearly over ``cooldown_time``.
    """

    full_duty_runtime: float = 90.0
    cooldown_time: float = 150.0
    recovery_threshold: float = 1.0

    def __post_init__(self):
        if self.full_duty_runtime <= 0.0:
            raise ValueError("full_duty_runtime must be positive")
        if not 120.0 <= self.cooldown_time <= 180.0:
            raise ValueError("cooldown_time outside the 120-180 s bounds")
        if not 0.0 < self.recovery_threshold <= 1.0:
            raise ValueError("recovery_threshold outside (0, 1]")


@dataclass(frozen=True)
class FirmwareState:
    mode: Mode = Mode.IDLE
    gait: GaitConfig = GaitConfig()
    coil_offset: float = 0.0
    thermal_budget: float = 1.0
    uptime: float = 0.0
    medium: str = "ground"


def gait_waveform(config: GaitConfig, mode: Mode, t: float) -> DriveState:
    """Drive duties at time t for an active locomotion mode.

    Out-of-phase: both coils run square waves of the configured
    amplitude, the back coil inverted (180 degrees offset); the positive
    phase lasts the duty fraction of each period.  In-phase: both coils
    pulse together for the duty fraction, then rest so the legs return
    passively.
    """
    if mode not in (Mode.WALKING, Mode.SWIMMING):
        return DriveState(0.0, 0.0)
    if t < 0.0:
        raise ValueError("waveform time must be non-negative")
    phase = (t * config.freq_hz) % 1.0
    a = config.amplitude
    if config.phase_mode == "out_of_phase":
        s = a if phase < config.duty else -a
        return DriveState(duty_front=s, duty_back=-s)
    s = a if phase < config.duty else 0.0
    return DriveState(duty_front=s, duty_back=s)


def thermal_update(
    state: FirmwareState,
    drive: DriveState,
    dt: float,
    params: ThermalBudgetParams,
) -> FirmwareState:
    """Advance the heating budget and the cooldown lockout.

    Heating is quadratic in duty (Joule), draining the budget at
    (df^2 + db^2)/2 per ``full_duty_runtime``; an empty budget forces
    Cooldown.  With the coils unpowered the budget refills linearly over
    ``cooldown_time``, and Cooldown releases to Idle at the recovery
    threshold.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    load = 0.5 * (drive.duty_front**2 + drive.duty_back**2)
    mode = state.mode
    if load > 0.0:
        budget = state.thermal_budget - load * dt / params.full_duty_runtime
        if budget <= 0.0:
            budget = 0.0
            mode = Mode.COOLDOWN
    else:
        budget = min(1.0, state.thermal_budget + dt / params.cooldown_time)
        if mode is Mode.COOLDOWN and budget >= params.recovery_threshold:
            mode = Mode.IDLE
    return replace(state, mode=mode, thermal_budget=budget)


def handle_command(
    state: FirmwareState, cmd: Command
) -> tuple[FirmwareState, Ack | Err]:
    """Apply one decoded command; total over every (mode, command) pair."""

    def ack(s: FirmwareState) -> tuple[FirmwareState, Ack]:
        return s, Ack(cmd_id=cmd.cmd_id, state=s.mode.value)

    def err(code: str) -> tuple[FirmwareState, Err]:
        return state, Err(cmd_id=cmd.cmd_id, code=code)

    if cmd.type == "set_gait":
        fields = {}
        if cmd.freq_hz is not None:
            fields["freq_hz"] = cmd.freq_hz
        if cmd.duty is not None:
            fields["duty"] = cmd.duty
        if cmd.phase is not None:
            fields["phase_mode"] = cmd.phase
        if cmd.amplitude is not None:
            fields["amplitude"] = cmd.amplitude
        try:
            gait = replace(state.gait, **fields)
        except ValueError:
            return err("bad_param")
        return ack(replace(state, gait=gait))

    if cmd.type == "set_coil_offset":
        if cmd.offset is None:
            return err("bad_param")
        offset = min(1.0, max(-1.0, cmd.offset))
        return ack(replace(state, coil_offset=offset))

    if cmd.type == "set_env":
        # The world model applies the environment; the firmware only
        # tracks the medium so start picks the right mode.
        if cmd.medium is not None:
            if cmd.medium not in MEDIA:
                return err("bad_param")
            return ack(replace(state, medium=cmd.medium))
        return ack(state)

    if cmd.type == "start":
        if state.mode is Mode.COOLDOWN:
            return err("cooldown_active")
        mode = Mode.WALKING if state.medium == "ground" else Mode.SWIMMING
        return ack(replace(state, mode=mode))

    if cmd.type == "stop":
        if state.mode is Mode.COOLDOWN:
            return ack(state)  # already stopped; lockout persists
        return ack(replace(state, mode=Mode.IDLE))

    if cmd.type == "reset":
        return ack(
            FirmwareState(
                mode=Mode.IDLE,
                gait=GaitConfig(),
                coil_offset=0.0,
                thermal_budget=1.0,
                uptime=state.uptime,
                medium="ground",
            )
        )

    return err("unknown_cmd")


def firmware_tick(
    state: FirmwareState,
    dt: float,
    params: ThermalBudgetParams = ThermalBudgetParams(),
) -> tuple[FirmwareState, DriveState]:
    """One timer tick: waveform generation plus thermal bookkeeping.

    Returns the next state and the drive to feed the coils; the drive is
    forced to zero in Idle and Cooldown, including the tick on which the
    budget runs out.
    """
    if not 1e-5 <= dt <= 1e-2:
        raise ValueError(f"tick dt {dt} outside [1e-5, 1e-2] s")
    drive = gait_waveform(state.gait, state.mode, state.uptime)
    nxt = thermal_update(state, drive, dt, params)
    nxt = replace(nxt, uptime=state.uptime + dt)
    if nxt.mode in (Mode.IDLE, Mode.COOLDOWN):
        drive = DriveState(0.0, 0.0)
    return nxt, drive
