"""Newline-delimited JSON wire protocol for the teleop link.

One UTF-8 JSON object per line on both transports (plain socket and
WebSocket).  Commands flow operator -> twin and always earn exactly one
``ack`` or ``err`` with the matching cmd_id; telemetry frames stream
twin -> operator.  The decoder is total: arbitrary bytes come back as an
``Err`` value, never an exception.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

MAX_LINE_BYTES = 4096

COMMAND_TYPES = ("set_gait", "set_coil_offset", "set_env", "start", "stop", "reset")
MODES = ("idle", "walking", "swimming", "cooldown")
PHASE_MODES = ("out_of_phase", "in_phase")
MEDIA = ("ground", "water")

# Per-variant payload fields, in wire order.
_VARIANT_FIELDS: dict[str, tuple[str, ...]] = {
    "set_gait": ("freq_hz", "duty", "phase", "amplitude"),
    "set_coil_offset": ("offset",),
    "set_env": ("surface", "slope_deg", "payload_g", "medium"),
    "start": (),
    "stop": (),
    "reset": (),
}

_NUMERIC_FIELDS = {"freq_hz", "duty", "amplitude", "offset", "slope_deg", "payload_g"}
_STRING_FIELDS = {"surface", "phase", "medium"}


@dataclass(frozen=True)
class Command:
    """Decoded operator command; unused variant fields stay None."""

    type: str
    cmd_id: int
    freq_hz: float | None = None
    duty: float | None = None
    phase: str | None = None
    amplitude: float | None = None
    offset: float | None = None
    surface: str | None = None
    slope_deg: float | None = None
    payload_g: float | None = None
    medium: str | None = None


@dataclass(frozen=True)
class Ack:
    cmd_id: int
    state: str


@dataclass(frozen=True)
class Err:
    cmd_id: int
    code: str  # cooldown_active | bad_param | unknown_cmd | frame_too_large


@dataclass(frozen=True)
class TelemetryFrame:
    """Pose and firmware summary streamed to subscribers."""

    t: float
    x_cm: float
    y_cm: float
    heading_rad: float
    v_cm_s: float
    front_leg_x_cm: float
    back_leg_x_cm: float
    mode: str
    thermal_budget: float


def _sig6(value: float) -> float:
    """Round to at most 6 significant digits for the wire."""
    return float(f"{value:.6g}")


def _dumps(obj: dict) -> bytes:
    return (json.dumps(obj, separators=(",", ":")) + "\n").encode("utf-8")


def encode_command(cmd: Command) -> bytes:
    """One JSON line: type, cmd_id, then the variant fields that are set."""
    if cmd.type not in COMMAND_TYPES:
        raise ValueError(f"unknown command type {cmd.type!r}")
    obj: dict = {"type": cmd.type, "cmd_id": cmd.cmd_id}
    for name in _VARIANT_FIELDS[cmd.type]:
        value = getattr(cmd, name)
        if value is not None:
            obj[name] = _sig6(value) if name in _NUMERIC_FIELDS else value
    return _dumps(obj)


def encode_response(resp: Ack | Err) -> bytes:
    if isinstance(resp, Ack):
        return _dumps({"type": "ack", "cmd_id": resp.cmd_id, "state": resp.state})
    return _dumps({"type": "err", "cmd_id": resp.cmd_id, "code": resp.code})


def encode_telemetry(frame: TelemetryFrame) -> bytes:
    """One JSON line with numbers at <= 6 significant digits."""
    return _dumps(
        {
            "type": "telemetry",
            "t": _sig6(frame.t),
            "x_cm": _sig6(frame.x_cm),
            "y_cm": _sig6(frame.y_cm),
            "heading_rad": _sig6(frame.heading_rad),
            "v_cm_s": _sig6(frame.v_cm_s),
            "front_leg_x_cm": _sig6(frame.front_leg_x_cm),
            "back_leg_x_cm": _sig6(frame.back_leg_x_cm),
            "mode": frame.mode,
            "thermal_budget": _sig6(frame.thermal_budget),
        }
    )


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def decode_command(line: bytes | str) -> Command | Err:
    """Parse one command line; total over arbitrary input.

    Oversize lines earn frame_too_large, anything unparseable or
    ill-typed earns bad_param, and a well-formed object with an unknown
    type earns unknown_cmd.  The cmd_id is echoed back when it can be
    recovered, else 0.
    """
    if isinstance(line, str):
        line = line.encode("utf-8", errors="replace")
    if len(line) > MAX_LINE_BYTES:
        return Err(cmd_id=0, code="frame_too_large")
    try:
        obj = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return Err(cmd_id=0, code="bad_param")
    if not isinstance(obj, dict):
        return Err(cmd_id=0, code="bad_param")

    raw_id = obj.get("cmd_id")
    cmd_id = raw_id if isinstance(raw_id, int) and not isinstance(raw_id, bool) else 0

    ctype = obj.get("type")
    if not isinstance(ctype, str):
        return Err(cmd_id=cmd_id, code="bad_param")
    if ctype not in COMMAND_TYPES:
        return Err(cmd_id=cmd_id, code="unknown_cmd")
    if not isinstance(raw_id, int) or isinstance(raw_id, bool):
        return Err(cmd_id=0, code="bad_param")

    fields: dict = {}
    for name in _VARIANT_FIELDS[ctype]:
        if name not in obj or obj[name] is None:
            continue
        value = obj[name]
        if name in _NUMERIC_FIELDS:
            if not _is_number(value) or not math.isfinite(value):
                return Err(cmd_id=cmd_id, code="bad_param")
            fields[name] = float(value)
        else:
            if not isinstance(value, str):
                return Err(cmd_id=cmd_id, code="bad_param")
            fields[name] = value
    if ctype == "set_coil_offset" and "offset" not in fields:
        return Err(cmd_id=cmd_id, code="bad_param")
    return Command(type=ctype, cmd_id=cmd_id, **fields)


def decode_telemetry(line: bytes | str) -> TelemetryFrame | Err:
    """Parse one telemetry line (console-side counterpart)."""
    if isinstance(line, str):
        line = line.encode("utf-8", errors="replace")
    try:
        obj = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return Err(cmd_id=0, code="bad_param")
    if not isinstance(obj, dict) or obj.get("type") != "telemetry":
        return Err(cmd_id=0, code="bad_param")
    try:
        mode = obj["mode"]
        if mode not in MODES:
            return Err(cmd_id=0, code="bad_param")
        numbers = {}
        for name in ("t", "x_cm", "y_cm", "heading_rad", "v_cm_s",
                     "front_leg_x_cm", "back_leg_x_cm", "thermal_budget"):
            if not _is_number(obj[name]) or not math.isfinite(obj[name]):
                return Err(cmd_id=0, code="bad_param")
            numbers[name] = float(obj[name])
    except KeyError:
        return Err(cmd_id=0, code="bad_param")
    return TelemetryFrame(mode=mode, **numbers)
