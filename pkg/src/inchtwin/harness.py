"""Scenario execution front end: runs, sweeps, calibration, reports.

Scenario and calibrated-parameter files are versioned JSON documents;
one parser serves the CLI, the live server's environment updates, and
the tests.  Summary statistics are always recomputed from the emitted
series (what lands in the CSV is the authority), and byte-identical
output for identical inputs is a hard requirement.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .body import MaterialParams
from .calibrate import (
    CalibrationResult,
    CalibrationStage,
    CalibrationTarget,
    FreeParameter,
    calibrate,
)
from .engine import ConfigError, SimConfig, SimSnapshot, Simulation
from .environment import Payload, SurfaceModel, WaterModel, preset_names, surface_preset
from .firmware import GaitConfig

CSV_HEADER = "t,x_cm,y_cm,heading_rad,v_cm_s,front_leg_x_cm,back_leg_x_cm,mode,thermal_budget"

SCHEMA_VERSION = 1


def _fmt(x: float) -> str:
    return f"{x:.12g}"


@dataclass(frozen=True)
class Scenario:
    """One runnable experiment, as loaded from a scenario file."""

    name: str
    medium: str = "ground"
    surface: str | SurfaceModel = "plastic_table"
    slope_deg: float = 0.0
    payload_g: float = 0.0
    payload_attachment: str = "on_chassis"
    tow_drag_area: float = 2e-3
    gait: GaitConfig = GaitConfig()
    coil_offset: float = 0.0
    duration_s: float = 10.0
    dt: float = 1e-4
    seed: int = 0
    output_rate_hz: float = 100.0
    expected: dict = field(default_factory=dict)
    condition: str = ""
    observation: str = ""
    report_group: str = ""


@dataclass
class CalibratedParams:
    """Calibration outputs consumed by scenario runs.

    ``surfaces`` maps preset names to (mu_forward, mu_backward);
    ``amplitude``/``duty`` override the firmware gait defaults when set.
    """

    surfaces: dict[str, tuple[float, float]] = field(
        default_factory=lambda: {
            "plastic_table": (0.191, 0.82),
            "foam": (0.32, 1.3),
        }
    )
    damping_ratio: float = 0.37
    amplitude: float | None = 0.97
    duty: float | None = 0.384
    k_turn: float = 0.087
    drag_coefficient: float = 1.28
    surge_drag: float = 10.0

    def get(self, name: str) -> float:
        if name.startswith("surfaces."):
            _, preset, which = name.split(".")
            pair = self.surfaces.get(preset) or _default_mu(preset)
            return pair[0] if which == "mu_forward" else pair[1]
        return float(getattr(self, name))

    def set(self, name: str, value: float) -> None:
        if name.startswith("surfaces."):
            _, preset, which = name.split(".")
            mu_f, mu_b = self.surfaces.get(preset) or _default_mu(preset)
            if which == "mu_forward":
                self.surfaces[preset] = (value, mu_b)
            elif which == "mu_backward":
                self.surfaces[preset] = (mu_f, value)
            else:
                raise ConfigError(f"unknown surface field {which!r}")
            return
        if not hasattr(self, name):
            raise ConfigError(f"unknown parameter {name!r}")
        setattr(self, name, value)

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "surfaces": {
                k: {"mu_forward": v[0], "mu_backward": v[1]}
                for k, v in sorted(self.surfaces.items())
            },
            "damping_ratio": self.damping_ratio,
            "amplitude": self.amplitude,
            "duty": self.duty,
            "k_turn": self.k_turn,
            "drag_coefficient": self.drag_coefficient,
            "surge_drag": self.surge_drag,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CalibratedParams":
        _check_schema(obj, "parameter file")
        surfaces = {}
        for k, v in obj.get("surfaces", {}).items():
            surfaces[k] = (float(v["mu_forward"]), float(v["mu_backward"]))
        out = cls(surfaces=surfaces)
        for name in ("damping_ratio", "amplitude", "duty", "k_turn",
                     "drag_coefficient", "surge_drag"):
            if name in obj and obj[name] is not None:
                setattr(out, name, float(obj[name]))
        return out

    def copy(self) -> "CalibratedParams":
        return CalibratedParams(
            surfaces=dict(self.surfaces),
            damping_ratio=self.damping_ratio,
            amplitude=self.amplitude,
            duty=self.duty,
            k_turn=self.k_turn,
            drag_coefficient=self.drag_coefficient,
            surge_drag=self.surge_drag,
        )


def _default_mu(preset: str) -> tuple[float, float]:
    s = surface_preset(preset)
    return (s.mu_forward, s.mu_backward)


def _check_schema(obj: dict, what: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{what}: expected a JSON object")
    if obj.get("schema") != SCHEMA_VERSION:
        raise ConfigError(
            f"{what}: unsupported schema {obj.get('schema')!r}, expected {SCHEMA_VERSION}"
        )


def load_scenario(path: str) -> Scenario:
    """Parse and validate a scenario file; errors name the bad field."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    _check_schema(obj, path)
    name = obj.get("name") or os.path.splitext(os.path.basename(path))[0]

    def num(key, default, lo=None, hi=None):
        val = obj.get(key, default)
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ConfigError(f"{path}: field {key!r} must be a number")
        val = float(val)
        if lo is not None and val < lo or hi is not None and val > hi:
            raise ConfigError(f"{path}: field {key!r} = {val} out of range")
        return val

    medium = obj.get("medium", "ground")
    if medium not in ("ground", "water"):
        raise ConfigError(f"{path}: field 'medium' must be ground|water")
    surface = obj.get("surface", "plastic_table")
    if isinstance(surface, dict):
        try:
            surface = SurfaceModel(
                name=surface.get("name", "inline"),
                mu_forward=float(surface["mu_forward"]),
                mu_backward=float(surface["mu_backward"]),
                slope_deg=float(surface.get("slope_deg", 0.0)),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}: bad inline surface: {exc}") from exc
    elif surface not in preset_names():
        raise ConfigError(f"{path}: unknown surface preset {surface!r}")

    gait_obj = obj.get("gait", {})
    if not isinstance(gait_obj, dict):
        raise ConfigError(f"{path}: field 'gait' must be an object")
    try:
        gait = GaitConfig(
            freq_hz=float(gait_obj.get("freq_hz", 4.0)),
            duty=float(gait_obj.get("duty", 0.5)),
            phase_mode=gait_obj.get("phase", "out_of_phase"),
            amplitude=float(gait_obj.get("amplitude", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: bad gait: {exc}") from exc

    return Scenario(
        name=name,
        medium=medium,
        surface=surface,
        slope_deg=num("slope_deg", 0.0, -30.0, 30.0),
        payload_g=num("payload_g", 0.0, 0.0, 200.0),
        payload_attachment=obj.get("payload_attachment", "on_chassis"),
        tow_drag_area=num("tow_drag_area", 2e-3, 0.0),
        gait=gait,
        coil_offset=num("coil_offset", 0.0, -1.0, 1.0),
        duration_s=num("duration_s", 10.0, 1e-3),
        dt=num("dt", 1e-4, 1e-6, 1e-2),
        seed=int(num("seed", 0)),
        output_rate_hz=num("output_rate_hz", 100.0, 1.0),
        expected=obj.get("expected", {}),
        condition=obj.get("condition", ""),
        observation=obj.get("observation", ""),
        report_group=obj.get("report_group", ""),
    )


def load_params(path: str) -> CalibratedParams:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read parameter file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return CalibratedParams.from_json(obj)


def save_params(params: CalibratedParams, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def build_sim_config(scenario: Scenario, params: CalibratedParams | None = None) -> SimConfig:
    """SimConfig for a scenario with calibrated parameters applied."""
    params = params or CalibratedParams()
    if isinstance(scenario.surface, SurfaceModel):
        surface = replace(scenario.surface, slope_deg=scenario.slope_deg)
    else:
        mu_f, mu_b = params.surfaces.get(
            scenario.surface, _default_mu(scenario.surface)
        )
        surface = SurfaceModel(
            name=scenario.surface,
            mu_forward=mu_f,
            mu_backward=mu_b,
            slope_deg=scenario.slope_deg,
        )
    gait = scenario.gait
    if params.amplitude is not None:
        gait = replace(gait, amplitude=params.amplitude)
    if params.duty is not None:
        gait = replace(gait, duty=params.duty)
    payload = None
    if scenario.payload_g > 0.0:
        payload = Payload(
            mass=scenario.payload_g * 1e-3,
            attachment=scenario.payload_attachment,
            tow_drag_area=scenario.tow_drag_area,
        )
    water = None
    if scenario.medium == "water":
        water = WaterModel(
            drag_coefficient=params.drag_coefficient,
            surge_drag=params.surge_drag,
        )
    return SimConfig(
        duration=scenario.duration_s,
        dt=scenario.dt,
        medium=scenario.medium,
        surface=surface if scenario.medium == "ground" else None,
        water=water,
        payload=payload,
        gait=gait,
        coil_offset=scenario.coil_offset,
        k_turn=params.k_turn,
        seed=scenario.seed,
        output_rate_hz=scenario.output_rate_hz,
        material=MaterialParams(damping_ratio=params.damping_ratio),
    )


# ----------------------------------------------------------------------
# Series, summaries, CSV
# ----------------------------------------------------------------------


@dataclass
class Series:
    """Columnar output series, exactly what the CSV holds."""

    t: np.ndarray
    x_cm: np.ndarray
    y_cm: np.ndarray
    heading_rad: np.ndarray
    v_cm_s: np.ndarray
    front_leg_x_cm: np.ndarray
    back_leg_x_cm: np.ndarray
    mode: list[str]
    thermal_budget: np.ndarray

    @classmethod
    def from_snapshots(cls, snaps: list[SimSnapshot]) -> "Series":
        return cls(
            t=np.array([s.time for s in snaps]),
            x_cm=np.array([s.world.x * 100.0 for s in snaps]),
            y_cm=np.array([s.world.y * 100.0 for s in snaps]),
            heading_rad=np.array([s.world.heading for s in snaps]),
            v_cm_s=np.array([s.com_velocity * 100.0 for s in snaps]),
            front_leg_x_cm=np.array([s.front_leg_x * 100.0 for s in snaps]),
            back_leg_x_cm=np.array([s.back_leg_x * 100.0 for s in snaps]),
            mode=[s.mode for s in snaps],
            thermal_budget=np.array([s.thermal_budget for s in snaps]),
        )

    def __len__(self) -> int:
        return len(self.t)


def summarize(series: Series) -> dict:
    """Summary statistics over the last 80% of the run (transient cut)."""
    n = len(series)
    if n < 2:
        return {
            "mean_speed_cm_s": 0.0,
            "yaw_rate_rad_s": 0.0,
            "net_displacement_cm": 0.0,
            "heading_change_rad": 0.0,
            "turn_radius_cm": math.inf,
            "cooldown_trips": 0,
        }
    i0 = int(math.ceil(0.2 * (n - 1)))
    dt_win = series.t[-1] - series.t[i0]
    dx = np.diff(series.x_cm[i0:])
    dy = np.diff(series.y_cm[i0:])
    hd = series.heading_rad[i0:-1]
    forward = float((dx * np.cos(hd) + dy * np.sin(hd)).sum())
    heading = np.unwrap(series.heading_rad)
    dpsi = float(heading[-1] - heading[i0])
    mean_speed = forward / dt_win if dt_win > 0 else 0.0
    yaw_rate = dpsi / dt_win if dt_win > 0 else 0.0
    radius = abs(mean_speed / yaw_rate) if abs(yaw_rate) > 1e-9 else math.inf
    trips = sum(
        1
        for a, b in zip(series.mode[:-1], series.mode[1:])
        if a != "cooldown" and b == "cooldown"
    )
    return {
        "mean_speed_cm_s": mean_speed,
        "yaw_rate_rad_s": yaw_rate,
        "net_displacement_cm": float(math.hypot(
            series.x_cm[-1] - series.x_cm[i0], series.y_cm[-1] - series.y_cm[i0]
        )),
        "heading_change_rad": dpsi,
        "turn_radius_cm": radius,
        "cooldown_trips": trips,
    }


def write_csv(series: Series, path: str) -> None:
    """Exact-header CSV, LF endings, '.' decimals, 12 significant digits."""
    lines = [CSV_HEADER]
    for k in range(len(series)):
        lines.append(
            ",".join(
                (
                    _fmt(series.t[k]),
                    _fmt(series.x_cm[k]),
                    _fmt(series.y_cm[k]),
                    _fmt(series.heading_rad[k]),
                    _fmt(series.v_cm_s[k]),
                    _fmt(series.front_leg_x_cm[k]),
                    _fmt(series.back_leg_x_cm[k]),
                    series.mode[k],
                    _fmt(series.thermal_budget[k]),
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str) -> Series:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected CSV header")
        cols = [[] for _ in range(9)]
        for line in fh:
            parts = line.rstrip("\n").split(",")
            for i, p in enumerate(parts):
                cols[i].append(p)
    return Series(
        t=np.array([float(v) for v in cols[0]]),
        x_cm=np.array([float(v) for v in cols[1]]),
        y_cm=np.array([float(v) for v in cols[2]]),
        heading_rad=np.array([float(v) for v in cols[3]]),
        v_cm_s=np.array([float(v) for v in cols[4]]),
        front_leg_x_cm=np.array([float(v) for v in cols[5]]),
        back_leg_x_cm=np.array([float(v) for v in cols[6]]),
        mode=cols[7],
        thermal_budget=np.array([float(v) for v in cols[8]]),
    )


@dataclass
class RunRecord:
    """Completed scenario run: series file plus summary statistics."""

    scenario: str
    csv_path: str
    summary: dict
    condition: str = ""
    observation: str = ""
    report_group: str = ""
    expected: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "scenario": self.scenario,
            "csv_path": self.csv_path,
            "summary": self.summary,
            "condition": self.condition,
            "observation": self.observation,
            "report_group": self.report_group,
            "expected": self.expected,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunRecord":
        _check_schema(obj, "run record")
        return cls(
            scenario=obj["scenario"],
            csv_path=obj.get("csv_path", ""),
            summary=obj["summary"],
            condition=obj.get("condition", ""),
            observation=obj.get("observation", ""),
            report_group=obj.get("report_group", ""),
            expected=obj.get("expected", {}),
        )


def run_scenario(
    scenario: Scenario | str,
    params: CalibratedParams | None = None,
    out_csv: str | None = None,
    record_path: str | None = None,
) -> tuple[RunRecord, Series]:
    """Deterministic scenario run; optionally writes the CSV and record."""
    if isinstance(scenario, str):
        scenario = load_scenario(scenario)
    config = build_sim_config(scenario, params)
    snaps = Simulation(config).run()
    series = Series.from_snapshots(snaps)
    if out_csv:
        write_csv(series, out_csv)
    record = RunRecord(
        scenario=scenario.name,
        csv_path=out_csv or "",
        summary=summarize(series),
        condition=scenario.condition,
        observation=scenario.observation,
        report_group=scenario.report_group,
        expected=dict(scenario.expected),
    )
    if record_path:
        with open(record_path, "w", encoding="utf-8") as fh:
            json.dump(record.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return record, series


def frequency_sweep(
    scenario: Scenario | str,
    freqs: list[float],
    params: CalibratedParams | None = None,
) -> list[dict]:
    """One run per frequency under a shared calibration.

    Failed runs are kept as marked rows so a sweep survives isolated
    instabilities.
    """
    if isinstance(scenario, str):
        scenario = load_scenario(scenario)
    if len(freqs) < 1:
        raise ConfigError("sweep needs at least one frequency")
    rows = []
    for f in freqs:
        sc = replace(scenario, gait=replace(scenario.gait, freq_hz=f))
        try:
            record, _ = run_scenario(sc, params)
            rows.append(
                {
                    "freq_hz": f,
                    "mean_speed_cm_s": record.summary["mean_speed_cm_s"],
                    "status": "ok",
                }
            )
        except Exception as exc:  # marked row, sweep continues
            rows.append(
                {"freq_hz": f, "mean_speed_cm_s": math.nan, "status": f"failed: {exc}"}
            )
    return rows


def sweep_argmax(rows: list[dict]) -> float:
    ok = [r for r in rows if r["status"] == "ok"]
    if not ok:
        raise ConfigError("sweep has no successful rows")
    return max(ok, key=lambda r: r["mean_speed_cm_s"])["freq_hz"]


def write_sweep_csv(rows: list[dict], path: str) -> None:
    lines = ["freq_hz,mean_speed_cm_s,status"]
    for r in rows:
        lines.append(f"{_fmt(r['freq_hz'])},{_fmt(r['mean_speed_cm_s'])},{r['status']}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ----------------------------------------------------------------------
# Calibration wiring
# ----------------------------------------------------------------------


@dataclass
class CalibrationSpec:
    targets: list[CalibrationTarget]
    free_parameters: list[FreeParameter]
    stages: list[CalibrationStage]
    scenario_dir: str
    budget: int = 200


def load_calibration_spec(path: str) -> CalibrationSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read targets file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    _check_schema(obj, path)
    try:
        targets = [
            CalibrationTarget(
                scenario=t["scenario"],
                observable=t["observable"],
                value=float(t["value"]),
                weight=float(t.get("weight", 1.0)),
            )
            for t in obj["targets"]
        ]
        free = [
            FreeParameter(name=k, lo=float(v["lo"]), hi=float(v["hi"]),
                          init=float(v["init"]))
            for k, v in obj.get("free_parameters", {}).items()
        ]
        by_scenario = {t.scenario: t for t in targets}
        stages = []
        for s in obj.get("stages", []):
            stages.append(
                CalibrationStage(
                    name=s["name"],
                    parameters=tuple(s["parameters"]),
                    targets=tuple(by_scenario[name] for name in s["targets"]),
                )
            )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: bad calibration spec: {exc}") from exc
    return CalibrationSpec(
        targets=targets,
        free_parameters=free,
        stages=stages or None,
        scenario_dir=os.path.dirname(os.path.abspath(path)),
        budget=int(obj.get("budget", 200)),
    )


def calibrate_from_spec(
    spec: CalibrationSpec,
    initial: CalibratedParams | None = None,
    budget: int | None = None,
) -> tuple[CalibrationResult, CalibratedParams]:
    """Run the staged calibration against real scenario simulations."""
    base = (initial or CalibratedParams()).copy()
    scenarios = {
        t.scenario: load_scenario(os.path.join(spec.scenario_dir, t.scenario + ".json"))
        for t in spec.targets
    }

    def simulate(name: str, overrides: dict[str, float]) -> dict[str, float]:
        p = base.copy()
        for k, v in overrides.items():
            p.set(k, v)
        record, _ = run_scenario(scenarios[name], p)
        return {
            "mean_speed_cm_s": record.summary["mean_speed_cm_s"],
            "yaw_rate_rad_s": record.summary["yaw_rate_rad_s"],
        }

    result = calibrate(
        targets=spec.targets,
        free_parameters=spec.free_parameters,
        simulate=simulate,
        stages=spec.stages,
        budget=budget if budget is not None else spec.budget,
    )
    final = base.copy()
    for k, v in result.params.items():
        final.set(k, v)
    return result, final


# ----------------------------------------------------------------------
# Summary report
# ----------------------------------------------------------------------


def summary_report(records: list[RunRecord]) -> tuple[str, str]:
    """Performance table (text, csv), one row per scenario family.

    Records sharing a ``report_group`` merge into one row with their
    performances side by side, mirroring how the experimental summary
    groups the cargo runs.
    """
    if not records:
        raise ConfigError("report needs at least one record")
    rows: list[tuple[str, str, str, str]] = []
    used = set()
    for rec in records:
        if id(rec) in used:
            continue
        group = [rec]
        if rec.report_group:
            group = [r for r in records if r.report_group == rec.report_group]
        for g in group:
            used.add(id(g))
        perf = "; ".join(_performance_cell(r) for r in group)
        name = rec.report_group or rec.scenario
        rows.append((name, rec.condition or "-", perf, rec.observation or "-"))

    headers = ("Scenario", "Condition", "Max Performance", "Key Observation")
    widths = [
        max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(4)
    ]
    sep = "  "
    text_lines = [
        sep.join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        sep.join("-" * widths[i] for i in range(4)),
    ]
    for r in rows:
        text_lines.append(sep.join(r[i].ljust(widths[i]) for i in range(4)))
    text = "\n".join(text_lines) + "\n"

    csv_lines = ["scenario,condition,max_performance,key_observation"]
    for r in rows:
        csv_lines.append(",".join('"' + c.replace('"', '""') + '"' for c in r))
    return text, "\n".join(csv_lines) + "\n"


def _performance_cell(rec: RunRecord) -> str:
    s = rec.summary
    if abs(s.get("yaw_rate_rad_s", 0.0)) > 0.02:
        cell = f"{abs(s['yaw_rate_rad_s']):.3f} rad/s"
        if math.isfinite(s.get("turn_radius_cm", math.inf)):
            cell += f" (~{s['turn_radius_cm']:.0f} cm radius)"
    else:
        cell = f"{s['mean_speed_cm_s']:.2f} cm/s"
    for key, val in rec.expected.items():
        if key == "mean_speed_cm_s":
            cell += f" (measured {val:g} cm/s)"
        elif key == "yaw_rate_rad_s":
            cell += f" (measured {abs(val):g} rad/s)"
    return cell


def load_records_dir(path: str) -> list[RunRecord]:
    records = []
    for fname in sorted(os.listdir(path)):
        if fname.endswith(".record.json"):
            with open(os.path.join(path, fname), "r", encoding="utf-8") as fh:
                records.append(RunRecord.from_json(json.load(fh)))
    if not records:
        raise ConfigError(f"no *.record.json files in {path}")
    return records
