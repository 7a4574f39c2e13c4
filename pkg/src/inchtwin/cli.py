"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 integration instability,
4 calibration non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .engine import ConfigError, InstabilityError
from . import harness
from .harness import (
    CalibratedParams,
    load_calibration_spec,
    load_params,
    load_records_dir,
    load_scenario,
    run_scenario,
    save_params,
    sweep_argmax,
    write_sweep_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INSTABILITY = 3
EXIT_NO_CONVERGENCE = 4


class CalibrationDidNotConverge(RuntimeError):
    pass


def _figure_path(out: str, suffix: str = "") -> str:
    base, _ = os.path.splitext(out)
    return f"{base}{suffix}.png"


def _load_optional_params(path: str | None) -> CalibratedParams:
    return load_params(path) if path else CalibratedParams()


def cmd_run(args) -> int:
    params = _load_optional_params(args.params)
    scenario = load_scenario(args.scenario)
    record_path = None
    if args.out:
        record_path = os.path.splitext(args.out)[0] + ".record.json"
    record, series = run_scenario(
        scenario, params, out_csv=args.out, record_path=record_path
    )
    s = record.summary
    print(f"scenario          : {record.scenario}")
    print(f"mean speed        : {s['mean_speed_cm_s']:.3f} cm/s")
    print(f"net displacement  : {s['net_displacement_cm']:.2f} cm")
    print(f"heading change    : {s['heading_change_rad']:+.4f} rad "
          f"({s['yaw_rate_rad_s']:+.4f} rad/s)")
    print(f"cooldown trips    : {s['cooldown_trips']}")
    if args.out:
        print(f"series written to : {args.out}")
    if args.figures and args.out:
        from . import figures

        fig_path = _figure_path(args.out)
        figures.render_run(series, record, fig_path)
        print(f"figure written to : {fig_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = _load_optional_params(args.params)
    scenario = load_scenario(args.scenario)
    freqs = [float(f) for f in args.freqs.split(",") if f.strip()]
    rows = harness.frequency_sweep(scenario, freqs, params)
    for r in rows:
        print(f"{r['freq_hz']:6.2f} Hz  {r['mean_speed_cm_s']:8.3f} cm/s  {r['status']}")
    print(f"argmax: {sweep_argmax(rows):g} Hz")
    if args.out:
        write_sweep_csv(rows, args.out)
        print(f"table written to : {args.out}")
        if args.figures:
            from . import figures

            figures.render_sweep(rows, _figure_path(args.out), scenario.name)
            print(f"figure written to : {_figure_path(args.out)}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    spec = load_calibration_spec(args.targets)
    initial = _load_optional_params(args.params)
    result, final = harness.calibrate_from_spec(spec, initial, budget=args.budget)
    for key, rel in sorted(result.residuals.items()):
        print(f"  {key:45s} {100 * rel:+7.2f} %")
    print(f"objective      : {result.objective:.5f}")
    print(f"simulations    : {result.n_simulations}")
    print(f"converged      : {result.converged}")
    if args.out:
        save_params(final, args.out)
        print(f"parameters written to : {args.out}")
        if args.figures:
            from . import figures

            figures.render_calibration(result, _figure_path(args.out))
            print(f"figure written to : {_figure_path(args.out)}")
    if not result.converged:
        raise CalibrationDidNotConverge(
            f"max residual {100 * result.max_abs_residual():.1f} % "
            "exceeds the 15 % threshold"
        )
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import ServerConfig, serve_session

    params = _load_optional_params(args.params)
    scenario = load_scenario(args.scenario) if args.scenario else None
    static = args.static_dir
    if static is None:
        bundled = os.path.join(os.getcwd(), "frontend", "dist")
        static = bundled if os.path.isdir(bundled) else None
    config = ServerConfig(
        host=args.host,
        port=args.port,
        telemetry_rate_hz=args.telemetry_rate,
        realtime_factor=args.realtime_factor,
        static_dir=static,
    )
    print(f"teleop link: ws://{config.host}:{config.port}/ws "
          f"and tcp://{config.host}:{config.port + 1}")
    serve_session(scenario=scenario, params=params, config=config)
    return EXIT_OK


def cmd_report(args) -> int:
    records = load_records_dir(args.records)
    text, csv_text = harness.summary_report(records)
    print(text, end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        csv_path = os.path.splitext(args.out)[0] + ".csv"
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(csv_text)
        print(f"report written to : {args.out} and {csv_path}")
        if args.figures:
            from . import figures

            figures.render_report(records, _figure_path(args.out))
            print(f"figure written to : {_figure_path(args.out)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inchtwin",
        description="Digital twin of a magnetic inchworm soft robot",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario and export its series")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--params", help="calibrated parameter file")
    p.add_argument("--figures", action="store_true", help="render PNG next to the CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="frequency sweep of one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--freqs", required=True, help="comma-separated Hz list")
    p.add_argument("--params")
    p.add_argument("--out")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="fit free parameters to measured targets")
    p.add_argument("--targets", required=True, help="calibration spec file")
    p.add_argument("--params", help="initial parameter file")
    p.add_argument("--budget", type=int, default=None, help="simulation budget")
    p.add_argument("--out", help="write calibrated parameters here")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("serve", help="serve the live twin for teleoperation")
    p.add_argument("--port", type=int, default=8090)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--realtime-factor", type=float, default=1.0)
    p.add_argument("--telemetry-rate", type=float, default=30.0)
    p.add_argument("--scenario", help="base environment scenario")
    p.add_argument("--params")
    p.add_argument("--static-dir", help="console assets (default frontend/dist)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="summary table from saved run records")
    p.add_argument("--records", required=True, help="directory of *.record.json")
    p.add_argument("--out", help="write the text report here (CSV alongside)")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InstabilityError as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except CalibrationDidNotConverge as exc:
        print(f"calibration did not converge: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
