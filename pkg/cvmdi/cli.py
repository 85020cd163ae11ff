"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/cli.py
#########################################
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import sys
import time
from collections.abc import Iterator, Sequence
from pathlib import Path
from typing import TextIO

import numpy as np

from .analysis import Observables, scan_coupled_params
from .calibration import apply_rin_transform, miscalibration_factor
from .config import Settings, load_run_config, parse_overrides
from .errors import ConfigError, CvmdiError
from .estimation import (
    estimate_source_noise,
    ml_estimators,
    sample_moments,
    simulate_channel_data,
    simulate_monitor_data,
)
from .keyrate import PeMode, secret_key_rate
from .models import RunConfig
from .protocol import CaseId
from .runlog import RunEvent, RunLogger, config_fingerprint, now_ms
from .sweep import (
    FIGURES,
    PointTask,
    distance_grid,
    eta_grid,
    evaluate_point,
    format_value,
    max_distances,
    reproduce,
    scan_distance,
    scan_eta,
    write_csv,
)

MIN_ESTIMATION_SAMPLES = 100


@contextlib.contextmanager
def _output(path: Path | None) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
        return
    with Path(path).open("w", encoding="utf-8", newline="") as f:
        yield f


def _cases(args: argparse.Namespace, config: RunConfig) -> list[CaseId]:
    return [CaseId(c) for c in args.cases] if args.cases else [config.case]


def cmd_rate(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    row = evaluate_point(PointTask(config, config.case, args.distance, args.mode), strict=True)
    with _output(args.out) as out:
        return write_csv([row], out)


def cmd_scan_distance(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    rows = scan_distance(
        config,
        args.from_km,
        args.to_km,
        args.step_km,
        cases=_cases(args, config),
        modes=args.modes,
        workers=args.workers or settings.workers,
    )
    with _output(args.out) as out:
        return write_csv(rows, out)


def cmd_scan_eta(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    rows = scan_eta(
        config,
        eta_grid(args.eta_from, args.eta_to, args.eta_step),
        distance_grid(args.from_km, args.to_km, args.step_km),
        cases=_cases(args, config),
        modes=args.modes,
        workers=args.workers or settings.workers,
    )
    with _output(args.out) as out:
        return write_csv(rows, out)


def cmd_reproduce(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    out_dir = args.out_dir or settings.data_dir / "figures"
    paths = reproduce(args.figure, out_dir, config, workers=args.workers or settings.workers)
    for p in paths:
        print(p)
    return len(paths)


def cmd_max_distance(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    results = max_distances(config, _cases(args, config), args.etas)
    with _output(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["case", "geometry", "eta_m", "max_distance_km"])
        for case, eta_m, d in results:
            row = [case.value, config.geometry.value, format_value(eta_m), format_value(d)]
            writer.writerow(row)
    return len(results)


def estimation_report(
    config: RunConfig, distance_km: float, samples: int
) -> list[tuple[str, object]]:
    """Simulate one block, estimate everything from it and rate the scanned worst case."""
    if samples < MIN_ESTIMATION_SAMPLES:
        raise ConfigError(f"samples must be >= {MIN_ESTIMATION_SAMPLES}, got {samples}")
    case = config.case
    params = config.protocol_params()
    channel = config.channel(distance_km)
    fs = config.finite_size()
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(4)]

    est = ml_estimators(simulate_channel_data(case, params, channel, samples, streams[0]))
    report: list[tuple[str, object]] = [
        ("case", case),
        ("distance_km", distance_km),
        ("samples", samples),
        ("t1_hat", est.t1_hat),
        ("se_t1", est.se_t1),
        ("t2_hat", est.t2_hat),
        ("se_t2", est.se_t2),
        ("sigma1_sq_hat", est.sigma1_sq_hat),
        ("se_sigma1_sq", est.se_sigma1_sq),
        ("sigma2_sq_hat", est.sigma2_sq_hat),
        ("se_sigma2_sq", est.se_sigma2_sq),
    ]

    monitors = {}
    for i, side in enumerate(("A", "B"), start=1):
        if not case.monitors(side):
            continue
        mon = simulate_monitor_data(params, side, samples, streams[i])
        monitors[side] = sample_moments(mon)
        eps, se = estimate_source_noise(mon, params, side)
        report += [(f"eps_s_hat_{side}", eps), (f"se_eps_s_{side}", se)]
        if params.v_rin > 0.0:
            m = miscalibration_factor(1.0, params.v_rin)
            skewed = apply_rin_transform(mon.x_mon, m, streams[3])
            report.append((f"monitor_variance_rin_ignored_{side}", float(np.var(skewed))))

    obs = Observables(est.t1_hat, est.sigma1_sq_hat, est.t2_hat, est.sigma2_sq_hat, monitors)
    scan = scan_coupled_params(
        obs, case, params, fs=fs, strategy=config.attack, alpha_db_per_km=config.alpha_db_per_km
    )
    ideal = secret_key_rate(case, scan.params, scan.channel, None, fs, PeMode.IDEAL)
    worst = secret_key_rate(case, scan.params, scan.channel, None, fs, PeMode.WORST_CASE)
    report += [
        ("scan_t_s", scan.t_s),
        ("scan_feasible_points", scan.feasible_points),
        ("eta_a_hat", scan.channel.eta_a),
        ("eta_b_hat", scan.channel.eta_b),
        ("epsilon_1_hat", scan.channel.epsilon_1),
        ("epsilon_2_hat", scan.channel.epsilon_2),
        ("rate_ideal", ideal.rate),
        ("rate_worst_case", worst.rate),
    ]
    return report


def cmd_estimate(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    report = estimation_report(config, args.distance, args.samples)
    with _output(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["quantity", "value"])
        for key, value in report:
            writer.writerow([key, format_value(value)])
    return len(report)


def cmd_serve(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    import uvicorn

    uvicorn.run("cvmdi.api:app", host=args.host or settings.host, port=args.port or settings.port)
    return 0


def _add_scan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--from", dest="from_km", type=float, default=0.0)
    p.add_argument("--to", dest="to_km", type=float, default=50.0)
    p.add_argument("--step", dest="step_km", type=float, default=0.5)
    p.add_argument("--cases", nargs="+", choices=[c.value for c in CaseId])
    p.add_argument("--modes", nargs="+", choices=["estimated", "realistic"], default=["realistic"])
    p.add_argument("--workers", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None)
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    common.add_argument("--case", choices=[c.value for c in CaseId])
    common.add_argument("--geometry", choices=["symmetric", "asymmetric"])
    common.add_argument("--pe-mode", choices=["ideal", "worst_case", "worst-case"])
    common.add_argument("--attack", choices=["negative-epr", "one-mode"])
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path, default=None)
    common.add_argument("--run-log", type=Path, default=None)

    parser = argparse.ArgumentParser(
        prog="cvmdi", description="CV-MDI QKD finite-size key rates with trusted source noise."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", parents=[common], help="one grid point as CSV")
    p.add_argument("--distance", type=float, default=4.0)
    p.add_argument("--mode", choices=["estimated", "realistic"], default="realistic")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("scan-distance", parents=[common], help="rate versus distance")
    _add_scan_flags(p)
    p.set_defaults(func=cmd_scan_distance)

    p = sub.add_parser("scan-eta", parents=[common], help="rate versus eta_m and distance")
    _add_scan_flags(p)
    p.add_argument("--eta-from", type=float, default=0.1)
    p.add_argument("--eta-to", type=float, default=0.9)
    p.add_argument("--eta-step", type=float, default=0.1)
    p.set_defaults(func=cmd_scan_eta)

    p = sub.add_parser("reproduce", parents=[common], help="write a figure's curves as CSV files")
    p.add_argument("--figure", type=int, choices=FIGURES, required=True)
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("estimate", parents=[common], help="Monte Carlo parameter estimation")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--distance", type=float, default=4.0)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("max-distance", parents=[common], help="maximal secure distance")
    p.add_argument("--cases", nargs="+", choices=[c.value for c in CaseId])
    p.add_argument("--etas", nargs="+", type=float, default=None)
    p.set_defaults(func=cmd_max_distance)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP evaluation service")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)
    return parser


def load_cli_config(args: argparse.Namespace) -> RunConfig:
    """Config file, then --set overrides, then dedicated flags."""
    overrides: dict[str, object] = dict(parse_overrides(args.overrides))
    if args.case:
        overrides["case"] = args.case
    if args.geometry:
        overrides["geometry"] = args.geometry
    if args.pe_mode:
        overrides["pe_mode"] = args.pe_mode.replace("-", "_")
    if args.attack:
        overrides["attack"] = args.attack.replace("-", "_")
    if args.seed is not None:
        overrides["seed"] = args.seed
    return load_run_config(args.config, overrides)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = Settings()
    run_log = args.run_log or settings.run_log_path

    t0 = time.time()
    config: RunConfig | None = None
    rows = 0
    code = 0
    err: str | None = None
    try:
        config = load_cli_config(args)
        rows = args.func(args, config, settings)
    except ConfigError as e:
        code, err = 1, str(e)
    except (CvmdiError, OSError) as e:
        code, err = 2, f"{type(e).__name__}: {e}"

    if err is not None:
        print(f"error: {err}", file=sys.stderr)

    if run_log is not None:
        payload = config.model_dump(mode="json") if config is not None else {}
        logger = RunLogger(run_log)
        logger.write(
            RunEvent(
                run_id=logger.new_run_id(),
                ts_ms=now_ms(),
                command=args.command,
                config_fingerprint_sha256=config_fingerprint(payload),
                status="ok" if code == 0 else "error",
                exit_code=code,
                rows=rows,
                latency_ms=int((time.time() - t0) * 1000),
                config=payload or None,
                error=err,
            )
        )
    return code


if __name__ == "__main__":
    raise SystemExit(main())
