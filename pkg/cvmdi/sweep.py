"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/sweep.py
#########################################

Grid evaluation behind the CLI and the HTTP service: single points,
distance and monitor-transmittance sweeps, figure presets and CSV output.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import TextIO

import numpy as np
from joblib import Parallel, delayed

from .analysis import RinMode, estimated_vs_realistic
from .channel import Geometry, link_lengths
from .errors import ConfigError, CvmdiError
from .keyrate import secret_key_rate, secure_distance
from .models import RateMode, RunConfig, SweepRow
from .protocol import CaseId, ProtocolParams

SWEEP_COLUMNS: tuple[str, ...] = tuple(SweepRow.model_fields)
FIGURES = (2, 3, 4, 5)

_FIG2_PANELS: dict[str, tuple[CaseId, Geometry]] = {
    "a": (CaseId.ALICE_ONLY, Geometry.SYMMETRIC),
    "b": (CaseId.BOB_ONLY, Geometry.SYMMETRIC),
    "c": (CaseId.BOTH, Geometry.SYMMETRIC),
    "d": (CaseId.ALICE_ONLY, Geometry.ASYMMETRIC),
    "e": (CaseId.BOB_ONLY, Geometry.ASYMMETRIC),
    "f": (CaseId.BOTH, Geometry.ASYMMETRIC),
}
_FIG2_RIN = (0.1, 0.2, 0.4)
_FIG5_PANELS = {"a": CaseId.ALICE_ONLY, "b": CaseId.BOB_ONLY, "c": CaseId.BOTH}
# (from, to, step) in km
_DISTANCES = {Geometry.SYMMETRIC: (0.0, 10.0, 0.25), Geometry.ASYMMETRIC: (0.0, 60.0, 0.5)}
_FIG5_DISTANCES = (0.0, 60.0, 1.0)


def _grid(start: float, stop: float, step: float, what: str) -> np.ndarray:
    if not (math.isfinite(start) and math.isfinite(stop) and step > 0.0):
        raise ConfigError(f"{what} grid needs finite bounds and step > 0")
    if start > stop:
        raise ConfigError(f"{what} grid is empty: from {start} > to {stop}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 12)


def distance_grid(from_km: float, to_km: float, step_km: float) -> np.ndarray:
    """Inclusive grid from from_km to to_km."""
    if from_km < 0.0:
        raise ConfigError(f"distance must be >= 0, got {from_km}")
    if not from_km < to_km:
        raise ConfigError(f"distance grid is empty: from {from_km} must be below to {to_km}")
    return _grid(from_km, to_km, step_km, "distance")


def eta_grid(eta_from: float, eta_to: float, step: float) -> np.ndarray:
    values = _grid(eta_from, eta_to, step, "eta_m")
    if values[0] <= 0.0 or values[-1] > 1.0:
        raise ConfigError(f"eta_m grid must lie in (0, 1], got [{values[0]}, {values[-1]}]")
    return values


def _row_eta_m(case: CaseId, params: ProtocolParams) -> float:
    if case.monitors_alice:
        return params.eta_m_alice
    if case.monitors_bob:
        return params.eta_m_bob
    return 1.0


@dataclass(frozen=True)
class PointTask:
    config: RunConfig
    case: CaseId
    distance_km: float
    mode: RateMode
    eta_m: float | None = None
    seed: np.random.SeedSequence | None = None


def evaluate_point(task: PointTask, *, strict: bool = False) -> SweepRow:
    """One grid point; library failures become a skipped row unless `strict`."""
    config = task.config
    params = config.protocol_params()
    if task.eta_m is not None:
        params = replace(params, eta_m_alice=task.eta_m, eta_m_bob=task.eta_m)
    l_ac, l_bc = link_lengths(task.distance_km, config.geometry)
    base = dict(
        case=task.case,
        l_ac_km=l_ac,
        l_bc_km=l_bc,
        eta_m=_row_eta_m(task.case, params),
        v_rin=params.v_rin,
        mode=task.mode,
    )
    fs = config.finite_size()
    try:
        channel = config.channel(task.distance_km)
        if task.mode == "realistic":
            r = secret_key_rate(
                task.case, params, channel, None, fs, config.pe_mode, strategy=config.attack
            )
        elif config.rin_comparison_mode is RinMode.SUBSTITUTION:
            r = secret_key_rate(
                task.case,
                params.estimated(),
                channel,
                None,
                fs,
                config.pe_mode,
                strategy=config.attack,
            )
        else:
            rng = np.random.default_rng(task.seed if task.seed is not None else config.seed)
            r = estimated_vs_realistic(
                task.case,
                params,
                channel,
                fs,
                mode=RinMode.SAMPLE_LEVEL,
                pe_mode=config.pe_mode,
                strategy=config.attack,
                rng=rng,
            ).estimated
    except CvmdiError:
        if strict:
            raise
        return SweepRow(**base, status="skipped")
    return SweepRow(
        **base,
        i_ab=r.i_ab,
        chi_ae=r.chi_ae,
        delta_n=r.delta_n,
        rate_bits_per_use=r.rate,
        status="ok" if r.rate > 0.0 else "nonpositive",
    )


def run_tasks(tasks: Sequence[PointTask], workers: int = 1) -> list[SweepRow]:
    """Evaluate in grid order; joblib returns results in submission order."""
    if workers <= 1 or len(tasks) < 2:
        return [evaluate_point(t) for t in tasks]
    return Parallel(n_jobs=workers)(delayed(evaluate_point)(t) for t in tasks)


def _with_seeds(config: RunConfig, tasks: list[PointTask]) -> list[PointTask]:
    if config.rin_comparison_mode is not RinMode.SAMPLE_LEVEL:
        return tasks
    seeds = np.random.SeedSequence(config.seed).spawn(len(tasks))
    return [replace(t, seed=s) for t, s in zip(tasks, seeds, strict=True)]


def scan_distance(
    config: RunConfig,
    from_km: float,
    to_km: float,
    step_km: float,
    *,
    cases: Iterable[CaseId] | None = None,
    modes: Iterable[RateMode] = ("realistic",),
    workers: int = 1,
) -> list[SweepRow]:
    """Rows by ascending distance, then case, then mode."""
    cases = list(cases) if cases is not None else [config.case]
    modes = list(modes)
    tasks = [
        PointTask(config, case, float(d), mode)
        for d in distance_grid(from_km, to_km, step_km)
        for case in cases
        for mode in modes
    ]
    return run_tasks(_with_seeds(config, tasks), workers)


def scan_eta(
    config: RunConfig,
    etas: Sequence[float],
    distances: Sequence[float],
    *,
    cases: Iterable[CaseId] | None = None,
    modes: Iterable[RateMode] = ("realistic",),
    workers: int = 1,
) -> list[SweepRow]:
    """One row per (eta_m, distance) pair, eta_m outermost."""
    cases = list(cases) if cases is not None else [config.case]
    modes = list(modes)
    tasks = [
        PointTask(config, case, float(d), mode, eta_m=float(eta))
        for eta in etas
        for d in distances
        for case in cases
        for mode in modes
    ]
    return run_tasks(_with_seeds(config, tasks), workers)


def max_distances(
    config: RunConfig, cases: Iterable[CaseId], etas: Sequence[float] | None = None
) -> list[tuple[CaseId, float, float]]:
    """(case, eta_m, maximal secure distance in km) for every case and eta_m."""
    out = []
    base = config.protocol_params()
    for case in cases:
        for eta in etas if etas is not None else [None]:
            params = base if eta is None else replace(base, eta_m_alice=eta, eta_m_bob=eta)
            d = secure_distance(
                case,
                params,
                config.geometry,
                epsilon_1=config.epsilon_1,
                epsilon_2=config.epsilon_2,
                alpha_db_per_km=config.alpha_db_per_km,
                fs=config.finite_size(),
                pe_mode=config.pe_mode,
                strategy=config.attack,
            )
            out.append((case, _row_eta_m(case, params), d))
    return out


def format_value(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def write_csv(rows: Iterable[SweepRow], stream: TextIO) -> int:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    n = 0
    for row in rows:
        writer.writerow([format_value(getattr(row, c)) for c in SWEEP_COLUMNS])
        n += 1
    return n


def _write_file(path: Path, rows: list[SweepRow]) -> Path:
    with path.open("w", encoding="utf-8", newline="") as f:
        write_csv(rows, f)
    return path


def reproduce(
    figure: int, out_dir: Path, config: RunConfig | None = None, *, workers: int = 1
) -> list[Path]:
    """Write one CSV per curve of a published figure; files are overwritten."""
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure!r}; choose one of {FIGURES}")
    config = config or RunConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if figure == 2:
        for panel, (case, geometry) in _FIG2_PANELS.items():
            grid = _DISTANCES[geometry]
            curves: list[tuple[str, float, RateMode]] = [("est", _FIG2_RIN[0], "estimated")]
            curves += [(f"rin{v}", v, "realistic") for v in _FIG2_RIN]
            for curve, v_rin, mode in curves:
                cfg = config.model_copy(update={"geometry": geometry, "v_rin": v_rin})
                rows = scan_distance(cfg, *grid, cases=[case], modes=[mode], workers=workers)
                written.append(_write_file(out_dir / f"fig2_{panel}_{curve}.csv", rows))
        return written

    if figure in (3, 4):
        geometry = Geometry.SYMMETRIC if figure == 3 else Geometry.ASYMMETRIC
        panel = "sym" if figure == 3 else "asym"
        cfg = config.model_copy(update={"geometry": geometry, "v_rin": 0.0})
        for case in CaseId:
            rows = scan_distance(cfg, *_DISTANCES[geometry], cases=[case], workers=workers)
            written.append(_write_file(out_dir / f"fig{figure}_{panel}_{case.value}.csv", rows))
        return written

    cfg = config.model_copy(update={"geometry": Geometry.ASYMMETRIC, "v_rin": 0.0})
    etas = list(np.round(np.arange(0.1, 0.951, 0.05), 10)) + [0.999]
    distances = distance_grid(*_FIG5_DISTANCES)
    for panel, case in _FIG5_PANELS.items():
        rows = scan_eta(cfg, etas, distances, cases=[case], workers=workers)
        written.append(_write_file(out_dir / f"fig5_{panel}_surface.csv", rows))
    return written
