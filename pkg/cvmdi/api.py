"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/api.py
#########################################
"""

from __future__ import annotations

import time
from collections.abc import Mapping

from fastapi import FastAPI, HTTPException, status

from . import __version__
from .config import Settings, load_run_config
from .errors import ConfigError, CvmdiError, DomainError
from .models import RateRequest, RunConfig, ScanDistanceRequest, SweepRow
from .runlog import RunEvent, RunLogger, config_fingerprint, now_ms
from .sweep import PointTask, evaluate_point, scan_distance

settings = Settings()
run_log = RunLogger(settings.run_log_path) if settings.run_log_path else None

app = FastAPI(title="CV-MDI key rate service", version=__version__)

# status.HTTP_422_* names moved between Starlette releases
UNPROCESSABLE = 422


def _config(overrides: Mapping[str, object]) -> RunConfig:
    """Service default config with the request's overrides on top."""
    try:
        return load_run_config(settings.config_path, {k: str(v) for k, v in overrides.items()})
    except ConfigError as e:
        raise HTTPException(status_code=UNPROCESSABLE, detail=str(e)) from e


def _record(command: str, config: RunConfig, t0: float, rows: int, err: str | None) -> None:
    if run_log is None:
        return
    payload = config.model_dump(mode="json")
    run_log.write(
        RunEvent(
            run_id=run_log.new_run_id(),
            ts_ms=now_ms(),
            command=command,
            config_fingerprint_sha256=config_fingerprint(payload),
            status="ok" if err is None else "error",
            exit_code=0 if err is None else 2,
            rows=rows,
            latency_ms=int((time.time() - t0) * 1000),
            error=err,
        )
    )


@app.get("/health")
def health() -> dict[str, str]:
    """Readiness signal with the package version."""
    return {"status": "ok", "version": __version__}


@app.post("/v1/rate")
def rate(body: RateRequest) -> SweepRow:
    """One grid point; pipeline failures come back as status=skipped."""
    t0 = time.time()
    config = _config(body.overrides)
    row = evaluate_point(PointTask(config, config.case, body.distance_km, body.mode))
    _record("api.rate", config, t0, 1, None)
    return row


@app.post("/v1/scan-distance")
def scan(body: ScanDistanceRequest) -> list[SweepRow]:
    """Rows by ascending distance; bad grids are 422, pipeline failures 500."""
    t0 = time.time()
    config = _config(body.overrides)
    try:
        rows = scan_distance(
            config, body.from_km, body.to_km, body.step_km, modes=body.modes, workers=1
        )
    except (ConfigError, DomainError) as e:
        _record("api.scan-distance", config, t0, 0, str(e))
        raise HTTPException(status_code=UNPROCESSABLE, detail=str(e)) from e
    except CvmdiError as e:
        _record("api.scan-distance", config, t0, 0, str(e))
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=f"{type(e).__name__}: {e}"
        ) from e
    _record("api.scan-distance", config, t0, len(rows), None)
    return rows
