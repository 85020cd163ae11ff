"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/runlog.py
#########################################
"""

from __future__ import annotations

import hashlib
import json
import time
import uuid
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any


@dataclass(frozen=True)
class RunEvent:
    """One record per CLI command or service request."""

    run_id: str
    ts_ms: int
    command: str
    config_fingerprint_sha256: str
    status: str
    exit_code: int
    rows: int
    latency_ms: int
    config: dict[str, Any] | None = None
    error: str | None = None


class RunLogger:
    """Append-only JSONL run log, one file per UTC day of the event timestamp."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def new_run_id(self) -> str:
        return uuid.uuid4().hex

    def _path_for_event(self, *, ts_ms: int) -> Path:
        day = datetime.fromtimestamp(ts_ms / 1000.0, tz=timezone.utc).strftime("%Y-%m-%d")
        return self.path.with_name(f"{self.path.stem}-{day}{self.path.suffix}")

    def write(self, ev: RunEvent) -> Path:
        out_path = self._path_for_event(ts_ms=ev.ts_ms)
        with out_path.open("a", encoding="utf-8") as f:
            f.write(json.dumps(asdict(ev), ensure_ascii=False, sort_keys=True) + "\n")
        return out_path


def now_ms() -> int:
    return int(time.time() * 1000)


def config_fingerprint(config: dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form, so key order never changes the digest."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
