from __future__ import annotations

import json
from pathlib import Path

from pydantic import BaseModel

from app.errors import IntegratorFailure
from app.numerics.grid import Grid
from app.numerics.snapshot import write_snapshot


def report_to_json(report: BaseModel) -> str:
    payload = report.model_dump(mode="json")
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_report(path: Path, report: BaseModel) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_to_json(report), encoding="utf-8")
    return path


def write_failure_dump(directory: Path, grid: Grid, failure: IntegratorFailure) -> Path:
    """Last accepted state as a snapshot plus failure.json with the solver diagnostics."""
    directory.mkdir(parents=True, exist_ok=True)
    write_snapshot(directory / "last_accepted.plap", grid, failure.state)
    payload = {"message": str(failure), "diagnostics": failure.diagnostics}
    (directory / "failure.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2, default=str) + "\n", encoding="utf-8"
    )
    return directory
