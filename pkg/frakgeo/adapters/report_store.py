from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from pydantic import ValidationError

from ..core.errors import ConfigError
from ..models.schema import JobConfig, VerificationReport

PathLike = Union[str, Path]


def load_config(path: PathLike) -> JobConfig:
    """Read and validate a JSON job configuration."""
    fp = Path(path)
    if not fp.exists():
        raise ConfigError(f"config file not found: {fp}")
    try:
        data = json.loads(fp.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{fp}: invalid JSON ({exc})") from exc
    try:
        return JobConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{fp}: {exc}") from exc


def dump_report(report: VerificationReport) -> str:
    return report.model_dump_json(indent=2)


def write_report(report: VerificationReport, path: PathLike) -> str:
    dest = Path(path)
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text(dump_report(report) + "\n", encoding="utf-8")
    return str(dest)
