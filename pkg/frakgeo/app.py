import logging
from pathlib import Path
from typing import List, Optional

import typer

from .adapters.report_store import dump_report, load_config, write_report
from .core.config import get_settings
from .core.errors import ConfigError, FrakgeoError
from .core.logging import configure_logging, get_logger
from .models.schema import CHECK_NAMES, VerificationReport
from .services.pipeline import run_job

app = typer.Typer(
    name="frakgeo",
    add_completion=False,
    no_args_is_help=True,
    help="Verify fractional almost Kähler-Lagrange geometry for a Lagrangian given as a JSON job.",
)
logger = get_logger("app")


def _list_checks(value: bool):
    if value:
        for name in CHECK_NAMES:
            typer.echo(name)
        raise typer.Exit(0)


def _log_level(value: Optional[str]) -> Optional[str]:
    if value is not None and not isinstance(logging.getLevelName(value.upper()), int):
        raise typer.BadParameter(f"not a logging level: {value}")
    return value


@app.callback()
def main(
    list_checks: bool = typer.Option(
        False, "--list-checks", callback=_list_checks, is_eager=True, help="Print the check names and exit."
    ),
    log_level: Optional[str] = typer.Option(
        None, "--log-level", callback=_log_level, help="Logging level (default from FRAKGEO_LOG_LEVEL)."
    ),
):
    configure_logging(log_level or get_settings().log_level)


def _execute(config: Path, alpha: Optional[float] = None, seed: Optional[int] = None) -> VerificationReport:
    try:
        return run_job(load_config(config), alpha=alpha, seed=seed)
    except ConfigError as exc:
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(1)
    except FrakgeoError as exc:
        typer.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        raise typer.Exit(1)


@app.command()
def check(
    config: Path = typer.Option(..., "--config", help="Path to the JSON job configuration."),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Override the job's fractional order(s)."),
    output: Optional[Path] = typer.Option(None, "--output", help="Write the report here instead of stdout."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the probe-vector seed."),
):
    """Run the pipeline and exit 0 (pass/warn) or 2 (a hard check failed)."""
    report = _execute(config, alpha, seed)
    if output is None:
        typer.echo(dump_report(report))
    else:
        logger.info("report written to %s", write_report(report, output))
    for rec in report.checks:
        if rec.verdict != "pass":
            typer.echo(f"{rec.verdict.upper()}: {rec.name} alpha={rec.alpha:g} residual={rec.max_residual}", err=True)
    raise typer.Exit(report.exit_code)


@app.command()
def report(
    config: Path = typer.Option(..., "--config", help="Path to the JSON job configuration."),
    output: Path = typer.Option(..., "--output", help="Where to write the report."),
):
    """Run the pipeline and only write the report; verdicts do not affect the exit code."""
    result = _execute(config)
    path = write_report(result, output)
    counts = {v: sum(1 for c in result.checks if c.verdict == v) for v in ("pass", "warn", "fail")}
    typer.echo(f"{path}: {counts['pass']} pass, {counts['warn']} warn, {counts['fail']} fail")
    raise typer.Exit(0)


# typer may run on a click of its own; take the base class from what it raises
_ClickException = next(c for c in typer.BadParameter.__mro__ if c.__name__ == "ClickException")


def run(argv: Optional[List[str]] = None) -> int:
    """Console entry point; returns the exit code instead of raising SystemExit."""
    try:
        rv = app(args=argv, prog_name="frakgeo", standalone_mode=False)
    except typer.Abort:
        typer.echo("aborted", err=True)
        return 1
    except _ClickException as exc:
        exc.show()
        return 1
    return rv if isinstance(rv, int) else 0
