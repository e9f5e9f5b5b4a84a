from pathlib import Path
from typing import NoReturn, Optional

import orjson
import typer
from rich.table import Table

from vesim.errors import VesimError
from vesim.schemas.schemas import RunConfig, RunSummary


def emit_error(kind: str, detail: str) -> None:
    """One machine-readable JSON line on stderr."""
    typer.echo(orjson.dumps({"error": kind, "detail": detail}).decode(), err=True)


def fail(error: VesimError) -> NoReturn:
    emit_error(type(error).__name__, error.detail)
    raise typer.Exit(code=error.exit_code)


def run_directory(config: RunConfig, config_path: Path, output: Optional[Path]) -> Path:
    if output is not None:
        return output
    return Path(config.output.directory) / config_path.stem


def summary_table(title: str, summary: RunSummary) -> Table:
    table = Table(title=title)
    for column in ("mode", "steps/tol", "e_A", "e_L", "accepts", "rejects", "matvecs", "cpu [s]"):
        table.add_column(column, justify="right")
    size = summary.steps if summary.mode == "fixed" else summary.tolerance
    table.add_row(
        summary.mode,
        f"{size:g}" if size is not None else "-",
        f"{summary.e_A:.3e}",
        f"{summary.e_L:.3e}",
        str(summary.accepts),
        str(summary.rejects),
        str(summary.matvecs),
        f"{summary.cpu:.2f}",
    )
    return table
