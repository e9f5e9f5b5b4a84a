"""Run outputs: steps.csv, snapshots.csv and summary.json in one run directory."""

import csv
import logging
from pathlib import Path
from typing import Iterable, Optional, Union

import orjson
from pydantic import BaseModel

from vesim.errors import OutputError
from vesim.models.models import RunDiagnostics, Suspension
from vesim.schemas.schemas import RunSummary

logger = logging.getLogger(__name__)

STEP_COLUMNS = ["t", "dt", "accepted", "e_A", "e_L", "gmres_iters", "matvecs_cum"]
SNAPSHOT_COLUMNS = ["t", "vesicle", "node", "x", "y", "sigma"]


def format_float(value: float) -> str:
    return "%.17g" % value


def summarize(
    diagnostics: RunDiagnostics,
    steps: Optional[int] = None,
    tolerance: Optional[float] = None,
    final_time: float = 0.0,
) -> RunSummary:
    return RunSummary(
        mode=diagnostics.mode,
        steps=steps,
        tolerance=tolerance,
        e_A=diagnostics.e_A,
        e_L=diagnostics.e_L,
        accepts=diagnostics.accepts,
        rejects=diagnostics.rejects,
        matvecs=diagnostics.matvecs,
        cpu=diagnostics.cpu,
        final_time=final_time,
        aborted=diagnostics.aborted,
    )


def _step_rows(diagnostics: RunDiagnostics) -> Iterable[list]:
    for record in diagnostics.records:
        yield [
            format_float(record.t),
            format_float(record.dt),
            int(record.accepted),
            format_float(record.e_A),
            format_float(record.e_L),
            record.gmres_iters,
            record.matvecs_cum,
        ]


def _snapshot_rows(snapshots: Iterable[Suspension]) -> Iterable[list]:
    for suspension in snapshots:
        for index, vesicle in enumerate(suspension.vesicles):
            for node, ((x, y), sigma) in enumerate(zip(vesicle.curve.points, vesicle.tension)):
                yield [format_float(suspension.t), index, node, format_float(x), format_float(y), format_float(sigma)]


def _write_csv(path: Path, header: list, rows: Iterable[list]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def write_json(path: Path, document: Union[BaseModel, dict]) -> None:
    payload = document.model_dump() if isinstance(document, BaseModel) else document
    path.write_bytes(orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY))


def write_outputs(
    diagnostics: RunDiagnostics,
    directory: Union[str, Path],
    summary: Optional[RunSummary] = None,
    snapshots: Optional[Iterable[Suspension]] = None,
) -> Path:
    """Write the three run files into ``directory`` and return it."""
    directory = Path(directory)
    summary = summary or summarize(diagnostics)
    snapshots = diagnostics.snapshots if snapshots is None else snapshots
    try:
        directory.mkdir(parents=True, exist_ok=True)
        _write_csv(directory / "steps.csv", STEP_COLUMNS, _step_rows(diagnostics))
        _write_csv(directory / "snapshots.csv", SNAPSHOT_COLUMNS, _snapshot_rows(snapshots))
        write_json(directory / "summary.json", summary)
    except OSError as error:
        raise OutputError(f"cannot write run outputs to {directory}: {error}", str(directory))
    logger.info("outputs written to %s", directory)
    return directory
