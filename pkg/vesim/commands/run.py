import logging
from pathlib import Path
from typing import Annotated, Optional

import typer
from rich.console import Console

from vesim.commands.common import fail, run_directory, summary_table
from vesim.errors import SimulationAborted, VesimError
from vesim.schemas.loader import load_config
from vesim.simulation.driver import run
from vesim.storage import summarize, write_outputs

logger = logging.getLogger(__name__)


def run_command(
    config: Annotated[Path, typer.Argument(exists=True, dir_okay=False, help="YAML run document")],
    output: Annotated[Optional[Path], typer.Option("--output", "-o", help="Run directory")] = None,
):
    """Run one simulation and write steps.csv, snapshots.csv and summary.json."""
    try:
        run_config = load_config(config)
        directory = run_directory(run_config, config, output)
        steps = run_config.time.steps if run_config.time.mode == "fixed" else None
        tolerance = run_config.time.tolerance if run_config.time.mode == "adaptive" else None
        try:
            final, diagnostics = run(run_config)
        except SimulationAborted as error:
            if error.diagnostics is not None:
                final_time = error.suspension.t if error.suspension is not None else 0.0
                write_outputs(
                    error.diagnostics, directory, summarize(error.diagnostics, steps, tolerance, final_time)
                )
            raise
        summary = summarize(diagnostics, steps, tolerance, final.t)
        write_outputs(diagnostics, directory, summary)
    except VesimError as error:
        fail(error)

    Console().print(summary_table(config.stem, summary))
