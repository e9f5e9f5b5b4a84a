import logging
from pathlib import Path
from typing import Annotated, List, Optional

import typer
from rich.console import Console
from rich.table import Table

from vesim.commands.common import fail, run_directory
from vesim.errors import VesimError
from vesim.schemas.loader import load_config
from vesim.schemas.schemas import ConvergenceRow, ConvergenceSummary
from vesim.simulation.analysis import fit_order
from vesim.simulation.driver import build_suspension, run_fixed
from vesim.storage import summarize, write_json, write_outputs

logger = logging.getLogger(__name__)


def parse_steps(value: str) -> List[int]:
    try:
        steps = [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated integers, got {value!r}")
    if len(steps) < 1 or any(m < 1 for m in steps):
        raise typer.BadParameter("step counts must be positive integers")
    return steps


def _fitted(steps: List[int], errors: List[float]) -> Optional[float]:
    if len(steps) < 2 or any(e <= 0 for e in errors):
        return None
    return fit_order(steps, errors)


def convergence_command(
    config: Annotated[Path, typer.Argument(exists=True, dir_okay=False, help="YAML run document")],
    steps: Annotated[str, typer.Option("--steps", help="Comma-separated step counts, e.g. 50,100,200")],
    output: Annotated[Optional[Path], typer.Option("--output", "-o", help="Study directory")] = None,
):
    """Fixed-step runs at several step counts and the fitted order of accuracy."""
    counts = parse_steps(steps)
    try:
        run_config = load_config(config)
        directory = run_directory(run_config, config, output)
        rows = []
        for m in counts:
            final, diagnostics = run_fixed(
                build_suspension(run_config), m, run_config.T, run_config.n_sdc, run_config.p,
                run_config.solver_settings,
            )
            write_outputs(diagnostics, directory / f"m{m}", summarize(diagnostics, m, None, final.t))
            rows.append(ConvergenceRow(
                steps=m, e_A=diagnostics.e_A, e_L=diagnostics.e_L,
                matvecs=diagnostics.matvecs, cpu=diagnostics.cpu,
            ))
        summary = ConvergenceSummary(
            rows=rows,
            order_area=_fitted(counts, [r.e_A for r in rows]),
            order_length=_fitted(counts, [r.e_L for r in rows]),
        )
        directory.mkdir(parents=True, exist_ok=True)
        write_json(directory / "summary.json", summary)
    except VesimError as error:
        fail(error)
    except OSError as error:
        fail(VesimError(f"cannot write {directory}: {error}"))

    logger.info("convergence order_area=%s order_length=%s", summary.order_area, summary.order_length)
    table = Table(title=f"{config.stem} convergence")
    for column in ("m", "e_A", "e_L", "matvecs", "cpu [s]"):
        table.add_column(column, justify="right")
    for row in rows:
        table.add_row(str(row.steps), f"{row.e_A:.3e}", f"{row.e_L:.3e}", str(row.matvecs), f"{row.cpu:.2f}")
    console = Console()
    console.print(table)
    if summary.order_length is not None:
        console.print(f"order (area) {summary.order_area:.2f}  order (length) {summary.order_length:.2f}")
