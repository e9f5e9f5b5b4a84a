import logging
from typing import Annotated, List, Optional

import click
import typer
from rich.logging import RichHandler

from vesim.commands import convergence, run, verify
from vesim.config import LOG_LEVEL

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level,
        format="%(name)s: %(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        force=True,
    )


# Typer App
app = typer.Typer(
    name="vesim",
    help="Boundary-integral simulation of 2D vesicle suspensions.",
    no_args_is_help=True,
    add_completion=False,
)


@app.callback()
def main(
    log_level: Annotated[str, typer.Option("--log-level", help="DEBUG, INFO, WARNING or ERROR")] = LOG_LEVEL,
):
    level = log_level.upper()
    if level not in LOG_LEVELS:
        raise typer.BadParameter(f"unknown log level {log_level!r}", param_hint="--log-level")
    configure_logging(level)


# Include commands
app.command("run")(run.run_command)
app.command("convergence")(convergence.convergence_command)
app.command("verify")(verify.verify_command)


def cli_main(args: Optional[List[str]] = None) -> int:
    """Run the CLI without exiting the interpreter; returns the exit status."""
    try:
        result = app(args=args, standalone_mode=False)
    except click.exceptions.UsageError as error:
        error.show()
        return error.exit_code
    except click.exceptions.Abort:
        return 1
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    raise SystemExit(cli_main())
