import typer
from rich.console import Console
from rich.table import Table

from vesim.commands.common import emit_error
from vesim.verification import run_checks


def verify_command():
    """Run the built-in identity checks; exits nonzero if any fails."""
    results = run_checks()
    table = Table(title="vesim verify")
    table.add_column("check")
    table.add_column("error", justify="right")
    table.add_column("tolerance", justify="right")
    table.add_column("status")
    for result in results:
        status = "[green]pass[/green]" if result.passed else "[red]FAIL[/red]"
        table.add_row(result.name, f"{result.error:.2e}", f"{result.tolerance:.0e}", status)
    Console().print(table)

    failed = [r.name for r in results if not r.passed]
    if failed:
        emit_error("VerificationFailed", ", ".join(failed))
        raise typer.Exit(code=1)
