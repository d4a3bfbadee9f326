"""
Rich summary tables for experiment results
"""

from typing import Any, List, Sequence

from rich.panel import Panel
from rich.table import Table

from .console import console


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "[green]✓[/green]" if value else "[red]✗[/red]"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def show_table(title: str, header: Sequence[str], rows: Sequence[Sequence[Any]]):
    """Print a result table; booleans render as check marks"""
    table = Table(title=title, show_header=True, header_style="bold magenta")
    for idx, name in enumerate(header):
        table.add_column(name, style="cyan" if idx == 0 else "white", justify="right")
    for row in rows:
        table.add_row(*[_fmt(v) for v in row])
    console.print(table)
    console.print()


def show_run_header(subcommand: str, config_lines: List[str]):
    """Panel with the subcommand and the config values it uses"""
    console.print(Panel(
        "\n".join(config_lines),
        title=f"spinlet {subcommand}",
        border_style="blue",
        padding=(0, 2)
    ))


def show_outputs(paths: Sequence[Any]):
    for path in paths:
        console.print(f"[green]✓ Wrote {path}[/green]")


def show_failures(failures: Sequence[str]):
    if not failures:
        console.print("[green]✓ All checks passed[/green]")
        return
    for failure in failures:
        console.print(f"[red]✗ {failure}[/red]")
