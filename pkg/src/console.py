"""
Shared console and logger for consistent terminal output
"""

import logging

from rich.console import Console
from rich.logging import RichHandler

console = Console()
logger = logging.getLogger("spinlet")


def configure_logging(level: int = logging.INFO) -> None:
    """Route the package logger and captured warnings through a RichHandler on the shared console"""
    for target in (logger, logging.getLogger("py.warnings")):
        if not any(isinstance(h, RichHandler) for h in target.handlers):
            handler = RichHandler(console=console, show_path=False, markup=False)
            handler.setFormatter(logging.Formatter("%(message)s"))
            target.addHandler(handler)
        target.setLevel(level)
        target.propagate = False
