"""
Logging setup shared by the CLI and the scripts.

Library modules only call ``logging.getLogger(__name__)``; handlers are
installed once, here.
"""

import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

from src.config.settings import AppSettings, get_app_settings

PLAIN_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"


def configure_logging(settings: Optional[AppSettings] = None) -> None:
    """
    Install a single root handler according to the application settings.

    Args:
        settings: AppSettings to use (defaults to the environment)
    """
    settings = settings or get_app_settings()

    if settings.log_format == "rich":
        handler: logging.Handler = RichHandler(
            console=Console(stderr=True),
            show_path=False,
            rich_tracebacks=True,
        )
        handler.setFormatter(logging.Formatter("%(message)s"))
    else:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(PLAIN_FORMAT))

    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(settings.log_level)
