"""
Logging configuration using structlog.
"""

import logging
import sys
from typing import Any, Dict, Optional

import numpy as np
import structlog

from src.core.config import settings


def _plain_numbers(_: Any, __: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    """numpy scalars and small arrays become plain Python values."""
    for key, value in event_dict.items():
        if isinstance(value, np.generic):
            event_dict[key] = value.item()
        elif isinstance(value, np.ndarray) and value.size <= 16:
            event_dict[key] = value.tolist()
    return event_dict


def setup_logging(level: Optional[str] = None) -> None:
    """Setup structured logging with structlog.

    Logs are written to stderr; stdout is reserved for report artifacts.
    """
    level_name = (level or settings.LOG_LEVEL).upper()

    # Configure standard library logging
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, level_name),
        force=True,
    )

    # Configure structlog
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            _plain_numbers,
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer()
            if settings.LOG_FORMAT == "json"
            else structlog.dev.ConsoleRenderer(colors=False),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Get a structured logger instance."""
    return structlog.get_logger(name)


def bind_command(command: str, **values: Any) -> None:
    """Tag every log line of the running CLI command."""
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(command=command, **log_context(**values))


def log_context(**kwargs: Any) -> Dict[str, Any]:
    """Create logging context, dropping unset values."""
    return {k: v for k, v in kwargs.items() if v is not None}
