"""Logging setup and structured log helpers built on loguru."""

import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from loguru import logger

DEFAULT_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"
)


def setup_logging(
    level: str = "INFO",
    log_file: Optional[str] = None,
    log_format: Optional[str] = None,
    enable_console: bool = True,
) -> None:
    """Configure loguru sinks.

    The console sink writes to stderr; stdout is kept for CLI summaries.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR)
        log_file: Optional log file path
        log_format: Optional custom log format
        enable_console: Whether to enable console logging
    """
    logger.remove()
    fmt = log_format or DEFAULT_FORMAT
    level = level.upper()

    if enable_console:
        logger.add(sys.stderr, level=level, format=fmt)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            log_file,
            level=level,
            format=fmt,
            rotation="10 MB",
            retention=5,
            encoding="utf-8",
        )

    logger.debug(f"logging configured, level {level}")


def log_json_data(data_type: str, data: Dict[str, Any]) -> None:
    """Log a structured payload at DEBUG.

    Args:
        data_type: Kind of payload (e.g. 'spectral_report', 'manifest')
        data: JSON-compatible payload
    """
    try:
        logger.debug(f"[{data_type}] {json.dumps(data, ensure_ascii=False, sort_keys=True)}")
    except (TypeError, ValueError) as e:
        logger.error(f"failed to serialize {data_type}: {e}")


def log_performance(operation: str, duration: float, **metadata: Any) -> None:
    """Log how long an operation took."""
    logger.bind(event_type="performance", **metadata).info(f"{operation} took {duration:.3f}s")
