"""
Core components: configuration, exceptions, logging and seed splitting.
"""

from .config import Settings, get_settings, load_config, parse_config
from .exceptions import (
    AssumptionError,
    ConfigurationError,
    DegenerateFamilyError,
    GossipError,
    InvariantViolationError,
    SizeCapError,
    SlopeError,
    StorageError,
    ValidationError,
)
from .logging import log_json_data, log_performance, setup_logging

__all__ = [
    "Settings",
    "get_settings",
    "load_config",
    "parse_config",
    "GossipError",
    "ConfigurationError",
    "ValidationError",
    "AssumptionError",
    "SizeCapError",
    "SlopeError",
    "DegenerateFamilyError",
    "InvariantViolationError",
    "StorageError",
    "setup_logging",
    "log_json_data",
    "log_performance",
]
