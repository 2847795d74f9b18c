"""
Cox Stop-Loss - Subcommands
===========================

Importing this package registers every subcommand.
"""

from .base import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_VALIDATION,
    BaseCommand,
    CommandRegistry,
    CommandResult,
    get_registry,
    register_command,
)
from . import block, es, price, validate  # noqa: F401  (registration)

__all__ = [
    "EXIT_CONFIG",
    "EXIT_IO",
    "EXIT_NUMERIC",
    "EXIT_OK",
    "EXIT_VALIDATION",
    "BaseCommand",
    "CommandRegistry",
    "CommandResult",
    "get_registry",
    "register_command",
]
