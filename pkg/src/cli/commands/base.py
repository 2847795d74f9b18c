"""
Cox Stop-Loss - Command System Base
===================================

Each subcommand is a class with a name, a short help line and an
execute() method returning a CommandResult. Classes register themselves
with the global registry through @register_command.
"""

from __future__ import annotations

import io
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any

import numpy as np

from ...core.config import RunConfig

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


@dataclass
class CommandResult:
    """Result of one subcommand: the rendered document and an exit code."""

    success: bool
    output: str = ""
    error: str = ""
    exit_code: int = EXIT_OK

    @classmethod
    def ok(cls, output: str = "") -> CommandResult:
        return cls(success=True, output=output)

    @classmethod
    def fail(cls, error: str, exit_code: int, output: str = "") -> CommandResult:
        return cls(success=False, output=output, error=error, exit_code=exit_code)


def render_json(document: Any) -> str:
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def render_csv(header: str, rows) -> str:
    """Locale-independent CSV with a fixed header and a trailing newline."""
    buffer = io.StringIO()
    table = np.asarray(rows, dtype=float).reshape(-1, len(header.split(",")))
    np.savetxt(buffer, table, delimiter=",", header=header, comments="", fmt="%.17g")
    return buffer.getvalue()


class BaseCommand(ABC):
    """
    Abstract base class for subcommands.

    Example:
        @register_command
        class PriceCommand(BaseCommand):
            name = "price"
            help_short = "Price the configured contract"

            def execute(self) -> CommandResult:
                ...
    """

    name: str = ""
    help_short: str = ""
    formats: tuple[str, ...] = ("json",)

    def __init__(self, config: RunConfig, mutate_reindex: bool = False):
        self.config = config
        self.mutate_reindex = mutate_reindex

    @property
    def output_format(self) -> str:
        return self.config["output.format"]

    @property
    def seed(self) -> int:
        return self.config["numerics.seed"]

    def document(self, body: dict[str, Any]) -> dict[str, Any]:
        """Attach the seed and the effective configuration to an output document."""
        return {**body, "command": self.name, "seed": self.seed, "config_echo": self.config.echo()}

    @abstractmethod
    def execute(self) -> CommandResult:
        """Run the command on the effective configuration."""
        pass


class CommandRegistry:
    """Registry of subcommand classes keyed by name."""

    def __init__(self):
        self._commands: dict[str, type[BaseCommand]] = {}

    def register(self, cmd_class: type[BaseCommand]):
        if not cmd_class.name:
            raise ValueError(f"Command class {cmd_class} has no name")
        self._commands[cmd_class.name] = cmd_class

    def get(self, name: str) -> type[BaseCommand] | None:
        return self._commands.get(name)

    def all_names(self) -> list[str]:
        return sorted(self._commands)

    def get_help_table(self) -> list[tuple[str, str]]:
        return sorted((cls.name, cls.help_short) for cls in self._commands.values())


_registry = CommandRegistry()


def register_command(cmd_class: type[BaseCommand]) -> type[BaseCommand]:
    """Decorator to register a command class."""
    _registry.register(cmd_class)
    return cmd_class


def get_registry() -> CommandRegistry:
    return _registry
