"""
Cox Stop-Loss - Command Runner
==============================

Loads the configuration, applies command-line overrides, runs one
subcommand and turns any failure into a CommandResult with an exit code:

    0 success, 1 validation failure, 2 configuration error,
    3 numeric error, 4 I/O error
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from ..core.config import RunConfig, load_config
from ..core.errors import ConfigError, EngineError, GridError
from .commands import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, CommandResult, get_registry

logger = logging.getLogger(__name__)


@dataclass
class RunOptions:
    """Command-line flags that override the configuration file."""

    command: str
    config: str | None = None
    seed: int | None = None
    threads: int | None = None
    output: str | None = None
    format: str | None = None
    mutate_reindex: bool = False

    def overrides(self) -> dict:
        return {
            "numerics.seed": self.seed,
            "numerics.threads": self.threads,
            "output.path": self.output,
            "output.format": self.format,
        }


class Runner:
    """
    Runs subcommands and maps exceptions to exit codes.

    Usage:
        runner = Runner()
        code = runner.run(RunOptions("price", config="configs/a1_constant_exponential.json"))
    """

    def __init__(self, stdout: IO[str] | None = None, stderr: IO[str] | None = None):
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr
        self._registry = get_registry()

    def effective_config(self, options: RunOptions) -> RunConfig:
        return load_config(options.config).override(options.overrides())

    def execute(self, options: RunOptions) -> tuple[CommandResult, RunConfig | None]:
        """Run one subcommand; never raises for engine or I/O failures."""
        cmd_class = self._registry.get(options.command)
        if cmd_class is None:
            return CommandResult.fail(f"unknown command '{options.command}'", EXIT_CONFIG), None
        config = None
        try:
            config = self.effective_config(options)
            if config["output.format"] not in cmd_class.formats:
                raise ConfigError(f"output.format: '{options.command}' writes "
                                  f"{' or '.join(cmd_class.formats)}", key="output.format")
            return cmd_class(config, options.mutate_reindex).execute(), config
        except (ConfigError, GridError) as e:
            return CommandResult.fail(f"config error: {e}", EXIT_CONFIG), config
        except EngineError as e:
            logger.debug("numeric failure", exc_info=True)
            return CommandResult.fail(f"{type(e).__name__}: {e}", EXIT_NUMERIC), config
        except OSError as e:
            return CommandResult.fail(f"I/O error: {e}", EXIT_IO), config

    def run(self, options: RunOptions) -> int:
        result, config = self.execute(options)
        if result.output:
            path = config["output.path"] if config is not None else None
            try:
                self._write(result.output, path)
            except OSError as e:
                result = CommandResult.fail(f"I/O error: {e}", EXIT_IO)
        if result.error:
            print(f"cox-stop-loss {options.command}: {result.error}", file=self.stderr)
        return result.exit_code

    def _write(self, text: str, path: str | None) -> None:
        if path is None:
            self.stdout.write(text)
            return
        with open(Path(path), "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        logger.info("output written to %s", path)
