"""
Structured Logging
==================

Two renderings of the same log records:

- json: one object per line, for sweep logs that are searched or loaded
  into pandas afterwards
- dev: a compact single line for interactive CLI use

Every record carries the sweep, run and algorithm it was emitted under
(see `log_context`) plus whatever was passed through `extra=`. Console
output always goes to stderr so that CSV written to stdout stays clean.
"""

import json
import logging
import sys
import time
from contextlib import contextmanager
from contextvars import ContextVar
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Union

import numpy as np

from core.errors import InvalidConfigError, TraceIOError, ValidationError

LOG_FORMATS = ("json", "dev")
CONTEXT_FIELDS = ("sweep_id", "run_id", "algorithm")

_context: Dict[str, ContextVar] = {name: ContextVar(name, default=None) for name in CONTEXT_FIELDS}

# Attributes every LogRecord has; anything else on a record came from extra=
_RECORD_ATTRS = frozenset(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {
    "message", "asctime", "taskName",
}


def current_context() -> Dict[str, str]:
    """Context fields set in the current thread or process, in a fixed order."""
    values = {name: var.get() for name, var in _context.items()}
    return {name: value for name, value in values.items() if value is not None}


@contextmanager
def log_context(**fields: Optional[str]) -> Iterator[None]:
    """
    Tag every record emitted inside the block.

    Usage:
        with log_context(run_id="cof__a0.3000__r0007", algorithm="cof"):
            trace = simulate_run(...)
    """
    unknown = sorted(set(fields) - set(CONTEXT_FIELDS))
    if unknown:
        raise ValidationError(f"unknown log context fields {unknown}", field="log_context")
    tokens = [(_context[name], _context[name].set(value)) for name, value in fields.items()]
    try:
        yield
    finally:
        for var, token in reversed(tokens):
            var.reset(token)


def clear_context() -> None:
    for var in _context.values():
        var.set(None)


def record_extras(record: logging.LogRecord) -> Dict[str, Any]:
    return {
        key: value for key, value in record.__dict__.items()
        if key not in _RECORD_ATTRS and not key.startswith("_")
    }


def to_json_value(value: Any) -> Any:
    """Plain JSON types for an extra field; numpy scalars and arrays included."""
    if isinstance(value, np.generic):
        return value.item()
    if value is None or isinstance(value, (str, bool, int, float)):
        return value
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {str(k): to_json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_json_value(v) for v in value]
    return str(value)


class StructuredLogFormatter(logging.Formatter):
    """
    JSON formatter.

    {
        "timestamp": "2026-01-05T10:30:45.123Z",
        "level": "INFO",
        "logger": "core.runner",
        "message": "Sweep complete",
        "location": "runner.run_sweep:351",
        "sweep_id": "sweep-1a2b3c4d",
        "extra": {"runs": 200, "output_dir": "results/nu2"}
    }
    """

    def format(self, record: logging.LogRecord) -> str:
        created = datetime.fromtimestamp(record.created, tz=timezone.utc)
        entry: Dict[str, Any] = {
            "timestamp": created.isoformat(timespec="milliseconds").replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "location": f"{record.module}.{record.funcName}:{record.lineno}",
        }
        entry.update(current_context())

        extras = record_extras(record)
        if extras:
            entry["extra"] = {key: to_json_value(value) for key, value in extras.items()}

        if record.exc_info and record.exc_info[0] is not None:
            exc_type, exc, _ = record.exc_info
            entry["exception"] = {
                "type": exc_type.__name__,
                "message": str(exc),
                "traceback": self.formatException(record.exc_info),
            }
        return json.dumps(entry, default=str)


def _short(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{value:.6g}"
    return str(value)


class DevelopmentFormatter(logging.Formatter):
    """
    One readable line per record:

    10:30:45.123 INFO     core.runner:351  Sweep complete  sweep_id=sweep-1a2b3c4d runs=200
    """

    LEVEL_COLORS = {
        logging.DEBUG: "\033[2m",
        logging.INFO: "\033[32m",
        logging.WARNING: "\033[33m",
        logging.ERROR: "\033[31m",
        logging.CRITICAL: "\033[1;31m",
    }

    def __init__(self, use_colors: bool = True):
        super().__init__()
        self.use_colors = use_colors and sys.stderr.isatty()

    def format(self, record: logging.LogRecord) -> str:
        clock = datetime.fromtimestamp(record.created).strftime("%H:%M:%S")
        level = f"{record.levelname:<8}"
        if self.use_colors:
            level = f"{self.LEVEL_COLORS.get(record.levelno, '')}{level}\033[0m"

        fields = {**current_context(), **record_extras(record)}
        suffix = "  " + " ".join(f"{k}={_short(v)}" for k, v in fields.items()) if fields else ""

        line = f"{clock}.{int(record.msecs):03d} {level} {record.name}:{record.lineno}  {record.getMessage()}{suffix}"
        if record.exc_info:
            line += "\n" + self.formatException(record.exc_info)
        return line


class PerformanceLogger:
    """
    Time a block and log its duration under `performance.<operation>`.

    Logs at debug on success, at warning past `warn_after_ms`, and at error
    if the block raised; the exception still propagates.

    Usage:
        with PerformanceLogger("simulate_run", {"horizon": 1_000_000}):
            trace = simulate_run(...)
    """

    def __init__(
        self,
        operation: str,
        context: Optional[Dict[str, Any]] = None,
        warn_after_ms: float = 10_000.0
    ):
        self.operation = operation
        self.context = dict(context or {})
        self.warn_after_ms = warn_after_ms
        self.duration_ms = 0.0
        self._logger = logging.getLogger(f"performance.{operation}")
        self._start = 0.0

    def __enter__(self) -> "PerformanceLogger":
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        self.duration_ms = (time.perf_counter() - self._start) * 1000.0
        fields = {"operation": self.operation, "duration_ms": round(self.duration_ms, 2), **self.context}

        if exc_type is not None:
            level, verb = logging.ERROR, "failed after"
            fields["error"] = f"{exc_type.__name__}: {exc}"
        elif self.duration_ms > self.warn_after_ms:
            level, verb = logging.WARNING, "took"
        else:
            level, verb = logging.DEBUG, "completed in"

        self._logger.log(level, f"{self.operation} {verb} {self.duration_ms:.1f}ms", extra=fields)
        return False


def setup_structured_logging(
    level: str = "INFO",
    format_type: str = "json",
    log_file: Optional[Union[str, Path]] = None
) -> logging.Logger:
    """
    Route the root logger to stderr in the chosen format.

    A log file, when given, always receives JSON lines.

    Raises:
        InvalidConfigError: unknown level or format
        TraceIOError: the log file cannot be opened
    """
    numeric_level = logging.getLevelName(str(level).upper())
    if not isinstance(numeric_level, int):
        raise InvalidConfigError("logging.level", level, "expected DEBUG, INFO, WARNING, ERROR or CRITICAL")
    if format_type not in LOG_FORMATS:
        raise InvalidConfigError("logging.format", format_type, f"expected one of {list(LOG_FORMATS)}")

    root = logging.getLogger()
    root.setLevel(numeric_level)
    root.handlers.clear()

    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(StructuredLogFormatter() if format_type == "json" else DevelopmentFormatter())
    root.addHandler(console)

    if log_file is not None:
        path = Path(log_file)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(path, encoding="utf-8")
        except OSError as e:
            raise TraceIOError(str(path), f"cannot open log file: {e}")
        file_handler.setFormatter(StructuredLogFormatter())
        root.addHandler(file_handler)

    return root
