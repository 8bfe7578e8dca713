"""Exception types shared across the package.

The CLI maps these onto distinct process exit codes, so keep the
hierarchy flat and purpose-specific.
"""

from __future__ import annotations


class SpacecrossError(Exception):
    """Base class for all package-specific errors."""


class TraceFormatError(SpacecrossError, ValueError):
    """A trace line could not be parsed.  Carries the 1-based line number."""

    def __init__(self, line_no: int, message: str) -> None:
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class TraceValidationError(SpacecrossError, ValueError):
    """The trace parsed but violates ordering/matching rules."""


class ConfigurationError(SpacecrossError, ValueError):
    """A parameter or config file value is out of range or malformed."""


class WindowNotReadyError(SpacecrossError, ValueError):
    """A sliding window was requested before enough intervals elapsed."""


class TrackingStateError(SpacecrossError, RuntimeError):
    """A dynamic change event is inconsistent with the tracked graph state."""
