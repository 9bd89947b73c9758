"""Exception hierarchy with stable error codes and CLI exit statuses."""

from __future__ import annotations


class ThresholdError(Exception):
    """Base class. ``code`` is a stable machine-readable identifier."""

    code = "error"
    exit_status = 1

    def __init__(self, message: str, code: str | None = None, **details):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.details = details

    def to_dict(self) -> dict:
        out = {"error": self.code, "message": str(self)}
        if self.details:
            out["details"] = self.details
        return out


class UsageError(ThresholdError):
    """Invalid request or argument combination (exit 2)."""

    code = "usage"
    exit_status = 2


class DataError(ThresholdError):
    """Malformed or insufficient data (exit 3)."""

    code = "data"
    exit_status = 3


class NumericError(ThresholdError):
    """A numerical procedure could not produce a value (exit 4)."""

    code = "numeric"
    exit_status = 4
