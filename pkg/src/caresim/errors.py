"""Exception types raised across the package."""

from __future__ import annotations


class CareSimError(Exception):
    """Base class for all package errors."""


class ConfigError(CareSimError):
    pass


class MissingFile(ConfigError, FileNotFoundError):
    pass


class ParseError(ConfigError):
    def __init__(self, line: int, message: str, path: str | None = None):
        self.line = line
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {message}")


class UnknownKey(ConfigError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown configuration key: {name!r}")


class InvariantViolation(ConfigError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class InvalidLevel(CareSimError, ValueError):
    pass


class DegenerateMatrixError(CareSimError, ValueError):
    """Raised when a Lee-Carter fit cannot satisfy sum(b) == 1."""


class DegenerateMatrixWarning(UserWarning):
    """Emitted when the centred log-rate matrix carries no temporal signal."""


class PopulationExtinct(CareSimError):
    def __init__(self, year: int):
        self.year = year
        super().__init__(f"no living agents remain in {year}")


class MismatchedReplicates(CareSimError):
    pass


class TableError(CareSimError, ValueError):
    """Malformed rate table, map or divorce CSV."""
