"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2,
ResolutionError -> 3, WindowError -> 4 (under --strict).
"""


class NesskitError(Exception):
    """Base class for all package errors."""


class ConfigError(NesskitError):
    """Invalid, unparseable, or inconsistent configuration input."""


class ResolutionError(NesskitError):
    """A numerical precondition failed (grid too coarse, etc.)."""


class WindowError(NesskitError):
    """A finite-box validity window was exceeded."""
