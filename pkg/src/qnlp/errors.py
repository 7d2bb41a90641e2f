"""Shared exception hierarchy.

Every library-specific exception derives from :class:`Error` so callers (and
the command line front end) can distinguish pipeline failures from plain
programming errors.  Configuration problems get their own branch because they
map to a different process exit code.
"""


class Error(Exception):
    """Base class for all pipeline errors."""


class ConfigError(Error):
    """A configuration value is missing, malformed, or inconsistent."""
