"""Shared exception types, grouped by how the CLI maps them to exit codes."""


class ConfkwsError(Exception):
    """Base class for all package-specific errors."""


class DataError(ConfkwsError):
    """Malformed, inconsistent, or insufficient input data (exit code 3)."""


class TransportError(ConfkwsError):
    """A remote LLM/TTS endpoint failed or returned garbage (exit code 4)."""
