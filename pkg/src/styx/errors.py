"""Shared exception types, mapped to CLI exit codes in styx.cli."""


class StyxError(Exception):
    """Base class for all toolkit errors."""


class InputError(StyxError):
    """Bad input data, file, or configuration. CLI exit code 2."""


class TransportError(StyxError):
    """External-service failure during live generation. CLI exit code 3."""
