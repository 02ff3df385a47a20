"""Error hierarchy shared by the simulator library and its commands.

Every error carries the process exit code the management commands report.
"""


class SmdmaError(Exception):
    """Base class for simulator failures."""
    exit_code = 1


class UsageError(SmdmaError):
    """Bad arguments or an operation called out of order."""
    exit_code = 2


class ConfigError(SmdmaError):
    """Invalid or unknown configuration value."""
    exit_code = 3


class DataError(SmdmaError):
    """Malformed input data (images, CSV, ranking files, frames)."""
    exit_code = 4


class ShapeError(DataError, ValueError):
    """Tensor length or shape mismatch."""

    def __init__(self, message, layer_index=None, expected=None, actual=None):
        if layer_index is not None:
            message = f'layer {layer_index}: {message} (expected {expected}, got {actual})'
        super().__init__(message)
        self.layer_index = layer_index
        self.expected = expected
        self.actual = actual


class PnmParseError(DataError):
    """PGM/PPM parse failure at a byte offset."""

    def __init__(self, message, offset):
        super().__init__(f'{message} at byte {offset}')
        self.offset = offset


class FrameError(DataError):
    """Corrupted or inconsistent frame header."""


class NumericError(SmdmaError):
    """Non-finite values, divergence or non-convergence."""
    exit_code = 5
