"""Exception classes shared across the pipeline.

Each class carries the process exit code the command-line tool uses when
the error escapes a subcommand.
"""


class EngineError(Exception):
    kind = "error"
    exit_code = 1


class InputError(EngineError, ValueError):
    """Malformed or inconsistent caller input (lengths, empty sets, ...)."""

    kind = "input"
    exit_code = 3


class DomainError(InputError):
    """A value outside the mathematical domain of an operation."""


class RangeError(InputError):
    """A control value outside the fixed codec boundaries."""


class FormatError(EngineError, ValueError):
    """A file or buffer that does not follow the expected layout."""

    kind = "format"
    exit_code = 4


class ParameterError(EngineError, ValueError):
    """Synthesis or analysis parameters violating their invariants."""

    kind = "parameter"
    exit_code = 5


class StorageError(EngineError, OSError):
    """Reading or writing a file failed at the OS level."""

    kind = "io"
    exit_code = 6
