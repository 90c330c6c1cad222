"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: ValidationError -> 2,
MissingInputError -> 3, anything else -> 4.
"""


class ParlalignError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ParlalignError):
    """A record, file, or config value violates its schema or contract."""


class MissingInputError(ParlalignError):
    """A required input file or config entry does not exist."""


class DocumentParseError(ValidationError):
    """Markup could not be parsed; carries the byte offset of the failure."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset
