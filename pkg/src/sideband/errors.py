"""Exception taxonomy shared by all modules.

The CLI maps these onto its documented exit codes: ParameterError -> 1,
I/O errors -> 2, FormatError/DecodeError -> 3, InternalCheckError -> 4,
NoOverlapError -> 5.
"""


class SidebandError(Exception):
    """Base class for all package errors."""


class ParameterError(SidebandError, ValueError):
    """An argument violates a documented precondition."""


class FormatError(SidebandError, ValueError):
    """A file or container is malformed; message names the offending field."""

    def __init__(self, field: str, detail: str = ""):
        self.field = field
        msg = f"invalid {field}" + (f": {detail}" if detail else "")
        super().__init__(msg)


class DecodeError(FormatError):
    """A bitstream payload cannot be decoded; carries the byte offset."""

    def __init__(self, detail: str, offset: int):
        self.offset = offset
        super().__init__("payload", f"{detail} (byte offset {offset})")


class RegistryError(ParameterError):
    """An unknown reconstructor id was requested."""


class InternalCheckError(SidebandError):
    """A dual-route consistency check failed; signals an implementation bug."""


class NoOverlapError(SidebandError):
    """Two curves share no quality/rate range to compare over."""
