"""Exception types shared across the package."""


class BoraError(Exception):
    """Base class for all errors raised by this package."""


# -- dashboard config ---------------------------------------------------------

class SpecSyntaxError(BoraError):
    """Malformed dashboard document; carries line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(BoraError):
    """One or more dashboard invariants do not hold."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class UnknownWidgetError(BoraError):
    """Patch refers to a widget id the dashboard does not contain."""


class IllegalPatchError(BoraError):
    """Patch is structurally invalid for its target (wrong op/kind pairing)."""


# -- ingestion ----------------------------------------------------------------

class DuplicateProtocolError(BoraError):
    """A parser is already registered under that protocol name."""


class UnknownProtocolError(BoraError):
    """No parser registered under that protocol name."""


class TransportError(BoraError):
    """Upstream connection failed or timed out."""


class FormatError(BoraError):
    """Wire payload could not be parsed; carries the offending row when known."""

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


# -- video pipeline -----------------------------------------------------------

class PatternOutOfBoundsError(BoraError):
    """Orbit plus disc radius would leave the frame."""


class CorruptFrameError(BoraError):
    """Encoded frame failed magic/length/payload validation."""


class ContiguityError(BoraError):
    """Frame sequence numbers are not contiguous."""


class NonMonotonicSegmentError(BoraError):
    """Segment index is not newest + 1."""


class UnknownSegmentError(BoraError):
    """Segment index was never published on this stream."""


class SegmentGoneError(BoraError):
    """Segment existed but has wrapped out of the playlist retention window."""


class HandshakeTimeoutError(BoraError):
    """Direct-transport offer went unanswered within the deadline."""


class SessionUnknownError(BoraError):
    """Direct-transport data channel names a session that was never offered."""


# -- control ------------------------------------------------------------------

class UnknownDeviceError(BoraError):
    """Device parameter id is not registered."""


class ValueOutOfRangeError(BoraError):
    """Device parameter value violates the configured min/max."""


class UnknownStreamError(BoraError):
    """Stream id is not configured on this server."""


class EmptyRangeError(BoraError):
    """Recording range has from_ts >= to_ts."""


# -- bench --------------------------------------------------------------------

class TransportFailure(BoraError):
    """A benchmark transport run failed; other transports proceed."""
