"""Exception hierarchy shared by every simulator module."""


class QRoboNetError(Exception):
    """Base class for all simulator errors."""


class ConsumedPhoton(QRoboNetError):
    """A photon that was absorbed or detected was used again."""


AlreadyAbsorbed = ConsumedPhoton


class InvalidAmplitude(QRoboNetError, ValueError):
    pass


class NonPositiveWavelength(QRoboNetError, ValueError):
    pass


class InvalidState(QRoboNetError, ValueError):
    pass


class UnsortedInput(QRoboNetError, ValueError):
    pass


class ChannelClosed(QRoboNetError):
    pass


class TranscriptLengthMismatch(QRoboNetError, ValueError):
    pass


class EmptyKey(QRoboNetError):
    pass


class UnmappedBit(QRoboNetError, KeyError):
    pass


class StaleCoincidence(QRoboNetError):
    """The coincidence was already dispatched as a trigger."""


class ParseError(QRoboNetError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ValidationError(QRoboNetError, ValueError):
    """Scenario content violates an invariant; ``field`` names the offending key."""

    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)
