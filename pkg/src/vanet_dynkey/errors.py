"""Exception hierarchy shared by every module."""


class VanetError(Exception):
    """Base class for all errors raised by this package."""


class InvalidIdentity(VanetError, ValueError):
    pass


class CryptoError(VanetError):
    """A seal could not be opened."""


class AuthenticationFailure(CryptoError):
    """Wrong sender key, wrong shared secret, or tampered ciphertext."""


class ConfidentialityFailure(CryptoError):
    """The sealed blob was addressed to a different recipient key."""


class MalformedMessage(VanetError, ValueError):
    pass


class NoInfrastructure(VanetError):
    """No RSU is within radio range of the vehicle."""


class ArgumentError(VanetError, ValueError):
    pass


class TopologyError(VanetError, KeyError):
    pass


class QueryError(VanetError, ValueError):
    pass


class ParseError(VanetError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SimulationError(VanetError, RuntimeError):
    def __init__(self, message: str, event_id: int | None = None):
        self.event_id = event_id
        super().__init__(message)


class ScriptError(VanetError):
    """An attack script does not match the state of the world."""


class ConfigError(VanetError, ValueError):
    pass


class IoError(VanetError, OSError):
    """Results could not be written."""
