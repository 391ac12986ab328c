"""Exception hierarchy shared by all modules."""


class QFluctError(Exception):
    """Base class for every error raised by qfluct."""


class NonHermitianInput(QFluctError, ValueError):
    pass


class DimensionMismatch(QFluctError, ValueError):
    pass


class LengthMismatch(QFluctError, ValueError):
    pass


class NotNormalized(QFluctError, ValueError):
    pass


class InvalidState(QFluctError, ValueError):
    """Matrix violates the density-matrix invariants."""


class ImpossibleOutcome(QFluctError, ValueError):
    """Outcome density P(f) is below the floor, the update is undefined."""


class NonCommutingState(QFluctError, ValueError):
    """Sampling requires a state that commutes with the measured observable."""


class RegimeViolation(QFluctError, ValueError):
    """A closed form was requested outside the regime where it holds."""


class NumericalError(QFluctError, RuntimeError):
    """Base class for numerical failures (CLI exit code 3)."""


class NoConvergence(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class ConfigError(QFluctError):
    """Base class for configuration failures (CLI exit code 2)."""


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError, ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field, message=None):
        self.field = field
        super().__init__(field if message is None else f"{field}: {message}")
