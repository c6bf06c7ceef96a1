"""Exception taxonomy shared across the package."""


class QsatError(Exception):
    """Base class for all package errors."""


class ConfigurationError(QsatError, ValueError):
    """A scenario or component parameter is out of range or inconsistent."""


class IngestionError(QsatError, ValueError):
    """An input file failed schema or range validation."""


class UnknownIdError(QsatError, KeyError):
    """A satellite, station, or weather key is not present."""


class StructuralError(QsatError, ValueError):
    """An optimization problem is dimensionally malformed."""


class ParameterError(QsatError, ValueError):
    """A solver parameter (limit, tolerance) is invalid."""


class SizeLimitError(QsatError, ValueError):
    """An exact method was asked to exceed its guarded instance size."""


class ModeError(QsatError, ValueError):
    """An instance does not satisfy the preconditions of a special-case solver."""


class SimulationError(QsatError, RuntimeError):
    """A run failed mid-flight; carries the slot index where it happened."""

    def __init__(self, slot: int, message: str):
        super().__init__(f"slot {slot}: {message}")
        self.slot = slot
