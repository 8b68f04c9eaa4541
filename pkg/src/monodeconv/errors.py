"""Exception hierarchy. Each family carries the CLI exit code it maps to."""


class MonoDeconvError(Exception):
    exit_code = 1


class ConfigError(MonoDeconvError, ValueError):
    exit_code = 2


class DataError(MonoDeconvError, ValueError):
    exit_code = 3


class EstimationError(MonoDeconvError, RuntimeError):
    exit_code = 4


class InvalidDimensionError(ConfigError):
    pass


class InvalidProbabilityError(ConfigError):
    pass


class DomainError(ConfigError):
    pass


class InvalidBandwidthError(ConfigError):
    pass


class ShapeError(DataError):
    pass


class UnobservedEntryError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class InsufficientTriplesError(EstimationError):
    pass


class DegenerateDenominatorError(EstimationError):
    pass
