"""Exception hierarchy shared by every module of the package."""


class PanelError(Exception):
    """Base class for all errors raised by regiopanel."""


# data handling

class SchemaError(PanelError):
    pass


class ParseError(PanelError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class DuplicateObservation(PanelError):
    pass


class UnknownVariable(PanelError):
    pass


class NonPositiveValue(PanelError):
    pass


class EmptySubset(PanelError):
    pass


# estimation

class InsufficientObservations(PanelError):
    pass


class DegenerateColumn(PanelError):
    pass


class RankDeficient(PanelError):
    pass


class DegenerateVariance(PanelError):
    pass


class PrereqEntities(PanelError):
    pass


class SpecMismatch(PanelError):
    pass


class SingularSystem(PanelError):
    pass


# diagnostics

class DegenerateResiduals(PanelError):
    pass


class NotComputable(PanelError):
    pass


class DomainError(PanelError, ValueError):
    pass


class ConfigError(PanelError):
    pass


class SingletonEntity(UserWarning):
    """An entity contributes a single observation and is absorbed by its dummy."""
