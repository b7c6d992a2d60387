"""Exception hierarchy shared by every module."""


class NvCorrError(Exception):
    """Base class for all package errors."""


class DomainError(NvCorrError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedModeError(NvCorrError):
    """A closed form was requested outside its validity (e.g. off resonance)."""


class SingularDenominatorError(UnsupportedModeError):
    """A closed form hits a removable singularity; use quadrature instead."""


class ConditioningError(NvCorrError):
    """A least-squares design is too ill-conditioned to trust."""


class ConfigError(NvCorrError):
    """Invalid experiment configuration.

    ``field`` is the dotted path of the offending entry and ``line`` the
    1-based line in the source document, when known.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
