"""Exception types shared across the package."""


class SaomError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SaomError, ValueError):
    """A model specification or configuration that cannot be resolved."""


class IngestionError(SaomError, ValueError):
    """Input data that fails to parse or violates a data invariant.

    ``path`` and ``line`` locate the offending input when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class UndefinedNormError(SaomError, ValueError):
    """The social norm -theta3 / (2 theta2) is undefined because theta2 is ~0."""


class NonUnimodalError(SaomError, ValueError):
    """theta1 + theta2 >= 0, so the selection function has no interior maximum."""


class DegenerateWeightsError(SaomError, ValueError):
    """theta1 + theta2 == 0, so the attraction weights are undefined."""


class SingularDerivativeError(SaomError, ValueError):
    """The estimated derivative matrix of the moment function is singular."""

    def __init__(self, message, statistics=()):
        self.statistics = tuple(statistics)
        super().__init__(message)


class DegenerateTestError(SaomError, ValueError):
    """A test statistic has zero (or negative) variance."""
