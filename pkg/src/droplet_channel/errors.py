"""Exception hierarchy shared by all modules."""


class ChannelError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(ChannelError, ValueError):
    """A physical or numerical argument is outside its admissible range."""


class ConfigError(ChannelError):
    """A configuration document could not be parsed.

    ``line`` and ``field`` are filled in when the parser can locate the problem.
    """

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ValidationError(InvalidParameterError):
    """A parsed configuration violates an invariant; ``field`` names the culprit."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalFailure(ChannelError, ArithmeticError):
    """An iterative solver did not converge.

    ``context`` carries whatever state is useful to reproduce the failure.
    """

    def __init__(self, message, **context):
        self.context = context
        if context:
            detail = ", ".join(f"{k}={v!r}" for k, v in context.items())
            message = f"{message} [{detail}]"
        super().__init__(message)


class OutOfRegimeError(InvalidParameterError):
    """Reynolds number above the largest tabulated drag regime."""


class SingularGeometryError(InvalidParameterError):
    """The cloud has no spatial extent yet (s == 0)."""


class InvalidStepError(InvalidParameterError):
    """A trajectory update would move the cloud backwards along its path."""


class DegenerateDistributionError(ChannelError):
    """A zero-variance Gaussian was evaluated exactly at its mean."""


class EnsembleError(ChannelError):
    """Too many runs of an ensemble failed."""
