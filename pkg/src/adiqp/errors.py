"""Exception hierarchy shared by the library and the command line."""


class AdiqpError(Exception):
    """Base class. ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class InputShapeError(AdiqpError, ValueError):
    exit_code = 2


class ArgumentError(AdiqpError, ValueError):
    exit_code = 2


class ResourceLimitError(AdiqpError):
    exit_code = 3


class DegeneratePostselectionError(AdiqpError):
    """The postselected branch has zero probability."""


class UnsupportedCircuitError(AdiqpError):
    """The circuit is outside the class an algorithm handles."""


class ConsistencyError(AdiqpError):
    """Internal data disagree with each other (corrupted IR or trace)."""
