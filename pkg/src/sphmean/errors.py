"""Exception hierarchy; the CLI maps each class to an exit code."""


class SphMeanError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(SphMeanError, ValueError):
    """An argument violates an operation's precondition."""

    exit_code = 2


class ConfigError(SphMeanError, ValueError):
    exit_code = 2


class ParseError(SphMeanError, ValueError):
    """Malformed file content. ``line`` is 1-based when known."""

    exit_code = 2

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line
        self.path = path


class GeometryError(SphMeanError, ValueError):
    """No admissible (center, radius) pairs, or a sampling outside region A."""

    exit_code = 3


class InstabilityError(SphMeanError, ArithmeticError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ReconstructionError(SphMeanError):
    exit_code = 4
