"""Exception types raised across the package."""


class ValidationError(ValueError):
    """Invalid input: bad parameters, bad graph, bad configuration."""


class GraphParseError(ValidationError):
    def __init__(self, message, lineno):
        self.lineno = lineno
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)


class StateSpaceTooLarge(ValidationError):
    pass


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    ``last`` holds the final iterate (an estimate, not a result).
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last
