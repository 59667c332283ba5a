"""Exception types shared across the package."""


class FiberAlignError(Exception):
    """Base class for all fiberalign errors."""


class DomainError(FiberAlignError, ValueError):
    """An argument violates an operation's precondition or a type invariant."""


class ParseError(FiberAlignError, ValueError):
    """A file could not be parsed; carries the path and 1-based line number."""

    def __init__(self, message: str, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        super().__init__(prefix + message)


class OptimizationError(FiberAlignError, RuntimeError):
    """Optimization produced a non-finite loss; carries the failing step."""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} (step {step})")
