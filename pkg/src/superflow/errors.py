"""Exception types shared across the package."""


class SuperflowError(Exception):
    """Base class for all errors raised by superflow."""


class ExprSyntaxError(SuperflowError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UndeclaredVariableError(SuperflowError):
    def __init__(self, name, position=None):
        loc = f" (at position {position})" if position is not None else ""
        super().__init__(f"undeclared variable '{name}'{loc}")
        self.name = name


class DomainEvalError(SuperflowError):
    """Numeric evaluation hit a singularity (division by zero, log of zero, ...)."""

    def __init__(self, message, subexpr=None):
        if subexpr is not None:
            message = f"{message} in '{subexpr}'"
        super().__init__(message)
        self.subexpr = subexpr


class ParityError(SuperflowError):
    pass


class DomainMismatchError(SuperflowError):
    pass


class CommutationError(SuperflowError):
    """A family of fields that must super-commute does not."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class FlowDomainExitError(SuperflowError):
    """The body trajectory of a flow left the domain."""

    def __init__(self, time, cause=None):
        super().__init__(f"flow left the domain at t = {time}: {cause}")
        self.time = time
        self.cause = cause


class NotALoopError(SuperflowError):
    def __init__(self, residual):
        super().__init__(
            f"path body does not return to its base point (residual {residual:.3e})"
        )
        self.residual = residual


class ContradictionError(SuperflowError):
    """Verdict input asserts facts that contradict the computed holonomy."""


class ScenarioError(SuperflowError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
