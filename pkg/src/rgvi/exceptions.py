"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised for malformed numerical input (non-finite entries, bad shapes)."""


class InfeasiblePointError(InvalidInputError):
    """Raised when a point that must lie in ``dom psi`` does not."""


class ConfigError(ValueError):
    """Raised for invalid solver or experiment configuration.

    Parameters
    ----------
    message : str
        Human readable description.
    field : str, optional
        Name of the offending field, reported by the harness.
    line : int, optional
        Line number in a config file, when known.
    """

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.message = message
        self.field = field
        self.line = line

    def __str__(self):
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.field is not None:
            where.append(f"field '{self.field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        return prefix + self.message


class StepFailureError(RuntimeError):
    """An inner solver failed to reach its tolerance."""

    def __init__(self, message, residual=float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3e})")


class CutViolationError(RuntimeError):
    """The essential-step condition <V_psi(T), v - T> > 0 failed."""


class StationaryPointReached(Exception):
    """Signal: the reduced gradient vanished, so the current point solves the problem."""

    def __init__(self, point=None):
        self.point = point
        super().__init__("reduced gradient vanished")


class TheoremViolationError(AssertionError):
    """An online theorem inequality was violated beyond its slack budget."""

    def __init__(self, name, t, slack, budget):
        self.name = name
        self.t = t
        self.slack = slack
        self.budget = budget
        super().__init__(f"{name} violated at t={t}: slack {slack:.3e} > budget {budget:.3e}")
