"""Exception types shared across the laboratory."""


class RenormLabError(Exception):
    """Base class for all package-specific failures."""


class DivergentNormError(RenormLabError):
    """A weighted-space integral diverges for the given exponents."""


class CrossCheckFailure(RenormLabError):
    """Fast-path result disagrees with the direct quadrature at probe nodes."""


class ConvergenceConditionError(RenormLabError):
    """An envelope-bound formula was requested outside its convergence region."""


class OscBudgetError(RenormLabError):
    """An oscillatory quadrature would exceed the configured panel budget."""


class BlowupError(RenormLabError):
    """Iteration or evolution norms exceeded the configured cap.

    Carries the states accepted before the cap was hit in ``states`` for
    honest reporting (empty when raised outside time stepping).
    """

    def __init__(self, message: str, states=None):
        super().__init__(message)
        self.states = states if states is not None else []


class StepRejectedError(RenormLabError):
    """Adaptive stepping could not meet the local tolerance.

    Carries the states accepted so far in ``states`` for honest reporting.
    """

    def __init__(self, message: str, states=None):
        super().__init__(message)
        self.states = states if states is not None else []


class InvalidInitError(RenormLabError):
    """A solve was started from a profile violating its membership precondition."""
