"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes, so each class carries the
code it should produce.
"""


class SurgeCycleError(Exception):
    exit_code = 4


class DomainError(SurgeCycleError, ValueError):
    """Argument outside the mathematical domain of an operation."""

    exit_code = 2


class ConfigError(SurgeCycleError, ValueError):
    exit_code = 2


class InfeasibleMarketError(DomainError):
    """No steady state exists for the given market parameters."""


class NotSteadyStateError(DomainError):
    pass


class NoValidFloorError(DomainError):
    pass


class NotApplicableError(DomainError):
    """A result was requested outside the hypotheses it is proven under."""


class HypothesisError(DomainError):
    pass


class IntegrationError(SurgeCycleError, ArithmeticError):
    """ODE state became non-finite."""


class BracketError(SurgeCycleError, ArithmeticError):
    """Root-finding bracket has no sign change."""


class ExtrapolationError(SurgeCycleError, ValueError):
    """Policy queried at a price outside the tabulated boundary curves."""


class CycleError(SurgeCycleError):
    exit_code = 3


class InfeasibleCycleError(CycleError):
    """Online driver count hits zero during the price-decrease phase."""


class NoClearingCycleError(CycleError):
    pass


class ThresholdsDontClearError(CycleError):
    pass


class UnderdeterminedCycleError(CycleError):
    pass


class NoPeriodicSolutionError(SurgeCycleError, ArithmeticError):
    pass


class CounterexampleError(SurgeCycleError):
    """A threshold pair clears the market despite the price floor."""

    exit_code = 3

    def __init__(self, message, pair=None, residual=None):
        super().__init__(message)
        self.pair = pair
        self.residual = residual
