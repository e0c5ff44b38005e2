"""
Exception hierarchy for the toolkit.

Input problems raise `PreconditionError`; failures that happen while computing
(integrator breakdown, a trajectory leaving the positive regime, a flow collapsing)
raise subclasses of `NumericalError`. The command line maps the two families to
different exit codes.
"""


class CsfError(Exception):
    """Base class of all toolkit errors."""


class PreconditionError(CsfError, ValueError):
    """An operation was called with inputs outside its contract."""


class NumericalError(CsfError):
    """A computation failed after its inputs were accepted."""


class IntegrationError(NumericalError):
    """The ODE integrator could not continue; carries the last good time and state."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class StepSizeUnderflowError(IntegrationError):
    """The adaptive step size fell below the floating point spacing."""


class NonFiniteError(IntegrationError):
    """The right-hand side produced NaN or infinite values."""


class PositivityError(NumericalError):
    """alpha = <gamma, gamma> reached zero or below, leaving the polar reduction."""

    def __init__(self, message, t=None, alpha=None):
        super().__init__(message)
        self.t = t
        self.alpha = alpha


class DomainError(NumericalError):
    """A quantity was requested outside the range where it is defined."""


class ReconstructionDomainError(DomainError):
    """1 - u'^2 became negative, so theta' is undefined."""

    def __init__(self, message, t=None, value=None):
        super().__init__(message)
        self.t = t
        self.value = value


class FlowError(NumericalError):
    """The polygonal flow failed; carries the last recorded polygon."""

    def __init__(self, message, last_curve=None, t=None):
        super().__init__(message)
        self.last_curve = last_curve
        self.t = t
