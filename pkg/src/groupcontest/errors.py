"""Exception hierarchy shared by the solvers."""


class ContestError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ContestError, ValueError):
    """An argument lies outside the domain of the function."""


class InvalidDistribution(ContestError, ValueError):
    pass


class DegenerateDistribution(ContestError, ValueError):
    pass


class InvalidRegime(ContestError, ValueError):
    """Prize schedule does not match the requested equilibrium regime."""


class ToleranceNotMet(ContestError, ArithmeticError):
    pass


class StiffnessError(ContestError, ArithmeticError):
    pass


class NonMonotone(ContestError, ArithmeticError):
    pass


class RangeError(ContestError, ValueError):
    pass


class NoSignChange(ContestError, ValueError):
    pass


class OdeStartupFailure(ContestError, ArithmeticError):
    pass


class StitchingError(ContestError, ArithmeticError):
    pass


class CertificationFailure(ContestError, AssertionError):
    pass


class ScenarioError(ContestError, ValueError):
    """Malformed or inconsistent scenario file."""
