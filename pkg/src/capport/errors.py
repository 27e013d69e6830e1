"""Exception hierarchy for the engine.

Every failure mode callers are expected to handle gets its own class so that
the CLI can map them onto exit codes without string matching.
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(EngineError):
    """A market or config parameter is outside its domain."""


class ConstraintNotBinding(InvalidParameter):
    """pi_max >= pi_star: the cap never binds, the model does not apply."""


class DegenerateConstraint(InvalidParameter):
    """pi_max too close to 1; boundary ratios u, l blow up there."""


class SingularRatio(EngineError):
    """(1-lambda)*pi_max = 1: the lower stock-cash ratio is undefined."""


class SignError(EngineError):
    """u/l(lambda) <= 0: lambda is outside the admissible range."""


class BranchUndefined(EngineError):
    """b/a outside the domain of the selected inverse function."""


class RequiresLimitForm(EngineError):
    """Discriminant within tolerance of zero; the closed forms degenerate."""


class PoleEncountered(EngineError):
    """The tangent-branch argument reaches a pole inside the domain."""


class NoBracket(EngineError):
    """No sign change found for the terminal condition; spread too large."""


class ToleranceNotReached(EngineError):
    """Root refinement exhausted its iteration budget."""


class NegativeRadicand(EngineError):
    """Leading-order loss radicand < 0; parameters are off the iso-utility curve."""


class NoSolution(EngineError):
    """A scalar matching problem has no root in its bracket."""


class NonpositiveWealth(EngineError):
    """Initial endowment has nonpositive liquidation value."""


class SpreadViolation(EngineError):
    """Shadow price left the bid-ask spread beyond tolerance."""


class NumericalBlowup(EngineError):
    """Simulation state became non-finite."""
