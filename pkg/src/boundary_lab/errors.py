"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for all package errors."""


class NestedCylinders(LabError):
    """One cylinder contains the other, so the Gromov product is not constant."""


class FullCancellation(LabError):
    """The group element cancels the whole cylinder prefix; refine first."""


class DepthTooShallow(LabError):
    """The cylinder is too coarse for the derivative to be constant on it."""


class ContainsBasepoint(LabError):
    """A cylinder contains the marked boundary point."""


class ParamError(LabError):
    """Parameters violate a precondition such as sp < D."""


class TailDivergence(LabError):
    """A geometric tail series does not converge for these parameters."""


class NonzeroNearBasepoint(LabError):
    """The function must vanish on the tail cylinder around the basepoint."""


class SingularMatrix(LabError):
    pass


class ChartOverflow(LabError):
    """The translated chart cannot be represented at the requested truncation."""


class DegenerateGram(LabError):
    """The domain Gram matrix vanishes on a vector that the operator does not kill."""


class SupportTouchesTail(LabError):
    pass


class InvariantViolation(LabError):
    """An identity that must hold exactly failed beyond tolerance."""


class ConfigError(LabError):
    pass
