"""Exception hierarchy shared by all modules."""


class SelfAdjointError(Exception):
    """Base class for numerical failures raised by this package."""


class NonUnitary(SelfAdjointError, ValueError):
    pass


class DimensionMismatch(SelfAdjointError, ValueError):
    pass


class NoGap(SelfAdjointError):
    pass


class GridTooShort(SelfAdjointError, ValueError):
    pass


class NoBoundState(SelfAdjointError):
    pass


class AlphaSingular(SelfAdjointError, ValueError):
    pass


class SolverFailure(SelfAdjointError):
    pass


class BracketTooCoarse(SelfAdjointError):
    pass


class NotAdditive(SelfAdjointError, ValueError):
    pass
