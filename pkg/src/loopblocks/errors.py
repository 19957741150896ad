"""Exception hierarchy shared by every layer of the package."""


class LoopBlocksError(Exception):
    """Base class for all errors raised by loopblocks."""


class VariableMismatch(LoopBlocksError):
    pass


class RingMismatch(LoopBlocksError):
    pass


class ExponentMismatch(LoopBlocksError):
    """Two series whose exponent ladders cannot be aligned."""


class NegativeLeadingExponent(LoopBlocksError):
    pass


class ZeroLeadingCoefficient(LoopBlocksError):
    pass


class RankDeficient(LoopBlocksError):
    pass


class ValidationFailed(LoopBlocksError):
    pass


class PoleAtNonpositiveInteger(LoopBlocksError):
    pass


class ParameterPole(LoopBlocksError):
    pass


class IntegerExponentGap(LoopBlocksError):
    pass


class ReversionFailure(LoopBlocksError):
    pass


class NearPole(LoopBlocksError):
    def __init__(self, m, n, distance):
        self.m, self.n, self.distance = m, n, distance
        super().__init__(f"near pole Delta_({m},{n}): distance {distance}")


class SingularGram(LoopBlocksError):
    def __init__(self, level):
        self.level = level
        super().__init__(f"Gram matrix singular at level {level}")


class SlowConvergence(LoopBlocksError):
    pass


class ExtrapolationUnstable(LoopBlocksError):
    pass


class ResidualTooLarge(LoopBlocksError):
    pass


class CheckFailed(LoopBlocksError):
    """A verification assertion failed; carries the equation it checks."""

    def __init__(self, equation, message):
        self.equation = equation
        super().__init__(f"[{equation}] {message}")
