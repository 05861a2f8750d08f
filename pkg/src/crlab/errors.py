"""Exception types raised across crlab."""


class CRLabError(Exception):
    pass


class DomainError(CRLabError, ValueError):
    """Input outside the domain of an operation (box, set membership, ...)."""


class NumericError(CRLabError, ArithmeticError):
    """A numerical procedure failed to converge."""

    def __init__(self, msg, where=None):
        super().__init__(msg)
        self.where = where


class UnsupportedKindError(CRLabError, TypeError):
    pass


class MomentConditionViolated(CRLabError):
    """Moment table has non-negligible entries the operator requires to vanish."""

    def __init__(self, msg, beta=None, gamma=None, magnitude=None):
        super().__init__(msg)
        self.beta = beta
        self.gamma = gamma
        self.magnitude = magnitude


class ConditionStarViolated(CRLabError):
    """Hausdorff continuity of the fibers fails at some level."""

    def __init__(self, msg, level=None, distance=None):
        super().__init__(msg)
        self.level = level
        self.distance = distance


class InfeasiblePointError(DomainError):
    pass
