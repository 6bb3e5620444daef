"""Exception hierarchy shared by the solver, mechanisms and CLI."""


class AuctionError(Exception):
    """Base class for every error raised by this package."""


class DomainError(AuctionError, ValueError):
    """A query point lies outside the support of a distribution."""


class SingularityError(AuctionError, ValueError):
    """The conditional density vanishes, so the virtual cost is undefined."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class InfeasibleError(AuctionError):
    """Reported capacities (or bundles) cannot cover the demand."""


class RegularityError(AuctionError):
    """A virtual cost function failed the lattice monotonicity check."""

    def __init__(self, message, seller=None, point=None):
        super().__init__(message)
        self.seller = seller
        self.point = point


class MonotonicityError(AuctionError):
    """An allocation curve increased with the reported cost."""

    def __init__(self, message, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class ConsistencyError(AuctionError):
    """The winning quantity disagrees with the allocation curve at the bid."""


class IntegrabilityError(AuctionError):
    """Two integration paths for an XOR payment disagree."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class SolverError(AuctionError, RuntimeError):
    """The simplex iteration cap tripped or the problem was unbounded."""
