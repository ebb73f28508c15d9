"""Exception types raised across the package."""


class GRWError(Exception):
    """Base class for all package errors."""


class WarpingDomainError(GRWError, ValueError):
    """A time coordinate fell outside the interval ``[a, b)``."""


class InvalidWarpingError(GRWError, ValueError):
    """The warping factor is not strictly positive where it was evaluated."""


class SpacelikeViolation(GRWError):
    """The graph failed the spacelike guard ``v**2 > eps_v``.

    Attributes
    ----------
    worst_node : int
        Flat (row-major) index of the node with the smallest ``v**2``.
    min_v2 : float
        The offending value.
    """

    def __init__(self, worst_node, min_v2, eps_v):
        self.worst_node = int(worst_node)
        self.min_v2 = float(min_v2)
        self.eps_v = float(eps_v)
        super().__init__(
            f"spacelike guard violated: v^2 = {self.min_v2:.3e} <= {self.eps_v:.1e} "
            f"at node {self.worst_node}"
        )


class ConfigError(GRWError, ValueError):
    """Invalid or unknown configuration key/value."""
