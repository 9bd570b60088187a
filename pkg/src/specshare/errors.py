"""Exception hierarchy shared by all modules."""


class SimError(Exception):
    """Base class for every error raised by the simulator."""


class DomainError(SimError, ValueError):
    """An argument lies outside the domain of a function."""


class CapabilityError(SimError):
    """The request is valid but exceeds what the implementation supports."""


class AllocationConflict(SimError):
    """A resource block is already allocated."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"block {index} is already allocated")


class ReleaseError(SimError):
    """Attempt to release a block that is not allocated."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"block {index} is not allocated")


class NoCoverageError(SimError):
    """An orbit never enters the region of interest."""


class ClusterError(SimError):
    """Cluster event violates its precondition."""


class MarketError(SimError):
    """Rejected order or invalid settlement."""


class ScenarioError(SimError):
    """Malformed or out-of-range scenario file."""
