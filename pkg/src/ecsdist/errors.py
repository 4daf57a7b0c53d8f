"""Exception types raised by the package."""


class EcsError(Exception):
    """Base class for all package errors."""


class DimensionError(EcsError, ValueError):
    """Mode counts or matrix shapes do not line up."""


class DomainError(EcsError, ValueError):
    """A parameter lies outside its physical range."""


class SingularityError(EcsError, ValueError):
    """A normalization constant is undefined (the state is the zero vector)."""


class DegenerateStateError(EcsError, ValueError):
    """A state or herald outcome has zero norm / zero probability."""


class TruncationError(EcsError, ValueError):
    """A Fock cutoff is too small for the requested tail bound."""
