"""Exception hierarchy. Every error raised on bad input derives from SLGeoError."""


class SLGeoError(ValueError):
    """Base class for all library errors."""


class DimensionError(SLGeoError):
    """Ambient or form dimension outside the supported range."""


class RankDeficiencyError(SLGeoError):
    """Tangent frame vectors are (numerically) linearly dependent."""


class InvalidVolumeError(SLGeoError):
    """A volume-form value that must be positive was not."""


class DomainError(SLGeoError):
    """Argument outside the domain of a parametrization or solver."""


class OffQuadricError(DomainError):
    """Point does not satisfy the quadric constraint."""


class DegeneracyError(SLGeoError):
    """Degenerate geometric input (dependent vectors, collapsed pushforward, identical fields)."""


class EmptySampleError(SLGeoError):
    """No sample points available where some were required."""


class ConvergenceError(SLGeoError):
    """Iterative solver failed to converge."""

    def __init__(self, msg, residual=None, iterations=None):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


class BlowUpError(SLGeoError):
    """Time integration produced non-finite values."""

    def __init__(self, msg, last_state=None):
        super().__init__(msg)
        self.last_state = last_state


class PathSingularityError(SLGeoError):
    """A fiber path passes through a singular (a = 0) fiber."""


class GeometryError(SLGeoError):
    """Invalid lattice or mesh."""


class NormalizationError(SLGeoError):
    """Function with zero norm supplied where normalization is required."""


class InconsistencyError(SLGeoError):
    """Computed index contradicts a proven lower bound."""


class OutOfRangeError(SLGeoError):
    """Parameter outside the range where a formula applies."""
