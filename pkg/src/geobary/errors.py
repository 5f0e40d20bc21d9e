"""Exception hierarchy shared by all geobary modules."""


class GeobaryError(Exception):
    """Base class for all library errors."""


class SpaceMismatch(GeobaryError):
    """Operands live in different spaces."""


class BaseMismatch(GeobaryError):
    """Tangent vectors are anchored at different base points."""


class NonUniqueGeodesic(GeobaryError):
    """Endpoints admit several geodesics and no selection rule is configured."""


class CutLocusAmbiguity(GeobaryError):
    """Log map requested at a cut-locus point without a selection rule."""


class PerimeterTooLarge(GeobaryError):
    """Triangle perimeter exceeds the diameter bound of the model surface."""


class DegenerateTriangle(GeobaryError):
    """Comparison angle requested with coincident vertices."""


class UnsupportedTarget(GeobaryError):
    """The space has no sampler or no check for the requested curvature sign."""


class UnsupportedOperation(GeobaryError):
    """The space does not implement the requested geometric primitive."""


class NonSPD(GeobaryError):
    """A covariance block failed the symmetric-positive-definite floor."""


class GridMismatch(GeobaryError):
    """Quantile grids or atom grids are incompatible."""


class TooLargeForExact(GeobaryError):
    """Instance exceeds the exact transport solver cap."""


class IncompatibleSpace(GeobaryError):
    """Functional evaluated on points of an unsupported space."""


class NoConvergence(GeobaryError):
    """Iterative solver hit its cap; carries the final residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NonSPDIterate(NonSPD):
    """Fixed-point iterate fell below the spectral floor."""


class InvalidBounds(GeobaryError):
    """Density or Lipschitz bounds violate their preconditions."""


class UnknownPotential(GeobaryError):
    """Interaction potential id is not registered."""


class DegenerateProbes(GeobaryError):
    """Too few usable probes for a variance-inequality regression."""


class NotPCSpace(GeobaryError):
    """Operation requires a space of non-negative curvature."""


class EmptySet(GeobaryError):
    """Covering number of an empty point set."""


class InvalidInputs(GeobaryError):
    """Rate-bound inputs violate their positivity/range invariants."""


class DegenerateInput(GeobaryError):
    """Not enough positive data points for a log-log regression."""


class PopulationSolveFailed(GeobaryError):
    """Rate experiment lacks a certified population minimizer."""
