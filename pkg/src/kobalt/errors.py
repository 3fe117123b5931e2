"""Exception hierarchy shared by all kobalt modules."""


class KobaltError(Exception):
    """Base class for all library errors."""


class SpecValidationError(KobaltError):
    """Malformed user input (JSON specs, configs, bad parameters)."""


class PointOutsideDomain(KobaltError):
    """A point required to be inside the domain is not."""


class ZeroDirection(KobaltError):
    """A direction vector is (numerically) zero."""


class NotOnBoundary(KobaltError):
    """A point required to lie on the boundary does not."""


class DegenerateGradient(KobaltError):
    """Defining-function gradient below the usable floor."""


class DimensionMismatch(KobaltError):
    """Vectors / multi-indices of incompatible lengths."""


class PoleProximity(KobaltError):
    """Evaluation too close to the pole of a rational map."""


class InvalidRadius(KobaltError):
    """Face radius outside the admissible open interval."""


class InvalidPolynomial(KobaltError):
    """Coefficient data rejected by the balanced-polynomial validator."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"invalid weighted polynomial: {report.failures}")


class OutsideDisk(KobaltError):
    """Argument of the disk distance lies outside the unit disk."""


class OutsideHalfplane(KobaltError):
    """Argument of the half-plane distance has non-positive imaginary part."""


class InternalInconsistency(KobaltError):
    """A certified invariant (e.g. lower <= upper) failed; signals a bug."""


class EpsTooLarge(KobaltError):
    """Normal-curve offset pushes the start point out of the domain."""


class TooFewPoints(KobaltError):
    """Not enough points for a four-point computation."""


class SameFace(KobaltError):
    """Two boundary points share a complex tangent where distinct ones are required."""


class EscapeDetected(KobaltError):
    """An iterate left the domain by more than the boundary tolerance."""


class NotVanishing(KobaltError):
    """Function required to vanish at 0 does not."""


class NoConvergence(KobaltError):
    """Residuals of a limit fit fail to decrease across the grid."""


class EmptyIntersection(KobaltError):
    """A set required to meet the test ball misses it."""
