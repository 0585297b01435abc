"""Exception types raised by the library.

Everything derives from AdsError so callers can catch one base class; the CLI
maps config problems, convergence failures, and invariant violations onto
distinct exit codes.
"""


class AdsError(Exception):
    """Base class for all library errors."""


class InvalidDiskPoint(AdsError):
    """Point does not lie strictly inside the unit disk."""


class NotInChart(AdsError):
    """Point cannot be represented in the requested coordinate chart."""


class NotTimelikeRelated(AdsError):
    """The two lifts are not connected by a timelike geodesic."""


class InvalidFrame(AdsError):
    """Matrix data does not describe a valid isometry or adapted frame."""


class BadLift(AdsError):
    """A sampled null lift is discontinuous (consecutive representatives flip)."""


class NotAHomeomorphism(AdsError):
    """Circle-map samples are not strictly increasing after lifting."""


class DegenerateQuadruple(AdsError):
    """Cross-ratio requested for a quadruple with coincident points."""


class NotSpacelike(AdsError):
    """A graph violates the spacelike gradient bound chi^2 |grad u|^2 < 1."""


class SolveFailed(AdsError):
    """A solve (or a sweep leaf) stopped without meeting its tolerance."""


class NonSmoothEquidistant(AdsError):
    """Equidistant flow hits a focal point: det(cos(rho) E + sin(rho) B) ~ 0."""


class DegenerateNode(AdsError):
    """Local stencil too degenerate to fit second-order data."""


class ProjectionFold(AdsError):
    """Discrete ruling projection folds over (orientation flip on a triangle)."""


class LandslideUndefined(AdsError):
    """Too few nodes carry usable anisotropy to estimate the landslide angle."""


class NotQuasiconformal(AdsError):
    """A Beltrami field reaches modulus one, so no dilatation bound exists."""


class NothingToCheck(AdsError):
    """A validation was requested on an empty node set."""


class ConfigError(AdsError):
    """Malformed or inconsistent run configuration."""
