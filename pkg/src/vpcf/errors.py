"""Exception hierarchy for the vpcf package.

Everything raised on purpose derives from :class:`VpcfError` so callers can
catch numerical trouble separately from programming errors.
"""


class VpcfError(Exception):
    """Base class for all package errors."""


# --- geometry -------------------------------------------------------------

class TooFewVertices(VpcfError):
    """Curve has fewer than the minimum number of vertices (16)."""


class DegenerateEdge(VpcfError):
    """Two consecutive vertices coincide (zero-length edge)."""


class ZeroVolume(VpcfError):
    """Signed enclosed area is too small for a volume-normalised quantity."""


# --- flow engine ----------------------------------------------------------

class StepRejected(VpcfError):
    """A single step failed (edge collapse or multiplier solve divergence)."""


class NoProgress(VpcfError):
    """Adaptive dt halving underflowed below 1e-14."""


class IndexOutOfRange(VpcfError):
    """Residual evaluation needs a valid snapshot on each side."""


# --- diagnostics ----------------------------------------------------------

class QueryOutOfRange(VpcfError):
    """Density query times fall outside the recorded history."""


class BetaTooLarge(VpcfError):
    """Clearing-out beta does not satisfy beta < beta0."""


class PointNotReached(VpcfError):
    """Clearing-out center fails the density >= 1 - 1e-2 reachability test."""


class Inconclusive(VpcfError):
    """Tail of the isoperimetric ratio settles in neither band."""


# --- blowup ---------------------------------------------------------------

class EmptyWindow(VpcfError):
    """No snapshot lies in the requested rescaling window."""


class NoSingularity(VpcfError):
    """History did not terminate at a declared singular time."""


class NonNegativeTau(VpcfError):
    """Shrinker residual requires a negative rescaled time."""


class NormalizationFailed(VpcfError):
    """Rescaled window violates max kappa^2 * |tau| <= 1."""


# --- surfaces of revolution -----------------------------------------------

class AxisSingularity(VpcfError):
    """Profile touches the rotation axis with a non-integrable integrand."""


class UnsupportedSegment(VpcfError):
    """No closed form available for this profile segment."""


class ParameterDomain(VpcfError):
    """Assembly parameters outside the admissible domain."""


class NotBalanced(VpcfError):
    """Total mean-curvature integral is not zero to tolerance."""


# --- cli ------------------------------------------------------------------

class BadParameters(VpcfError):
    """Scenario parameters are invalid."""


class UnknownSuite(VpcfError):
    """Verification suite name not recognised."""
