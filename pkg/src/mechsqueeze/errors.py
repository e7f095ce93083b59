"""Exception types shared across the package."""


class MechSqueezeError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(MechSqueezeError, ValueError):
    """A physical or dimensionless parameter is out of its valid domain."""


class UnstableFeedbackError(InvalidParameterError):
    """Feedback gain K <= -Omega0^2 would make the effective spring unstable."""


class UnitsError(MechSqueezeError, TypeError):
    """Arithmetic attempted between spectra carrying incompatible units."""


class InfiniteImprecisionError(InvalidParameterError):
    """eta*C = 0 leaves the record with no information (infinite imprecision)."""


class MarginalSpectrumError(MechSqueezeError):
    """Spectrum has a zero on the real axis; no strict spectral factor exists."""


class NonPhysicalSpectrumError(MechSqueezeError):
    """A constructed spectrum fails its positivity check."""


class RepeatedPolesError(MechSqueezeError):
    """Partial fractions with repeated poles are not supported."""


class DegenerateFilterError(MechSqueezeError):
    """Shared denominator of the filter coefficients vanished."""


class UnphysicalStateError(MechSqueezeError):
    """Covariance violates the normalized Heisenberg bound beyond tolerance."""


class InconsistencyError(MechSqueezeError):
    """Internal consistency check failed (signals an implementation bug)."""


class AccuracyError(MechSqueezeError):
    """Numerical integration could not certify the requested accuracy."""


class NoCrossingError(MechSqueezeError):
    """A bracketed root search found no sign change."""


class WeakMeasurementError(MechSqueezeError):
    """Operation refused in the weak-measurement regime Omega_meas <= sqrt(Omega0*Gamma)."""


class ScenarioError(InvalidParameterError):
    """Scenario file failed schema validation."""
