"""Conditional squeezing of a measured, feedback-shifted mechanical oscillator.

Continuous position measurement plus real-gain feedback (spring shifting)
prepares conditional Gaussian states of a mechanical mode.  This package
computes the optimal causal estimation filters, the conditional covariance
matrix (closed form and an independent quadrature oracle), squeezing
criteria and thresholds, and degradation bounds from a background mode,
with a scenario-driven command line for parameter sweeps.
"""

__version__ = "0.1.0"

from .conditional import (
    CovarianceMatrix,
    QuadratureResult,
    covariance_closed,
    covariance_high_q,
    covariance_nonrwa_limit,
    covariance_numeric,
    covariance_rwa_limit,
    optimal_quadrature,
    purity,
)
from .criteria import (
    ActuationReport,
    RegimeReport,
    ThresholdResult,
    actuation_feasible,
    classify,
    momentum_threshold,
    photons_to_null_spring,
    position_threshold,
)
from .multimode import (
    SecondMode,
    VarianceBounds,
    crossing_frequency,
    error_spectrum_noncausal,
    min_feedback_for_squeezing,
    optimal_measurement,
    variance_bounds,
)
from .params import (
    DimensionlessParams,
    FeedbackSetting,
    MeasurementParams,
    OscillatorParams,
    derive_dimensionless,
    measurement_bandwidth,
    shifted_frequency,
    thermal_occupation,
)
from .scenario import Scenario, load_scenario
from .spectra import (
    RationalSpectrum,
    Susceptibility,
    displacement_psd,
    force_psd_total,
    imprecision_psd,
    measured_psd,
    second_mode_psd,
)
from .wiener import (
    SpectralFactor,
    WienerFilter,
    causal_part,
    filter_closed_form,
    filter_numeric,
    spectral_factorize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
