"""Degradation from a background mechanical mode, via white-noise bounds.

A second mechanical resonance at Omega2 > Omega0 adds transduced noise to
the measurement record.  Below Omega2 that noise is flat, and above the
estimation band it is suppressed by the filters, so it acts like extra white
measurement noise.  Its level is bounded between the second mode's spectrum
at zero frequency and at the crossing frequency Omega12 where it intersects
the fundamental's spectrum; folding each bound into an effective detection
efficiency

    eta_eff = eta * S_imp / (S_imp + S2)

(white displacement noise rescales imprecision only; backaction is
untouched) yields lower and upper bounds on the conditional position
variance from the single-mode closed form.  When the second mode stays
below the imprecision floor at Omega12 the choice of white level does not
matter and the two bounds coincide (both evaluated at the S2(0) level).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .conditional import covariance_closed
from .errors import InvalidParameterError, NoCrossingError
from .params import (
    DimensionlessParams,
    FeedbackSetting,
    MeasurementParams,
    OscillatorParams,
    derive_dimensionless,
)
from .search import golden_section_min
from .spectra import scaled_force_level, scaled_imprecision_level

IMPRECISION_DOMINATED = "imprecision-dominated"
SIGNAL_CROSSING = "signal-crossing"


@dataclass(frozen=True)
class SecondMode:
    """Background mode: resonance (rad/s), quality factor, mass (kg), and
    transduction ratio G2/G relative to the fundamental."""

    omega2: float
    q2: float
    mass2: float
    g_ratio: float

    def __post_init__(self) -> None:
        for name in ("omega2", "q2", "mass2"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be positive and finite")
        if not (math.isfinite(self.g_ratio) and self.g_ratio >= 0.0):
            raise InvalidParameterError("g_ratio must be finite and >= 0")


@dataclass(frozen=True)
class VarianceBounds:
    """Bounds on the conditional position variance from the white-noise model."""

    lower: float
    upper: float
    omega12: float | None
    regime_flag: str


class _ScaledSpectra:
    """Scaled-unit (Omega0 = 1, m = m1, hbar = 1) spectra of both modes."""

    def __init__(self, p: DimensionlessParams, osc: OscillatorParams,
                 mode2: SecondMode):
        self.p = p
        self.s_force = scaled_force_level(p)
        self.s_imp = scaled_imprecision_level(p)
        self.k = p.gain
        self.gamma = p.gamma
        self.r2 = p.R * p.R
        self.w2 = mode2.omega2 / osc.omega0
        self.gamma2 = self.w2 / mode2.q2
        self.m2 = mode2.mass2 / osc.mass
        c2 = (p.C * mode2.g_ratio**2 * p.gamma / (self.m2 * self.w2 * self.gamma2))
        n_th2 = p.n_th / self.w2
        n_tot2 = n_th2 + c2 + 0.5
        self.scale2 = (mode2.g_ratio**2 * 2.0 * n_tot2 * self.gamma2 * self.w2
                       / self.m2)

    def fundamental(self, w: float) -> float:
        den = (self.r2 - w * w) ** 2 + self.gamma**2 * w * w
        return (self.s_force + self.k * self.k * self.s_imp) / den

    def second(self, w: float) -> float:
        den = (self.w2 * self.w2 - w * w) ** 2 + self.gamma2**2 * w * w
        return self.scale2 / den


def crossing_frequency(p: DimensionlessParams, osc: OscillatorParams,
                       fb: FeedbackSetting | None, mode2: SecondMode) -> float:
    """Frequency (rad/s) where the two transduced spectra intersect.

    Bracketed between max(Omega, Omega0) and Omega2 and bisected to 1e-12
    relative.

    Raises
    ------
    NoCrossingError
        If the spectra do not change order inside the bracket (degenerate
        mode choice, e.g. an identical second mode).
    """
    if mode2.omega2 <= osc.omega0:
        raise InvalidParameterError("second mode must lie above the fundamental")
    spectra = _ScaledSpectra(p, osc, mode2)
    lo = max(p.R, 1.0) * (1.0 + 1e-12)
    hi = spectra.w2 * (1.0 - 1e-12)

    def f(w: float) -> float:
        return spectra.fundamental(w) - spectra.second(w)

    if not (f(lo) > 0.0 > f(hi)):
        raise NoCrossingError(
            f"no sign change of S_xx - S_xx,2 in ({lo:.6g}, {hi:.6g}) (scaled)"
        )
    w12 = brentq(f, lo, hi, rtol=1e-12, xtol=1e-300)
    return w12 * osc.omega0


@dataclass(frozen=True)
class NoncausalErrorSpectrum:
    """Sampled non-causal estimation error spectrum and its min{} approximation."""

    omegas: np.ndarray
    exact: np.ndarray
    min_approx: np.ndarray
    max_discrepancy: float


def error_spectrum_noncausal(p: DimensionlessParams, osc: OscillatorParams,
                             fb: FeedbackSetting | None,
                             mode2: SecondMode | None,
                             omegas: np.ndarray | None = None
                             ) -> NoncausalErrorSpectrum:
    """S/(1+SNR) error spectrum of non-causal estimation, sampled on a grid.

    SNR(omega) = S_xx/(S_imp + S_xx,2); the returned ``min_approx`` is
    min{S_xx, S_imp + S_xx,2}, which overestimates the exact spectrum by at
    most a factor 2 (worst at SNR = 1).  Frequencies are in rad/s; values in
    scaled displacement-PSD units.
    """
    dummy = mode2 if mode2 is not None else SecondMode(
        omega2=2.0 * osc.omega0, q2=osc.quality_factor, mass2=osc.mass, g_ratio=0.0)
    spectra = _ScaledSpectra(p, osc, dummy)
    if omegas is None:
        omegas = osc.omega0 * np.logspace(-3, 1.5, 2001)
    w = np.asarray(omegas, dtype=float) / osc.omega0
    sxx = np.array([spectra.fundamental(x) for x in w])
    snn = np.array([spectra.s_imp + spectra.second(x) for x in w])
    exact = sxx / (1.0 + sxx / snn)
    approx = np.minimum(sxx, snn)
    return NoncausalErrorSpectrum(
        omegas=np.asarray(omegas, dtype=float),
        exact=exact,
        min_approx=approx,
        max_discrepancy=float(np.max(approx / exact)),
    )


def variance_bounds(p: DimensionlessParams, osc: OscillatorParams,
                    fb: FeedbackSetting | None, mode2: SecondMode) -> VarianceBounds:
    """Lower/upper bounds on the conditional position variance.

    The lower bound folds the second mode's zero-frequency level into
    eta_eff, the upper bound its level at the crossing frequency Omega12.
    In the imprecision-dominated regime (S_xx,2(Omega12) < S_imp) the white
    level is immaterial and the bounds coincide.

    The crossing is evaluated on the intrinsic (feedback-off) fundamental
    spectrum: the white-noise level is a property of what the record
    contains, and this choice keeps the optimal measurement strength
    feedback-independent, as the degradation model requires.  In the
    imprecision-dominated regime the coinciding value uses the (still
    sub-imprecision) crossing level, which keeps the upper-bound curve
    continuous through the regime switch.
    """
    spectra = _ScaledSpectra(p, osc, mode2)
    if mode2.g_ratio == 0.0:
        v = covariance_closed(p).vxx
        return VarianceBounds(lower=v, upper=v, omega12=None,
                              regime_flag=IMPRECISION_DOMINATED)
    p_intrinsic = p.replace(R=1.0)
    try:
        omega12 = crossing_frequency(p_intrinsic, osc, None, mode2)
        s2_cross = spectra.second(omega12 / osc.omega0)
    except NoCrossingError:
        omega12 = None
        s2_cross = None

    def vxx_with_added_white(s2: float) -> float:
        eta_eff = p.eta * spectra.s_imp / (spectra.s_imp + s2)
        return covariance_closed(p.replace(eta=eta_eff)).vxx

    if s2_cross is None:
        v = vxx_with_added_white(spectra.second(0.0))
        return VarianceBounds(lower=v, upper=v, omega12=None,
                              regime_flag=IMPRECISION_DOMINATED)
    if s2_cross < spectra.s_imp:
        v = vxx_with_added_white(s2_cross)
        return VarianceBounds(lower=v, upper=v, omega12=omega12,
                              regime_flag=IMPRECISION_DOMINATED)
    return VarianceBounds(
        lower=vxx_with_added_white(spectra.second(0.0)),
        upper=vxx_with_added_white(s2_cross),
        omega12=omega12,
        regime_flag=SIGNAL_CROSSING,
    )


@dataclass(frozen=True)
class OptimumPoint:
    """Optimal photon number for one bound curve."""

    n_cav: float
    variance: float
    boundary: bool


@dataclass(frozen=True)
class OptimalMeasurement:
    lower: OptimumPoint
    upper: OptimumPoint


def _params_at_photons(osc: OscillatorParams, meas: MeasurementParams,
                       fb: FeedbackSetting, n_cav: float, *,
                       nth_at_shifted: bool = False) -> DimensionlessParams:
    c = meas.cooperativity_at(osc, n_cav)
    return derive_dimensionless(
        osc,
        MeasurementParams(eta=meas.eta, cooperativity=c),
        fb, nth_at_shifted=nth_at_shifted)


def bound_at_photons(osc: OscillatorParams, meas: MeasurementParams,
                     fb: FeedbackSetting, mode2: SecondMode,
                     n_cav: float) -> VarianceBounds:
    """Variance bounds at a given intracavity photon number."""
    p = _params_at_photons(osc, meas, fb, n_cav)
    return variance_bounds(p, osc, fb, mode2)


def optimal_measurement(osc: OscillatorParams, meas: MeasurementParams,
                        fb: FeedbackSetting, mode2: SecondMode, *,
                        log_n_range: tuple[float, float] = (5.0, 12.0)
                        ) -> OptimalMeasurement:
    """Photon number minimizing each bound curve (golden-section on log n).

    A minimum within 1% of either end of the search range is flagged as a
    boundary optimum (monotone curve, e.g. the single-mode limit).
    """
    lo, hi = log_n_range

    def optimize(which: str) -> OptimumPoint:
        def f(log_n: float) -> float:
            b = bound_at_photons(osc, meas, fb, mode2, 10.0 ** log_n)
            return b.lower if which == "lower" else b.upper

        log_opt, v_opt = golden_section_min(f, lo, hi, rtol=1e-10)
        boundary = log_opt < lo + 0.01 * (hi - lo) or log_opt > hi - 0.01 * (hi - lo)
        return OptimumPoint(n_cav=10.0 ** log_opt, variance=v_opt, boundary=boundary)

    return OptimalMeasurement(lower=optimize("lower"), upper=optimize("upper"))


def min_feedback_for_squeezing(osc: OscillatorParams, meas: MeasurementParams,
                               mode2: SecondMode, *,
                               r_range: tuple[float, float] = (1e-3, 1.0),
                               log_n_range: tuple[float, float] = (5.0, 12.0)
                               ) -> float | None:
    """Largest spring-shift ratio R at which the upper bound can squeeze.

    For each R the upper-bound curve is minimized over photon number; the
    achievable variance grows with R, and the returned R is the bisected
    crossing of that optimum through 1.  None if even the softest allowed
    R cannot squeeze; r_range[1] if no softening is needed.
    """
    def best_upper(ratio: float) -> float:
        fb = FeedbackSetting.from_ratio(ratio)
        return optimal_measurement(osc, meas, fb, mode2,
                                   log_n_range=log_n_range).upper.variance

    lo, hi = r_range
    if best_upper(lo) > 1.0:
        return None
    if best_upper(hi) < 1.0:
        return hi
    log_r = brentq(lambda t: best_upper(10.0 ** t) - 1.0,
                   math.log10(lo), math.log10(hi), rtol=1e-4)
    return 10.0 ** log_r
