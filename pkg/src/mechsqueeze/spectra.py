"""Susceptibilities and double-sided power spectral densities.

All spectra here are even rational functions of omega, stored as polynomials
in x = omega^2 with an overall scale and a units tag.  Two evaluation paths
exist on purpose: direct evaluation through the complex susceptibility and
polynomial evaluation of the rational form; they must agree to 1e-12
relative, which the test suite enforces.

The measured-record PSD includes the feedback-induced cross-correlation
between displacement and imprecision noise.  The record commutes with itself
at all times, so its PSD must be real and even: the cross term enters as
-2 K m Re{chi(omega)} S_imp, and the total simplifies exactly to

    S_meas = (S_F_tot + S_imp m^2 |chi0^{-1}|^2) |chi|^2,

which is the form constructed here (strictly positive on the real axis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InfiniteImprecisionError,
    InvalidParameterError,
    NonPhysicalSpectrumError,
    UnitsError,
)
from .params import HBAR, DimensionlessParams, FeedbackSetting, OscillatorParams


@dataclass(frozen=True)
class Units:
    """SI base-unit exponents (m, kg, s) carried by a spectrum."""

    m: int = 0
    kg: int = 0
    s: int = 0

    def __mul__(self, other: "Units") -> "Units":
        return Units(self.m + other.m, self.kg + other.kg, self.s + other.s)

    def __truediv__(self, other: "Units") -> "Units":
        return Units(self.m - other.m, self.kg - other.kg, self.s - other.s)

    def __str__(self) -> str:
        parts = [f"{sym}^{exp}" for sym, exp in
                 (("m", self.m), ("kg", self.kg), ("s", self.s)) if exp != 0]
        return " ".join(parts) if parts else "dimensionless"


DIMENSIONLESS = Units()
DISPLACEMENT_PSD = Units(m=2, s=1)          # m^2 s  (m^2/Hz up to 2pi)
FORCE_PSD = Units(m=2, kg=2, s=-3)          # N^2 s
SUSCEPTIBILITY_SQ = DISPLACEMENT_PSD / FORCE_PSD


@dataclass(frozen=True)
class Susceptibility:
    """Damped-oscillator response chi(omega) = 1/(m (omega_r^2 - omega^2 - i Gamma omega))."""

    mass: float
    omega_r: float
    gamma: float

    def __post_init__(self) -> None:
        for name in ("mass", "omega_r", "gamma"):
            if getattr(self, name) <= 0 or not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be positive and finite")

    def inverse(self, omega):
        w = np.asarray(omega, dtype=float)
        return self.mass * (self.omega_r**2 - w**2 - 1j * self.gamma * w)

    def __call__(self, omega):
        return 1.0 / self.inverse(omega)

    def abs2(self, omega):
        """|chi|^2, an even function of omega."""
        w = np.asarray(omega, dtype=float)
        return 1.0 / (self.mass**2 * ((self.omega_r**2 - w**2) ** 2 + self.gamma**2 * w**2))


def _poly_real_positive_roots(coeffs: np.ndarray) -> np.ndarray:
    """Real roots x > 0 of a polynomial given by ascending coefficients."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if c.size <= 1:
        return np.array([])
    roots = np.polynomial.polynomial.polyroots(c)
    scale = max(1.0, float(np.max(np.abs(roots))))
    real = roots[np.abs(roots.imag) < 1e-9 * scale].real
    return real[real > 0]


@dataclass(frozen=True)
class RationalSpectrum:
    """Even rational PSD: scale * N(omega^2) / D(omega^2), with units metadata.

    ``num`` and ``den`` are ascending coefficient arrays of real polynomials
    in x = omega^2.  The spectrum must be nonnegative on the real axis and
    the denominator must have no nonnegative real roots in x.
    """

    num: np.ndarray
    den: np.ndarray
    scale: float
    units: Units = DIMENSIONLESS

    def __post_init__(self) -> None:
        object.__setattr__(self, "num", np.atleast_1d(np.asarray(self.num, dtype=float)))
        object.__setattr__(self, "den", np.atleast_1d(np.asarray(self.den, dtype=float)))
        if not (math.isfinite(self.scale) and self.scale >= 0.0):
            raise InvalidParameterError(f"scale must be finite and >= 0, got {self.scale!r}")
        if _poly_real_positive_roots(self.den).size:
            raise NonPhysicalSpectrumError("denominator has a real-frequency root")
        if self.scale > 0.0:
            self._check_nonnegative()

    def _check_nonnegative(self) -> None:
        # root analysis: a positive real x-root of odd multiplicity flips sign
        for x0 in _poly_real_positive_roots(self.num):
            lo = self._ratio(x0 * (1 - 1e-6))
            hi = self._ratio(x0 * (1 + 1e-6))
            if lo < -1e-12 or hi < -1e-12:
                raise NonPhysicalSpectrumError(f"spectrum negative near omega^2 = {x0:.6g}")
        # sample around the spectrum's own scale (geometric mean of the
        # denominator root magnitudes), so SI-sized frequencies are covered
        den = np.trim_zeros(self.den, "b")
        if den.size > 1 and den[0] != 0.0:
            x_char = abs(den[0] / den[-1]) ** (1.0 / (den.size - 1))
        else:
            x_char = 1.0
        xs = np.concatenate(([0.0], x_char * np.logspace(-8, 8, 257)))
        vals = self._ratio(xs)
        floor = -1e-12 * max(1.0, float(np.max(np.abs(vals))))
        if np.any(vals < floor):
            raise NonPhysicalSpectrumError("spectrum negative on sampling grid")

    def _ratio(self, x):
        p = np.polynomial.polynomial.polyval(x, self.num)
        q = np.polynomial.polynomial.polyval(x, self.den)
        return p / q

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        return self.scale * self._ratio(w * w)

    def __add__(self, other: "RationalSpectrum") -> "RationalSpectrum":
        if not isinstance(other, RationalSpectrum):
            return NotImplemented
        if self.units != other.units:
            raise UnitsError(f"cannot add spectra with units {self.units} and {other.units}")
        polymul = np.polynomial.polynomial.polymul
        polyadd = np.polynomial.polynomial.polyadd
        num = polyadd(self.scale * polymul(self.num, other.den),
                      other.scale * polymul(other.num, self.den))
        den = polymul(self.den, other.den)
        return RationalSpectrum(num=num, den=den, scale=1.0, units=self.units)

    def __mul__(self, other):
        polymul = np.polynomial.polynomial.polymul
        if isinstance(other, RationalSpectrum):
            return RationalSpectrum(
                num=polymul(self.num, other.num),
                den=polymul(self.den, other.den),
                scale=self.scale * other.scale,
                units=self.units * other.units,
            )
        if isinstance(other, (int, float)):
            if other < 0:
                raise NonPhysicalSpectrumError("scaling a PSD by a negative factor")
            return RationalSpectrum(self.num, self.den, self.scale * other, self.units)
        return NotImplemented

    __rmul__ = __mul__


def default_grid(omega0: float = 1.0, points: int = 10_000) -> np.ndarray:
    """Log grid spanning [1e-4, 1e4] * omega0, used by the standard checks."""
    return omega0 * np.logspace(-4, 4, points)


# ---------------------------------------------------------------------------
# scaled-unit core (Omega0 = 1, m = 1, hbar = 1), shared by the estimation
# modules; SI constructors below wrap these with the proper scales.
# ---------------------------------------------------------------------------

def scaled_force_level(p: DimensionlessParams) -> float:
    """White total force PSD 2 n_tot Gamma in scaled units."""
    return 2.0 * p.n_tot * p.gamma


def scaled_imprecision_level(p: DimensionlessParams) -> float:
    """White imprecision PSD 1/(8 eta C Gamma) in scaled units."""
    ec = p.eta * p.C
    if ec <= 0.0:
        raise InfiniteImprecisionError("eta*C must be positive")
    return 1.0 / (8.0 * ec * p.gamma)


def _chi_abs2_den(omega_r: float, gamma: float) -> np.ndarray:
    """Ascending x-coefficients of (omega_r^2 - x)^2 + gamma^2 x."""
    return np.array([omega_r**4, gamma * gamma - 2.0 * omega_r**2, 1.0])


# ---------------------------------------------------------------------------
# SI-facing constructors
# ---------------------------------------------------------------------------

def zero_point_psd(osc: OscillatorParams) -> float:
    """Resonant zero-point displacement PSD 2 x_zp^2 / Gamma = hbar/(m Omega0 Gamma)."""
    return HBAR / (osc.mass * osc.omega0 * osc.gamma)


def force_psd_total(p: DimensionlessParams, osc: OscillatorParams) -> RationalSpectrum:
    """White thermal+backaction force PSD, 2 n_tot hbar m Omega0 Gamma.

    Equals 2 n_tot S_xx^zp(Omega0) / |chi0(Omega0)|^2.
    """
    scale = 2.0 * p.n_tot * HBAR * osc.mass * osc.omega0 * osc.gamma
    return RationalSpectrum(num=[1.0], den=[1.0], scale=scale, units=FORCE_PSD)


def imprecision_psd(p: DimensionlessParams, osc: OscillatorParams) -> RationalSpectrum:
    """White measurement-imprecision PSD S_xx^zp(Omega0)/(8 eta C)."""
    ec = p.eta * p.C
    if ec <= 0.0:
        raise InfiniteImprecisionError("eta*C must be positive")
    scale = zero_point_psd(osc) / (8.0 * ec)
    return RationalSpectrum(num=[1.0], den=[1.0], scale=scale, units=DISPLACEMENT_PSD)


def displacement_psd(p: DimensionlessParams, osc: OscillatorParams,
                     fb: FeedbackSetting) -> RationalSpectrum:
    """In-loop displacement PSD (S_F_tot + K^2 m^2 S_imp) |chi|^2.

    The feedback force noise K^2 m^2 S_imp comes from feeding the measurement
    imprecision back through the real gain -K m.
    """
    gain = fb.gain_for(osc.omega0)
    omega = osc.omega0 * fb.ratio_for(osc.omega0)
    s_force = force_psd_total(p, osc).scale
    s_imp = imprecision_psd(p, osc).scale
    scale = s_force + gain * gain * osc.mass**2 * s_imp
    den = osc.mass**2 * _chi_abs2_den(omega, osc.gamma)
    return RationalSpectrum(num=[1.0], den=den, scale=scale, units=DISPLACEMENT_PSD)


def measured_cross_term(p: DimensionlessParams, osc: OscillatorParams,
                        fb: FeedbackSetting, omega) -> np.ndarray:
    """Record cross term 2 S_{x dx_imp}(omega) = -2 K m Re{chi(omega)} S_imp.

    Signed, so it is returned as plain values rather than a RationalSpectrum.
    """
    gain = fb.gain_for(osc.omega0)
    chi = Susceptibility(osc.mass, osc.omega0 * fb.ratio_for(osc.omega0), osc.gamma)
    s_imp = imprecision_psd(p, osc).scale
    return -2.0 * gain * osc.mass * np.real(chi(omega)) * s_imp


def measured_psd(p: DimensionlessParams, osc: OscillatorParams,
                 fb: FeedbackSetting) -> RationalSpectrum:
    """Noise-equivalent displacement PSD of the measurement record.

    S_meas = S_xx + S_imp + 2 S_{x dx_imp}; the three pieces combine exactly
    into S_imp * [(Omega0^2-omega^2)^2 + Gamma^2 omega^2 + Omega_meas^4]
    / [(Omega^2-omega^2)^2 + Gamma^2 omega^2], strictly positive.
    """
    omega = osc.omega0 * fb.ratio_for(osc.omega0)
    s_imp = imprecision_psd(p, osc).scale
    num = _chi_abs2_den(osc.omega0, osc.gamma)
    num = num + np.array([p.omega_meas4 * osc.omega0**4, 0.0, 0.0])
    den = _chi_abs2_den(omega, osc.gamma)
    spec = RationalSpectrum(num=num, den=den, scale=s_imp, units=DISPLACEMENT_PSD)
    # positivity is structural here; re-check to catch transcription bugs
    grid = default_grid(osc.omega0, 513)
    if np.any(spec(grid) <= 0.0):
        raise NonPhysicalSpectrumError("measured PSD not strictly positive")
    return spec


def second_mode_psd(mode2, p: DimensionlessParams,
                    osc: OscillatorParams) -> RationalSpectrum:
    """Apparent displacement PSD of a background mode in the record.

    ``mode2`` needs attributes omega2, q2, mass2, g_ratio (see multimode).
    The mode-2 drive combines its own thermal occupation at Omega2 with
    backaction scaled by g_ratio^2 and the zero-point/damping ratios:
    C2 = C g_ratio^2 (m Omega0 Gamma)/(m2 Omega2 Gamma2).
    """
    if mode2.g_ratio == 0.0:
        return RationalSpectrum(num=[1.0], den=[1.0], scale=0.0, units=DISPLACEMENT_PSD)
    gamma2 = mode2.omega2 / mode2.q2
    c2 = (p.C * mode2.g_ratio**2
          * (osc.mass * osc.omega0 * osc.gamma) / (mode2.mass2 * mode2.omega2 * gamma2))
    n_th2 = p.n_th * osc.omega0 / mode2.omega2
    n_tot2 = n_th2 + c2 + 0.5
    s_force2 = 2.0 * n_tot2 * HBAR * mode2.mass2 * mode2.omega2 * gamma2
    scale = mode2.g_ratio**2 * s_force2
    den = mode2.mass2**2 * _chi_abs2_den(mode2.omega2, gamma2)
    return RationalSpectrum(num=[1.0], den=den, scale=scale, units=DISPLACEMENT_PSD)


def export_table(spectrum, omegas: np.ndarray, path) -> None:
    """Write the two-column text table with the fixed header ``# omega,S``."""
    values = spectrum(omegas) if callable(spectrum) else np.asarray(spectrum)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# omega,S\n")
        for w, s in zip(np.asarray(omegas, dtype=float), values):
            fh.write(f"{w:.17g},{s:.17g}\n")
