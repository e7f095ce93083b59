"""Optimal causal estimation filters.

Two independent constructions of the same filters:

* ``filter_closed_form`` evaluates the analytic coefficients A_o, B_o of
  H_o(omega) = (A_o - i B_o omega) / (Omega'^2 - omega^2 - i Gamma' omega).
* ``filter_numeric`` runs the generic machinery: numerically factorize the
  measured-record PSD into a causal spectral factor M (poles and zeros in
  the lower half-plane), divide the record cross-spectrum by M*, extract
  the causal part by partial fractions, and divide by M.

Fourier convention F(omega) = int f(t) e^{+i omega t} dt: causal responses
are analytic in the upper half-plane, so causal rational functions carry
their poles in the LOWER half-plane.

The record cross-spectra feeding the filters use the symmetrized (real)
displacement-record cross term, S_{x xm} = S_xx - K m Re{chi} S_imp, and
S_{p xm} = -i m omega S_{x xm}; these are the spectra whose Wiener-Hopf
solution is the closed form above.  Everything here is in scaled units
(Omega0 = 1, m = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateFilterError,
    InvalidParameterError,
    MarginalSpectrumError,
    RepeatedPolesError,
)
from .params import DimensionlessParams, FeedbackSetting, OscillatorParams
from .spectra import RationalSpectrum, scaled_force_level, scaled_imprecision_level

POSITION = "position"
MOMENTUM = "momentum"
_TARGETS = (POSITION, MOMENTUM)


def _sorted_roots(roots: np.ndarray) -> np.ndarray:
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


@dataclass(frozen=True)
class RationalFunction:
    """f(omega) = N(omega) / prod(omega - p_k), N given by ascending complex coeffs."""

    num: np.ndarray
    poles: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "num", np.atleast_1d(np.asarray(self.num, dtype=complex)))
        object.__setattr__(self, "poles", np.asarray(self.poles, dtype=complex))

    def __call__(self, omega):
        w = np.asarray(omega, dtype=complex)
        val = np.polynomial.polynomial.polyval(w, self.num)
        for pole in self.poles:
            val = val / (w - pole)
        return val

    def is_proper(self) -> bool:
        num = np.trim_zeros(self.num, "b")
        return num.size < self.poles.size + 1 and self.poles.size > 0

    def residues(self) -> np.ndarray:
        """Residues at the (simple) poles; raises on near-repeated poles."""
        poles = self.poles
        scale = max(1.0, float(np.max(np.abs(poles)))) if poles.size else 1.0
        for i in range(poles.size):
            for j in range(i + 1, poles.size):
                if abs(poles[i] - poles[j]) < 1e-9 * scale:
                    raise RepeatedPolesError(
                        f"poles {poles[i]:.6g} and {poles[j]:.6g} too close for "
                        "simple partial fractions"
                    )
        res = np.empty(poles.size, dtype=complex)
        for k, pk in enumerate(poles):
            dprime = 1.0 + 0.0j
            for j, pj in enumerate(poles):
                if j != k:
                    dprime *= pk - pj
            res[k] = np.polynomial.polynomial.polyval(pk, self.num) / dprime
        return res


def causal_part(f: RationalFunction) -> RationalFunction:
    """Sum of partial-fraction terms whose poles lie in the lower half-plane.

    Requires a proper rational function with simple poles off the real axis.
    """
    if not f.is_proper():
        raise InvalidParameterError("causal_part needs a proper rational function")
    scale = max(1.0, float(np.max(np.abs(f.poles))))
    if np.any(np.abs(f.poles.imag) < 1e-12 * scale):
        raise MarginalSpectrumError("pole on the real axis; causal split undefined")
    residues = f.residues()
    keep = f.poles.imag < 0.0
    poles = f.poles[keep]
    res = residues[keep]
    if poles.size == 0:
        return RationalFunction(num=[0.0], poles=[])
    # rebuild sum_k r_k/(w - p_k) over the common denominator
    polyfromroots = np.polynomial.polynomial.polyfromroots
    polyadd = np.polynomial.polynomial.polyadd
    num = np.zeros(1, dtype=complex)
    for k, rk in enumerate(res):
        others = np.delete(poles, k)
        num = polyadd(num, rk * polyfromroots(others))
    return RationalFunction(num=num, poles=_sorted_roots(poles))


@dataclass(frozen=True)
class SpectralFactor:
    """Causal factor M with M(omega) M*(omega) = S(omega) on the real axis.

    All roots of numerator and denominator lie strictly in the lower
    half-plane; the overall scale is real-positive, which fixes the free
    phase so regression tests are deterministic.
    """

    num_roots: np.ndarray
    den_roots: np.ndarray
    scale: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "num_roots", np.asarray(self.num_roots, dtype=complex))
        object.__setattr__(self, "den_roots", np.asarray(self.den_roots, dtype=complex))

    @property
    def num_coeffs(self) -> np.ndarray:
        return self.scale * np.polynomial.polynomial.polyfromroots(self.num_roots)

    def __call__(self, omega):
        w = np.asarray(omega, dtype=complex)
        val = np.full_like(w, self.scale)
        for r in self.num_roots:
            val = val * (w - r)
        for p in self.den_roots:
            val = val / (w - p)
        return val

    def conj_at(self, omega):
        """M*(omega) evaluated on the real axis."""
        return np.conj(self(omega))

    def residual(self, spectrum, omegas) -> float:
        """max |M M*/S - 1| over the grid, ignoring points where S underflows."""
        s = spectrum(omegas)
        m2 = np.abs(self(omegas)) ** 2
        mask = s > 0
        return float(np.max(np.abs(m2[mask] / s[mask] - 1.0)))


def _lower_half_roots(coeffs_x: np.ndarray, what: str) -> np.ndarray:
    """Lower-half-plane omega-roots of an even polynomial given in x = omega^2.

    Roots are found by companion-matrix eigenvalues of the x-polynomial,
    split into +/- sqrt pairs, assigned to half-planes, and polished by one
    Newton step on the omega-polynomial.
    """
    cx = np.trim_zeros(np.asarray(coeffs_x, dtype=float), "b")
    if cx.size <= 1:
        return np.array([], dtype=complex)
    xroots = np.polynomial.polynomial.polyroots(cx)
    scale = max(1.0, float(np.max(np.abs(xroots))))
    picked = []
    for x0 in xroots:
        if abs(x0.imag) < 1e-12 * scale and x0.real > 1e-12 * scale:
            raise MarginalSpectrumError(
                f"{what} has a real-axis zero near omega = {math.sqrt(x0.real):.6g}"
            )
        w0 = np.sqrt(complex(x0))
        if w0.imag > 0:
            w0 = -w0
        if w0.imag == 0.0:          # negative real x0: +/- i sqrt(|x0|)
            w0 = -1j * abs(w0)
        picked.append(w0)
    # one Newton polish step on the full even omega-polynomial
    wcoeffs = np.zeros(2 * cx.size - 1)
    wcoeffs[::2] = cx
    dcoeffs = np.polynomial.polynomial.polyder(wcoeffs)
    polished = []
    for w0 in picked:
        f = np.polynomial.polynomial.polyval(w0, wcoeffs)
        df = np.polynomial.polynomial.polyval(w0, dcoeffs)
        if df != 0:
            w0 = w0 - f / df
        polished.append(w0)
    return _sorted_roots(np.asarray(polished, dtype=complex))


def spectral_factorize(s: RationalSpectrum) -> SpectralFactor:
    """Causal spectral factor of a strictly positive rational spectrum.

    Raises
    ------
    MarginalSpectrumError
        If the numerator (or denominator) has a real-axis zero, i.e. the
        spectrum touches zero at some real frequency.
    """
    if s.scale <= 0.0:
        raise MarginalSpectrumError("zero spectrum has no spectral factor")
    num_roots = _lower_half_roots(s.num, "spectrum numerator")
    den_roots = _lower_half_roots(s.den, "spectrum denominator")
    lead_num = np.trim_zeros(np.asarray(s.num, dtype=float), "b")[-1]
    lead_den = np.trim_zeros(np.asarray(s.den, dtype=float), "b")[-1]
    if lead_num <= 0 or lead_den <= 0:
        raise MarginalSpectrumError("spectrum not positive at large omega")
    scale = math.sqrt(s.scale * lead_num / lead_den)
    return SpectralFactor(num_roots=num_roots, den_roots=den_roots, scale=scale)


@dataclass(frozen=True)
class WienerFilter:
    """Causal estimator H(omega) = (a - i b omega) chi'(omega), scaled units.

    chi'(omega) = 1/(Omega'^2 - omega^2 - i Gamma' omega) has both poles in
    the lower half-plane for Gamma' > 0, so the filter is causal by
    construction.  For the momentum target the coefficients carry the mass
    factor, which is 1 in scaled units.
    """

    target: str
    a: float
    b: float
    omega_prime: float
    gamma_prime: float

    def __post_init__(self) -> None:
        if self.target not in _TARGETS:
            raise InvalidParameterError(f"target must be one of {_TARGETS}")

    def chi_prime(self, omega):
        w = np.asarray(omega, dtype=float)
        return 1.0 / (self.omega_prime**2 - w * w - 1j * self.gamma_prime * w)

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        return (self.a - 1j * self.b * w) * self.chi_prime(w)

    @property
    def dc_gain(self) -> float:
        return self.a / self.omega_prime**2

    @property
    def poles(self) -> np.ndarray:
        disc = self.omega_prime**2 - 0.25 * self.gamma_prime**2
        if disc >= 0:
            re = math.sqrt(disc)
            return np.array([-re - 0.5j * self.gamma_prime, re - 0.5j * self.gamma_prime])
        im = math.sqrt(-disc)
        return np.array([-1j * (0.5 * self.gamma_prime + im),
                         -1j * (0.5 * self.gamma_prime - im)])


def filter_coefficient_denominator(p: DimensionlessParams) -> float:
    """Shared denominator of the closed-form coefficients (scaled units).

    Algebraically Gamma (Gamma+Gamma') Omega'^2 + Omega'^4
    + (Gamma'(Gamma+Gamma') - 2 Omega'^2) Omega^2 + Omega^4, evaluated in the
    regrouped all-positive form that survives u -> 1, R -> 1 underflow.
    """
    g, gp = p.gamma, p.gamma_prime
    u = 1.0 + p.omega_prime_sq_minus_one
    r2 = p.R * p.R
    s = p.omega_prime_sq_minus_one - p.gain      # u - R^2 without absorption
    return g * (g + gp) * u + gp * (g + gp) * r2 + s * s


def filter_closed_form(p: DimensionlessParams, fb: FeedbackSetting | None = None,
                       target: str = POSITION) -> WienerFilter:
    """Closed-form causal Wiener filter for the position or momentum target.

    ``fb`` is accepted for interface symmetry; when given, its ratio must
    match ``p.R``.

    Raises
    ------
    DegenerateFilterError
        If the shared coefficient denominator vanishes (not expected for
        physical parameters).
    """
    if target not in _TARGETS:
        raise InvalidParameterError(f"target must be one of {_TARGETS}")
    if fb is not None:
        ratio = fb.ratio_for(1.0) if fb.ratio is not None else math.sqrt(1.0 + fb.gain)
        if not math.isclose(ratio, p.R, rel_tol=1e-12):
            raise InvalidParameterError(
                f"feedback ratio {ratio!r} inconsistent with p.R = {p.R!r}")
    g, gp = p.gamma, p.gamma_prime
    r2 = p.R * p.R
    w4 = p.omega_meas4
    du = p.omega_prime_sq_minus_one
    k = p.gain
    s = du - k                                    # Omega'^2 - Omega^2
    m = g * (g + gp)
    denom = filter_coefficient_denominator(p)
    if denom <= 0.0 or not math.isfinite(denom):
        raise DegenerateFilterError(f"coefficient denominator = {denom!r}")
    # regrouped numerators (no large-term absorption):
    #   A_x D = W (m + s) - k m + k^2 s
    #   B_x D = W (g + gp) + k g du + k^2 gp
    a_x = (w4 * (m + s) - k * m + k * k * s) / denom
    b_x = (w4 * (g + gp) + k * g * du + k * k * gp) / denom
    if target == POSITION:
        return WienerFilter(POSITION, a_x, b_x, p.omega_prime, gp)
    a_p = -r2 * b_x
    b_p = a_x - g * b_x
    return WienerFilter(MOMENTUM, a_p, b_p, p.omega_prime, gp)


def _scaled_measured_spectrum(p: DimensionlessParams) -> RationalSpectrum:
    """Record PSD in scaled units, as an explicit rational object."""
    s_i = scaled_imprecision_level(p)
    g = p.gamma
    r2 = p.R * p.R
    num = np.array([1.0 + p.omega_meas4, g * g - 2.0, 1.0])
    den = np.array([r2 * r2, g * g - 2.0 * r2, 1.0])
    return RationalSpectrum(num=num, den=den, scale=s_i)


def _cross_numerator(p: DimensionlessParams, target: str) -> np.ndarray:
    """Ascending omega-coefficients of S_{o xm} * (d d*) / (sqrt stays out).

    With the symmetrized cross term, S_{x xm} (d d*) = S_F + K^2 S_i
    - K S_i (R^2 - omega^2); the momentum target multiplies by -i omega.
    """
    s_f = scaled_force_level(p)
    s_i = scaled_imprecision_level(p)
    k = p.gain
    base = np.array([s_f + k * k * s_i - k * s_i * p.R * p.R, 0.0, k * s_i], dtype=complex)
    if target == POSITION:
        return base
    return np.polynomial.polynomial.polymul(np.array([0.0, -1j]), base)


def filter_numeric(p: DimensionlessParams, osc: OscillatorParams | None = None,
                   fb: FeedbackSetting | None = None, target: str = POSITION,
                   omegas: np.ndarray | None = None):
    """Generic filter construction sampled on a grid (scaled frequencies).

    Builds the record PSD, factorizes it numerically, divides the record
    cross-spectrum by M*, keeps the causal part, divides by M.  ``osc`` and
    ``fb`` are accepted for interface symmetry wherever SI context exists;
    the computation itself is scale-free.

    Returns
    -------
    (omegas, H) : tuple of ndarray
        Grid and complex filter values.
    """
    if target not in _TARGETS:
        raise InvalidParameterError(f"target must be one of {_TARGETS}")
    if omegas is None:
        omegas = np.logspace(-3, 2, 1001) * max(1.0, p.omega_prime, p.R)
    factor = spectral_factorize(_scaled_measured_spectrum(p))
    # g(omega) = S_{o xm}/M*: poles are the chi poles (lower) and the
    # conjugated factor zeros (upper); numerator = cross-num / (scale)
    d_roots = _lower_half_roots(np.array([p.R**4, p.gamma**2 - 2.0 * p.R**2, 1.0]),
                                "susceptibility denominator")
    nstar_roots = np.conj(factor.num_roots)
    g = RationalFunction(
        num=_cross_numerator(p, target) / factor.scale,
        poles=np.concatenate([d_roots, nstar_roots]),
    )
    causal = causal_part(g)
    h = causal(omegas) / factor(omegas)
    return np.asarray(omegas, dtype=float), h


def impulse_response(filter_values: np.ndarray, omegas: np.ndarray):
    """Impulse response h(t) = (1/2pi) int H(omega) e^{-i omega t} d omega.

    ``omegas`` must be a uniform symmetric grid (-W ... W).  Returns (t, h).
    """
    n = omegas.size
    dw = omegas[1] - omegas[0]
    # H sampled on fftshift-ed frequencies; inverse transform with e^{-iwt}
    spectrum = np.fft.ifftshift(filter_values)
    h = np.fft.fft(spectrum) * dw / (2.0 * np.pi)
    t = np.fft.fftfreq(n, d=dw / (2.0 * np.pi))
    order = np.argsort(t)
    return t[order], h[order]


def acausal_energy_fraction(filter_like, omega_max: float, n: int = 2**18) -> float:
    """Fraction of impulse-response energy at t < 0 (causality diagnostic).

    The spectrum is Hann-windowed before transforming: the hard cutoff at
    +-omega_max otherwise rings as 1/t and swamps the metric.  The window
    is even in omega, so it cannot fake causality; a few bins around t = 0
    are excluded (kernel smearing of the t = 0+ onset).
    """
    omegas = np.linspace(-omega_max, omega_max, n, endpoint=False)
    values = filter_like(omegas) if callable(filter_like) else np.asarray(filter_like)
    t, h = impulse_response(values * np.hanning(n), omegas)
    energy = np.abs(h) ** 2
    total = float(np.sum(energy))
    if total == 0.0:
        return 0.0
    pre = float(np.sum(energy[t < -3.0 * (t[1] - t[0])]))
    return pre / total


def export_filter_table(omegas: np.ndarray, values: np.ndarray, path) -> None:
    """Write the diagnostic dump with the fixed header ``# omega,ReH,ImH``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# omega,ReH,ImH\n")
        for w, h in zip(np.asarray(omegas, dtype=float), np.asarray(values)):
            fh.write(f"{w:.17g},{h.real:.17g},{h.imag:.17g}\n")
