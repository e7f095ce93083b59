"""Physical and dimensionless parameter models.

The whole pipeline is governed by five dimensionless numbers: detection
efficiency ``eta``, cooperativity ``C``, thermal occupation ``n_th``,
quality factor ``Q``, and the spring-shift ratio ``R = Omega/Omega0``.
This module owns the SI <-> scaled-unit boundary: everything downstream
computes with Omega0 = 1, m = 1, hbar = 1 to keep the degree-8 polynomial
algebra inside double-precision range.

Derived frequencies (in units of Omega0):

* ``omega_meas = 2 (eta C n_tot)^(1/4) sqrt(Gamma)`` - characteristic
  measurement frequency; its fourth power is tracked exactly as
  ``16 eta C n_tot Gamma^2``.
* ``omega_prime = (1 + omega_meas^4)^(1/4)`` and
  ``gamma_prime = sqrt(Gamma^2 - 2 + 2 omega_prime^2)`` - peak and width
  of the effective estimation susceptibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InvalidParameterError, UnstableFeedbackError

# CODATA 2018 (exact SI values)
K_B = 1.380649e-23    # J/K
HBAR = 1.054571817e-34  # J*s


def _require_positive_finite(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise InvalidParameterError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class OscillatorParams:
    """Mechanical mode: effective mass, resonance, damping, bath temperature.

    Parameters
    ----------
    mass : float
        Effective mass in kg.
    omega0 : float
        Natural angular resonance frequency in rad/s.
    gamma : float
        Energy damping rate in rad/s.  The mode must be underdamped
        (Q = omega0/gamma >= 1).
    temperature : float
        Bath temperature in K.
    """

    mass: float
    omega0: float
    gamma: float
    temperature: float

    def __post_init__(self) -> None:
        for name in ("mass", "omega0", "gamma", "temperature"):
            _require_positive_finite(name, getattr(self, name))
        if self.omega0 / self.gamma < 1.0:
            raise InvalidParameterError(
                f"overdamped oscillator rejected: Q = omega0/gamma = "
                f"{self.omega0 / self.gamma:.3g} < 1"
            )

    @property
    def quality_factor(self) -> float:
        return self.omega0 / self.gamma

    def x_zp(self, omega: float | None = None) -> float:
        """Zero-point position spread sqrt(hbar/(2 m omega)); omega defaults to omega0."""
        w = self.omega0 if omega is None else omega
        return math.sqrt(HBAR / (2.0 * self.mass * w))

    def p_zp(self, omega: float | None = None) -> float:
        """Zero-point momentum spread sqrt(hbar m omega / 2); omega defaults to omega0."""
        w = self.omega0 if omega is None else omega
        return math.sqrt(HBAR * self.mass * w / 2.0)


@dataclass(frozen=True)
class MeasurementParams:
    """Detection efficiency plus measurement strength.

    The strength may be given directly as a cooperativity, or through the
    physical tuple (g0, kappa, n_cav) with C = 4 g0^2 n_cav / (kappa Gamma).
    ``frequency_pull`` (G, rad/s per meter) may accompany g0; the two must
    satisfy g0 = G * x_zp(Omega0) to 1e-12 relative.
    """

    eta: float
    cooperativity: float | None = None
    g0: float | None = None
    kappa: float | None = None
    n_cav: float | None = None
    frequency_pull: float | None = None

    def __post_init__(self) -> None:
        if not (isinstance(self.eta, (int, float)) and math.isfinite(self.eta)
                and 0.0 < self.eta <= 1.0):
            raise InvalidParameterError(f"eta must lie in (0, 1], got {self.eta!r}")
        has_tuple = self.kappa is not None and self.n_cav is not None and (
            self.g0 is not None or self.frequency_pull is not None)
        if self.cooperativity is None and not has_tuple:
            raise InvalidParameterError(
                "measurement needs either cooperativity or the physical tuple "
                "{g0 or frequency_pull, kappa, n_cav}"
            )
        if self.cooperativity is not None:
            _require_positive_finite("cooperativity", self.cooperativity)
        for name in ("g0", "kappa", "frequency_pull"):
            value = getattr(self, name)
            if value is not None:
                _require_positive_finite(name, value)
        if self.n_cav is not None and not (math.isfinite(self.n_cav) and self.n_cav >= 0):
            raise InvalidParameterError(f"n_cav must be a finite count >= 0, got {self.n_cav!r}")

    def single_photon_coupling(self, osc: OscillatorParams) -> float:
        """g0 in rad/s, from the stored value or from G * x_zp(Omega0)."""
        if self.g0 is not None:
            if self.frequency_pull is not None:
                expected = self.frequency_pull * osc.x_zp()
                if abs(self.g0 - expected) > 1e-12 * expected:
                    raise InvalidParameterError(
                        f"g0 = {self.g0:.15g} inconsistent with G*x_zp = {expected:.15g} "
                        "(must agree to 1e-12 relative)"
                    )
            return self.g0
        if self.frequency_pull is None:
            raise InvalidParameterError("neither g0 nor frequency_pull available")
        return self.frequency_pull * osc.x_zp()

    def resolve_cooperativity(self, osc: OscillatorParams) -> float:
        """Cooperativity, derived from the physical tuple when not given directly."""
        if self.cooperativity is not None:
            if self.kappa is not None and self.n_cav is not None:
                derived = self.cooperativity_at(osc, self.n_cav)
                if abs(derived - self.cooperativity) > 1e-12 * self.cooperativity:
                    raise InvalidParameterError(
                        f"cooperativity {self.cooperativity:.15g} inconsistent with "
                        f"4 g0^2 n_cav/(kappa Gamma) = {derived:.15g}"
                    )
            return self.cooperativity
        if self.kappa is None or self.n_cav is None:
            raise InvalidParameterError("physical tuple incomplete: need kappa and n_cav")
        if self.n_cav == 0:
            raise InvalidParameterError("n_cav = 0 gives zero cooperativity")
        return self.cooperativity_at(osc, self.n_cav)

    def cooperativity_at(self, osc: OscillatorParams, n_cav: float) -> float:
        """C = 4 g0^2 n_cav / (kappa Gamma) for a given intracavity photon number."""
        if self.kappa is None:
            raise InvalidParameterError("kappa required to map photon number to cooperativity")
        g0 = self.single_photon_coupling(osc)
        return 4.0 * g0 * g0 * n_cav / (self.kappa * osc.gamma)

    def photons_at(self, osc: OscillatorParams, cooperativity: float) -> float:
        """Inverse of :meth:`cooperativity_at`."""
        if self.kappa is None:
            raise InvalidParameterError("kappa required to map cooperativity to photon number")
        g0 = self.single_photon_coupling(osc)
        return cooperativity * self.kappa * osc.gamma / (4.0 * g0 * g0)


@dataclass(frozen=True)
class FeedbackSetting:
    """Spring-shifting feedback, as either a ratio R = Omega/Omega0 or a gain K.

    Exactly one of the two must be set.  A gain is validated against a given
    Omega0 only when the shifted frequency is actually requested, because the
    stability bound K > -Omega0^2 depends on the oscillator.
    """

    ratio: float | None = None
    gain: float | None = None

    def __post_init__(self) -> None:
        if (self.ratio is None) == (self.gain is None):
            raise InvalidParameterError("give exactly one of ratio or gain")
        if self.ratio is not None:
            _require_positive_finite("ratio", self.ratio)
        if self.gain is not None and not math.isfinite(self.gain):
            raise InvalidParameterError(f"gain must be finite, got {self.gain!r}")

    @classmethod
    def off(cls) -> "FeedbackSetting":
        return cls(ratio=1.0)

    @classmethod
    def from_ratio(cls, ratio: float) -> "FeedbackSetting":
        return cls(ratio=ratio)

    @classmethod
    def from_gain(cls, gain: float) -> "FeedbackSetting":
        return cls(gain=gain)

    def ratio_for(self, omega0: float) -> float:
        if self.ratio is not None:
            return self.ratio
        return shifted_frequency(omega0, self.gain) / omega0

    def gain_for(self, omega0: float) -> float:
        if self.gain is not None:
            return self.gain
        return (self.ratio * self.ratio - 1.0) * omega0 * omega0

    def shifted_for(self, omega0: float) -> float:
        return self.ratio_for(omega0) * omega0


def shifted_frequency(omega0: float, gain: float) -> float:
    """Effective resonance sqrt(Omega0^2 + K) of the spring-shifted oscillator.

    Raises
    ------
    UnstableFeedbackError
        If K <= -Omega0^2 (the effective spring constant is non-positive).
    """
    _require_positive_finite("omega0", omega0)
    if not math.isfinite(gain):
        raise InvalidParameterError(f"gain must be finite, got {gain!r}")
    arg = omega0 * omega0 + gain
    if arg <= 0.0:
        raise UnstableFeedbackError(
            f"K = {gain:.6g} <= -Omega0^2 = {-omega0 * omega0:.6g}: unstable feedback"
        )
    return math.sqrt(arg)


@dataclass(frozen=True)
class DimensionlessParams:
    """The five governing numbers {eta, C, n_th, Q, R} plus derived frequencies.

    All derived rates are expressed in units of Omega0 (scaled units).
    """

    eta: float
    C: float
    n_th: float
    Q: float
    R: float

    def __post_init__(self) -> None:
        if not (0.0 < self.eta <= 1.0 and math.isfinite(self.eta)):
            raise InvalidParameterError(f"eta must lie in (0, 1], got {self.eta!r}")
        _require_positive_finite("C", self.C)
        _require_positive_finite("Q", self.Q)
        _require_positive_finite("R", self.R)
        if self.Q < 1.0:
            raise InvalidParameterError(f"Q must be >= 1, got {self.Q!r}")
        if not (math.isfinite(self.n_th) and self.n_th >= 0.0):
            raise InvalidParameterError(f"n_th must be finite and >= 0, got {self.n_th!r}")

    # -- derived quantities (scaled units, Omega0 = 1) --

    @property
    def gamma(self) -> float:
        """Damping rate, units of Omega0."""
        return 1.0 / self.Q

    @property
    def n_tot(self) -> float:
        """Intrinsic total occupancy n_th + C + 1/2."""
        return self.n_th + self.C + 0.5

    @property
    def omega_meas4(self) -> float:
        """Omega_meas^4 = 16 eta C n_tot Gamma^2, tracked exactly."""
        return 16.0 * self.eta * self.C * self.n_tot * self.gamma * self.gamma

    @property
    def omega_meas(self) -> float:
        """Characteristic measurement frequency 2 (eta C n_tot)^(1/4) sqrt(Gamma)."""
        return self.omega_meas4 ** 0.25

    @property
    def omega_prime_sq_minus_one(self) -> float:
        """Omega'^2 - 1, evaluated without cancellation for small Omega_meas."""
        w4 = self.omega_meas4
        return w4 / (1.0 + math.sqrt(1.0 + w4))

    @property
    def omega_prime(self) -> float:
        """Effective resonance (1 + Omega_meas^4)^(1/4)."""
        return math.sqrt(1.0 + self.omega_prime_sq_minus_one)

    @property
    def gamma_prime(self) -> float:
        """Effective linewidth sqrt(Gamma^2 - 2 + 2 Omega'^2); always >= Gamma."""
        return math.sqrt(self.gamma * self.gamma + 2.0 * self.omega_prime_sq_minus_one)

    @property
    def gain(self) -> float:
        """Feedback gain K = R^2 - 1, units of Omega0^2."""
        return self.R * self.R - 1.0

    def replace(self, **changes: float) -> "DimensionlessParams":
        """A copy with selected governing numbers replaced."""
        return replace(self, **changes)


def thermal_occupation(osc: OscillatorParams, *, nth_at_shifted: bool = False,
                       ratio: float = 1.0) -> float:
    """High-temperature thermal occupation k_B T / (hbar Omega).

    By default the UNSHIFTED Omega0 is used; ``nth_at_shifted=True`` evaluates
    at the feedback-shifted frequency ratio*Omega0 instead.
    """
    omega = osc.omega0 * (ratio if nth_at_shifted else 1.0)
    return K_B * osc.temperature / (HBAR * omega)


def derive_dimensionless(osc: OscillatorParams, meas: MeasurementParams,
                         fb: FeedbackSetting, *,
                         nth_at_shifted: bool = False) -> DimensionlessParams:
    """Collapse SI inputs to the five governing numbers.

    Parameters
    ----------
    osc, meas, fb
        Validated parameter records.
    nth_at_shifted : bool, optional
        Evaluate n_th at the shifted frequency Omega instead of Omega0
        (alternate convention; off by default).

    Returns
    -------
    DimensionlessParams

    Raises
    ------
    InvalidParameterError
        For non-positive/non-finite inputs or inconsistent physical tuples.
    UnstableFeedbackError
        If the feedback gain drives the spring unstable.
    """
    ratio = fb.ratio_for(osc.omega0)
    n_th = thermal_occupation(osc, nth_at_shifted=nth_at_shifted, ratio=ratio)
    cooperativity = meas.resolve_cooperativity(osc)
    return DimensionlessParams(
        eta=meas.eta,
        C=cooperativity,
        n_th=n_th,
        Q=osc.quality_factor,
        R=ratio,
    )


@dataclass(frozen=True)
class BandwidthResult:
    """Measurement bandwidth in units of Omega0, with a low-Q warning flag."""

    value: float
    low_q: bool


def measurement_bandwidth(p: DimensionlessParams) -> BandwidthResult:
    """Bandwidth over which intrinsic thermal noise is resolved above shot noise.

    Inside the regime omega_meas < 1 (units of Omega0) the bandwidth is
    omega_meas^2; outside it equals omega_meas.  The switch is a hard
    boundary at omega_meas = 1, where both branches agree.  Q < 100 sets
    the ``low_q`` flag (the bandwidth picture assumes Q >> 1).
    """
    wm = p.omega_meas
    value = wm * wm if wm < 1.0 else wm
    return BandwidthResult(value=value, low_q=p.Q < 100.0)
