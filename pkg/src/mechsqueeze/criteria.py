"""Regime classification, squeezing thresholds, actuation feasibility.

Closed-form thresholds treat n_tot = n_th + C + 1/2 self-consistently: each
criterion written "C > f(n_tot)" is an implicit equation in C, solved here
exactly (the self-consistency reduces to a cubic for the general criteria
and to a linear equation in the regime-limited ones).  Full-model thresholds
bisect the conditional variance of ``covariance_closed`` against 1.

Position squeezing (variance of X below zero point) requires, with
self-consistent n_tot:

* outside the RWA regime:  C > (n_tot Q^2 R^4 / 4)^(1/3) / eta
* inside the RWA regime:   C > n_tot R^2 / eta

Momentum squeezing:

* outside the RWA regime:  C > 64 n_tot^3 / (eta R^4 Q^2)
* inside the RWA regime:   C > n_tot / (eta R^2)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .conditional import covariance_closed
from .errors import InvalidParameterError, NoCrossingError, WeakMeasurementError
from .params import (
    DimensionlessParams,
    MeasurementParams,
    OscillatorParams,
    thermal_occupation,
)
from .search import log_golden_min
from .wiener import MOMENTUM, POSITION

C_SEARCH_RANGE = (1e-3, 1e12)


@dataclass(frozen=True)
class RegimeReport:
    """Boolean regime flags derived from the dimensionless parameters alone."""

    rwa: bool
    backaction_dominated: bool
    weak_measurement: bool


def classify(p: DimensionlessParams) -> RegimeReport:
    """Regime flags: RWA (omega_meas < Omega0, strict), backaction (C > n_th,
    strict), weak measurement (omega_meas <= sqrt(Omega0 Gamma))."""
    wm = p.omega_meas
    return RegimeReport(
        rwa=wm < 1.0,
        backaction_dominated=p.C > p.n_th,
        weak_measurement=wm <= math.sqrt(p.gamma),
    )


@dataclass(frozen=True)
class ThresholdResult:
    """Squeezing threshold in C for one target observable.

    ``c_closed_form`` is the self-consistent closed-form threshold (None if
    the criterion cannot be met), ``c_full_model`` the bisected variance=1
    crossing of the full model (None if no crossing in the search range).
    For the momentum target the interior variance minimum is reported too.
    """

    target: str
    c_closed_form: float | None
    c_full_model: float | None
    formula_used: str
    c_optimal: float | None = None
    v_at_optimal: float | None = None


def _params_at(eta: float, n_th: float, q: float, r: float,
               c: float) -> DimensionlessParams:
    return DimensionlessParams(eta=eta, C=c, n_th=n_th, Q=q, R=r)


def _is_rwa_at(eta: float, n_th: float, q: float, r: float, c: float) -> bool:
    return _params_at(eta, n_th, q, r, c).omega_meas < 1.0


def _positive_real_roots(coeffs_desc: list[float]) -> np.ndarray:
    roots = np.roots(coeffs_desc)
    real = roots[np.abs(roots.imag) < 1e-9 * (1.0 + np.abs(roots))].real
    return np.sort(real[real > 0.0])


def _closed_position(eta: float, n_th: float, q: float, r: float
                     ) -> tuple[float | None, str]:
    nb = n_th + 0.5
    # non-RWA: C^3 = (nb + C) Q^2 R^4 / (4 eta^3)
    a = q * q * r**4 / (4.0 * eta**3)
    candidates: list[tuple[float, str]] = []
    roots = _positive_real_roots([1.0, 0.0, -a, -a * nb])
    if roots.size:
        c1 = float(roots[-1])
        if not _is_rwa_at(eta, n_th, q, r, c1):
            candidates.append((c1, "non-rwa"))
    # RWA: C (1 - R^2/eta) = nb R^2/eta, solvable only for eta > R^2
    if eta > r * r:
        c2 = nb * r * r / (eta - r * r)
        if _is_rwa_at(eta, n_th, q, r, c2):
            candidates.append((c2, "rwa"))
    if not candidates:
        # boundary case: neither formula self-consistent; report the
        # non-RWA root (closest to the regime boundary) when it exists
        if roots.size:
            return float(roots[-1]), "non-rwa-boundary"
        return None, "infeasible"
    c, tag = min(candidates)
    return c, tag


def _closed_momentum(eta: float, n_th: float, q: float, r: float
                     ) -> tuple[float | None, str]:
    nb = n_th + 0.5
    # non-RWA: C = 64 (nb + C)^3 / (eta R^4 Q^2); smallest positive root is
    # the squeezing onset (the criterion fails again at large C)
    b = 64.0 / (eta * r**4 * q * q)
    roots = _positive_real_roots([b, 3.0 * b * nb, 3.0 * b * nb * nb - 1.0, b * nb**3])
    candidates: list[tuple[float, str]] = []
    if roots.size:
        c1 = float(roots[0])
        if not _is_rwa_at(eta, n_th, q, r, c1):
            candidates.append((c1, "non-rwa"))
    # RWA: C (eta R^2 - 1) = nb, needs eta R^2 > 1
    if eta * r * r > 1.0:
        c2 = nb / (eta * r * r - 1.0)
        if _is_rwa_at(eta, n_th, q, r, c2):
            candidates.append((c2, "rwa"))
    if not candidates:
        if roots.size:
            return float(roots[0]), "non-rwa-boundary"
        return None, "infeasible"
    c, tag = min(candidates)
    return c, tag


def _reject_weak(eta: float, n_th: float, q: float, r: float, c: float) -> None:
    p = _params_at(eta, n_th, q, r, c)
    if p.omega_meas <= math.sqrt(p.gamma):
        raise WeakMeasurementError(
            f"threshold C = {c:.4g} sits in the weak-measurement regime "
            f"(omega_meas = {p.omega_meas:.3g} <= sqrt(Gamma) = {math.sqrt(p.gamma):.3g})"
        )


def _variance(eta: float, n_th: float, q: float, r: float, c: float,
              target: str) -> float:
    v = covariance_closed(_params_at(eta, n_th, q, r, c))
    return v.vxx if target == POSITION else v.vpp


def _bisect_downward_crossing(f, c_lo: float, c_hi: float) -> float | None:
    """First downward f=0 crossing scanning a log grid, refined by brentq."""
    grid = np.logspace(math.log10(c_lo), math.log10(c_hi), 121)
    prev = f(grid[0])
    for i in range(1, len(grid)):
        current = f(grid[i])
        if prev > 0.0 >= current:
            return float(brentq(f, grid[i - 1], grid[i], rtol=1e-10, xtol=1e-300))
        prev = current
    return None


def position_threshold(*, eta: float, n_th: float, Q: float, R: float,
                       full_model: bool = True) -> ThresholdResult:
    """Cooperativity threshold for position squeezing (vxx < 1).

    Raises
    ------
    WeakMeasurementError
        If the closed-form threshold falls in the weak-measurement regime,
        where the protocol does not apply.
    """
    c_closed, tag = _closed_position(eta, n_th, Q, R)
    if c_closed is not None:
        _reject_weak(eta, n_th, Q, R, c_closed)
    c_full = None
    if full_model:
        c_full = _bisect_downward_crossing(
            lambda c: _variance(eta, n_th, Q, R, c, POSITION) - 1.0,
            *C_SEARCH_RANGE)
    return ThresholdResult(POSITION, c_closed, c_full, tag)


def momentum_threshold(*, eta: float, n_th: float, Q: float, R: float,
                       full_model: bool = True) -> ThresholdResult:
    """Cooperativity threshold for momentum squeezing (vpp < 1).

    The full-model search also locates the interior optimum of vpp(C)
    (momentum variance is non-monotonic in measurement strength); squeezing
    exists only if the optimum dips below 1.
    """
    c_closed, tag = _closed_momentum(eta, n_th, Q, R)
    if c_closed is not None:
        _reject_weak(eta, n_th, Q, R, c_closed)
    c_full = None
    c_opt = None
    v_opt = None
    if full_model:
        c_opt, v_opt = log_golden_min(
            lambda c: _variance(eta, n_th, Q, R, c, MOMENTUM),
            *C_SEARCH_RANGE, rtol=1e-12)
        if v_opt < 1.0:
            c_full = _bisect_downward_crossing(
                lambda c: _variance(eta, n_th, Q, R, c, MOMENTUM) - 1.0,
                C_SEARCH_RANGE[0], c_opt)
    return ThresholdResult(MOMENTUM, c_closed, c_full, tag,
                           c_optimal=c_opt, v_at_optimal=v_opt)


@dataclass(frozen=True)
class ActuationReport:
    """Spring-nulling feasibility of radiation-pressure actuation."""

    feasible: bool
    margin: float


def actuation_feasible(osc: OscillatorParams, meas: MeasurementParams,
                       *, n_cav: float | None = None) -> ActuationReport:
    """Check sqrt(2) n_cav g0 > sqrt(n_tot) Omega0 and report the ratio.

    n_tot includes the backaction contribution at the given photon number.
    """
    n = meas.n_cav if n_cav is None else n_cav
    if n is None:
        raise InvalidParameterError("n_cav required for the actuation check")
    if n == 0:
        return ActuationReport(feasible=False, margin=0.0)
    g0 = meas.single_photon_coupling(osc)
    c = meas.cooperativity_at(osc, n)
    n_tot = thermal_occupation(osc) + c + 0.5
    margin = math.sqrt(2.0) * n * g0 / (math.sqrt(n_tot) * osc.omega0)
    return ActuationReport(feasible=margin > 1.0, margin=margin)


def photons_to_null_spring(osc: OscillatorParams, meas: MeasurementParams,
                           *, n_range: tuple[float, float] = (1.0, 1e15)) -> float:
    """Photon number at which radiation pressure matches the spring force.

    Solves margin(n_cav) = 1; the margin grows like n/sqrt(n_th + C(n)), so
    a unique crossing exists whenever the range brackets it.
    """
    def f(log_n: float) -> float:
        return actuation_feasible(osc, meas, n_cav=10.0 ** log_n).margin - 1.0

    lo, hi = (math.log10(n_range[0]), math.log10(n_range[1]))
    if f(lo) > 0.0 or f(hi) < 0.0:
        raise NoCrossingError("margin = 1 not bracketed by n_range")
    log_n = brentq(f, lo, hi, rtol=8.9e-16)
    return 10.0 ** log_n
