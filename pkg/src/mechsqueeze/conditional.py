"""Conditional covariance of the estimation error.

Three routes to the same object, kept deliberately independent so they can
cross-check each other:

* ``covariance_closed`` - exact algebra.  At the causal-filter optimum the
  error variance collapses to int S_oo - int |H_o|^2 S_meas, which reduces
  the full analytic covariance to three compact combinations of the filter
  coefficients:

      V_XX = [S_F + S_i (K^2 - A_x^2 - R^2 B_x^2)] / (Gamma R)
      V_PP = [S_F + S_i (K^2 - B_p^2 - R^2 B_x^2)] / (Gamma R)
      V_XP = S_i B_x^2

  (scaled units; B_p = A_x - Gamma B_x).  This is the numerically stable
  arrangement of the expanded analytic expressions, whose direct evaluation
  loses ~10 digits to cancellation at Q = 1e6.

* ``covariance_numeric`` - adaptive quadrature of the error spectra built
  from the filters, with resonance-refined segments and an analytic 1/w^2
  tail.  The three-term error-spectrum formula is evaluated in an
  algebraically identical split (positive factored part + small correction)
  because the raw three terms cancel catastrophically near the narrow
  mechanical resonance.

* asymptotic forms (``covariance_high_q`` and the two regime limits).

Normalization: zero-point units at the SHIFTED frequency Omega = R Omega0.
``CovarianceMatrix.at_natural_frequency`` converts to unshifted-Omega0
normalization for comparison with feedback-free results.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import (
    AccuracyError,
    InconsistencyError,
    InvalidParameterError,
    UnphysicalStateError,
)
from .params import DimensionlessParams, FeedbackSetting, OscillatorParams
from .spectra import scaled_force_level, scaled_imprecision_level
from .wiener import MOMENTUM, POSITION, filter_closed_form

_PHYSICALITY_TOL = 1e-6
# The closed form's purity identity is a strong-measurement approximation;
# in extreme corners (n_th < 1, low Q) its determinant legitimately dips a
# few 1e-3 below 1.  Model-produced covariances are validated against this
# documented envelope instead of the strict bound.
_MODEL_DET_TOL = 1e-2


@dataclass(frozen=True)
class CovarianceMatrix:
    """Normalized conditional second moments (zero-point units at shifted Omega).

    ``physicality_tol`` is the accepted slack below the normalized Heisenberg
    bound det >= 1; direct construction uses the strict 1e-6.
    """

    vxx: float
    vpp: float
    vxp: float
    physicality_tol: float = field(default=_PHYSICALITY_TOL, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not (self.vxx > 0.0 and self.vpp > 0.0
                and math.isfinite(self.vxx) and math.isfinite(self.vpp)
                and math.isfinite(self.vxp)):
            raise InvalidParameterError("variances must be positive and finite")
        if self.det < 1.0 - self.physicality_tol:
            raise UnphysicalStateError(
                f"det V = {self.det:.9g} < 1 violates the normalized Heisenberg bound"
            )

    @property
    def det(self) -> float:
        return self.vxx * self.vpp - self.vxp * self.vxp

    @property
    def purity(self) -> float:
        return min(1.0, 1.0 / math.sqrt(max(self.det, 1.0 - self.physicality_tol)))

    def at_natural_frequency(self, ratio: float) -> "CovarianceMatrix":
        """Same state renormalized by zero-point units at Omega0 instead of Omega.

        x_zp^2 scales as 1/Omega, so vxx gains 1/R and vpp gains R; the
        cross term is unchanged.
        """
        return CovarianceMatrix(self.vxx / ratio, self.vpp * ratio, self.vxp,
                                physicality_tol=self.physicality_tol)


@dataclass(frozen=True)
class QuadratureResult:
    """Minimum-variance quadrature angle (radians, in (-pi/2, pi/2]) and value."""

    theta: float
    v_min: float


def purity(v: CovarianceMatrix) -> float:
    """1/sqrt(det V); raises if the state is unphysical beyond its tolerance."""
    if v.det < 1.0 - v.physicality_tol:
        raise UnphysicalStateError(f"det V = {v.det:.9g} < 1")
    return v.purity


def _closed_pipeline(eta, c, n_th, q, r, lib) -> tuple:
    """Closed-form covariance entries, generic over the arithmetic library.

    ``lib`` provides ``sqrt`` and a scalar constructor ``number``; the same
    ~40-operation pipeline runs in float64, extended precision, or mpmath.
    The bracket W + K^2 - A^2 - R^2 B^2 cancels catastrophically in corners
    (weak measurement together with strong spring shift), which is why the
    precision ladder in :func:`covariance_closed` exists.
    """
    one = lib.number(1.0)
    eta, c, n_th, q, r = (lib.number(v) for v in (eta, c, n_th, q, r))
    g = one / q
    n_tot = n_th + c + one / 2
    ec = eta * c
    w4 = 16 * ec * n_tot * g * g
    du = w4 / (one + lib.sqrt(one + w4))          # Omega'^2 - 1, stable
    u = one + du
    gp = lib.sqrt(g * g + 2 * du)
    r2 = r * r
    k = r2 - one
    s = du - k                                    # Omega'^2 - Omega^2
    m = g * (g + gp)
    s_i = one / (8 * ec * g)
    denom = m * u + gp * (g + gp) * r2 + s * s    # all-positive regrouping
    a_x = (w4 * (m + s) - k * m + k * k * s) / denom
    b_x = (w4 * (g + gp) + k * g * du + k * k * gp) / denom
    b_p = a_x - g * b_x
    z_x = w4 + k * k - a_x * a_x - r2 * b_x * b_x
    z_p = w4 + k * k - b_p * b_p - r2 * b_x * b_x
    vxx = s_i * z_x / (g * r)
    vpp = s_i * z_p / (g * r)
    vxp = s_i * b_x * b_x
    return vxx, vpp, vxp


class _FloatLib:
    number = staticmethod(float)
    sqrt = staticmethod(math.sqrt)


class _LongDoubleLib:
    number = staticmethod(np.longdouble)
    sqrt = staticmethod(np.sqrt)


_HAVE_EXTENDED = np.finfo(np.longdouble).eps < np.finfo(np.float64).eps


def _closed_entries(p: DimensionlessParams) -> tuple[float, float, float]:
    """Precision ladder: float64, cross-checked against extended precision;
    mpmath at 40 digits when the two disagree (ill-conditioned corner)."""
    args = (p.eta, p.C, p.n_th, p.Q, p.R)
    fast = _closed_pipeline(*args, _FloatLib)
    check = _closed_pipeline(*args, _LongDoubleLib) if _HAVE_EXTENDED else None
    if check is not None:
        agree = all(abs(float(a) - float(b)) <= 1e-9 * max(abs(float(b)), 1e-300)
                    for a, b in zip(fast, check))
        if agree:
            return tuple(float(v) for v in check)
    import mpmath as mp

    class _MpLib:
        number = staticmethod(lambda v: mp.mpf(float(v)))
        sqrt = staticmethod(mp.sqrt)

    with mp.workdps(40):
        exact = _closed_pipeline(*args, _MpLib)
        return tuple(float(v) for v in exact)


def covariance_closed(p: DimensionlessParams) -> CovarianceMatrix:
    """Exact conditional covariance from the closed-form filter coefficients.

    Raises
    ------
    InconsistencyError
        If the result violates physicality beyond the documented model
        envelope (would signal a transcription bug, not a physics regime).
    """
    vxx, vpp, vxp = _closed_entries(p)
    try:
        return CovarianceMatrix(vxx, vpp, vxp, physicality_tol=_MODEL_DET_TOL)
    except UnphysicalStateError as exc:
        raise InconsistencyError(str(exc)) from exc


# ---------------------------------------------------------------------------
# numeric oracle
# ---------------------------------------------------------------------------

def _error_spectra_factory(p: DimensionlessParams, ax: float, bx: float,
                           ap: float, bp: float):
    """Scalar evaluators of the three error spectra, cancellation-safe.

    The defining formulas are
        s_xx = S_xx - 2 Re{H_x} Sbar + |H_x|^2 S_meas
        s_pp = S_pp + 2 Re{H_p conj(i w Sbar)} + |H_p|^2 S_meas
        s_xp = Re{-H_x (i w Sbar) - conj(H_p) Sbar + H_x conj(H_p) S_meas}
    with Sbar the symmetrized record cross-spectrum.  They are evaluated via
    the identity  s_sym = s_factored + correction:
        s_xx = |T_xF|^2 S_F + |T_xi|^2 S_i + 2 Im{H_x} ImS
        s_pp = |T_pF|^2 S_F + |T_pi|^2 S_i + 2 w Re{H_p} ImS
        s_xp = Re{T_xF conj(T_pF)} S_F + Re{T_xi conj(T_pi)} S_i
               + (Im{H_p} + w Re{H_x}) ImS
    where ImS = -K S_i Gamma w / |d|^2 and the T's are the loop transfer
    functions into the error; the factored parts are positive products of
    O(1) ratios, immune to the cancellation that spoils the raw three-term
    sums near the mechanical resonance.
    """
    g = p.gamma
    gp = p.gamma_prime
    u = 1.0 + p.omega_prime_sq_minus_one
    r2 = p.R * p.R
    k = p.gain
    s_f = scaled_force_level(p)
    s_i = scaled_imprecision_level(p)

    def at(w: float) -> tuple[float, float, float]:
        d = complex(r2 - w * w, -g * w)
        n = complex(u - w * w, -gp * w)
        nd = n * d
        px = complex(ax, -bx * w)
        pp_ = complex(ap, -bp * w)
        hx = px / n
        hp = pp_ / n
        t_xf = (n - px) / nd
        t_xi = -(k * n + px * (d - k)) / nd
        t_pf = -(1j * w * n + pp_) / nd
        t_pi = (1j * w * k * n - pp_ * (d - k)) / nd
        absd2 = d.real * d.real + d.imag * d.imag
        im_s = -k * s_i * g * w / absd2
        s_xx = (abs(t_xf) ** 2 * s_f + abs(t_xi) ** 2 * s_i
                + 2.0 * hx.imag * im_s)
        s_pp = (abs(t_pf) ** 2 * s_f + abs(t_pi) ** 2 * s_i
                + 2.0 * w * hp.real * im_s)
        s_xp = ((t_xf * t_pf.conjugate()).real * s_f
                + (t_xi * t_pi.conjugate()).real * s_i
                + (hp.imag + w * hx.real) * im_s)
        return s_xx, s_pp, s_xp

    return at


def _segment_breakpoints(p: DimensionlessParams) -> tuple[np.ndarray, float]:
    """Log ladder over [1e-6 Omega', 1e4 max(Omega', Omega)] with resonance windows.

    Near a resonance at Omega_r the spectra vary on the scale Gamma_r/2
    (|d|^2 = (Omega_r^2 - w^2)^2 + Gamma_r^2 w^2 doubles at |w - Omega_r| =
    Gamma_r/2 for narrow lines), so the windows are geometric ladders of
    that width around each peak.
    """
    op = p.omega_prime
    top = 1e4 * max(op, p.R)
    pts = {0.0, 1e-6 * op, top}
    pts.update(10.0 ** np.arange(math.floor(math.log10(1e-6 * op)),
                                 math.ceil(math.log10(top)) + 1))
    offsets = np.array([0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0,
                        1e3, 3e3, 1e4, 3e4, 1e5, 3e5, 1e6])
    for center, width in ((p.R, p.gamma), (op, p.gamma_prime)):
        pts.add(center)
        for s in offsets:
            for sign in (-1.0, 1.0):
                w = center + sign * s * width * 0.5
                if 0.0 < w < top:
                    pts.add(w)
    arr = np.array(sorted(x for x in pts if 0.0 <= x <= top))
    # drop near-duplicates
    keep = np.concatenate(([True], np.diff(arr) > 1e-14 * top))
    return arr[keep], top


def _integrate_error_spectra(p: DimensionlessParams, ax: float, bx: float,
                             ap: float, bp: float, *, rtol: float = 1e-7
                             ) -> tuple[float, float, float]:
    """(V_xx_abs, V_pp_abs, V_xp_abs): error-spectrum integrals over dw/2pi."""
    at = _error_spectra_factory(p, ax, bx, ap, bp)
    breakpoints, top = _segment_breakpoints(p)

    s_f = scaled_force_level(p)
    s_i = scaled_imprecision_level(p)
    k = p.gain
    # exact 1/w^2 tail coefficients beyond the last breakpoint
    tails = (s_i * bx * bx,
             s_f + (k + bp) ** 2 * s_i,
             s_i * bx * (k + bp))

    totals = []
    errors = []
    for idx in range(3):
        f = lambda w, _i=idx: at(w)[_i]
        total = 0.0
        err = 0.0
        with warnings.catch_warnings():
            # accuracy is gated below via the summed error estimates
            warnings.simplefilter("ignore", IntegrationWarning)
            for lo, hi in zip(breakpoints[:-1], breakpoints[1:]):
                val, abserr = quad(f, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)
                total += val
                err += abserr
        tail = tails[idx] / top
        # next-order 1/w^4 contribution bounds the tail truncation error
        tail_err = abs(f(top) * top * top - tails[idx]) / (3.0 * top)
        if tail_err > 1e-8 * max(abs(total + tail), 1e-300):
            raise AccuracyError(
                f"non-convergent tail for integral {idx}: relative tail error "
                f"estimate {tail_err / max(abs(total + tail), 1e-300):.3g} > 1e-8"
            )
        totals.append(total + tail)
        errors.append(err + tail_err)
    # the cross integral may be legitimately tiny; gate it against the state
    # scale sqrt(Vxx Vpp) instead of its own magnitude
    scales = [abs(totals[0]), abs(totals[1]),
              max(abs(totals[2]), math.sqrt(abs(totals[0] * totals[1])))]
    for idx in range(3):
        if errors[idx] > rtol * max(scales[idx], 1e-300):
            raise AccuracyError(
                f"integral {idx} error estimate {errors[idx]:.3g} exceeds "
                f"{rtol:.1g} of scale {scales[idx]:.6g}"
            )
    return tuple(t / math.pi for t in totals)  # int dw/2pi of even integrands


def covariance_numeric(p: DimensionlessParams, osc: OscillatorParams | None = None,
                       fb: FeedbackSetting | None = None, *,
                       rtol: float = 1e-7) -> CovarianceMatrix:
    """Quadrature oracle: integrate the filter error spectra directly.

    ``osc``/``fb`` are accepted for interface symmetry (the normalized result
    is scale-invariant); when ``fb`` is given its ratio must match ``p.R``.

    Raises
    ------
    AccuracyError
        When the integration error estimate exceeds ``rtol`` relative.
    """
    if fb is not None:
        omega0 = osc.omega0 if osc is not None else 1.0
        if not math.isclose(fb.ratio_for(omega0), p.R, rel_tol=1e-12):
            raise InvalidParameterError("feedback ratio inconsistent with p.R")
    fx = filter_closed_form(p, target=POSITION)
    fp = filter_closed_form(p, target=MOMENTUM)
    vxx_abs, vpp_abs, vxp_abs = _integrate_error_spectra(
        p, fx.a, fx.b, fp.a, fp.b, rtol=rtol)
    return CovarianceMatrix(
        vxx=2.0 * p.R * vxx_abs,
        vpp=2.0 * vpp_abs / p.R,
        vxp=2.0 * vxp_abs,
        physicality_tol=_MODEL_DET_TOL,
    )


def variance_with_filter(p: DimensionlessParams, target: str, a: float, b: float,
                         *, rtol: float = 1e-7) -> float:
    """Normalized variance achieved by an arbitrary (a, b) causal filter.

    Used to probe stationarity of the closed-form coefficients; the optimum
    filter for the other observable is substituted so only ``target`` moves.
    """
    fx = filter_closed_form(p, target=POSITION)
    fp = filter_closed_form(p, target=MOMENTUM)
    if target == POSITION:
        vxx_abs, _, _ = _integrate_error_spectra(p, a, b, fp.a, fp.b, rtol=rtol)
        return 2.0 * p.R * vxx_abs
    if target == MOMENTUM:
        _, vpp_abs, _ = _integrate_error_spectra(p, fx.a, fx.b, a, b, rtol=rtol)
        return 2.0 * vpp_abs / p.R
    raise InvalidParameterError(f"unknown target {target!r}")


# ---------------------------------------------------------------------------
# asymptotic forms
# ---------------------------------------------------------------------------

def _nominal_purity(p: DimensionlessParams) -> float:
    return math.sqrt(p.eta * p.C / p.n_tot)


def covariance_high_q(p: DimensionlessParams) -> CovarianceMatrix:
    """High-Q simplification of the covariance matrix.

    V = (4 n_tot Gamma / Omega_meas^4) *
        [[Gamma'_hq R,        Omega'^2 - 1     ],
         [Omega'^2 - 1,       Gamma'_hq Omega'^2 / R]]
    with Gamma'_hq = sqrt(2 (Omega'^2 - 1)) (the damping-free linewidth, so
    the determinant identity det V = n_tot/(eta C) is exact).  Scaled units.
    """
    du = p.omega_prime_sq_minus_one
    gp_hq = math.sqrt(2.0 * du)
    pref = 4.0 * p.n_tot * p.gamma / p.omega_meas4
    return CovarianceMatrix(
        vxx=pref * gp_hq * p.R,
        vpp=pref * gp_hq * (1.0 + du) / p.R,
        vxp=pref * du,
    )


def covariance_nonrwa_limit(p: DimensionlessParams) -> CovarianceMatrix:
    """Far-outside-RWA limit: (1/P) [[sqrt2 Omega/Om, 1], [1, sqrt2 Om/Omega]]."""
    pur = _nominal_purity(p)
    wm = p.omega_meas
    return CovarianceMatrix(
        vxx=math.sqrt(2.0) * p.R / (pur * wm),
        vpp=math.sqrt(2.0) * wm / (pur * p.R),
        vxp=1.0 / pur,
    )


def covariance_rwa_limit(p: DimensionlessParams) -> CovarianceMatrix:
    """Deep-RWA limit (outside weak measurement): (1/P) diag(R, 1/R)."""
    pur = _nominal_purity(p)
    return CovarianceMatrix(vxx=p.R / pur, vpp=1.0 / (p.R * pur), vxp=0.0)


# ---------------------------------------------------------------------------
# optimal quadrature
# ---------------------------------------------------------------------------

def optimal_quadrature(v: CovarianceMatrix,
                       p: DimensionlessParams | None = None) -> QuadratureResult:
    """Minimum-variance quadrature delta_X cos(theta) + delta_P sin(theta).

    v_min is the smaller eigenvalue of the covariance matrix,
    (vxx + vpp - sqrt((vxx - vpp)^2 + 4 vxp^2))/2, and theta the minimizing
    angle folded into (-pi/2, pi/2].  When vxx = vpp with vxp > 0 the angle
    limit -pi/4 is taken (the arctan argument diverges there).
    """
    half_diff = 0.5 * (v.vxx - v.vpp)
    radius = math.hypot(half_diff, v.vxp)
    v_min = 0.5 * (v.vxx + v.vpp) - radius
    if radius == 0.0:
        return QuadratureResult(theta=0.0, v_min=v_min)
    phi = math.atan2(v.vxp, half_diff)
    theta = 0.5 * (phi + math.pi)
    while theta > 0.5 * math.pi:
        theta -= math.pi
    while theta <= -0.5 * math.pi:
        theta += math.pi
    return QuadratureResult(theta=theta, v_min=v_min)


def quadrature_nonrwa_form(v: CovarianceMatrix) -> float:
    """Simplified minimum variance (vxx + vpp - sqrt(vxx^2 + vpp^2))/2.

    Valid far outside the RWA regime, where vxp^2 = vxx*vpp/2 up to purity
    factors collapses the general eigenvalue formula to this shape.
    """
    return 0.5 * (v.vxx + v.vpp - math.hypot(v.vxx, v.vpp))


def quadrature_strong_squeezing_form(v: CovarianceMatrix) -> float:
    """First-order strong-squeezing value min(vxx, vpp)/2."""
    return 0.5 * min(v.vxx, v.vpp)
