"""A membrane with a second mode: degradation bounds and the rescue by feedback.

The background resonance at 2*Omega0 acts like extra white measurement noise
whose level is bounded between the mode's spectrum at zero frequency and at
the crossing with the fundamental.  That brackets the conditional variance,
creates an optimal measurement strength, and makes squeezing impossible
without softening - but possible again for small enough R.

Run:  python demos/background_mode_bounds.py
"""

import math

import numpy as np

from mechsqueeze import (
    FeedbackSetting,
    MeasurementParams,
    OscillatorParams,
    SecondMode,
    min_feedback_for_squeezing,
    optimal_measurement,
    photons_to_null_spring,
)
from mechsqueeze.multimode import bound_at_photons

TWO_PI = 2 * math.pi

osc = OscillatorParams(mass=7e-12, omega0=TWO_PI * 0.8e6,
                       gamma=TWO_PI * 0.8e6 / 1e6, temperature=300.0)
meas = MeasurementParams(eta=0.63, frequency_pull=TWO_PI * 14e6 / 1e-9,
                         kappa=13527709.112952085, n_cav=4e8)
mode2 = SecondMode(omega2=2 * osc.omega0, q2=1e6, mass2=7e-12, g_ratio=1.0)

print("conditional position variance bounds vs photon number (R = 1):")
print(f"{'n_cav':>10} {'lower':>9} {'upper':>9} {'single-mode':>12} {'regime':>22}")
for n in np.logspace(6, 11, 11):
    b = bound_at_photons(osc, meas, FeedbackSetting.off(), mode2, float(n))
    from mechsqueeze import covariance_closed, derive_dimensionless
    p = derive_dimensionless(
        osc, MeasurementParams(eta=0.63,
                               cooperativity=meas.cooperativity_at(osc, float(n))),
        FeedbackSetting.off())
    single = covariance_closed(p).vxx
    print(f"{n:10.1e} {b.lower:9.3f} {b.upper:9.3f} {single:12.3f} "
          f"{b.regime_flag:>22}")

print("\nthe optimum measurement strength, and its independence from feedback:")
for r in (1.0, 0.1, 0.04):
    om = optimal_measurement(osc, meas, FeedbackSetting.from_ratio(r), mode2)
    print(f"R = {r:5.2f}: lower-bound optimum at n = {om.lower.n_cav:.3g} "
          f"(v = {om.lower.variance:7.3f}); upper at n = {om.upper.n_cav:.3g} "
          f"(v = {om.upper.variance:7.3f})")

r_max = min_feedback_for_squeezing(osc, meas, mode2)
print(f"\nlargest squeezing-capable shift ratio: R_max = {r_max:.4f} "
      f"(about 1/{1 / r_max:.0f})")

n_null = photons_to_null_spring(osc, meas)
print(f"radiation pressure can null the spring entirely with "
      f"{n_null:.3g} intracavity photons")
