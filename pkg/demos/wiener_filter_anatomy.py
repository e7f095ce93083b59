"""Anatomy of the causal estimation filters.

Two constructions of the same filter run side by side: the closed-form
coefficients, and the generic route (factorize the record spectrum into a
causal factor, divide the cross-spectrum by its conjugate, keep the causal
part).  Their agreement is the repository's filter-level oracle.  If
matplotlib is installed the shapes are saved to demos/output/.

Run:  python demos/wiener_filter_anatomy.py
"""

from pathlib import Path

import numpy as np

from mechsqueeze import DimensionlessParams, filter_closed_form, filter_numeric
from mechsqueeze.wiener import (
    POSITION,
    MOMENTUM,
    acausal_energy_fraction,
    spectral_factorize,
    _scaled_measured_spectrum,
)

p = DimensionlessParams(eta=0.8, C=500.0, n_th=1e3, Q=1e4, R=0.5)
print(f"effective estimation susceptibility: peak at Omega' = {p.omega_prime:.4f},"
      f" width Gamma' = {p.gamma_prime:.4f}  (units of Omega0)")

# spectral factor of the measured-record PSD: all roots in the lower half-plane
spectrum = _scaled_measured_spectrum(p)
factor = spectral_factorize(spectrum)
print("factor zeros:", np.round(factor.num_roots, 6))
print("factor poles:", np.round(factor.den_roots, 6))
grid = np.logspace(-3, 2, 1500)
print(f"|M|^2 reproduces the record PSD to {factor.residual(spectrum, grid):.2e}")

# closed form vs generic construction
for target in (POSITION, MOMENTUM):
    filt = filter_closed_form(p, target=target)
    _, numeric = filter_numeric(p, target=target, omegas=grid)
    closed = filt(grid)
    rel = np.max(np.abs(numeric - closed)) / np.max(np.abs(closed))
    frac = acausal_energy_fraction(filt, omega_max=300.0, n=2**17)
    print(f"{target:9s}: A = {filt.a:+.6f}, B = {filt.b:+.6f}, "
          f"closed-vs-generic {rel:.1e}, acausal energy {frac:.1e}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the plot")
else:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    hx = filter_closed_form(p, target=POSITION)(grid)
    ax1.loglog(grid, np.abs(hx), label="|H_x|")
    ax1.axvline(p.omega_prime, color="gray", linestyle=":", label="Omega'")
    ax1.set_xlabel("omega / Omega0")
    ax1.legend(frameon=False)
    omegas = np.linspace(-60, 60, 2**15, endpoint=False)
    from mechsqueeze.wiener import impulse_response

    t, h = impulse_response(filter_closed_form(p, target=POSITION)(omegas)
                            * np.hanning(omegas.size), omegas)
    keep = (t > -3) & (t < 25)
    ax2.plot(t[keep], h[keep].real)
    ax2.axvline(0, color="gray", linestyle=":")
    ax2.set_xlabel("t * Omega0")
    ax2.set_ylabel("impulse response")
    fig.tight_layout()
    out = Path(__file__).parent / "output"
    out.mkdir(exist_ok=True)
    fig.savefig(out / "wiener_filter_anatomy.png", dpi=140)
    print(f"saved {out / 'wiener_filter_anatomy.png'}")
