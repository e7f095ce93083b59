"""How much cooperativity does squeezing take, and how much does feedback save?

Closed-form thresholds (solved self-consistently in C) next to the bisected
full-model crossings, across thermal occupations and spring-shift ratios.

Run:  python demos/squeezing_thresholds.py
"""

from mechsqueeze import momentum_threshold, position_threshold
from mechsqueeze.errors import WeakMeasurementError

Q = 1e6

print(f"position squeezing thresholds in C at Q = {Q:.0e}, eta = 1")
print(f"{'n_th':>8} {'R':>6} {'formula':>9} {'closed':>12} {'full model':>12} {'ratio':>7}")
for n_th in (1e2, 1e4, 1e6, 1e8):
    for r in (0.1, 1.0):
        try:
            t = position_threshold(eta=1.0, n_th=n_th, Q=Q, R=r)
        except WeakMeasurementError:
            print(f"{n_th:8.0e} {r:6.2f}   (threshold falls in the weak-measurement regime)")
            continue
        full = f"{t.c_full_model:12.4g}" if t.c_full_model else "         n/a"
        ratio = (f"{t.c_closed_form / t.c_full_model:7.3f}"
                 if t.c_full_model else "    n/a")
        print(f"{n_th:8.0e} {r:6.2f} {t.formula_used:>9} {t.c_closed_form:12.4g} "
              f"{full} {ratio}")

print("\nsoftening discount: threshold(R)/threshold(1) tracks R^2 in the RWA "
      "regime and R^(4/3) in the thermal non-RWA regime")
base = position_threshold(eta=1.0, n_th=1e8, Q=Q, R=1.0, full_model=False)
for r in (0.7, 0.5, 0.3):
    t = position_threshold(eta=1.0, n_th=1e8, Q=Q, R=r, full_model=False)
    print(f"R = {r}: discount {t.c_closed_form / base.c_closed_form:.4f} "
          f"(R^4/3 = {r ** (4 / 3):.4f})")

print("\nmomentum squeezing needs hardening; the variance has an interior optimum")
for r in (1.0, 3.0, 10.0):
    t = momentum_threshold(eta=1.0, n_th=2e3, Q=Q, R=r)
    if t.c_full_model is None:
        print(f"R = {r:4.1f}: no crossing (best vpp = {t.v_at_optimal:.3f} "
              f"at C = {t.c_optimal:.3g})")
    else:
        print(f"R = {r:4.1f}: threshold C = {t.c_full_model:.4g}, optimum "
              f"vpp = {t.v_at_optimal:.3f} at C = {t.c_optimal:.3g}")
