"""Small deterministic 1-D searches shared by criteria and multimode."""

from __future__ import annotations

import math

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, lo: float, hi: float, *, rtol: float = 1e-6,
                       max_iter: int = 200) -> tuple[float, float]:
    """Minimum of a unimodal f on [lo, hi]; returns (x_min, f(x_min))."""
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= rtol * (abs(a) + abs(b)) * 0.5:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    if fc < fd:
        return c, fc
    return d, fd


def log_golden_min(f, lo: float, hi: float, *, rtol: float = 1e-6) -> tuple[float, float]:
    """Golden-section on log10(x) for positive ranges spanning decades."""
    xm, fm = golden_section_min(lambda t: f(10.0 ** t),
                                math.log10(lo), math.log10(hi), rtol=rtol)
    return 10.0 ** xm, fm
