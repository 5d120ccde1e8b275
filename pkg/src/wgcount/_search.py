"""One-dimensional golden-section search used by the gap scan and the angle optimizers."""
from __future__ import annotations

import math
from typing import Callable

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-7) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on [lo, hi]; returns (x, f(x))."""
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    x = 0.5 * (lo + hi)
    return x, f(x)


def golden_section_min(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-7) -> tuple[float, float]:
    x, v = golden_section_max(lambda t: -f(t), lo, hi, tol)
    return x, -v
