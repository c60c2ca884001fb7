"""Comparison trigonometry: sin_kappa, cot_kappa and the domain bound pi_kappa.

sin_kappa solves v'' + kappa*v = 0 with v(0)=0, v'(0)=1; the three branches
(trigonometric, affine, hyperbolic) are selected by the sign of kappa.
"""

import math

import numpy as np


def pi_kappa(kappa: float) -> float:
    """First zero of sin_kappa: pi/sqrt(kappa) for kappa > 0, else infinity."""
    if kappa > 0.0:
        return math.pi / math.sqrt(kappa)
    return math.inf


def sin_kappa(kappa: float, x):
    x = np.asarray(x, dtype=float)
    if kappa > 0.0:
        rk = math.sqrt(kappa)
        out = np.sin(rk * x) / rk
    elif kappa < 0.0:
        rk = math.sqrt(-kappa)
        out = np.sinh(rk * x) / rk
    else:
        out = x.copy()
    return out if out.ndim else float(out)


def cos_kappa(kappa: float, x):
    """Derivative of sin_kappa."""
    x = np.asarray(x, dtype=float)
    if kappa > 0.0:
        out = np.cos(math.sqrt(kappa) * x)
    elif kappa < 0.0:
        out = np.cosh(math.sqrt(-kappa) * x)
    else:
        out = np.ones_like(x)
    return out if out.ndim else float(out)


def cot_kappa(kappa: float, x):
    """sin_kappa'/sin_kappa.  Only meaningful for x in (0, pi_kappa)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = cos_kappa(kappa, x) / sin_kappa(kappa, x)
    return out if out.ndim else float(out)
