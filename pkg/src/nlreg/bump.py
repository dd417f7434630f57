"""Fixed polynomial bump profiles.

All cutoffs in the library share one radial profile: the quintic bump
b(t) = 1 for |t| <= 1/2, b(t) = 0 for |t| >= 1, joined by the unique
quintic with two vanishing derivatives at both ends.  A fixed polynomial
(rather than exp(-1/t) mollifiers) keeps every downstream quantity
bit-reproducible.
"""

from __future__ import annotations

import numpy as np


def smooth_step(t):
    """Quintic step: 0 at t<=0, 1 at t>=1, C^2 across the joins."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def bump_profile(t):
    """Even profile: 1 on |t|<=1/2, 0 on |t|>=1, quintic C^2 join between."""
    a = np.abs(t)
    return smooth_step(2.0 * (1.0 - a))


def bump_profile_d1(t):
    """First derivative of bump_profile (for Jacobians of flattening maps)."""
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    u = np.clip(2.0 * (1.0 - a), 0.0, 1.0)
    # d/dt smooth_step(u) = s'(u) * (-2 sign(t)); s'(u) = 30 u^2 (1-u)^2
    ds = 30.0 * u * u * (1.0 - u) * (1.0 - u)
    out = -2.0 * np.sign(t) * ds
    out = np.where((a <= 0.5) | (a >= 1.0), 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def radial_cutoff(x, radius):
    """phi_R(x) = 1 on B_R, 0 outside B_{2R}.

    x is a point array of shape (..., N); a bare scalar is treated as a 1D point.
    """
    x = np.asarray(x, dtype=float)
    r = np.abs(x) if x.ndim == 0 else np.sqrt(np.sum(x * x, axis=-1))
    return bump_profile(r / (2.0 * radius))
