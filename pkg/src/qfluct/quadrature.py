"""Piecewise adaptive quadrature on the real line.

Integrands in this package are smooth between known kinks (box kernel
edges, region boundaries), so every integral is split at those points and
each piece goes to QUADPACK.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate

from .errors import QuadratureFailure


def integrate_pieces(func, breakpoints, epsabs=1e-13, epsrel=1e-11, limit=200):
    """Integrate ``func`` over [breakpoints[0], breakpoints[-1]].

    Returns ``(value, error_estimate)``. Raises ``QuadratureFailure`` when
    QUADPACK reports trouble or its error estimate misses the tolerance by
    more than a factor of 100.
    """
    pts = np.unique(np.asarray(breakpoints, dtype=float))
    total = 0.0
    err = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, e = integrate.quad(func, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
            except integrate.IntegrationWarning as exc:
                raise QuadratureFailure(f"quadrature on [{a!r}, {b!r}] failed: {exc}") from exc
        if not np.isfinite(val) or e > 100 * max(epsabs, epsrel * abs(val)):
            raise QuadratureFailure(f"quadrature on [{a!r}, {b!r}] did not converge (err {e:.3e})")
        total += val
        err += e
    return total, err
