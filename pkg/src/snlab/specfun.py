"""Special functions needed by the gravitational-potential kernels.

Two functions only: the error function (Gaussian charge seen from
outside its core) and the complete elliptic integral of the first kind
(azimuthal integral of a 1/r kernel around a ring). Both accept scalars
or numpy arrays and are vectorized elementwise.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

__all__ = ["erf", "elliptic_k"]

# Largest double strictly below 1; erf saturates to +-1 in float64 for
# |x| >~ 5.86 and the contract promises the open interval (-1, 1).
_ONE_MINUS = math.nextafter(1.0, 0.0)


def _as_float_array(x, name: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return arr, (arr.ndim == 0)


def erf(x):
    """Error function, elementwise; result clamped to the open (-1, 1).

    The platform implementation (scipy.special.erf) is correctly
    rounded to well under 1e-14 relative error; saturated values at
    large |x| are pulled one ulp inside +-1 so downstream divisions by
    (1 - erf) style expressions never hit exact zero.
    """
    arr, scalar = _as_float_array(x, "x")
    from scipy.special import erf as _erf

    y = np.clip(_erf(arr), -_ONE_MINUS, _ONE_MINUS)
    return float(y) if scalar else y


def elliptic_k(k):
    """Complete elliptic integral K(k), modulus convention, elementwise.

    Computed by the arithmetic-geometric mean: K(k) = pi / (2 AGM(1, k'))
    with k' = sqrt((1 - k)(1 + k)). Quadratic convergence gives full
    double precision in <= 9 sweeps for k <= 1 - 1e-10.

    Domain: 0 <= k < 1. Values at or beyond 1 (where K diverges
    logarithmically) raise DomainError; callers that need the k -> 1
    neighbourhood average the log singularity analytically instead.
    """
    arr, scalar = _as_float_array(k, "k")
    if np.any(arr < 0.0) or np.any(arr >= 1.0):
        bad = arr[(arr < 0.0) | (arr >= 1.0)]
        raise DomainError(
            f"elliptic modulus must satisfy 0 <= k < 1, got {bad.flat[0]!r}"
        )
    # (1-k)(1+k) instead of 1-k^2: keeps k' accurate next to k = 1.
    y = _agm_k(np.sqrt((1.0 - arr) * (1.0 + arr)))
    return float(y) if scalar else y


def _agm_k(kprime: np.ndarray) -> np.ndarray:
    """K from the complementary modulus: pi / (2 AGM(1, k')).

    Internal entry point for kernel code that knows k' directly (it is
    better conditioned than 1 - k^2 next to the logarithmic end).
    Requires 0 < k' <= 1 elementwise.
    """
    a = np.ones_like(kprime)
    b = np.asarray(kprime, dtype=float).copy()
    for _ in range(32):
        if np.all(np.abs(a - b) <= 4.0 * np.finfo(float).eps * a):
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return np.pi / (a + b)  # a and b have converged together
