"""Closed-form Gaussian dynamics of two gravitationally coupled packets.

Two identical particles sit in identical traps a fixed distance apart.
At t = 0 the traps are switched off; each packet keeps its Gaussian
shape while the pair potential, expanded to quadratic order about the
trap centres, mixes the two. The centre-of-mass mode evolves freely and
the relative mode rolls on an inverted harmonic hill, so the 4x4
covariance matrix is known in closed form at every time.

Everything here is analytic: no grids, no stepping. The matrix is
assembled in trap units (hbar = m = omega0 = 1, vacuum variance 1/2)
and scaled to the caller's units at the end.

Phase-space ordering throughout: (x_A, p_A, x_B, p_B).
"""

from __future__ import annotations

import math

import numpy as np

from .correlations import CovarianceMatrix
from .errors import DomainError
from .params import PhysicalParams

__all__ = [
    "coupling_frequency",
    "phonon_number",
    "determinant_excess",
    "scaled_covariance",
    "covariance_at",
    "thermal_scale",
]


def coupling_frequency(params: PhysicalParams) -> float:
    """Rate of the gravity-driven mode mixing: sqrt(4 G m / L^3).

    This is the frequency scale at which the quadratic pair coupling
    squeezes the relative mode; it vanishes with G.
    """
    return math.sqrt(4.0 * params.G * params.mass / params.separation**3)


def phonon_number(params: PhysicalParams) -> float:
    """Mean thermal occupation of the trap mode before release.

    Bose factor 1/(exp(hbar omega0 / kB T) - 1); exactly 0.0 at T = 0.
    """
    if params.temperature == 0.0:
        return 0.0
    ratio = params.hbar * params.omega0 / (params.kB * params.temperature)
    if ratio > 745.0:  # exp would overflow; occupation is sub-denormal
        return 0.0
    return 1.0 / math.expm1(ratio)


def _sinh_ratio(x: np.ndarray) -> np.ndarray:
    """sinh(x)/x, finite at 0."""
    return np.where(x == 0.0, 1.0, np.sinh(x) / np.where(x == 0.0, 1.0, x))


def _sinh_sq_ratio_minus_one(x: np.ndarray) -> np.ndarray:
    """(sinh(x)/x)^2 - 1, computed without cancellation.

    Series sum_{n>=1} 2^{2n-1} x^{2n-2} / (2n)! below |x| = 1/2 (12
    terms reach the last bit there); direct evaluation above.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) <= 0.5
    out = np.empty_like(x)
    if np.any(small):
        xs2 = x[small] ** 2
        acc = np.zeros_like(xs2)
        term = np.ones_like(xs2)  # n = 1 term of sinh^2/x^2 is 1; start sum at n=2
        for n in range(2, 14):
            term = term * xs2 * (4.0 / ((2 * n) * (2 * n - 1)))
            acc += term
        out[small] = acc
    if np.any(~small):
        u = _sinh_ratio(x[~small])
        out[~small] = (u - 1.0) * (u + 1.0)
    return out


def _sinh_ratio_minus_cosh(x: np.ndarray) -> np.ndarray:
    """sinh(x)/x - cosh(x), computed without cancellation.

    Series -sum_{n>=1} 2n x^{2n} / (2n+1)! below |x| = 1/2; direct
    evaluation above (the two terms differ by ~8% at x = 1/2).
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) <= 0.5
    out = np.empty_like(x)
    if np.any(small):
        xs2 = x[small] ** 2
        acc = np.zeros_like(xs2)
        term = np.ones_like(xs2)
        for n in range(1, 14):
            term = term * xs2 / ((2 * n) * (2 * n + 1))
            acc += 2 * n * term
        out[small] = -acc
    if np.any(~small):
        xl = x[~small]
        out[~small] = np.sinh(xl) / xl - np.cosh(xl)
    return out


def determinant_excess(t, params: PhysicalParams):
    """det(single-packet covariance block)/hbar^2 - 1/4 at time t.

    The determinant of either particle's reduced 2x2 covariance block
    exceeds the pure-state value 1/4 (in hbar units) by

        delta = [ (tau^2 + x^2) (sinh(x)/x - cosh(x))^2
                  + (omega/omega0)^2 sinh(x)^2
                  + x^2 ((sinh(x)/x)^2 - 1) ] / 16

    with tau = omega0 t and x = omega t. Every term is non-negative, so
    this form survives in float64 even when delta ~ 1e-22 while the
    matrix entries are ~1e13; assembling the block and taking its
    determinant would lose the value completely there. delta is
    temperature independent (thermal noise scales the whole matrix) and
    feeds the stable entanglement/information evaluators in
    snlab.correlations.

    Accepts scalar or array t (seconds in params' unit system); returns
    the same shape.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or not np.all(np.isfinite(t_arr)):
        raise DomainError("time must be finite and >= 0")
    tau = params.omega0 * t_arr
    omega = coupling_frequency(params)
    wr = omega / params.omega0
    x = wr * tau
    uc = _sinh_ratio_minus_cosh(x)
    phi = _sinh_sq_ratio_minus_one(x)
    delta = ((tau**2 + x**2) * uc**2 + (wr * np.sinh(x)) ** 2 + x**2 * phi) / 16.0
    return float(delta) if t_arr.ndim == 0 else delta


def scaled_covariance(t_scaled: float, omega_ratio: float) -> np.ndarray:
    """Pure-state covariance in trap units at scaled time tau = omega0 t.

    omega_ratio is the coupling-to-trap frequency ratio. The returned
    4x4 array is dimensionless (vacuum = I/2) and exact for
    omega_ratio = 0 (two free packets).
    """
    tau = float(t_scaled)
    wr = float(omega_ratio)
    if not (math.isfinite(tau) and tau >= 0):
        raise DomainError(f"scaled time must be finite and >= 0, got {tau!r}")
    if not (math.isfinite(wr) and wr >= 0):
        raise DomainError(f"frequency ratio must be finite and >= 0, got {wr!r}")
    x = wr * tau
    s = math.sinh(x)
    c = math.cosh(x)
    u = float(_sinh_ratio(np.asarray(x)))
    # Mode picture: centre of mass spreads freely, relative mode rolls
    # on the inverted hill. Forms below are regular as omega_ratio -> 0.
    shear = s * s + (tau * u) ** 2          # (1 + 1/wr^2) sinh^2, wr-safe
    press = (1.0 + wr * wr) * s * s
    cross = wr * 2.0 * s * c + 2.0 * tau * u * c  # (wr + 1/wr) sinh(2x)

    m = np.empty((4, 4), dtype=float)
    xx = 0.25 * (2.0 + tau * tau + shear)
    pp = 0.25 * (2.0 + press)
    xp = 0.125 * (2.0 * tau + cross)
    xx_ab = 0.25 * (tau * tau - shear)
    pp_ab = -0.25 * press
    xp_ab = 0.125 * (2.0 * tau - cross)
    m[0, 0] = m[2, 2] = xx
    m[1, 1] = m[3, 3] = pp
    m[0, 1] = m[1, 0] = m[2, 3] = m[3, 2] = xp
    m[0, 2] = m[2, 0] = xx_ab
    m[1, 3] = m[3, 1] = pp_ab
    m[0, 3] = m[3, 0] = m[1, 2] = m[2, 1] = xp_ab
    return m


def covariance_at(t: float, params: PhysicalParams) -> CovarianceMatrix:
    """Full covariance matrix at time t in params' units.

    Builds the pure-state matrix in trap units, applies the thermal
    factor (2 nbar + 1) from params.temperature, then restores units
    via x -> x sqrt(hbar/(m omega0)), p -> p sqrt(hbar m omega0).
    """
    if not (isinstance(t, (int, float)) and math.isfinite(t) and t >= 0):
        raise DomainError(f"time must be finite and >= 0, got {t!r}")
    wr = coupling_frequency(params) / params.omega0
    m = scaled_covariance(params.omega0 * t, wr)
    m = m * (2.0 * phonon_number(params) + 1.0)
    xs = math.sqrt(params.hbar / (params.mass * params.omega0))
    ps = math.sqrt(params.hbar * params.mass * params.omega0)
    scale = np.array([xs, ps, xs, ps])
    m = m * np.outer(scale, scale)
    return CovarianceMatrix(m, hbar=params.hbar)


def thermal_scale(cm: CovarianceMatrix, nbar: float) -> CovarianceMatrix:
    """Covariance of the same dynamics started from a thermal trap state.

    Initial thermal occupation multiplies every second moment by
    (2 nbar + 1); the linear dynamics preserves that overall factor.
    """
    if not (isinstance(nbar, (int, float)) and math.isfinite(nbar) and nbar >= 0):
        raise DomainError(f"occupation must be finite and >= 0, got {nbar!r}")
    return CovarianceMatrix(cm.matrix * (2.0 * nbar + 1.0), hbar=cm.hbar)
