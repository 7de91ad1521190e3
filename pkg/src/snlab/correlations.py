"""Entanglement and correlation quantifiers for two-mode Gaussian states.

Input is a 4x4 covariance matrix over (x_A, p_A, x_B, p_B). Symplectic
invariants come from the 2x2 block determinants; logarithmic negativity
from the partially transposed spectrum; mutual information from the
symplectic entropies. All logarithms are base 2, so both quantifiers
are in bits.

Two evaluation routes are provided and cross-checked in tests:

* the generic matrix route (``log_negativity``, ``mutual_information``)
  for any valid covariance matrix;
* a scalar route (``*_from_excess``) for symmetric states of the form
  (2 nbar + 1) x (pure), parameterized by the determinant excess
  delta = det(block)/hbar^2 - 1/4. The matrix route loses the signal to
  float cancellation once matrix entries dwarf delta (late-time weakly
  coupled packets live at delta ~ 1e-22 with entries ~1e13); the scalar
  route is exact algebra in delta and survives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MalformedCovarianceError

__all__ = [
    "CovarianceMatrix",
    "CorrelationReport",
    "entropy_term",
    "symplectic_eigenvalues",
    "pt_symplectic_minus",
    "log_negativity",
    "mutual_information",
    "correlation_report",
    "pt_minus_from_excess",
    "log_negativity_from_excess",
    "mutual_information_from_excess",
    "first_crossing",
]

_LN2 = math.log(2.0)
# Arguments of the entropy term may sit below the pure-state value 1/2
# by at most this much before the state is declared unphysical.
_PURITY_SLACK = 1e-12


@dataclass(frozen=True)
class CovarianceMatrix:
    """Validated 4x4 covariance matrix plus the hbar it is measured in.

    The matrix must be symmetric (to 1e-12 relative) with positive
    diagonal; it is stored symmetrized. ``hbar`` fixes the vacuum scale:
    a ground-state mode has diagonal (hbar/2 omega-ish) blocks and
    symplectic eigenvalue hbar/2.
    """

    matrix: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise MalformedCovarianceError(
                f"covariance must be 4x4, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise MalformedCovarianceError("covariance entries must be finite")
        scale = float(np.max(np.abs(m)))
        if scale == 0.0:
            raise MalformedCovarianceError("covariance is identically zero")
        if float(np.max(np.abs(m - m.T))) > 1e-12 * scale:
            raise MalformedCovarianceError("covariance is not symmetric")
        if np.any(np.diag(m) <= 0.0):
            raise MalformedCovarianceError(
                "covariance diagonal must be positive")
        if not (isinstance(self.hbar, (int, float)) and self.hbar > 0
                and math.isfinite(self.hbar)):
            raise MalformedCovarianceError(f"hbar must be positive, got {self.hbar!r}")
        m = 0.5 * (m + m.T)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def block_a(self) -> np.ndarray:
        return self.matrix[:2, :2]

    @property
    def block_b(self) -> np.ndarray:
        return self.matrix[2:, 2:]

    @property
    def block_cross(self) -> np.ndarray:
        return self.matrix[:2, 2:]


def _det2(b: np.ndarray) -> float:
    return float(b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0])


def _scaled_invariants(cm: CovarianceMatrix) -> tuple[float, float, float, float]:
    """Block determinants (a, b, c) and the full determinant, hbar = 1."""
    h2 = cm.hbar * cm.hbar
    da = _det2(cm.block_a) / h2
    db = _det2(cm.block_b) / h2
    dc = _det2(cm.block_cross) / h2
    dfull = float(np.linalg.det(cm.matrix / cm.hbar))
    return da, db, dc, dfull


def _pair_from_sum(total: float, dfull: float, what: str) -> tuple[float, float]:
    """Solve nu^2_{+-} from nu+^2 + nu-^2 = total, nu+^2 nu-^2 = dfull."""
    disc = total * total - 4.0 * dfull
    if disc < -1e-12 * max(total * total, 1.0):
        raise MalformedCovarianceError(
            f"negative symplectic discriminant ({disc:.3e}) for {what}")
    disc = max(disc, 0.0)
    root = math.sqrt(disc)
    hi = 0.5 * (total + root)
    if hi <= 0.0:
        raise MalformedCovarianceError(f"non-positive symplectic spectrum for {what}")
    lo = dfull / hi  # stable small root of the quadratic
    if lo > hi:  # degenerate pair, rounding flipped the order
        hi, lo = lo, hi
    return hi, lo


def symplectic_eigenvalues(cm: CovarianceMatrix) -> tuple[float, float]:
    """Symplectic spectrum (nu_plus, nu_minus), in units of hbar.

    Physical states satisfy nu >= hbar/2. Near a degenerate pair the
    individual eigenvalues are only determined to sqrt(eps) (the
    discriminant square root amplifies rounding), so the vacuum-floor
    test is made on the well-conditioned invariants instead:
    nu_minus >= 1/2 iff the eigenvalue-sum invariant is >= 1/2 and
    det >= sum/4 - 1/16 (hbar = 1 units). Violations beyond 1e-12
    relative raise MalformedCovarianceError; the returned eigenvalues
    are then floored at hbar/2, which absorbs the sqrt(eps) split noise
    of degenerate pairs.
    """
    da, db, dc, dfull = _scaled_invariants(cm)
    total = da + db + 2.0 * dc
    if total < 0.5 - _PURITY_SLACK * max(total, 1.0):
        raise MalformedCovarianceError(
            f"symplectic invariant sum {total:.15g} below the vacuum floor")
    if dfull < 0.25 * total - 0.0625 - _PURITY_SLACK * max(abs(dfull), 1.0):
        raise MalformedCovarianceError(
            f"covariance determinant {dfull:.15g} puts the smaller "
            "symplectic eigenvalue below the vacuum floor")
    hi, lo = _pair_from_sum(total, dfull, "the state")
    nu_hi = max(math.sqrt(max(hi, 0.0)), 0.5)
    nu_lo = max(math.sqrt(max(lo, 0.0)), 0.5)
    return nu_hi * cm.hbar, nu_lo * cm.hbar


def pt_symplectic_minus(cm: CovarianceMatrix) -> float:
    """Smaller symplectic eigenvalue after partial transposition.

    Partial transposition flips the sign of the cross-block determinant;
    the state is entangled exactly when the result drops below hbar/2.
    """
    da, db, dc, dfull = _scaled_invariants(cm)
    _, lo = _pair_from_sum(da + db - 2.0 * dc, dfull, "the partial transpose")
    return math.sqrt(max(lo, 0.0)) * cm.hbar


def log_negativity(cm: CovarianceMatrix) -> float:
    """Logarithmic negativity in bits: max(0, -log2(2 nu_tilde_minus / hbar))."""
    nu = pt_symplectic_minus(cm) / cm.hbar
    if nu <= 0.0:
        raise MalformedCovarianceError("partially transposed spectrum collapsed")
    return max(0.0, -math.log2(2.0 * nu))


def entropy_term(x: float) -> float:
    """Bosonic entropy kernel f(x) = (x+1/2)log2(x+1/2) - (x-1/2)log2(x-1/2).

    Defined for x >= 1/2 with f(1/2) = 0 exactly; arguments below
    1/2 - 1e-12 are outside the physical domain and raise DomainError,
    the sliver in between clamps to 1/2.
    """
    if not (isinstance(x, (int, float)) and math.isfinite(x)):
        raise DomainError(f"entropy argument must be finite, got {x!r}")
    if x < 0.5 - _PURITY_SLACK:
        raise DomainError(f"entropy argument {x!r} below the vacuum value 1/2")
    d = max(x - 0.5, 0.0)
    if d == 0.0:
        return 0.0
    # f(1/2 + d) = (1+d) log2(1+d) - d log2(d); log1p keeps small d exact.
    return (1.0 + d) * math.log1p(d) / _LN2 - d * math.log2(d)


def mutual_information(cm: CovarianceMatrix) -> float:
    """Quantum mutual information in bits from symplectic entropies.

    I = f(sqrt|A|) + f(sqrt|B|) - f(nu_plus) - f(nu_minus), all in
    hbar units.
    """
    da, db, _, _ = _scaled_invariants(cm)
    if da < 0.0 or db < 0.0:
        raise MalformedCovarianceError("negative single-mode block determinant")
    hi, lo = symplectic_eigenvalues(cm)
    val = (entropy_term(math.sqrt(da)) + entropy_term(math.sqrt(db))
           - entropy_term(hi / cm.hbar) - entropy_term(lo / cm.hbar))
    return max(0.0, val)


@dataclass(frozen=True)
class CorrelationReport:
    """All quantifiers of one covariance matrix, hbar-unit spectra included."""

    log_negativity_bits: float
    mutual_information_bits: float
    nu_plus: float
    nu_minus: float
    nu_tilde_minus: float

    def __post_init__(self):
        if self.log_negativity_bits < 0 or self.mutual_information_bits < 0:
            raise MalformedCovarianceError("correlation measures must be >= 0")


def correlation_report(cm: CovarianceMatrix) -> CorrelationReport:
    hi, lo = symplectic_eigenvalues(cm)
    return CorrelationReport(
        log_negativity_bits=log_negativity(cm),
        mutual_information_bits=mutual_information(cm),
        nu_plus=hi / cm.hbar,
        nu_minus=lo / cm.hbar,
        nu_tilde_minus=pt_symplectic_minus(cm) / cm.hbar,
    )


# ---------------------------------------------------------------------------
# Scalar route for symmetric thermal-times-pure states.
# ---------------------------------------------------------------------------

def _check_excess(delta, nbar: float):
    d = np.asarray(delta, dtype=float)
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise DomainError("determinant excess must be finite and >= 0")
    if not (isinstance(nbar, (int, float)) and math.isfinite(nbar) and nbar >= 0):
        raise DomainError(f"occupation must be finite and >= 0, got {nbar!r}")
    return d


def _squeeze_factor(d: np.ndarray) -> np.ndarray:
    """exp(2r) of the pure core: sqrt(1 + 4 delta) + 2 sqrt(delta)."""
    return np.sqrt(1.0 + 4.0 * d) + 2.0 * np.sqrt(d)


def pt_minus_from_excess(delta, nbar: float = 0.0):
    """nu_tilde_minus in hbar units: (2 nbar + 1) / (2 exp(2r)).

    Equals 1/2 at the separability border; scalar or array delta.
    """
    d = _check_excess(delta, nbar)
    out = (2.0 * nbar + 1.0) / (2.0 * _squeeze_factor(d))
    return float(out) if np.ndim(delta) == 0 else out


def log_negativity_from_excess(delta, nbar: float = 0.0):
    """Logarithmic negativity in bits of the scaled-pure family.

    max(0, log2(exp(2r)) - log2(2 nbar + 1)) with exp(2r) - 1 kept in
    log1p form, so values ~ sqrt(delta) survive down to delta ~ 1e-300.
    """
    d = _check_excess(delta, nbar)
    # exp(2r) - 1 = 2 sqrt(d) + 4 d / (1 + sqrt(1 + 4 d)), all additive.
    em1 = 2.0 * np.sqrt(d) + 4.0 * d / (1.0 + np.sqrt(1.0 + 4.0 * d))
    val = np.log1p(em1) / _LN2 - math.log2(2.0 * nbar + 1.0)
    out = np.maximum(0.0, val)
    return float(out) if np.ndim(delta) == 0 else out


def _phi(v):
    """v log2 v with the limit value 0 at v = 0."""
    v = np.asarray(v, dtype=float)
    safe = np.where(v > 0.0, v, 1.0)
    return np.where(v > 0.0, v * np.log2(safe), 0.0)


def _phi_diff(u, h):
    """phi(u + h) - phi(u) for phi(v) = v log2 v, u > 0, h >= 0, stable."""
    return (h * np.log(u) + (u + h) * np.log1p(h / u)) / _LN2


def mutual_information_from_excess(delta, nbar: float = 0.0):
    """Mutual information in bits of the scaled-pure family.

    With lam = 2 nbar + 1: I = 2 f(lam sqrt(1/4 + delta)) - 2 f(lam / 2),
    evaluated as a difference of phi(v) = v log2 v increments so the
    delta -> 0 limit degrades gracefully instead of cancelling.
    """
    d = _check_excess(delta, nbar)
    lam = 2.0 * nbar + 1.0
    # h = lam (sqrt(1/4 + delta) - 1/2), written without cancellation.
    h = lam * 2.0 * d / (1.0 + np.sqrt(1.0 + 4.0 * d))
    upper = _phi_diff((lam + 1.0) / 2.0, h)
    # lower argument is (lam - 1)/2 = nbar exactly; the log1p form needs
    # a normal-range u, the direct difference covers the rest since
    # |phi(nbar)| is then negligible next to phi(nbar + h)
    if nbar > 1e-300:
        lower = _phi_diff(nbar, h)
    else:
        lower = _phi(nbar + h) - _phi(nbar)
    out = np.maximum(0.0, 2.0 * (upper - lower))
    return float(out) if np.ndim(delta) == 0 else out


def first_crossing(times, values, threshold: float) -> float | None:
    """First time a sampled trajectory rises through a threshold.

    Linear interpolation between the bracketing samples; None when the
    trajectory never reaches the threshold. Times must be increasing.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1 or t.size < 2:
        raise DomainError("need matching 1-d time/value arrays with >= 2 samples")
    if np.any(np.diff(t) <= 0):
        raise DomainError("times must be strictly increasing")
    above = v >= threshold
    if above[0]:
        return float(t[0])
    idx = np.nonzero(above)[0]
    if idx.size == 0:
        return None
    i = int(idx[0])
    frac = (threshold - v[i - 1]) / (v[i] - v[i - 1])
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))
