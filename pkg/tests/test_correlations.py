"""Tests of the Gaussian correlation quantifiers.

Oracle for the symplectic spectrum: |eigenvalues of i Omega sigma|
via a dense eigensolver, with Omega the block-diagonal symplectic form.
This route is numerically independent of the block-determinant
formulas used by the implementation.

The scalar *_from_excess family is checked against the matrix route in
regimes where float64 can represent both, and against 50-digit mpmath
in the cancellation regime the matrix route cannot reach.
"""

import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snlab import correlations as co
from snlab import gaussian as ga
from snlab.errors import DomainError, MalformedCovarianceError
from snlab.params import PhysicalParams

OMEGA_FORM = np.array([
    [0.0, 1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0, 0.0],
])


def symplectic_oracle(matrix: np.ndarray) -> tuple[float, float]:
    """|eig(i Omega sigma)| comes in two degenerate pairs (nu+, nu-)."""
    ev = np.sort(np.abs(np.linalg.eigvals(1j * OMEGA_FORM @ matrix)))
    assert ev[0] == pytest.approx(ev[1], rel=1e-9)
    assert ev[2] == pytest.approx(ev[3], rel=1e-9)
    return float(ev[3]), float(ev[0])


def pt_oracle(matrix: np.ndarray) -> float:
    """Partial transposition = momentum sign flip on packet B."""
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    return symplectic_oracle(flip @ matrix @ flip)[1]


def pure_state(tau: float, ratio: float, lam: float = 1.0) -> co.CovarianceMatrix:
    return co.CovarianceMatrix(lam * ga.scaled_covariance(tau, ratio))


# --- validation --------------------------------------------------------------

def test_rejects_wrong_shape_and_nonfinite():
    with pytest.raises(MalformedCovarianceError):
        co.CovarianceMatrix(np.eye(3))
    bad = 0.5 * np.eye(4)
    bad[0, 0] = math.nan
    with pytest.raises(MalformedCovarianceError):
        co.CovarianceMatrix(bad)


def test_rejects_asymmetric_and_nonpositive_diagonal():
    m = 0.5 * np.eye(4)
    m[0, 1] = 0.3
    with pytest.raises(MalformedCovarianceError):
        co.CovarianceMatrix(m)
    m = 0.5 * np.eye(4)
    m[2, 2] = -0.5
    with pytest.raises(MalformedCovarianceError):
        co.CovarianceMatrix(m)


def test_rejects_unphysical_state_below_vacuum():
    with pytest.raises(MalformedCovarianceError):
        co.symplectic_eigenvalues(co.CovarianceMatrix(0.4 * np.eye(4)))


def test_matrix_is_frozen_copy():
    src = 0.5 * np.eye(4)
    cm = co.CovarianceMatrix(src)
    src[0, 0] = 99.0
    assert cm.matrix[0, 0] == 0.5
    with pytest.raises(ValueError):
        cm.matrix[0, 0] = 1.0


# --- symplectic spectra vs eigensolver oracle --------------------------------

@pytest.mark.parametrize("tau,ratio,lam", [
    (0.7, 0.3, 1.0), (2.0, 0.5, 1.0), (1.2, 0.15, 2.4), (3.0, 0.8, 7.0),
])
def test_symplectic_eigenvalues_match_oracle(tau, ratio, lam):
    cm = pure_state(tau, ratio, lam)
    hi, lo = co.symplectic_eigenvalues(cm)
    o_hi, o_lo = symplectic_oracle(cm.matrix)
    assert hi == pytest.approx(o_hi, rel=1e-8)
    assert lo == pytest.approx(o_lo, rel=1e-8)
    # scaled-pure family: both eigenvalues equal lam/2 exactly
    assert hi == pytest.approx(lam / 2, rel=1e-7)
    assert lo == pytest.approx(lam / 2, rel=1e-7)


@pytest.mark.parametrize("tau,ratio,lam", [
    (0.7, 0.3, 1.0), (2.0, 0.5, 1.0), (1.2, 0.15, 2.4), (1.0, 0.6, 1.8),
])
def test_pt_minus_matches_oracle(tau, ratio, lam):
    cm = pure_state(tau, ratio, lam)
    assert co.pt_symplectic_minus(cm) == pytest.approx(pt_oracle(cm.matrix),
                                                       rel=1e-8)


def test_hbar_units_carried_through():
    hbar = 1.054571817e-34
    cm = co.CovarianceMatrix(hbar * ga.scaled_covariance(1.0, 0.4), hbar=hbar)
    hi, lo = co.symplectic_eigenvalues(cm)
    assert lo == pytest.approx(hbar / 2, rel=1e-7)
    assert co.log_negativity(cm) == pytest.approx(
        co.log_negativity(pure_state(1.0, 0.4)), rel=1e-9)


# --- entropy kernel -----------------------------------------------------------

def test_entropy_term_exact_zero_at_half():
    assert co.entropy_term(0.5) == 0.0
    assert co.entropy_term(0.5 - 1e-13) == 0.0  # inside the clamp sliver


def test_entropy_term_matches_mpmath():
    with mp.workdps(40):
        for x in (0.5 + 1e-12, 0.50001, 0.75, 1.5, 40.0):
            want = float((mp.mpf(x) + mp.mpf('0.5')) * mp.log(mp.mpf(x) + mp.mpf('0.5'), 2)
                         - (mp.mpf(x) - mp.mpf('0.5')) * mp.log(mp.mpf(x) - mp.mpf('0.5'), 2))
            assert co.entropy_term(x) == pytest.approx(want, rel=1e-12)


def test_entropy_term_domain_error_below_half():
    with pytest.raises(DomainError):
        co.entropy_term(0.499)
    with pytest.raises(DomainError):
        co.entropy_term(math.nan)


@given(st.floats(min_value=0.5, max_value=1e6))
@settings(max_examples=200, deadline=None)
def test_entropy_term_nonnegative_and_increasing(x):
    v = co.entropy_term(x)
    assert v >= 0.0
    assert co.entropy_term(x + 0.1) > v


# --- quantifiers: matrix route ------------------------------------------------

def test_vacuum_has_no_correlations():
    cm = co.CovarianceMatrix(0.5 * np.eye(4))
    assert co.log_negativity(cm) == 0.0
    assert co.mutual_information(cm) == 0.0
    assert co.pt_symplectic_minus(cm) == pytest.approx(0.5, rel=1e-12)


def test_log_negativity_positive_for_squeezed_pair():
    cm = pure_state(2.0, 0.5)
    en = co.log_negativity(cm)
    assert en > 0.01
    # oracle comparison through the PT spectrum
    assert en == pytest.approx(-math.log2(2 * pt_oracle(cm.matrix)), rel=1e-8)


def test_report_fields_consistent():
    cm = pure_state(1.5, 0.4, 1.6)
    rep = co.correlation_report(cm)
    assert rep.log_negativity_bits == co.log_negativity(cm)
    assert rep.mutual_information_bits == co.mutual_information(cm)
    assert rep.nu_tilde_minus == pytest.approx(
        co.pt_symplectic_minus(cm), rel=1e-12)
    assert rep.nu_plus >= rep.nu_minus >= 0.5 - 1e-9


# --- scalar route vs matrix route ----------------------------------------------

def artificial_params(ratio):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return PhysicalParams(mass=1.0, separation=1.0, omega0=1.0,
                              G=ratio**2 / 4.0, hbar=1.0, kB=1.0)


@pytest.mark.parametrize("tau", [0.4, 1.0, 2.5])
@pytest.mark.parametrize("nbar", [0.0, 0.35, 2.0])
def test_scalar_route_agrees_with_matrix_route(tau, nbar):
    ratio = 0.3
    p = artificial_params(ratio)
    delta = ga.determinant_excess(tau, p)
    cm = pure_state(tau, ratio, 2 * nbar + 1)
    assert co.log_negativity_from_excess(delta, nbar) == pytest.approx(
        co.log_negativity(cm), rel=1e-9, abs=1e-12)
    assert co.pt_minus_from_excess(delta, nbar) == pytest.approx(
        co.pt_symplectic_minus(cm), rel=1e-9)
    # matrix-route MI of a near-degenerate pure pair carries sqrt(eps)
    # split noise ~1e-7; thermal states are clean
    tol = 2e-6 if nbar == 0.0 else 1e-9
    assert co.mutual_information_from_excess(delta, nbar) == pytest.approx(
        co.mutual_information(cm), rel=1e-6, abs=tol)


def test_scalar_route_against_mpmath_in_cancellation_regime():
    # delta ~ 1e-22: far beyond what the 4x4 matrix route can resolve
    delta = 3.8520751115080913e-23
    nbar = 0.15657474453970913
    with mp.workdps(50):
        d = mp.mpf('3.8520751115080913e-23')
        lam = 2 * mp.mpf('0.15657474453970913') + 1
        e2r = mp.sqrt(1 + 4 * d) + 2 * mp.sqrt(d)
        en_pure = float(mp.log(e2r, 2))
        nu = float(lam / (2 * e2r))

        def f(x):
            return (x + mp.mpf('0.5')) * mp.log(x + mp.mpf('0.5'), 2) \
                - (x - mp.mpf('0.5')) * mp.log(x - mp.mpf('0.5'), 2)

        mi = float(2 * f(lam * mp.sqrt(mp.mpf('0.25') + d)) - 2 * f(lam / 2))
    assert co.log_negativity_from_excess(delta) == pytest.approx(en_pure,
                                                                 rel=1e-12)
    assert co.pt_minus_from_excess(delta, nbar) == pytest.approx(nu, rel=1e-12)
    assert co.mutual_information_from_excess(delta, nbar) == pytest.approx(
        mi, rel=1e-9)


def test_scalar_route_edge_cases():
    assert co.log_negativity_from_excess(0.0) == 0.0
    assert co.mutual_information_from_excess(0.0) == 0.0
    assert co.pt_minus_from_excess(0.0) == 0.5
    # thermal noise kills negativity but not mutual information
    assert co.log_negativity_from_excess(1e-6, nbar=0.5) == 0.0
    assert co.mutual_information_from_excess(1e-6, nbar=0.5) > 0.0
    with pytest.raises(DomainError):
        co.log_negativity_from_excess(-1e-3)
    with pytest.raises(DomainError):
        co.mutual_information_from_excess(1e-3, nbar=-0.2)


@given(st.floats(min_value=1e-30, max_value=1e3),
       st.floats(min_value=0.0, max_value=50.0))
@settings(max_examples=300, deadline=None)
def test_entangled_implies_correlated(delta, nbar):
    en = co.log_negativity_from_excess(delta, nbar)
    mi = co.mutual_information_from_excess(delta, nbar)
    assert en >= 0.0 and mi >= 0.0
    if en > 0.0:
        assert mi > 0.0


@given(st.floats(min_value=1e-12, max_value=10.0))
@settings(max_examples=100, deadline=None)
def test_thermal_noise_only_weakens_entanglement(delta):
    ens = [co.log_negativity_from_excess(delta, nb)
           for nb in (0.0, 0.1, 0.5, 2.0, 10.0)]
    assert all(a >= b - 1e-15 for a, b in zip(ens, ens[1:]))


def test_vectorized_scalar_route():
    d = np.array([0.0, 1e-20, 1e-8, 1e-2])
    en = co.log_negativity_from_excess(d)
    mi = co.mutual_information_from_excess(d, 0.2)
    nu = co.pt_minus_from_excess(d)
    assert en.shape == mi.shape == nu.shape == d.shape
    assert np.all(np.diff(en) > 0) and np.all(np.diff(mi) > 0)
    assert np.all(np.diff(nu) < 0)


# --- threshold crossing --------------------------------------------------------

def test_first_crossing_interpolates():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    v = np.array([0.0, 0.2, 0.6, 1.0])
    assert co.first_crossing(t, v, 0.4) == pytest.approx(1.5)
    assert co.first_crossing(t, v, 0.0) == 0.0
    assert co.first_crossing(t, v, 2.0) is None


def test_first_crossing_validates_input():
    with pytest.raises(DomainError):
        co.first_crossing([0.0, 0.0], [1.0, 2.0], 0.5)
    with pytest.raises(DomainError):
        co.first_crossing([0.0], [1.0], 0.5)
