"""Tests of the closed-form covariance dynamics.

Primary oracle: direct numerical integration of the second-moment ODE
sigma' = A sigma + sigma A^T for the quadratic two-packet Hamiltonian
(centre of mass free, relative coordinate on the inverted hill), in
trap units. The oracle shares no code with the closed forms. A second
oracle evaluates the closed-form entries at 50-digit precision via
mpmath and checks the cancellation-protected determinant-excess path.

Frozen constants below were produced by those oracles at the reference
parameter point (m = 1.11e-17 kg, L = 500 nm, trap at 500 kHz cyclic).
"""

import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import solve_ivp

from snlab import correlations as co
from snlab import gaussian as ga
from snlab.errors import DomainError
from snlab.params import PhysicalParams

# --- reference parameter bundles ------------------------------------------

REF = PhysicalParams(mass=1.11e-17, separation=500e-9,
                     omega0=2 * math.pi * 500e3)


def artificial(coupling_ratio: float) -> PhysicalParams:
    """Trap units with an O(1) coupling: every entry is float-benign."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return PhysicalParams(mass=1.0, separation=1.0, omega0=1.0,
                              G=coupling_ratio**2 / 4.0, hbar=1.0, kB=1.0)


# --- frozen oracle values --------------------------------------------------

COUPLING_FREQ_REF = 1.5397114534873084e-4  # sqrt(4 G m / L^3), rad/s
NBAR_12UK_REF = 0.15657474453970913        # cyclic convention, T = 12 uK
DELTA_1MS_REF = 3.8520751115080913e-23     # determinant excess at t = 1 ms
DELTA_1S_REF = 3.8520739588831255e-5


# --- oracles ----------------------------------------------------------------

def moment_ode_covariance(tau: float, ratio: float) -> np.ndarray:
    """Integrate the quadratic-coupling moment equations in trap units.

    d<x>/dt-style first moments vanish; the covariance obeys
    sigma' = A sigma + sigma A^T with the drift of two unit-mass
    particles coupled by the quadratic pair potential of strength
    ratio^2/2 (attracting each other's displacement).
    """
    r2 = ratio * ratio
    A = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [r2 / 2.0, 0.0, -r2 / 2.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [-r2 / 2.0, 0.0, r2 / 2.0, 0.0],
    ])

    def rhs(_t, y):
        s = y.reshape(4, 4)
        return (A @ s + s @ A.T).ravel()

    sol = solve_ivp(rhs, (0.0, tau), (0.5 * np.eye(4)).ravel(),
                    rtol=1e-12, atol=1e-14, method="DOP853")
    return sol.y[:, -1].reshape(4, 4)


def excess_oracle(t: float, params: PhysicalParams) -> float:
    """50-digit evaluation of det(block) - 1/4 from the raw entries."""
    with mp.workdps(50):
        w = mp.sqrt(4 * mp.mpf(params.G) * mp.mpf(params.mass)
                    / mp.mpf(params.separation) ** 3)
        tau = mp.mpf(params.omega0) * mp.mpf(t)
        x = w / mp.mpf(params.omega0) * tau
        s, c = mp.sinh(x), mp.cosh(x)
        u = s / x if x != 0 else mp.mpf(1)
        shear = s * s + (tau * u) ** 2
        press = (1 + (x / tau) ** 2) * s * s if tau != 0 else mp.mpf(0)
        cross = (x / tau) * 2 * s * c + 2 * tau * u * c if tau != 0 else mp.mpf(0)
        xx = (2 + tau * tau + shear) / 4
        pp = (2 + press) / 4
        xp = (2 * tau + cross) / 8
        return float(xx * pp - xp * xp - mp.mpf(1) / 4)


# --- closed form vs moment ODE ---------------------------------------------

@pytest.mark.parametrize("ratio,tau", [
    (0.0, 3.0), (0.15, 1.0), (0.15, 6.0), (0.5, 4.0), (1.0, 2.0),
])
def test_scaled_covariance_matches_moment_ode(ratio, tau):
    want = moment_ode_covariance(tau, ratio)
    got = ga.scaled_covariance(tau, ratio)
    scale = np.max(np.abs(want))
    assert np.max(np.abs(got - want)) <= 1e-10 * scale


def test_reference_point_matches_moment_ode():
    # the real parameter regime: huge scaled times, tiny coupling ratio
    ratio = ga.coupling_frequency(REF) / REF.omega0
    for t in (0.5, 2.0):
        tau = REF.omega0 * t
        want = moment_ode_covariance(tau, ratio)
        got = ga.scaled_covariance(tau, ratio)
        assert np.max(np.abs(got - want)) <= 1e-8 * np.max(np.abs(want))


def test_initial_condition_is_vacuum():
    assert np.array_equal(ga.scaled_covariance(0.0, 0.37), 0.5 * np.eye(4))


def test_zero_coupling_keeps_packets_independent():
    m = ga.scaled_covariance(5.0, 0.0)
    assert np.all(m[:2, 2:] == 0.0)
    # each packet spreads like a free Gaussian: det stays 1/4
    assert np.linalg.det(m[:2, :2]) == pytest.approx(0.25, rel=1e-14)


# --- coupling frequency and occupation --------------------------------------

def test_coupling_frequency_frozen_value():
    assert ga.coupling_frequency(REF) == pytest.approx(COUPLING_FREQ_REF,
                                                       rel=1e-12)


def test_coupling_frequency_scalings():
    # quadruple G -> double omega; eightfold L -> 1/ (2 sqrt 2) ... spot check
    p4 = PhysicalParams(mass=REF.mass, separation=REF.separation,
                        omega0=REF.omega0, G=4 * REF.G)
    assert ga.coupling_frequency(p4) == pytest.approx(2 * COUPLING_FREQ_REF,
                                                      rel=1e-12)
    assert ga.coupling_frequency(
        PhysicalParams(mass=REF.mass, separation=REF.separation,
                       omega0=REF.omega0, G=0.0)) == 0.0


def test_phonon_number_frozen_and_exact_limits():
    p = PhysicalParams(mass=REF.mass, separation=REF.separation,
                       omega0=REF.omega0, temperature=12e-6)
    assert ga.phonon_number(p) == pytest.approx(NBAR_12UK_REF, rel=1e-12)
    assert ga.phonon_number(REF) == 0.0  # T = 0 exactly


def test_phonon_number_equipartition_limit():
    # kBT >> hbar omega0: nbar -> kBT/(hbar omega0) - 1/2 + O(x)
    p = PhysicalParams(mass=REF.mass, separation=REF.separation,
                       omega0=REF.omega0, temperature=10.0)
    x = p.hbar * p.omega0 / (p.kB * p.temperature)
    assert x < 1e-3
    assert abs(ga.phonon_number(p) - (1.0 / x - 0.5)) < x / 6.0


def test_phonon_number_underflow_is_zero():
    p = PhysicalParams(mass=REF.mass, separation=REF.separation,
                       omega0=REF.omega0, temperature=1e-12)
    assert ga.phonon_number(p) == 0.0


# --- determinant excess ------------------------------------------------------

def test_determinant_excess_frozen_values():
    assert ga.determinant_excess(1e-3, REF) == pytest.approx(
        DELTA_1MS_REF, rel=1e-12)
    assert ga.determinant_excess(1.0, REF) == pytest.approx(
        DELTA_1S_REF, rel=1e-12)


def test_determinant_excess_against_50_digit_oracle():
    for t in (1e-4, 1e-2, 0.3, 1.0, 3.0):
        want = excess_oracle(t, REF)
        assert ga.determinant_excess(t, REF) == pytest.approx(want, rel=1e-12)


def test_determinant_excess_matches_direct_determinant_when_benign():
    p = artificial(0.15)
    for t in (0.5, 1.0, 3.0):
        m = ga.scaled_covariance(t, 0.15)
        direct = np.linalg.det(m[:2, :2]) - 0.25
        stable = ga.determinant_excess(t, p)
        assert stable == pytest.approx(direct, rel=1e-10)


def test_determinant_excess_vectorized_and_nonnegative():
    ts = np.logspace(-6, 1, 200)
    d = ga.determinant_excess(ts, REF)
    assert d.shape == ts.shape
    assert np.all(d >= 0.0)
    assert np.all(np.diff(d) > 0)  # monotone growth
    assert ga.determinant_excess(0.0, REF) == 0.0


def test_determinant_excess_rejects_bad_times():
    with pytest.raises(DomainError):
        ga.determinant_excess(-1.0, REF)
    with pytest.raises(DomainError):
        ga.determinant_excess(math.nan, REF)


# --- unit restoration and thermal scaling -----------------------------------

def test_covariance_at_restores_units():
    t = 0.8
    p = artificial(0.3)
    cm = ga.covariance_at(t, p)
    assert np.allclose(cm.matrix, ga.scaled_covariance(t, 0.3), rtol=1e-14)
    # now in SI-like units: x entries scale by hbar/(m w0), p by hbar m w0
    cm_si = ga.covariance_at(0.8 / REF.omega0, REF)
    xs2 = REF.hbar / (REF.mass * REF.omega0)
    ps2 = REF.hbar * REF.mass * REF.omega0
    scaled = ga.scaled_covariance(0.8, ga.coupling_frequency(REF) / REF.omega0)
    assert cm_si.matrix[0, 0] == pytest.approx(scaled[0, 0] * xs2, rel=1e-13)
    assert cm_si.matrix[1, 1] == pytest.approx(scaled[1, 1] * ps2, rel=1e-13)
    assert cm_si.matrix[0, 1] == pytest.approx(scaled[0, 1] * REF.hbar,
                                               rel=1e-13)


def test_covariance_at_applies_thermal_factor():
    p_hot = PhysicalParams(mass=REF.mass, separation=REF.separation,
                           omega0=REF.omega0, temperature=12e-6)
    lam = 2 * ga.phonon_number(p_hot) + 1
    cold = ga.covariance_at(0.3, REF).matrix
    hot = ga.covariance_at(0.3, p_hot).matrix
    assert np.allclose(hot, lam * cold, rtol=1e-13)


def test_thermal_scale_multiplies_matrix():
    cm = ga.covariance_at(0.5, artificial(0.2))
    out = ga.thermal_scale(cm, 1.5)
    assert np.allclose(out.matrix, 4.0 * cm.matrix, rtol=0, atol=0)
    assert out.hbar == cm.hbar
    with pytest.raises(DomainError):
        ga.thermal_scale(cm, -0.1)


def test_thermal_state_remains_physical():
    # symplectic eigenvalues of the scaled state sit at (2 nbar + 1)/2
    cm = ga.thermal_scale(ga.covariance_at(1.3, artificial(0.4)), 0.8)
    hi, lo = co.symplectic_eigenvalues(cm)
    assert hi == pytest.approx(2.6 / 2.0, rel=1e-7)
    assert lo == pytest.approx(2.6 / 2.0, rel=1e-7)
