"""Time evolution for the effective and two-particle wave equations.

All arithmetic happens in whatever unit system the ``PhysicalParams``
instance carries; the reduced constructor (hbar = 1, m = 1/2, unit
width) is the intended one for grid work.

Schemes:

* ``split_operator`` -- Strang splitting; spectral kinetic steps along
  every z-like axis, and on cylinders a Crank-Nicolson (Cayley) step
  for the radial operator (1/s) d/ds (s d/ds) in its conservative
  staggered-grid form, which is exactly unitary in the s-weighted norm.
  The z and s kinetic pieces commute, so only the potential split and
  the radial discretization carry error.
* ``crank_nicolson`` -- full tridiagonal Cayley step of T + V, line
  geometry only; exists as an independent route to cross-check the
  spectral scheme.

The mean-field potential is rebuilt from |psi|^2 every step
(``per_step``) or from a half-step predictor density
(``predictor_corrector``).

A phase-wrap gate refuses time steps with dt E_max / hbar >= 1/2,
where E_max adds each axis's largest resolvable kinetic scale; the
limit protects the potential/nonlinearity split, not the unitary
substeps, which are stable at any dt.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import ConfigError, DomainError, StabilityError
from .fields import (
    GridSpec,
    SelfGravity,
    WaveField,
    softened_kernel_matrix,
)
from .params import PhysicalParams

__all__ = [
    "SolverConfig",
    "EvolutionResult",
    "max_kinetic_scale",
    "kinetic_energy",
    "potential_energy",
    "kinetic_energy_rate",
    "ehrenfest_force",
    "GravitySource",
    "evolve_effective",
    "relax_ground_state",
    "evolve_bipartite",
    "bipartite_metrics",
    "save_snapshot",
    "load_snapshot",
]

_SCHEMES = ("split_operator", "crank_nicolson")
_UPDATES = ("per_step", "predictor_corrector")
_PAIR_MODES = ("none", "newton_quadratic", "newton_full", "sn_factored")


@dataclass(frozen=True)
class SolverConfig:
    """Step size and scheme switches shared by all evolvers."""

    dt: float
    scheme: str = "split_operator"
    nonlinearity_update: str = "per_step"
    softening: float | None = None       # 1D kernels; defaults to sigma
    boundary_warn: float = 1e-6
    boundary_abort: float = 1e-3

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt!r}",
                              field="dt")
        if self.scheme not in _SCHEMES:
            raise ConfigError(f"scheme {self.scheme!r} not one of {_SCHEMES}",
                              field="scheme")
        if self.nonlinearity_update not in _UPDATES:
            raise ConfigError(
                f"nonlinearity_update {self.nonlinearity_update!r} "
                f"not one of {_UPDATES}", field="nonlinearity_update")
        if self.softening is not None and not (
                math.isfinite(self.softening) and self.softening > 0):
            raise ConfigError("softening must be positive",
                              field="softening")
        if not (0.0 < self.boundary_warn < self.boundary_abort < 1.0):
            raise ConfigError(
                "need 0 < boundary_warn < boundary_abort < 1",
                field="boundary_warn")


@dataclass
class EvolutionResult:
    """Snapshots plus per-snapshot diagnostics."""

    times: np.ndarray
    snapshots: list[WaveField]
    metrics: dict[str, np.ndarray] = dataclass_field(default_factory=dict)

    @property
    def final(self) -> WaveField:
        return self.snapshots[-1]


# ---------------------------------------------------------------------------
# Phase gate and kinetic bookkeeping.
# ---------------------------------------------------------------------------

def max_kinetic_scale(grid: GridSpec, params: PhysicalParams) -> float:
    """Largest kinetic energy the grid can represent, summed per axis."""
    total = 0.0
    hb, m = params.hbar, params.mass
    for i, d in enumerate(grid.spacing):
        if grid.geometry == "cylinder_sz" and i == 0:
            total += 4.0 * hb**2 / (2.0 * m * d * d)     # FD Gershgorin bound
        else:
            kmax = math.pi / d
            total += (hb * kmax) ** 2 / (2.0 * m)
    return total


def _check_step_gate(grid: GridSpec, params: PhysicalParams, dt: float):
    phase = dt * max_kinetic_scale(grid, params) / params.hbar
    if phase >= 0.5:
        raise ConfigError(
            f"dt = {dt:g} wraps the fastest grid mode by {phase:.3g} rad "
            f"per step (gate: < 0.5); shrink dt or coarsen the grid",
            field="dt")


def kinetic_energy(psi: WaveField, params: PhysicalParams) -> float:
    """<T> via spectral derivatives (z axes) and the FD form (radial)."""
    g = psi.grid
    hb, m = params.hbar, params.mass
    v = psi.values
    if g.geometry == "line_z":
        k = g.wavenumbers(0)
        spec = np.abs(np.fft.fft(v)) ** 2
        return float(hb**2 / (2 * m) * np.sum(k**2 * spec)
                     * g.spacing[0] / g.shape[0])
    if g.geometry == "plane_z1z2":
        k1 = g.wavenumbers(0)[:, None]
        k2 = g.wavenumbers(1)[None, :]
        spec = np.abs(np.fft.fft2(v)) ** 2
        w = g.spacing[0] * g.spacing[1] / (g.shape[0] * g.shape[1])
        return float(hb**2 / (2 * m) * np.sum((k1**2 + k2**2) * spec) * w)
    ns, nz = g.shape
    ds, dz = g.spacing
    s = g.axes[0]
    kz = g.wavenumbers(1)[None, :]
    spec = np.abs(np.fft.fft(v, axis=1)) ** 2
    t_z = np.sum(kz**2 * spec * (2 * math.pi * s * ds)[:, None]) * dz / nz
    # conservative-form radial quadratic form, outer hard wall included
    edges = np.arange(1, ns) * ds                        # interior cell edges
    jump = np.abs(np.diff(v, axis=0)) ** 2
    t_s = np.sum(jump * (edges / ds)[:, None]) * 2 * math.pi * dz
    t_s += np.sum(np.abs(v[-1]) ** 2) * (ns * ds / ds) * 2 * math.pi * dz
    return float(hb**2 / (2 * m) * (t_z + t_s))


def potential_energy(psi: WaveField, potential: np.ndarray) -> float:
    """<V> of a potential sampled on the grid."""
    return float(np.sum(psi.density() * potential * psi.grid.cell_volume))


def _z_derivative(values: np.ndarray, grid: GridSpec, axis: int) -> np.ndarray:
    k = grid.wavenumbers(axis)
    shape = [1] * values.ndim
    shape[axis] = k.size
    return np.fft.ifft(1j * k.reshape(shape)
                       * np.fft.fft(values, axis=axis), axis=axis)


def _fd_gradient(arr: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    out = np.gradient(arr, spacing, axis=axis)
    return out


def kinetic_energy_rate(psi: WaveField, potential: np.ndarray,
                        params: PhysicalParams) -> tuple[float, float]:
    """d<T>/dt under a frozen potential, by two independent routes.

    Route one integrates the probability current against the potential
    gradient, -int j . grad V; route two integrates the potential
    against the continuity-equation density rate, -int V d(rho)/dt.
    They agree up to discretization error, which makes the pair a
    built-in consistency probe for the current and the gradients.
    """
    g = psi.grid
    hb, m = params.hbar, params.mass
    v = psi.values
    w = g.cell_volume
    if g.geometry == "line_z":
        dpsi = _z_derivative(v, g, 0)
        j = hb / m * np.imag(np.conj(v) * dpsi)
        grad_v = _fd_gradient(potential, g.spacing[0], 0)
        direct = -np.sum(j * grad_v * w)
        drho = -np.real(_z_derivative(j, g, 0))
        continuity = -np.sum(potential * drho * w)
        return float(direct), float(continuity)
    if g.geometry == "plane_z1z2":
        direct = 0.0
        drho = np.zeros(g.shape)
        for ax in (0, 1):
            dpsi = _z_derivative(v, g, ax)
            j = hb / m * np.imag(np.conj(v) * dpsi)
            direct -= np.sum(j * _fd_gradient(potential, g.spacing[ax], ax)
                             * w)
            drho -= np.real(_z_derivative(j, g, ax))
        return float(direct), float(-np.sum(potential * drho * w))
    ns, nz = g.shape
    ds, dz = g.spacing
    s = g.axes[0]
    dpsi_z = _z_derivative(v, g, 1)
    j_z = hb / m * np.imag(np.conj(v) * dpsi_z)
    # radial current at interior cell edges, conservative flux form
    mid = 0.5 * (v[1:] + v[:-1])
    j_edge = hb / m * np.imag(np.conj(mid) * np.diff(v, axis=0) / ds)
    edges = (np.arange(1, ns) * ds)[:, None]
    flux = np.zeros((ns + 1, nz))
    flux[1:ns] = edges * j_edge                          # axis and wall: 0
    div_s = np.diff(flux, axis=0) / (s[:, None] * ds)
    drho = -div_s - np.real(_z_derivative(j_z, g, 1))
    continuity = -np.sum(potential * drho * w)
    grad_vz = _fd_gradient(potential, dz, 1)
    grad_vs = _fd_gradient(potential, ds, 0)
    j_s_centered = np.zeros((ns, nz))
    j_s_centered[1:-1] = hb / m * np.imag(
        np.conj(v[1:-1]) * (v[2:] - v[:-2]) / (2 * ds))
    direct = -np.sum((j_z * grad_vz + j_s_centered * grad_vs) * w)
    return float(direct), float(continuity)


# ---------------------------------------------------------------------------
# Mean-field potential sources.
# ---------------------------------------------------------------------------

class GravitySource:
    """Callable building the self-consistent potential from a density.

    Cylinder grids integrate the exact ring kernel; line grids use the
    softened 1/sqrt(u^2 + a^2) contact-regularized kernel. ``mirror``
    adds the reflected partner image at separation L (cylinders reflect
    through z = -L/2; lines add the dense z + z' + L cross kernel).
    """

    def __init__(self, grid: GridSpec, params: PhysicalParams,
                 mirror: bool = False, softening: float | None = None):
        self.grid = grid
        self.params = params
        self.mirror = bool(mirror)
        if grid.geometry == "cylinder_sz":
            self._engine = SelfGravity(grid, params, mirror=self.mirror)
            self._mode = "rings"
        elif grid.geometry == "line_z":
            a = params.sigma if softening is None else float(softening)
            z = grid.axes[0]
            pref = -params.G * params.mass**2 * grid.spacing[0]
            self._self_k = pref * softened_kernel_matrix(z, a)
            if self.mirror:
                zz = z[:, None] + z[None, :] + params.separation
                self._mirror_k = pref / np.sqrt(zz * zz + a * a)
            self._mode = "line"
        else:
            raise ConfigError("self-gravity sources exist for line and "
                              "cylinder grids only", field="geometry")

    def __call__(self, density: np.ndarray) -> np.ndarray:
        if self._mode == "rings":
            return self._engine(density)
        v = self._self_k @ density
        if self.mirror:
            v = v + self._mirror_k @ density
        return v


def ehrenfest_force(psi: WaveField, params: PhysicalParams,
                    softening: float | None = None) -> dict:
    """Mean axial force split into own-cloud and partner-image parts.

    -int rho dV/dz for the self and mirror potentials separately;
    translation invariance makes the continuum self term vanish, so
    its size gauges the discretization. The mutual part should track
    the two-cloud attraction law at separation ~ L.
    """
    g = psi.grid
    rho = psi.density()
    w = g.cell_volume
    own = GravitySource(g, params, mirror=False, softening=softening)
    both = GravitySource(g, params, mirror=True, softening=softening)
    v_self = own(rho)
    v_mut = both(rho) - v_self
    axis = 0 if g.geometry == "line_z" else 1
    dz = g.spacing[axis]
    f_self = -np.sum(rho * _fd_gradient(v_self, dz, axis) * w)
    f_mut = -np.sum(rho * _fd_gradient(v_mut, dz, axis) * w)
    return {"self": float(f_self), "mutual": float(f_mut),
            "total": float(f_self + f_mut)}


# ---------------------------------------------------------------------------
# Kinetic propagators.
# ---------------------------------------------------------------------------

class _SpectralKinetic:
    """exp(-i T dt / hbar) on line and plane grids."""

    def __init__(self, grid: GridSpec, params: PhysicalParams, dt: float,
                 imag: bool = False):
        hb, m = params.hbar, params.mass
        if grid.geometry == "line_z":
            k2 = grid.wavenumbers(0) ** 2
        else:
            k2 = grid.wavenumbers(0)[:, None] ** 2 \
                + grid.wavenumbers(1)[None, :] ** 2
        w = hb * k2 / (2.0 * m)                     # mode frequencies
        factor = -dt * w if imag else -1j * dt * w
        self._full = np.exp(factor)
        self._ndim = 1 if grid.geometry == "line_z" else 2

    def full(self, v: np.ndarray) -> np.ndarray:
        if self._ndim == 1:
            return np.fft.ifft(self._full * np.fft.fft(v))
        return np.fft.ifft2(self._full * np.fft.fft2(v))


class _CylinderKinetic:
    """z-spectral step times a radial Cayley step (they commute)."""

    def __init__(self, grid: GridSpec, params: PhysicalParams, dt: float,
                 imag: bool = False):
        ns, nz = grid.shape
        ds, dz = grid.spacing
        hb, m = params.hbar, params.mass
        kz2 = grid.wavenumbers(1) ** 2
        w = hb * kz2 / (2.0 * m)
        self._zphase = np.exp((-dt if imag else -1j * dt) * w)[None, :]
        s = grid.axes[0]
        lo_edge = np.arange(ns) * ds                # s_{i-1/2}, zero on axis
        hi_edge = np.arange(1, ns + 1) * ds         # s_{i+1/2}
        lower = lo_edge / (s * ds * ds)             # multiplies psi_{i-1}
        upper = hi_edge / (s * ds * ds)             # multiplies psi_{i+1}
        diag = -(lo_edge + hi_edge) / (s * ds * ds)
        a = hb * dt / (4.0 * m)
        coef = a if imag else 1j * a
        # implicit (I - coef L) banded and explicit (I + coef L) diagonals
        self._ab = np.zeros((3, ns), dtype=complex)
        self._ab[0, 1:] = -coef * upper[:-1]
        self._ab[1, :] = 1.0 - coef * diag
        self._ab[2, :-1] = -coef * lower[1:]
        self._exp_d = 1.0 + coef * diag
        self._exp_u = coef * upper[:-1]
        self._exp_l = coef * lower[1:]

    def full(self, v: np.ndarray) -> np.ndarray:
        v = np.fft.ifft(self._zphase * np.fft.fft(v, axis=1), axis=1)
        rhs = self._exp_d[:, None] * v
        rhs[:-1] += self._exp_u[:, None] * v[1:]
        rhs[1:] += self._exp_l[:, None] * v[:-1]
        return scipy.linalg.solve_banded((1, 1), self._ab, rhs)


class _LineCrankNicolson:
    """Whole-Hamiltonian Cayley step on a line; V refreshed per step."""

    def __init__(self, grid: GridSpec, params: PhysicalParams, dt: float,
                 imag: bool = False):
        n = grid.shape[0]
        dz = grid.spacing[0]
        hb, m = params.hbar, params.mass
        self._c = hb**2 / (2.0 * m * dz * dz)
        self._coef = (dt / (2.0 * hb)) * (1.0 if imag else 1j)
        self._n = n

    def step(self, v: np.ndarray, potential: np.ndarray) -> np.ndarray:
        diag = 2.0 * self._c + potential
        off = -self._c
        ab = np.zeros((3, self._n), dtype=complex)
        ab[0, 1:] = self._coef * off
        ab[1, :] = 1.0 + self._coef * diag
        ab[2, :-1] = self._coef * off
        rhs = (1.0 - self._coef * diag) * v
        rhs[:-1] -= self._coef * off * v[1:]
        rhs[1:] -= self._coef * off * v[:-1]
        return scipy.linalg.solve_banded((1, 1), ab, rhs)


def _renormalize(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    nrm = math.sqrt(float(np.sum((values.real**2 + values.imag**2)
                                 * grid.cell_volume)))
    return values / nrm


# ---------------------------------------------------------------------------
# Effective (one-packet) evolution.
# ---------------------------------------------------------------------------

def _snapshot_steps(t_final: float, dt: float, store_times) -> list[int]:
    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * max(t_final, dt):
        raise ConfigError(
            f"t_final = {t_final!r} is not a whole number of steps of "
            f"dt = {dt!r}", field="t_final")
    if n_steps < 1:
        raise ConfigError("t_final must cover at least one step",
                          field="t_final")
    if store_times is None:
        wanted = {0, n_steps}
    else:
        wanted = {0, n_steps}
        for t in np.asarray(store_times, dtype=float).ravel():
            k = int(round(t / dt))
            if k < 0 or k > n_steps:
                raise ConfigError(f"store time {t!r} outside [0, t_final]",
                                  field="store_times")
            wanted.add(k)
    return sorted(wanted)


class _BoundaryGuard:
    def __init__(self, grid: GridSpec, config: SolverConfig):
        self._mask = grid.boundary_mask()
        self._vol = grid.cell_volume
        self._warned = False
        self._warn = config.boundary_warn
        self._abort = config.boundary_abort

    def check(self, values: np.ndarray, step: int, dt: float):
        dens = (values.real**2 + values.imag**2) * self._vol
        frac = float(np.sum(dens[self._mask]))
        if frac > self._abort:
            raise StabilityError(
                f"boundary probability {frac:.3e} exceeded "
                f"{self._abort:g} at t = {step * dt:g}; enlarge the box")
        if frac > self._warn and not self._warned:
            warnings.warn(f"boundary probability reached {frac:.3e} "
                          f"at t = {step * dt:g}", stacklevel=3)
            self._warned = True
        return frac


def _effective_metrics(psi: WaveField, params: PhysicalParams,
                       v_grav: np.ndarray, v_ext, guard_frac: float) -> dict:
    g = psi.grid
    w = g.cell_volume
    rho = psi.density()
    t_kin = kinetic_energy(psi, params)
    pot_g = float(np.sum(rho * v_grav * w))
    pot_e = float(np.sum(rho * v_ext * w)) if v_ext is not None else 0.0
    v_tot = v_grav if v_ext is None else v_grav + v_ext
    direct, continuity = kinetic_energy_rate(psi, v_tot, params)
    z = g.z_axis
    zb = z[None, :] if g.geometry == "cylinder_sz" else z
    mean_z = float(np.sum(rho * zb * w))
    var_z = float(np.sum(rho * zb**2 * w)) - mean_z**2
    out = {
        "norm": psi.norm(),
        "kinetic": t_kin,
        "potential_grav": pot_g,
        "potential_ext": pot_e,
        # mean-field energy: the rho-quadratic term enters halved
        "energy": t_kin + 0.5 * pot_g + pot_e,
        "mean_z": mean_z,
        "var_z": var_z,
        "dTdt_current": direct,
        "dTdt_continuity": continuity,
        "boundary_fraction": guard_frac,
    }
    if g.geometry == "cylinder_sz":
        s2 = (g.axes[0] ** 2)[:, None]
        out["mean_s2"] = float(np.sum(rho * s2 * w))
    return out


def evolve_effective(initial: WaveField, params: PhysicalParams,
                     config: SolverConfig, t_final: float, *,
                     mirror: bool = True,
                     external_potential: np.ndarray | None = None,
                     store_times=None) -> EvolutionResult:
    """Evolve one packet under its own (and optionally its image's) pull.

    Works on line and cylinder grids. Snapshots land on exact step
    multiples; metrics are recorded per snapshot, the boundary guard
    runs every step.
    """
    grid = initial.grid
    _check_step_gate(grid, params, config.dt)
    if config.scheme == "crank_nicolson" and grid.geometry != "line_z":
        raise ConfigError("crank_nicolson is a line-geometry cross-check",
                          field="scheme")
    if external_potential is not None:
        external_potential = np.asarray(external_potential, dtype=float)
        if external_potential.shape != grid.shape:
            raise ConfigError("external potential shape mismatch",
                              field="external_potential")
    source = GravitySource(grid, params, mirror=mirror,
                           softening=config.softening)
    dt = config.dt
    snaps = _snapshot_steps(t_final, dt, store_times)
    guard = _BoundaryGuard(grid, config)

    if config.scheme == "split_operator":
        kin = (_CylinderKinetic if grid.geometry == "cylinder_sz"
               else _SpectralKinetic)(grid, params, dt)
        kin_half = (_CylinderKinetic if grid.geometry == "cylinder_sz"
                    else _SpectralKinetic)(grid, params, 0.5 * dt)
    else:
        kin = _LineCrankNicolson(grid, params, dt)
        kin_half = _LineCrankNicolson(grid, params, 0.5 * dt)

    def build_v(values):
        rho = values.real**2 + values.imag**2
        v = source(rho)
        if external_potential is not None:
            v = v + external_potential
        return v

    def strang(values, v_pot, engine, step_dt):
        if config.scheme == "crank_nicolson":
            return engine.step(values, v_pot)
        half = np.exp(-0.5j * step_dt / params.hbar * v_pot)
        return half * engine.full(half * values)

    psi_v = initial.values.astype(complex)
    times, fields, rows = [], [], []

    def record(step, values):
        fld = WaveField(grid, values)
        v_g = source(fld.density())
        frac = fld.boundary_fraction()
        rows.append(_effective_metrics(fld, params, v_g,
                                       external_potential, frac))
        times.append(step * dt)
        fields.append(fld)

    record(0, psi_v)
    snap_set = set(snaps)
    n_steps = snaps[-1]
    for step in range(1, n_steps + 1):
        v0 = build_v(psi_v)
        if config.nonlinearity_update == "per_step":
            psi_v = strang(psi_v, v0, kin, dt)
        else:
            probe = strang(psi_v, v0, kin_half, 0.5 * dt)
            v_mid = build_v(probe)
            psi_v = strang(psi_v, v_mid, kin, dt)
        guard.check(psi_v, step, dt)
        if step in snap_set:
            record(step, psi_v)

    metrics = {k: np.array([r[k] for r in rows]) for k in rows[0]}
    return EvolutionResult(np.array(times), fields, metrics)


def relax_ground_state(initial: WaveField, params: PhysicalParams, *,
                       dt: float, tol: float = 1e-10,
                       max_steps: int = 20000, mirror: bool = False,
                       softening: float | None = None,
                       external_potential: np.ndarray | None = None
                       ) -> tuple[WaveField, dict]:
    """Imaginary-time descent to the self-consistent stationary state.

    Each step applies the split propagator with dt -> -i dt and
    renormalizes; convergence is declared when the mean-field energy
    moves by less than tol (relative) in one step.
    """
    grid = initial.grid
    if not (math.isfinite(dt) and dt > 0):
        raise ConfigError("dt must be positive", field="dt")
    source = GravitySource(grid, params, mirror=mirror, softening=softening)
    kin = (_CylinderKinetic if grid.geometry == "cylinder_sz"
           else _SpectralKinetic)(grid, params, dt, imag=True)
    v = initial.values.astype(complex)
    energy_prev = math.inf
    converged = False
    steps_done = 0
    for step in range(1, max_steps + 1):
        rho = v.real**2 + v.imag**2
        pot = source(rho)
        if external_potential is not None:
            pot = pot + external_potential
        decay = np.exp(-0.5 * dt / params.hbar * pot)
        v = decay * kin.full(decay * v)
        v = _renormalize(v, grid)
        steps_done = step
        if step % 20 == 0 or step == max_steps:
            fld = WaveField(grid, v)
            pot = source(fld.density())
            e = kinetic_energy(fld, params) \
                + 0.5 * potential_energy(fld, pot)
            if external_potential is not None:
                e += potential_energy(fld, external_potential)
            if abs(e - energy_prev) <= tol * max(abs(e), 1e-300):
                converged = True
                break
            energy_prev = e
    fld = WaveField(grid, v)
    pot = source(fld.density())
    energy = kinetic_energy(fld, params) + 0.5 * potential_energy(fld, pot)
    if external_potential is not None:
        energy += potential_energy(fld, external_potential)
    return fld, {"energy": energy, "steps": steps_done,
                 "converged": converged}


# ---------------------------------------------------------------------------
# Two-particle line pair.
# ---------------------------------------------------------------------------

def _pair_potential(grid: GridSpec, params: PhysicalParams, mode: str,
                    softening: float | None):
    """Static pair potential, or a builder for the factored mean field.

    Coordinates are displacements from each packet's own trap, traps a
    distance L apart, so the interparticle gap is L + z2 - z1.
    """
    z = grid.axes[0]
    L = params.separation
    gm2 = params.G * params.mass**2
    u = z[None, :] - z[:, None]                     # z2 - z1
    if mode == "none":
        return np.zeros(grid.shape)
    if mode == "newton_quadratic":
        return -gm2 * (1.0 / L - u / L**2 + u**2 / L**3)
    if mode == "newton_full":
        gap = L + u
        if np.min(gap) <= 0:
            raise ConfigError(
                "grid reaches interparticle gap <= 0; enlarge the "
                "separation or shrink the box", field="separation")
        return -gm2 / gap
    # sn_factored: each particle feels both marginal clouds
    a = params.sigma if softening is None else float(softening)
    dz = grid.spacing[0]
    k_self = softened_kernel_matrix(z, a) * dz
    k_cross = softened_kernel_matrix(z, a, offset=L) * dz

    def build(density2d):
        rho1 = np.sum(density2d, axis=1) * dz
        rho2 = np.sum(density2d, axis=0) * dz
        v1 = -gm2 * (k_self @ rho1 + k_cross @ rho2)
        v2 = -gm2 * (k_self @ rho2 + k_cross.T @ rho1)
        return v1[:, None] + v2[None, :]

    return build


def bipartite_metrics(psi: WaveField, params: PhysicalParams) -> dict:
    """Schmidt and moment diagnostics of a two-particle line state."""
    g = psi.grid
    if g.geometry != "plane_z1z2":
        raise DomainError("bipartite metrics need the plane geometry")
    dz = g.spacing[0]
    v = psi.values
    sv = np.linalg.svd(v * dz, compute_uv=False)
    p2 = sv * sv
    p2 = p2[p2 > 1e-300]
    purity = float(np.sum(p2 * p2))
    entropy = float(-np.sum(p2 * np.log2(p2)))
    z = g.axes[0]
    w = g.cell_volume
    rho = psi.density()
    d1 = _z_derivative(v, g, 0)
    d2 = _z_derivative(v, g, 1)
    hb = params.hbar
    za = z[:, None]
    zb = z[None, :]
    mz1 = float(np.sum(rho * za * w))
    mz2 = float(np.sum(rho * zb * w))
    mp1 = float(np.real(np.sum(np.conj(v) * -1j * hb * d1) * w))
    mp2 = float(np.real(np.sum(np.conj(v) * -1j * hb * d2) * w))
    cov = np.empty((4, 4))
    cov[0, 0] = np.sum(rho * za**2 * w) - mz1**2
    cov[2, 2] = np.sum(rho * zb**2 * w) - mz2**2
    cov[0, 2] = cov[2, 0] = np.sum(rho * za * zb * w) - mz1 * mz2
    cov[1, 1] = hb**2 * np.real(np.sum(np.abs(d1) ** 2) * w) - mp1**2
    cov[3, 3] = hb**2 * np.real(np.sum(np.abs(d2) ** 2) * w) - mp2**2
    cov[1, 3] = cov[3, 1] = hb**2 * np.real(
        np.sum(np.conj(d1) * d2) * w) - mp1 * mp2
    cov[0, 1] = cov[1, 0] = np.real(
        np.sum(np.conj(v) * za * -1j * hb * d1) * w) - mz1 * mp1
    cov[2, 3] = cov[3, 2] = np.real(
        np.sum(np.conj(v) * zb * -1j * hb * d2) * w) - mz2 * mp2
    cov[0, 3] = cov[3, 0] = np.real(
        np.sum(np.conj(v) * za * -1j * hb * d2) * w) - mz1 * mp2
    cov[2, 1] = cov[1, 2] = np.real(
        np.sum(np.conj(v) * zb * -1j * hb * d1) * w) - mz2 * mp1
    return {
        "purity": purity,
        "mutual_information": 2.0 * entropy,
        "mean": np.array([mz1, mp1, mz2, mp2]),
        "covariance": cov,
    }


def evolve_bipartite(initial: WaveField, params: PhysicalParams,
                     config: SolverConfig, t_final: float, *,
                     mode: str = "sn_factored",
                     store_times=None) -> EvolutionResult:
    """Evolve the two-particle line pair under a chosen coupling law.

    ``newton_quadratic`` and ``newton_full`` are linear Schroedinger
    evolutions that build entanglement; ``sn_factored`` feeds each
    particle the mean field of both one-particle marginals, which is
    the nonlinear law that keeps exact products exactly product.
    """
    grid = initial.grid
    if grid.geometry != "plane_z1z2":
        raise ConfigError("pair evolution needs the plane geometry",
                          field="geometry")
    if mode not in _PAIR_MODES:
        raise ConfigError(f"mode {mode!r} not one of {_PAIR_MODES}",
                          field="mode")
    if config.scheme != "split_operator":
        raise ConfigError("pair evolution is split-operator only",
                          field="scheme")
    _check_step_gate(grid, params, config.dt)
    dt = config.dt
    snaps = _snapshot_steps(t_final, dt, store_times)
    guard = _BoundaryGuard(grid, config)
    kin = _SpectralKinetic(grid, params, dt)
    kin_half = _SpectralKinetic(grid, params, 0.5 * dt)
    pot = _pair_potential(grid, params, mode, config.softening)
    static = None if callable(pot) else pot

    def build_v(values):
        if static is not None:
            return static
        return pot(values.real**2 + values.imag**2)

    def strang(values, v_pot, engine, step_dt):
        half = np.exp(-0.5j * step_dt / params.hbar * v_pot)
        return half * engine.full(half * values)

    psi_v = initial.values.astype(complex)
    times, fields, rows = [], [], []

    def record(step, values):
        fld = WaveField(grid, values)
        m = bipartite_metrics(fld, params)
        v_now = build_v(values)
        m["norm"] = fld.norm()
        m["kinetic"] = kinetic_energy(fld, params)
        mean_v = potential_energy(fld, v_now)
        m["potential"] = mean_v
        m["energy"] = m["kinetic"] + (0.5 * mean_v if static is None
                                      else mean_v)
        m["boundary_fraction"] = fld.boundary_fraction()
        rows.append(m)
        times.append(step * dt)
        fields.append(fld)

    record(0, psi_v)
    snap_set = set(snaps)
    for step in range(1, snaps[-1] + 1):
        v0 = build_v(psi_v)
        if static is not None or config.nonlinearity_update == "per_step":
            psi_v = strang(psi_v, v0, kin, dt)
        else:
            probe = strang(psi_v, v0, kin_half, 0.5 * dt)
            psi_v = strang(psi_v, build_v(probe), kin, dt)
        guard.check(psi_v, step, dt)
        if step in snap_set:
            record(step, psi_v)

    metrics = {}
    for key in rows[0]:
        metrics[key] = np.array([r[key] for r in rows])
    return EvolutionResult(np.array(times), fields, metrics)


# ---------------------------------------------------------------------------
# Snapshot persistence.
# ---------------------------------------------------------------------------

def save_snapshot(path, psi: WaveField, time: float = 0.0,
                  extra: dict | None = None) -> None:
    """Raw complex128 dump plus a JSON sidecar describing the grid."""
    base = Path(path)
    g = psi.grid
    meta = {
        "schema": "snlab-field-1",
        "geometry": g.geometry,
        "shape": list(g.shape),
        "spacing": list(g.spacing),
        "z_center": g.z_center,
        "time": float(time),
    }
    if extra:
        meta["extra"] = extra
    base.with_suffix(".bin").write_bytes(
        np.ascontiguousarray(psi.values).tobytes())
    base.with_suffix(".json").write_text(
        json.dumps(meta, indent=1, sort_keys=True) + "\n")


def load_snapshot(path) -> tuple[WaveField, dict]:
    base = Path(path)
    meta = json.loads(base.with_suffix(".json").read_text())
    if meta.get("schema") != "snlab-field-1":
        raise DomainError(f"unknown snapshot schema {meta.get('schema')!r}")
    grid = GridSpec(meta["geometry"], tuple(meta["shape"]),
                    tuple(meta["spacing"]), meta["z_center"])
    raw = np.frombuffer(base.with_suffix(".bin").read_bytes(),
                        dtype=complex).reshape(grid.shape)
    return WaveField(grid, raw), meta
