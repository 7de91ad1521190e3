"""Statistical ensembles under the self-gravitating nonlinearity.

Two propagation rules for a weighted set of packets on one grid.
``pure_state_sn`` evolves each member inside the potential of its own
density, independently; ``mixed_state_sn`` rebuilds one shared
potential from the ensemble-average density once per step, before any
member advances, and steps every member against that frozen field.
The first rule lets two decompositions of the same density drift
apart; the second keeps them pointwise identical, and
``signaling_gap`` measures the L1 distance either way.
``von_neumann_consistency`` cross-checks the shared-potential rule
against direct RK4 integration of the full position-space density
matrix, whose equation of motion is the same dynamics written without
picking a decomposition.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, ConfigError, DomainError
from .fields import (GridSpec, WaveField, gaussian_packet,
                     softened_kernel_matrix)
from .params import PhysicalParams
from .solver import (GravitySource, SolverConfig, _BoundaryGuard,
                     _check_step_gate, _CylinderKinetic, _snapshot_steps,
                     _SpectralKinetic, load_snapshot, save_snapshot)

__all__ = [
    "EnsembleState",
    "EnsembleTrajectory",
    "SignalingRecord",
    "evolve_ensemble",
    "load_ensemble",
    "remixed_ensemble",
    "save_ensemble",
    "signaling_gap",
    "two_peak_position_ensemble",
    "two_peak_superposition_ensemble",
    "von_neumann_consistency",
]

_ENSEMBLE_MODES = ("pure_state_sn", "mixed_state_sn")
_DENSITY_MATRIX_MAX_POINTS = 1024


@dataclass(frozen=True)
class EnsembleState:
    """Probability-weighted packets sharing one grid."""

    weights: tuple[float, ...]
    members: tuple[WaveField, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        m = tuple(self.members)
        if not m:
            raise DomainError("ensemble needs at least one member")
        if len(w) != len(m):
            raise DomainError(f"{len(w)} weights for {len(m)} members")
        if any(not (math.isfinite(x) and x >= 0.0) for x in w):
            raise DomainError("weights must be finite and non-negative")
        total = sum(w)
        if abs(total - 1.0) > 1e-12:
            raise DomainError(
                f"weights sum to {total!r}, not 1 within 1e-12")
        g = m[0].grid
        if any(fld.grid != g for fld in m[1:]):
            raise DomainError("members must share one grid")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "members", m)

    @property
    def grid(self) -> GridSpec:
        return self.members[0].grid

    def density(self) -> np.ndarray:
        out = np.zeros(self.grid.shape)
        for p, fld in zip(self.weights, self.members):
            out += p * fld.density()
        return out


# ---------------------------------------------------------------------------
# Canonical two-peak decomposition pair.
# ---------------------------------------------------------------------------

def two_peak_position_ensemble(grid: GridSpec, *, offset: float,
                               width: float = 1.0) -> EnsembleState:
    """Even mixture of one packet at +offset and one at -offset."""
    if not (math.isfinite(offset) and offset > 0):
        raise DomainError(f"offset must be positive, got {offset!r}")
    up = gaussian_packet(grid, center=offset, width=width)
    down = gaussian_packet(grid, center=-offset, width=width)
    return EnsembleState((0.5, 0.5), (up, down))


def two_peak_superposition_ensemble(grid: GridSpec, *, offset: float,
                                    width: float = 1.0) -> EnsembleState:
    """Sum/difference decomposition of the same two-peak density.

    Weighting the normalized sum and difference by a quarter of the
    squared pre-normalization norms makes the two interference terms
    cancel pointwise, so the density equals the position mixture's to
    round-off even when the packets overlap.
    """
    if not (math.isfinite(offset) and offset > 0):
        raise DomainError(f"offset must be positive, got {offset!r}")
    up = gaussian_packet(grid, center=offset, width=width)
    down = gaussian_packet(grid, center=-offset, width=width)
    vol = grid.cell_volume
    raw = (up.values + down.values, up.values - down.values)
    weights = [float(np.sum((v.real**2 + v.imag**2) * vol)) / 4.0
               for v in raw]
    total = sum(weights)
    members = tuple(WaveField.normalized(grid, v) for v in raw)
    return EnsembleState(tuple(wt / total for wt in weights), members)


def remixed_ensemble(e: EnsembleState, mixing: np.ndarray) -> EnsembleState:
    """Rotate member amplitudes by a real orthogonal matrix.

    sqrt(p_k) psi_k -> sum_j O_kj sqrt(p_j) psi_j scrambles the
    decomposition while leaving the ensemble density pointwise
    unchanged (columns of an orthogonal matrix are orthonormal).
    """
    o = np.asarray(mixing, dtype=float)
    k = len(e.members)
    if o.shape != (k, k):
        raise DomainError(f"mixing must be {k}x{k}, got {o.shape}")
    if not np.allclose(o.T @ o, np.eye(k), atol=1e-12):
        raise DomainError("mixing matrix is not orthogonal")
    amps = np.stack([math.sqrt(p) * f.values
                     for p, f in zip(e.weights, e.members)])
    new = np.tensordot(o, amps, axes=(1, 0))
    vol = e.grid.cell_volume
    weights = [float(np.sum((v.real**2 + v.imag**2) * vol)) for v in new]
    if min(weights) < 1e-12:
        raise DomainError("mixing produced a nearly weightless member")
    total = sum(weights)
    members = tuple(WaveField.normalized(e.grid, v) for v in new)
    return EnsembleState(tuple(wt / total for wt in weights), members)


# ---------------------------------------------------------------------------
# Ensemble propagation.
# ---------------------------------------------------------------------------

@dataclass
class EnsembleTrajectory:
    """Snapshots of the whole ensemble plus per-snapshot diagnostics."""

    times: np.ndarray
    states: list[EnsembleState]
    metrics: dict[str, np.ndarray]

    @property
    def final(self) -> EnsembleState:
        return self.states[-1]


def evolve_ensemble(e0: EnsembleState, params: PhysicalParams,
                    config: SolverConfig, t_final: float, *,
                    mode: str = "mixed_state_sn",
                    external_potential: np.ndarray | None = None,
                    store_times=None) -> EnsembleTrajectory:
    """March every member of the ensemble through t_final.

    Pure mode builds each member's potential from that member alone;
    mixed mode builds one potential from the weighted density of all
    members before any of them advances (a Jacobi-style update), which
    is what keeps equal-density decompositions equal.
    """
    grid = e0.grid
    if mode not in _ENSEMBLE_MODES:
        raise ConfigError(f"mode {mode!r} not one of {_ENSEMBLE_MODES}",
                          field="mode")
    if grid.geometry not in ("line_z", "cylinder_sz"):
        raise ConfigError("ensembles evolve on line and cylinder grids",
                          field="geometry")
    if config.scheme != "split_operator":
        raise ConfigError("ensemble evolution is split-operator only",
                          field="scheme")
    _check_step_gate(grid, params, config.dt)
    if external_potential is not None:
        external_potential = np.asarray(external_potential, dtype=float)
        if external_potential.shape != grid.shape:
            raise ConfigError("external potential shape mismatch",
                              field="external_potential")
    source = GravitySource(grid, params, mirror=False,
                           softening=config.softening)
    dt = config.dt
    snaps = _snapshot_steps(t_final, dt, store_times)
    guard = _BoundaryGuard(grid, config)
    kin_cls = (_CylinderKinetic if grid.geometry == "cylinder_sz"
               else _SpectralKinetic)
    kin = kin_cls(grid, params, dt)
    kin_half = kin_cls(grid, params, 0.5 * dt)
    weights = tuple(e0.weights)
    cols = [f.values.astype(complex) for f in e0.members]

    def build_v(dens):
        v = source(dens)
        if external_potential is not None:
            v = v + external_potential
        return v

    def ens_density(columns):
        out = np.zeros(grid.shape)
        for p, v in zip(weights, columns):
            out += p * (v.real**2 + v.imag**2)
        return out

    def v_fields(columns):
        # every potential is built from pre-step columns
        if mode == "mixed_state_sn":
            shared = build_v(ens_density(columns))
            return [shared] * len(columns)
        return [build_v(c.real**2 + c.imag**2) for c in columns]

    def strang(c, v_pot, engine, step_dt):
        half = np.exp(-0.5j * step_dt / params.hbar * v_pot)
        return half * engine.full(half * c)

    def full_step(columns):
        v0 = v_fields(columns)
        if config.nonlinearity_update == "per_step":
            return [strang(c, v, kin, dt) for c, v in zip(columns, v0)]
        probe = [strang(c, v, kin_half, 0.5 * dt)
                 for c, v in zip(columns, v0)]
        v_mid = v_fields(probe)
        return [strang(c, v, kin, dt) for c, v in zip(columns, v_mid)]

    axis_z = 0 if grid.geometry == "line_z" else 1
    z_line = grid.axes[axis_z]
    z_bcast = z_line if len(grid.shape) == 1 else z_line[None, :]
    vol = grid.cell_volume
    times, states, rows = [], [], []

    def record(step, columns):
        members = tuple(WaveField(grid, c) for c in columns)
        st = EnsembleState(weights, members)
        dens = st.density()
        mean_z = float(np.sum(dens * z_bcast * vol))
        var_z = float(np.sum(dens * z_bcast**2 * vol)) - mean_z**2
        rows.append({
            "norms": np.array([m.norm() for m in members]),
            "mean_z": mean_z,
            "var_z": var_z,
            "boundary_fraction": max(m.boundary_fraction()
                                     for m in members),
        })
        times.append(step * dt)
        states.append(st)

    record(0, cols)
    snap_set = set(snaps)
    n_steps = snaps[-1]
    for step in range(1, n_steps + 1):
        cols = full_step(cols)
        for c in cols:
            guard.check(c, step, dt)
        if step in snap_set:
            record(step, cols)

    metrics = {k: np.array([r[k] for r in rows]) for k in rows[0]}
    return EnsembleTrajectory(np.array(times), states, metrics)


# ---------------------------------------------------------------------------
# Decomposition distinguishability.
# ---------------------------------------------------------------------------

@dataclass
class SignalingRecord:
    """L1 distance between two decompositions' densities over time."""

    times: np.ndarray
    gap: np.ndarray

    @property
    def max_gap(self) -> float:
        return float(np.max(self.gap))


def signaling_gap(e_a: EnsembleState, e_b: EnsembleState,
                  params: PhysicalParams, config: SolverConfig,
                  t_final: float, *, mode: str,
                  external_potential: np.ndarray | None = None,
                  store_times=None) -> SignalingRecord:
    """Evolve two ensembles side by side and track their density gap.

    The initial densities must already agree to 1e-10 in L1 so that
    any later gap is produced by the dynamics, not the preparation.
    """
    if e_a.grid != e_b.grid:
        raise DomainError("ensembles must share one grid")
    vol = e_a.grid.cell_volume
    gap0 = float(np.sum(np.abs(e_a.density() - e_b.density()) * vol))
    if gap0 > 1e-10:
        raise DomainError(
            f"initial densities differ by {gap0:.3e} in L1 (gate: 1e-10)")
    run_a = evolve_ensemble(e_a, params, config, t_final, mode=mode,
                            external_potential=external_potential,
                            store_times=store_times)
    run_b = evolve_ensemble(e_b, params, config, t_final, mode=mode,
                            external_potential=external_potential,
                            store_times=store_times)
    gaps = np.array([
        float(np.sum(np.abs(sa.density() - sb.density()) * vol))
        for sa, sb in zip(run_a.states, run_b.states)])
    return SignalingRecord(run_a.times, gaps)


# ---------------------------------------------------------------------------
# Density-matrix cross-check.
# ---------------------------------------------------------------------------

def von_neumann_consistency(e0: EnsembleState, params: PhysicalParams,
                            config: SolverConfig, t_final: float, *,
                            samples: int = 8) -> float:
    """Max trace-norm gap between the two routes to mixed dynamics.

    Route one reassembles sum_j p_j |psi_j><psi_j| from the member
    evolution under the shared potential; route two integrates the
    full position-space density matrix with classic RK4, rebuilding
    the potential from the matrix diagonal at every stage. The routes
    agree analytically, so the return value is pure discretization
    error (dominated by the splitting of route one).
    """
    grid = e0.grid
    if grid.geometry != "line_z":
        raise ConfigError("the density-matrix route needs a line grid",
                          field="geometry")
    n = grid.shape[0]
    if n > _DENSITY_MATRIX_MAX_POINTS:
        raise CapacityError(
            f"{n} points make an {n}x{n} density matrix; the gate is "
            f"{_DENSITY_MATRIX_MAX_POINTS} points")
    if not (isinstance(samples, int) and samples >= 1):
        raise ConfigError(f"samples must be a positive int, got {samples!r}",
                          field="samples")
    dt = config.dt
    _check_step_gate(grid, params, dt)
    n_steps = _snapshot_steps(t_final, dt, None)[-1]
    sample_steps = sorted({int(round(i * n_steps / samples))
                           for i in range(samples + 1)})
    mix = evolve_ensemble(
        e0, params, config, t_final, mode="mixed_state_sn",
        store_times=[s * dt for s in sample_steps])

    z = grid.axes[0]
    dz = grid.spacing[0]
    soft = params.sigma if config.softening is None else config.softening
    # same contact-regularized contraction as the member route
    kernel = (-params.G * params.mass**2 * dz
              * softened_kernel_matrix(z, soft))
    t_mode = params.hbar**2 * grid.wavenumbers(0)**2 / (2.0 * params.mass)

    def derivative(r):
        v = kernel @ r.diagonal().real
        h_r = np.fft.ifft(t_mode[:, None] * np.fft.fft(r, axis=0), axis=0)
        h_r += v[:, None] * r
        # the spectral kinetic matrix is real symmetric, so acting on
        # the second index uses the same transform
        r_h = np.fft.ifft(t_mode[None, :] * np.fft.fft(r, axis=1), axis=1)
        r_h += r * v[None, :]
        return (-1j / params.hbar) * (h_r - r_h)

    def rk4_step(r):
        k1 = derivative(r)
        k2 = derivative(r + (0.5 * dt) * k1)
        k3 = derivative(r + (0.5 * dt) * k2)
        k4 = derivative(r + dt * k3)
        r = r + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        return 0.5 * (r + r.conj().T)        # round-off symmetrization

    def assemble(state):
        r = np.zeros((n, n), dtype=complex)
        for p, f in zip(state.weights, state.members):
            r += p * np.outer(f.values, f.values.conj())
        return r

    r = assemble(e0)
    deviations = []
    sample_set = set(sample_steps)
    idx = 0
    for step in range(n_steps + 1):
        if step in sample_set:
            diff = r - assemble(mix.states[idx])
            idx += 1
            deviations.append(
                float(np.sum(np.abs(np.linalg.eigvalsh(diff))) * dz))
        if step < n_steps:
            r = rk4_step(r)
    return max(deviations)


# ---------------------------------------------------------------------------
# Persistence.
# ---------------------------------------------------------------------------

def save_ensemble(path, e: EnsembleState, time: float = 0.0) -> None:
    """One field file per member plus a weights sidecar."""
    base = Path(path)
    for j, (p, fld) in enumerate(zip(e.weights, e.members)):
        save_snapshot(base.parent / f"{base.name}_m{j}", fld, time=time,
                      extra={"weight": p, "member": j})
    meta = {
        "schema": "snlab-ensemble-1",
        "members": len(e.members),
        "weights": list(e.weights),
        "time": float(time),
    }
    base.with_suffix(".json").write_text(
        json.dumps(meta, indent=1, sort_keys=True) + "\n")


def load_ensemble(path) -> tuple[EnsembleState, dict]:
    base = Path(path)
    meta = json.loads(base.with_suffix(".json").read_text())
    if meta.get("schema") != "snlab-ensemble-1":
        raise DomainError(f"unknown ensemble schema {meta.get('schema')!r}")
    members = []
    for j in range(meta["members"]):
        fld, _ = load_snapshot(base.parent / f"{base.name}_m{j}")
        members.append(fld)
    return EnsembleState(tuple(meta["weights"]), tuple(members)), meta
