"""Grids, wave fields and gravitational potentials.

Geometries:

* ``line_z`` -- one axial coordinate, spectral kinetic axis;
* ``cylinder_sz`` -- axisymmetric (s, z) with the radial points
  staggered half a cell off the axis, s_i = (i + 1/2) ds;
* ``plane_z1z2`` -- two particles on one line, coordinates (z1, z2).

All axes are uniform and cell-centered; a line/cylinder z-axis is
symmetric about ``z_center``, which makes the reflection
z -> 2 z_center - z an exact index flip. The self-gravity machinery
relies on that: the potential sourced by the z-mirrored, distance-L
displaced image of an axisymmetric density is an exact convolution of
the flipped density samples against ring-kernel values taken at axial
displacements q dz + (2 z_center + L).

The ring kernel is the azimuthal integral of the 1/r kernel between
rings: K_ring(s, s', dz) = 4 K(k) / D with D^2 = (s+s')^2 + dz^2 and
modulus k^2 = 4 s s' / D^2. Its log-singular near-diagonal cells are
replaced by exact cell averages of the log term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CapacityError, ConfigError, DomainError
from .params import PhysicalParams
from .specfun import _agm_k, erf

__all__ = [
    "GridSpec",
    "WaveField",
    "gaussian_packet",
    "erf_potential",
    "pair_attraction",
    "initial_pair_potentials",
    "initial_cluster_potential",
    "axial_kernel",
    "CylinderKernel",
    "SelfGravity",
    "softened_kernel_matrix",
]

_GEOMETRIES = ("line_z", "cylinder_sz", "plane_z1z2")
_MAX_CELLS = 1 << 24          # complex field ~ 268 MB; beyond that, refuse
_MAX_KERNEL_BYTES = 2_000_000_000
# k > 1 - 1e-8 counts as singular-adjacent: k'^2 < 1 - (1 - 1e-8)^2
_KP2_NEAR = 2.0e-8 - 1.0e-16


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centered grid for one of the three geometries."""

    geometry: str
    shape: tuple[int, ...]
    spacing: tuple[float, ...]
    z_center: float = 0.0

    def __post_init__(self):
        if self.geometry not in _GEOMETRIES:
            raise ConfigError(f"unknown geometry {self.geometry!r}, "
                              f"expected one of {_GEOMETRIES}", field="geometry")
        ndim = 1 if self.geometry == "line_z" else 2
        shape = tuple(int(n) for n in self.shape)
        spacing = tuple(float(d) for d in self.spacing)
        if len(shape) != ndim or len(spacing) != ndim:
            raise ConfigError(f"{self.geometry} needs {ndim} axis sizes and "
                              f"spacings, got {shape} / {spacing}", field="shape")
        for n in shape:
            if n < 8:
                raise ConfigError(f"axis size {n} too small (>= 8)", field="shape")
        for d in spacing:
            if not (math.isfinite(d) and d > 0):
                raise ConfigError(f"spacing must be positive, got {d!r}",
                                  field="spacing")
        if not math.isfinite(self.z_center):
            raise ConfigError("z_center must be finite", field="z_center")
        cells = 1
        for n in shape:
            cells *= n
        if cells > _MAX_CELLS:
            raise CapacityError(
                f"grid would hold {cells} cells (limit {_MAX_CELLS})")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "z_center", float(self.z_center))

    # -- constructors --------------------------------------------------------

    @classmethod
    def line(cls, n: int, dz: float, center: float = 0.0) -> "GridSpec":
        return cls("line_z", (n,), (dz,), center)

    @classmethod
    def cylinder(cls, ns: int, ds: float, nz: int, dz: float,
                 z_center: float = 0.0) -> "GridSpec":
        return cls("cylinder_sz", (ns, nz), (ds, dz), z_center)

    @classmethod
    def plane(cls, n: int, dz: float, center: float = 0.0) -> "GridSpec":
        return cls("plane_z1z2", (n, n), (dz, dz), center)

    # -- axes ------------------------------------------------------------------

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        out = []
        for i, (n, d) in enumerate(zip(self.shape, self.spacing)):
            if self.geometry == "cylinder_sz" and i == 0:
                ax = (np.arange(n) + 0.5) * d            # staggered off-axis
            else:
                ax = self.z_center + (np.arange(n) - (n - 1) / 2.0) * d
            ax.flags.writeable = False
            out.append(ax)
        return tuple(out)

    @property
    def z_axis(self) -> np.ndarray:
        return self.axes[-1]

    @cached_property
    def cell_volume(self):
        """Integration weight per cell: scalar, or (ns, 1) for cylinders."""
        if self.geometry == "line_z":
            return self.spacing[0]
        if self.geometry == "plane_z1z2":
            return self.spacing[0] * self.spacing[1]
        s = self.axes[0][:, None]
        return 2.0 * math.pi * s * self.spacing[0] * self.spacing[1]

    def wavenumbers(self, axis: int) -> np.ndarray:
        """Angular spatial frequencies of the FFT along one axis."""
        n = self.shape[axis]
        return 2.0 * math.pi * np.fft.fftfreq(n, d=self.spacing[axis])

    def boundary_mask(self, cells: int = 2) -> np.ndarray:
        """True on the outer absorbing-check band of each open edge.

        The cylinder axis s = 0 is a coordinate line, not a boundary;
        only the outer radial rim and the z ends count.
        """
        mask = np.zeros(self.shape, dtype=bool)
        if self.geometry == "line_z":
            mask[:cells] = mask[-cells:] = True
        elif self.geometry == "plane_z1z2":
            mask[:cells, :] = mask[-cells:, :] = True
            mask[:, :cells] = mask[:, -cells:] = True
        else:
            mask[-cells:, :] = True
            mask[:, :cells] = mask[:, -cells:] = True
        return mask


@dataclass(frozen=True)
class WaveField:
    """A complex field on a grid, unit L2 norm (within 1e-10)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise DomainError(
                f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v.real)) or not np.all(np.isfinite(v.imag)):
            raise DomainError("field values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        n = self.norm()
        if abs(n - 1.0) > 1e-10:
            raise DomainError(f"field norm {n!r} is not 1 within 1e-10")

    @classmethod
    def normalized(cls, grid: GridSpec, values: np.ndarray) -> "WaveField":
        v = np.asarray(values, dtype=complex)
        nrm = math.sqrt(float(np.sum((v.real**2 + v.imag**2)
                                     * grid.cell_volume)))
        if not (math.isfinite(nrm) and nrm > 0):
            raise DomainError("cannot normalize a zero or non-finite field")
        return cls(grid, v / nrm)

    def norm(self) -> float:
        d = self.values.real**2 + self.values.imag**2
        return math.sqrt(float(np.sum(d * self.grid.cell_volume)))

    def density(self) -> np.ndarray:
        return self.values.real**2 + self.values.imag**2

    def boundary_fraction(self, cells: int = 2) -> float:
        """Probability mass sitting in the outer band of open edges."""
        d = self.density() * self.grid.cell_volume
        return float(np.sum(d[self.grid.boundary_mask(cells)]))


def gaussian_packet(grid: GridSpec, *, center=0.0, width: float = 1.0,
                    wavenumber=0.0) -> WaveField:
    """Isotropic Gaussian packet, discretely normalized.

    ``center`` is the axial position (line/cylinder) or a (z1, z2) pair
    (plane); ``width`` is the per-axis standard deviation of |psi|^2;
    ``wavenumber`` boosts the packet along z (or per-axis pair).
    """
    if not (math.isfinite(width) and width > 0):
        raise DomainError(f"width must be positive, got {width!r}")
    if grid.geometry == "line_z":
        z = grid.axes[0]
        env = np.exp(-((z - center) ** 2) / (4.0 * width**2)
                     + 1j * wavenumber * z)
    elif grid.geometry == "cylinder_sz":
        s, z = grid.axes
        r2 = s[:, None] ** 2 + (z[None, :] - center) ** 2
        env = np.exp(-r2 / (4.0 * width**2) + 1j * wavenumber * z[None, :])
    else:
        c1, c2 = (center if np.ndim(center) else (center, center))
        k1, k2 = (wavenumber if np.ndim(wavenumber) else (wavenumber,
                                                          wavenumber))
        z1, z2 = grid.axes
        env = np.exp(-((z1[:, None] - c1) ** 2
                       + (z2[None, :] - c2) ** 2) / (4.0 * width**2)
                     + 1j * (k1 * z1[:, None] + k2 * z2[None, :]))
    return WaveField.normalized(grid, env)


# ---------------------------------------------------------------------------
# Closed-form potentials of Gaussian sources.
# ---------------------------------------------------------------------------

def erf_potential(r, params: PhysicalParams):
    """Potential energy at distance r from a Gaussian mass of width sigma.

    -G m^2 erf(r / (sigma sqrt 2)) / r, which is the exact potential of
    the |ground state|^2 mass cloud: Newtonian -G m^2 / r outside the
    core, finite -G m^2 sqrt(2/pi)/sigma at the centre. Vectorized;
    r < 1e-6 sigma switches to the even Taylor branch, so r = 0 is fine.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("distance must be finite and >= 0")
    rho = arr / (params.sigma * math.sqrt(2.0))
    small = rho < 1e-6
    rho_safe = np.where(small, 1.0, rho)
    lead = -params.G * params.mass**2 * math.sqrt(2.0 / math.pi) / params.sigma
    core = lead * (1.0 - rho**2 / 3.0 + rho**4 / 10.0)
    far = lead * math.sqrt(math.pi) / 2.0 * erf(rho_safe) / rho_safe
    out = np.where(small, core, far)
    return float(out) if arr.ndim == 0 else out


def pair_attraction(distance, params: PhysicalParams):
    """Attraction magnitude between two Gaussian clouds a distance d apart.

    The d-derivative of the cloud-cloud binding energy
    -G m^2 erf(d / (2 sigma)) / d (widths add in quadrature, so the
    pair behaves like one cloud of width sigma sqrt 2):
    G m^2 [erf(d / (2 sigma)) / d^2 - exp(-d^2/(4 sigma^2)) /
    (sigma sqrt(pi) d)]. Tends to G m^2 / d^2 for d >> sigma and to 0
    linearly at contact.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise DomainError("cloud separation must be finite and > 0")
    sig = params.sigma
    amp = params.G * params.mass**2
    out = amp * (erf(d / (2.0 * sig)) / d**2
                 - np.exp(-d * d / (4.0 * sig * sig))
                 / (sig * math.sqrt(math.pi) * d))
    return float(out) if d.ndim == 0 else out


def initial_pair_potentials(points, params: PhysicalParams):
    """Initial-time potentials seen by each of the two packets.

    ``points``: (..., 3) Cartesian positions relative to the packet's
    own trap centre; the partner sits a distance L away along +z for
    packet one and -z for packet two. Each particle feels its own cloud
    plus the partner's: V1 = pot(|r|) + pot(|r - L zhat|) and
    V2 = pot(|r|) + pot(|r + L zhat|).
    """
    p = np.asarray(points, dtype=float)
    if p.shape[-1] != 3:
        raise DomainError(f"points must have a trailing 3-axis, got {p.shape}")
    L = params.separation
    r = np.linalg.norm(p, axis=-1)
    shift = p.copy()
    shift[..., 2] -= L
    r_minus = np.linalg.norm(shift, axis=-1)
    shift[..., 2] += 2.0 * L
    r_plus = np.linalg.norm(shift, axis=-1)
    v1 = erf_potential(r, params) + erf_potential(r_minus, params)
    v2 = erf_potential(r, params) + erf_potential(r_plus, params)
    return v1, v2


def initial_cluster_potential(points, centers, params: PhysicalParams):
    """Initial-time potential of N Gaussian packets at given centres.

    Sum over every centre (a packet's own term included) of the
    Gaussian-cloud potential. With centres {0, +L zhat} this is the
    first packet's pair potential, with {0, -L zhat} the second's.
    """
    p = np.asarray(points, dtype=float)
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    if p.shape[-1] != 3 or c.shape[-1] != 3:
        raise DomainError("points and centers must have a trailing 3-axis")
    total = np.zeros(p.shape[:-1], dtype=float)
    for ck in c:
        total = total + erf_potential(np.linalg.norm(p - ck, axis=-1), params)
    return total


# ---------------------------------------------------------------------------
# Ring kernel for axisymmetric sources.
# ---------------------------------------------------------------------------

def axial_kernel(s, s_other, dz):
    """Azimuthal integral of 1/|r - r'| between rings: 4 K(k) / D.

    D^2 = (s + s')^2 + dz^2, k^2 = 4 s s' / D^2. Symmetric in (s, s');
    on the axis it reduces to 2 pi / sqrt(s'^2 + dz^2). Coincident
    rings (s = s' > 0, dz = 0) are logarithmically singular and raise
    DomainError; grid code averages those cells analytically instead.
    """
    sa = np.asarray(s, dtype=float)
    sb = np.asarray(s_other, dtype=float)
    dd = np.asarray(dz, dtype=float)
    if np.any(sa < 0) or np.any(sb < 0):
        raise DomainError("ring radii must be >= 0")
    for a in (sa, sb, dd):
        if not np.all(np.isfinite(a)):
            raise DomainError("kernel arguments must be finite")
    sa, sb, dd = np.broadcast_arrays(sa, sb, dd)
    d2 = (sa + sb) ** 2 + dd**2
    rho2 = (sa - sb) ** 2 + dd**2
    if np.any(rho2 == 0.0):
        raise DomainError("coincident rings: the kernel diverges at "
                          "s = s', dz = 0")
    if np.any(d2 == 0.0):
        raise DomainError("kernel undefined with both rings on the axis at "
                          "dz = 0")
    out = 4.0 / np.sqrt(d2) * _agm_k(np.sqrt(rho2 / d2))
    return float(out) if out.ndim == 0 else out


def _log_distance_cell_mean(xc, yc, dx: float, dy: float):
    """Exact mean of ln sqrt(x^2 + y^2) over dx-by-dy cells at (xc, yc).

    Uses the closed-form double antiderivative of ln r,
    F(x, y) = [xy ln(x^2+y^2) - 3xy + x^2 atan(y/x) + y^2 atan(x/y)]/2,
    odd in each argument and zero on the axes, so the four-corner
    difference handles cells containing the origin.
    """
    def corner(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r2 = x * x + y * y  # zero only at the origin, where F -> 0
        safe_r2 = np.where(r2 > 0.0, r2, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_log = 0.5 * x * y * np.log(safe_r2)
            t_x = 0.5 * x * x * np.arctan(np.where(x != 0.0, y, 0.0)
                                          / np.where(x != 0.0, x, 1.0))
            t_y = 0.5 * y * y * np.arctan(np.where(y != 0.0, x, 0.0)
                                          / np.where(y != 0.0, y, 1.0))
        return np.where(r2 > 0.0, t_log - 1.5 * x * y + t_x + t_y, 0.0)

    x0, x1 = xc - dx / 2.0, xc + dx / 2.0
    y0, y1 = yc - dy / 2.0, yc + dy / 2.0
    area = (corner(x1, y1) - corner(x0, y1) - corner(x1, y0) + corner(x0, y0))
    return area / (dx * dy)


class CylinderKernel:
    """Precomputed ring-kernel spectra for one cylinder grid.

    The tensor C[q, i, j] = K_ring(s_i, s_j, |q dz + base_offset|) over
    signed axial displacements q is embedded in a circulant of FFT
    length M >= 2 nz - 1 and stored as spectra over q, so one source
    contraction costs an FFT pair plus a batched matrix product.
    base_offset = 0 gives the self-interaction kernel (even in q: real
    spectra, half the memory); base_offset = 2 z_center + L gives the
    kernel against the z-flipped, L-displaced image density.

    Cells with modulus k > 1 - 1e-8 (the log singularity at coincident
    rings and its immediate neighbourhood) are replaced by the exact
    cell average of the log term:
    <K_ring> = (4/D) [ln(4 D) - <ln rho>_cell].
    """

    def __init__(self, grid: GridSpec, base_offset: float = 0.0):
        if grid.geometry != "cylinder_sz":
            raise ConfigError("ring kernels need the cylinder geometry",
                              field="geometry")
        ns, nz = grid.shape
        ds, dz = grid.spacing
        self.grid = grid
        self.base_offset = float(base_offset)
        self._even = self.base_offset == 0.0
        m = 1 << (2 * nz - 1).bit_length()
        self._m = m
        n_spec = m // 2 + 1
        bytes_needed = n_spec * ns * ns * (8 if self._even else 16) \
            + m * ns * ns * 8
        if bytes_needed > _MAX_KERNEL_BYTES:
            raise CapacityError(
                f"ring-kernel tensor needs ~{bytes_needed/1e9:.1f} GB "
                f"(limit {_MAX_KERNEL_BYTES/1e9:.1f} GB); shrink the grid")
        s = grid.axes[0]
        si = s[None, :, None]
        sj = s[None, None, :]
        embed = np.zeros((m, ns, ns), dtype=float)
        qs = np.arange(nz) if self._even else np.arange(-(nz - 1), nz)
        chunk = max(1, 4_000_000 // (ns * ns))
        for start in range(0, qs.size, chunk):
            q = qs[start:start + chunk]
            dzv = np.abs(q * dz + self.base_offset)[:, None, None]
            d2 = (si + sj) ** 2 + dzv**2
            rho2 = (si - sj) ** 2 + dzv**2
            kp2 = rho2 / d2
            near = kp2 < _KP2_NEAR
            vals = 4.0 / np.sqrt(d2) * _agm_k(np.sqrt(np.where(near, 1.0,
                                                               kp2)))
            if np.any(near):
                iq, ii, jj = np.nonzero(near)
                dbar = np.sqrt(d2[iq, ii, jj])
                mean_ln = _log_distance_cell_mean(
                    s[ii] - s[jj], (q * dz + self.base_offset)[iq], ds, dz)
                vals[iq, ii, jj] = 4.0 / dbar * (np.log(4.0 * dbar) - mean_ln)
            embed[q % m] = vals
        if self._even:
            # even kernels were built for q >= 0 only; the circulant
            # also reads negative displacements at indices m - q
            neg = np.arange(1, nz)
            embed[m - neg] = embed[neg]
        # spectra over the displacement axis, chunked to bound transients
        spec = np.empty((n_spec, ns * ns),
                        dtype=float if self._even else complex)
        flat = embed.reshape(m, ns * ns)
        col_chunk = max(1, 8_000_000 // m)
        for c0 in range(0, ns * ns, col_chunk):
            block = np.fft.rfft(flat[:, c0:c0 + col_chunk], axis=0)
            spec[:, c0:c0 + col_chunk] = block.real if self._even else block
        self._spec = spec.reshape(n_spec, ns, ns)
        self._weight = (s * ds * dz)[:, None]

    def ring_potential(self, density: np.ndarray) -> np.ndarray:
        """Contract a (ns, nz) density: sum_jl K[...] rho_jl s_j ds dz.

        The density is the plain 3D probability density sampled on the
        grid (the 2 pi azimuthal factor lives in the kernel).
        """
        ns, nz = self.grid.shape
        if density.shape != (ns, nz):
            raise DomainError(f"density shape {density.shape} does not match "
                              f"grid {self.grid.shape}")
        w = density * self._weight
        ghat = np.fft.rfft(w, n=self._m, axis=1)        # (ns, n_spec)
        ghat_t = np.ascontiguousarray(ghat.T)            # (n_spec, ns)
        if self._even:
            out_re = np.matmul(self._spec, np.ascontiguousarray(
                ghat_t.real)[:, :, None])[..., 0]
            out_im = np.matmul(self._spec, np.ascontiguousarray(
                ghat_t.imag)[:, :, None])[..., 0]
            uhat = out_re + 1j * out_im
        else:
            uhat = np.matmul(self._spec, ghat_t[:, :, None])[..., 0]
        v = np.fft.irfft(uhat.T, n=self._m, axis=1)[:, :nz]
        return np.ascontiguousarray(v)


class SelfGravity:
    """Effective gravitational potential builder bound to one grid.

    The potential at (s, z) sourced by the packet's own density plus,
    when ``mirror`` is on, the image density reflected through the
    plane z = -L/2 (the partner packet of the symmetric pair). The
    image contraction reuses the self kernel whenever the grid is
    centred on -L/2 (then 2 z_center + L = 0), which is the intended
    layout; other centres build a second, offset kernel.
    """

    def __init__(self, grid: GridSpec, params: PhysicalParams,
                 mirror: bool = True):
        self.grid = grid
        self.params = params
        self.mirror = bool(mirror)
        self._kernel = CylinderKernel(grid, 0.0)
        self._mirror_kernel = None
        if self.mirror:
            c0 = 2.0 * grid.z_center + params.separation
            if abs(c0) <= 1e-9 * grid.spacing[1]:
                self._mirror_kernel = self._kernel
            else:
                self._mirror_kernel = CylinderKernel(grid, c0)

    def __call__(self, density: np.ndarray) -> np.ndarray:
        """-G m^2 times the ring-potential of density (+ mirrored image)."""
        src = density
        if self.mirror:
            # image of rho about z = -L/2 enters as a plain index flip
            flipped = density[:, ::-1]
            if self._mirror_kernel is self._kernel:
                src = density + flipped
            else:
                return -self.params.G * self.params.mass**2 * (
                    self._kernel.ring_potential(density)
                    + self._mirror_kernel.ring_potential(flipped))
        return -self.params.G * self.params.mass**2 \
            * self._kernel.ring_potential(src)


def softened_kernel_matrix(z_axis, softening: float,
                           offset: float = 0.0) -> np.ndarray:
    """Dense 1/sqrt((z_i - z_j - offset)^2 + a^2) interaction matrix.

    The regularized line-to-line kernel used by the one-dimensional
    solvers; a > 0 removes the Coulomb divergence at coincidence.
    """
    z = np.asarray(z_axis, dtype=float)
    if z.ndim != 1:
        raise DomainError("z_axis must be one-dimensional")
    if not (math.isfinite(softening) and softening > 0):
        raise DomainError(f"softening must be positive, got {softening!r}")
    diff = z[:, None] - z[None, :] - offset
    return 1.0 / np.sqrt(diff * diff + softening * softening)
