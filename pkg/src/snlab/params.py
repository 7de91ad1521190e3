"""Physical parameter bundle shared by the closed-form and PDE layers.

All quantities are in whatever coherent unit system the caller chooses;
nothing in the package branches on units. SI is the natural choice for
the closed-form covariance work; the PDE solvers are usually driven in
reduced units built by :meth:`PhysicalParams.reduced`, where the
kinetic operator is exactly -laplacian and lengths are in units of the
packet width.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import ConfigError

__all__ = ["PhysicalParams", "GRAVITATIONAL_CONSTANT_SI", "HBAR_SI", "KB_SI"]

GRAVITATIONAL_CONSTANT_SI = 6.67430e-11  # m^3 kg^-1 s^-2 (CODATA 2018)
HBAR_SI = 1.054571817e-34  # J s
KB_SI = 1.380649e-23  # J K^-1


@dataclass(frozen=True, slots=True)
class PhysicalParams:
    """One particle pair: two identical masses in identical traps.

    Attributes
    ----------
    mass:
        Particle mass (each of the two particles), > 0.
    separation:
        Distance between the two trap centres, > 0.
    omega0:
        Trap angular frequency, > 0.
    temperature:
        Initial-state temperature, >= 0 (0 means the exact ground state).
    G:
        Gravitational coupling, >= 0 (0 switches gravity off, used by
        free-evolution references).
    hbar, kB:
        Fundamental constants of the chosen unit system.
    sigma:
        Gaussian packet width. Defaults to the trap ground-state width
        sqrt(hbar / (2 m omega0)); pass a value to override, which is
        recorded in ``sigma_overridden`` and warned about because the
        closed forms assume the ground-state relation.
    """

    mass: float
    separation: float
    omega0: float
    temperature: float = 0.0
    G: float = GRAVITATIONAL_CONSTANT_SI
    hbar: float = HBAR_SI
    kB: float = KB_SI
    sigma: float | None = None
    sigma_overridden: bool = field(init=False, default=False)

    def __post_init__(self):
        for name in ("mass", "separation", "omega0", "hbar", "kB"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"must be a finite positive number, got {v!r}",
                                  field=name)
        for name in ("temperature", "G"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ConfigError(f"must be finite and >= 0, got {v!r}",
                                  field=name)
        ground = math.sqrt(self.hbar / (2.0 * self.mass * self.omega0))
        if self.sigma is None:
            object.__setattr__(self, "sigma", ground)
        else:
            v = self.sigma
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"must be a finite positive number, got {v!r}",
                                  field="sigma")
            object.__setattr__(self, "sigma", float(v))
            object.__setattr__(self, "sigma_overridden", True)
            warnings.warn(
                "packet width overridden away from the trap ground state "
                f"({v:.6g} vs {ground:.6g}); closed-form covariance results "
                "assume the ground-state width",
                stacklevel=2,
            )
        if self.sigma / self.separation > 0.1:
            warnings.warn(
                f"sigma/separation = {self.sigma / self.separation:.3g} > 0.1: "
                "the quadratic expansion of the cross potential is marginal",
                stacklevel=2,
            )

    @classmethod
    def reduced(cls, *, coupling_g: float, separation: float,
                temperature: float = 0.0) -> "PhysicalParams":
        """Build a reduced-unit bundle for the PDE solvers.

        Sets hbar = 1, mass = 1/2, omega0 = 1 so that sigma = 1 (the
        packet width is the length unit), the kinetic operator is
        exactly -laplacian, and one time unit equals 2 m sigma^2 / hbar
        of the corresponding physical system. ``coupling_g`` is the
        dimensionless coupling 2 G m^3 sigma / hbar^2 of that system;
        the reduced G that reproduces it is 4 * coupling_g.
        ``separation`` is in units of sigma.
        """
        if not (math.isfinite(coupling_g) and coupling_g >= 0):
            raise ConfigError(f"must be finite and >= 0, got {coupling_g!r}",
                              field="coupling_g")
        return cls(mass=0.5, separation=separation, omega0=1.0,
                   temperature=temperature, G=4.0 * coupling_g,
                   hbar=1.0, kB=1.0)

    @property
    def coupling_g(self) -> float:
        """Dimensionless self-gravity strength 2 G m^3 sigma / hbar^2."""
        return 2.0 * self.G * self.mass**3 * self.sigma / self.hbar**2

    @property
    def time_scale(self) -> float:
        """Unit of reduced solver time: 2 m sigma^2 / hbar."""
        return 2.0 * self.mass * self.sigma**2 / self.hbar
