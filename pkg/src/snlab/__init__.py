"""Numerical laboratory for gravitationally coupled quantum packets.

Layers, roughly bottom up:

* :mod:`snlab.specfun` -- erf and the complete elliptic integral.
* :mod:`snlab.params` -- the physical parameter bundle.
* :mod:`snlab.gaussian` -- closed-form two-packet covariance dynamics.
* :mod:`snlab.correlations` -- Gaussian entanglement / information
  quantifiers.
* :mod:`snlab.fields` -- grids, wavefields, gravitational potentials and
  the cylindrical self-gravity kernel.
* :mod:`snlab.solver` -- split-operator / Crank-Nicolson propagation of
  the self-gravitating effective equation and the two-particle line
  problem.
* :mod:`snlab.ensemble` -- mixed-state ensembles, the shared-potential
  evolution rule and the no-signaling diagnostics.
* :mod:`snlab.cli` -- experiment runner (``snlab`` console script).
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
