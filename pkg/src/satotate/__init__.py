"""Trace distributions of the genus-2 symmetry types and census checks.

Subpackages: specfun (scalar special functions), measures (coordinate
charts and joint Haar densities), tracedist (trace marginal by series,
quadrature and closed-form routes), sampler (seeded Monte Carlo), census
(finite-field curve enumeration), cli (command-line surface).
"""

from .measures import GroupKind
from .tracedist import DensityRoute, cdf, cdf_function, density

__version__ = "0.1.0"

__all__ = ["GroupKind", "DensityRoute", "density", "cdf", "cdf_function", "__version__"]
