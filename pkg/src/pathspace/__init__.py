"""Brownian motion on Riemannian manifolds and calculus on its path space.

Modules: geometry (manifolds, frames, curvature), brownian (framed walks and
path statistics), pathcalc (cylinder functions, gradients, integration by
parts), spde (the lattice stochastic string), inequalities (log-Sobolev and
Poincare checks), measures (path metrics, heat kernels, symmetry tests) and
experiments/cli (reproducible runs).
"""

from .geometry import Euclidean, GeometryError, Hyperbolic2, Manifold, Sphere2
from .rng import RngStream
from .montecarlo import MonteCarloEstimate

__version__ = "0.1.0"

__all__ = ["Euclidean", "GeometryError", "Hyperbolic2", "Manifold", "MonteCarloEstimate", "RngStream", "Sphere2",
           "__version__"]
