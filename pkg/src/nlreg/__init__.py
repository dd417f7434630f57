"""Nonlocal Dirichlet solver and boundary-regularity diagnostics.

Library layout:

  geometry     domains, distances, tubular integrals, flattening shears
  kernels      jump kernels, polar extensions, drift fields, class checks
  funcspace    grids, fields, cutoffs, Morrey/Kato/Sobolev/Hoelder machinery
  operators    pointwise PV application, Dirichlet form, potentials
  solver       Galerkin assembly, CG solve, localization, energy inequality
  diagnostics  growth probes, profile/affine projections, rigidity distances
  cli          declarative experiment runner (solve / diagnose / verify)
"""

from .errors import NlregError
from .funcspace import DiscreteField, FarField, Grid, Cutoff
from .geometry import Domain, FlatteningMap, build_flattening
from .kernels import AnisotropyDensity, KernelSpec
from .operators import PVConfig
from .solver import DirichletProblem, StiffnessSystem, assemble, solve

__version__ = "0.1.0"

__all__ = [
    "AnisotropyDensity", "Cutoff", "DirichletProblem", "DiscreteField",
    "Domain", "FarField", "FlatteningMap", "Grid", "KernelSpec", "NlregError",
    "PVConfig", "StiffnessSystem", "assemble", "build_flattening", "solve",
    "__version__",
]
