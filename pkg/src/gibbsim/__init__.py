"""Simulation and thermodynamics of finite-range Gibbs point processes.

The package simulates pairwise and Quermass models by birth-death-move
Metropolis-Hastings, computes exact Minkowski functionals of disc unions,
and estimates the three macroscopic quantities (specific entropy, mean
energy, pressure) whose sum, the free excess energy, is minimized exactly by
Gibbs measures.  See the README for the command-line harness.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .core import Configuration, Seed, Window, sample_poisson
from .minkowski import (ClippedSummary, DiscUnion, MinkowskiSummary,
                        clipped_functionals, minkowski_functionals,
                        raster_oracle)
from .models import (HardCore, IdealGas, LennardJones, Quermass, Strauss,
                     build_model)
from .sampler import (ChainState, EstimatorError, McmcParams, NeighborCount,
                      Target, UnitTestFunction, gnz_residual, run,
                      sample_free_boundary, step)
from .thermo import (Estimate, GibbsLaw, InvariantViolation, PoissonLaw,
                     boundary_effect_curve, brute_force_log_partition,
                     entropy_gibbs, entropy_poisson, estimate_pressure,
                     mean_energy, poisson_mean_energy, ti_log_partition,
                     variational_gap)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "Configuration", "Seed", "Window", "sample_poisson",
    "DiscUnion", "MinkowskiSummary", "ClippedSummary",
    "minkowski_functionals", "clipped_functionals", "raster_oracle",
    "IdealGas", "Strauss", "HardCore", "LennardJones", "Quermass",
    "build_model",
    "Target", "McmcParams", "ChainState", "step", "run",
    "sample_free_boundary", "gnz_residual", "UnitTestFunction",
    "NeighborCount", "EstimatorError",
    "Estimate", "PoissonLaw", "GibbsLaw", "InvariantViolation",
    "entropy_poisson", "poisson_mean_energy", "brute_force_log_partition",
    "ti_log_partition", "estimate_pressure", "mean_energy", "entropy_gibbs",
    "variational_gap", "boundary_effect_curve",
    "__version__",
]
