"""Reaction-diffusion-advection equations with fast planar advection and
their averaged limit on the level-set graph of a radial Hamiltonian.

Submodules:

* ``hamiltonian``: H, the level map F and the graph coefficients
* ``graph_ops``: wedge/vee projections, weights and weighted norms
* ``noise``: covariance kernels, covariance matrices, addressable Brownian streams
* ``dense_ops``: matrix exponential and symmetric eigen helpers
* ``rda2d`` / ``graph1d``: finite-difference exponential Euler solvers
* ``particle_mc``: particle schemes and the asymptotic-error estimator
* ``experiments``, ``config``, ``cli``: harnesses and command line
"""

from .hamiltonian import HamiltonianProfile, ZetaProfile, exp_decay, power_tail
from .noise import NoiseStream, SpectralKernel
from .rda2d import Grid2D, build_system, solve_path
from .graph1d import GraphGrid, build_graph_system, solve_path_graph

__version__ = "0.1.0"

__all__ = [
    "HamiltonianProfile",
    "ZetaProfile",
    "exp_decay",
    "power_tail",
    "NoiseStream",
    "SpectralKernel",
    "Grid2D",
    "build_system",
    "solve_path",
    "GraphGrid",
    "build_graph_system",
    "solve_path_graph",
]
