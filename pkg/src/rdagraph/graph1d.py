"""Finite-difference / exponential-Euler solver for the limiting equation on [0, L].

Unknowns live at z_i = i h, i = 0..M-1; z_M = L carries the Dirichlet zero.
The vertex row is a one-sided drift stencil (alpha(0) = 0 there), interior
rows are centred second-order differences of alpha u'' + beta u'.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import noise as _noise
from .dense_ops import matrix_exp
from .rda2d import NonFiniteStateError, StabilityWarning

__all__ = [
    "GraphGrid",
    "Graph1dSystem",
    "assemble_generator_graph",
    "build_graph_system",
    "step_exponential_euler_graph",
    "step_euler_maruyama_graph",
    "solve_path_graph",
]


@dataclass(frozen=True)
class GraphGrid:
    L: float
    M: int

    def __post_init__(self):
        if not self.L > 0 or self.M < 2:
            raise ValueError("GraphGrid needs L > 0 and M >= 2")

    @property
    def h(self):
        return self.L / self.M

    @property
    def z(self):
        return self.h * np.arange(self.M, dtype=float)

    def sample(self, fn):
        return np.asarray(fn(self.z), dtype=float)

    def lift(self, values, levels):
        """Piecewise-linear interpolant of node values (zero at z = L) at ``levels``."""
        zz = np.append(self.z, self.L)
        vv = np.append(np.asarray(values, dtype=float), 0.0)
        return np.interp(levels, zz, vv, right=0.0)


def assemble_generator_graph(grid, profile):
    M, h = grid.M, grid.h
    al, be = profile.graph_coefficients(grid.z)
    L = np.zeros((M, M))
    L[0, 0] = -be[0] / h
    L[0, 1] = be[0] / h
    i = np.arange(1, M)
    L[i, i - 1] = al[i] / h ** 2 - be[i] / (2.0 * h)
    L[i, i] = -2.0 * al[i] / h ** 2
    i = np.arange(1, M - 1)
    L[i, i + 1] = al[i] / h ** 2 + be[i] / (2.0 * h)
    return L


@dataclass
class Graph1dSystem:
    grid: GraphGrid
    profile: object
    tau: float
    generator: np.ndarray
    propagator: np.ndarray
    noise_sqrt: np.ndarray
    g: Callable = np.sin
    b: Optional[Callable] = None
    _radius: Optional[float] = field(default=None, repr=False)

    @property
    def dim(self):
        return self.grid.M

    def spectral_radius(self):
        if self._radius is None:
            self._radius = float(np.abs(np.linalg.eigvals(self.generator)).max())
        return self._radius

    def with_tau(self, tau):
        return Graph1dSystem(self.grid, self.profile, tau, self.generator,
                             matrix_exp(self.generator, tau), self.noise_sqrt, self.g,
                             self.b, self._radius)


def build_graph_system(grid, profile, tau, kernel=None, g=np.sin, b=None,
                       clip_tol=1e-12, noise_sqrt=None):
    gen = assemble_generator_graph(grid, profile)
    if noise_sqrt is None:
        kernel = kernel if kernel is not None else _noise.SpectralKernel("gauss_pi")
        q = _noise.covariance_matrix_graph(kernel, profile, grid)
        noise_sqrt = _noise.psd_sqrt(q, clip_tol)
    return Graph1dSystem(grid, profile, tau, gen, matrix_exp(gen, tau), noise_sqrt, g, b)


def _check(system, u, dB):
    u = np.asarray(u, dtype=float)
    dB = np.asarray(dB, dtype=float)
    if u.shape[0] != system.dim or dB.shape[0] != system.dim:
        raise ValueError(f"state/increment leading dimension must be {system.dim}")
    return u, dB


def step_exponential_euler_graph(system, u, dB):
    u, dB = _check(system, u, dB)
    rhs = u + system.g(u) * (system.noise_sqrt @ dB)
    if system.b is not None:
        rhs = rhs + system.tau * system.b(u)
    out = system.propagator @ rhs
    if not np.all(np.isfinite(out)):
        raise NonFiniteStateError(0)
    return out


def step_euler_maruyama_graph(system, u, dB):
    u, dB = _check(system, u, dB)
    if system.tau * system.spectral_radius() > 2.0:
        warnings.warn(f"tau * rho(L) = {system.tau * system.spectral_radius():.3g} > 2; "
                      "explicit step is likely unstable", StabilityWarning, stacklevel=2)
    drift = system.generator @ u
    if system.b is not None:
        drift = drift + system.b(u)
    out = u + system.tau * drift + system.g(u) * (system.noise_sqrt @ dB)
    if not np.all(np.isfinite(out)):
        raise NonFiniteStateError(0)
    return out


def solve_path_graph(system, u0, increments, scheme="exp-euler", store=False):
    if scheme not in ("exp-euler", "euler-maruyama"):
        raise ValueError(f"unknown scheme {scheme!r}")
    step = step_exponential_euler_graph if scheme == "exp-euler" else step_euler_maruyama_graph
    increments = np.asarray(increments, dtype=float)
    if increments.shape[0] < 1:
        raise ValueError("need at least one step")
    u = np.array(u0, dtype=float)
    traj = [u] if store else None
    for n, dB in enumerate(increments):
        try:
            u = step(system, u, dB)
        except NonFiniteStateError:
            raise NonFiniteStateError(n) from None
        if store:
            traj.append(u)
    return np.stack(traj) if store else u
