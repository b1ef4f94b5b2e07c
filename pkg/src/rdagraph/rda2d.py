"""Finite-difference / exponential-Euler solver for the truncated planar equation.

Interior nodes (i h, j h), 1 - M <= i, j <= M - 1, are numbered with i as
the fast index: k(i, j) = (i + M) + (j + M - 1)(2M - 1), 1-based. Arrays
below use the 0-based position k - 1.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import noise as _noise
from .dense_ops import kron, matrix_exp

__all__ = [
    "Grid2D",
    "Rda2dSystem",
    "index_k",
    "index_inverse",
    "laplacian_1d",
    "gradient_1d",
    "assemble_laplacian",
    "assemble_advection",
    "assemble_generator",
    "build_system",
    "step_exponential_euler",
    "step_euler_maruyama",
    "solve_path",
    "NonFiniteStateError",
    "StabilityWarning",
]


class NonFiniteStateError(FloatingPointError):
    def __init__(self, step, msg="non-finite state"):
        super().__init__(f"{msg} at step {step}")
        self.step = step


class StabilityWarning(RuntimeWarning):
    pass


def index_k(i, j, M):
    """1-based node number of (i, j)."""
    if not (1 - M <= i <= M - 1 and 1 - M <= j <= M - 1):
        raise IndexError(f"({i}, {j}) is not an interior index for M={M}")
    return (i + M) + (j + M - 1) * (2 * M - 1)


def index_inverse(k, M):
    n = 2 * M - 1
    if not 1 <= k <= n * n:
        raise IndexError(f"k={k} outside 1..{n * n}")
    i = (k - 1) % n - M + 1
    j = (k - i - M) // n + 1 - M
    return i, j


@dataclass(frozen=True)
class Grid2D:
    L: float
    M: int

    def __post_init__(self):
        if not self.L > 0 or self.M < 1:
            raise ValueError("Grid2D needs L > 0 and M >= 1")

    @property
    def h(self):
        return self.L / self.M

    @property
    def n_side(self):
        return 2 * self.M - 1

    @property
    def n_interior(self):
        return self.n_side ** 2

    def index_pairs(self):
        """(i, j) for every node in k order, shape (n_interior, 2)."""
        r = np.arange(1 - self.M, self.M)
        jj, ii = np.meshgrid(r, r, indexing="ij")
        return np.stack([ii.ravel(), jj.ravel()], axis=1)

    @property
    def nodes(self):
        return self.h * self.index_pairs().astype(float)

    def sample(self, fn):
        """Evaluate a planar function at the nodes."""
        return np.asarray(fn(self.nodes), dtype=float)


def laplacian_1d(n):
    return -2.0 * np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1)


def gradient_1d(n):
    """Row i holds -1 at column i - 1 and +1 at column i + 1."""
    return np.eye(n, k=1) - np.eye(n, k=-1)


def assemble_laplacian(M):
    """I (x) Lap_M + Lap_M (x) I of size (2M - 1)^2."""
    n = 2 * M - 1
    lap, eye = laplacian_1d(n), np.eye(n)
    return kron(eye, lap) + kron(lap, eye)


def assemble_advection(grid, profile):
    """Central-difference matrix of grad_perp(H) . grad, without the 1/eps factor."""
    n = grid.n_side
    grad, eye = gradient_1d(n), np.eye(n)
    r1 = kron(eye, grad)
    r2 = kron(grad, eye)
    dh = profile.grad(grid.nodes)
    return (-dh[:, 1, None] * r1 + dh[:, 0, None] * r2) / (2.0 * grid.h)


def assemble_generator(grid, profile, eps, nu=0.5):
    """(nu / h^2) A + (1/eps) advection; nu = 1/2 matches the half Laplacian."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    diff = (nu / grid.h ** 2) * assemble_laplacian(grid.M)
    return diff + assemble_advection(grid, profile) / eps


@dataclass
class Rda2dSystem:
    """Assembled system with the propagator cached for one stepsize."""

    grid: Grid2D
    profile: object
    eps: float
    tau: float
    generator: np.ndarray
    propagator: np.ndarray
    noise_sqrt: np.ndarray
    g: Callable = np.sin
    b: Optional[Callable] = None
    nu: float = 0.5
    _radius: Optional[float] = field(default=None, repr=False)

    @property
    def dim(self):
        return self.generator.shape[0]

    def spectral_radius(self):
        if self._radius is None:
            self._radius = float(np.abs(np.linalg.eigvals(self.generator)).max())
        return self._radius

    def with_tau(self, tau):
        """Same operator, propagator recomputed for another stepsize."""
        return Rda2dSystem(self.grid, self.profile, self.eps, tau, self.generator,
                           matrix_exp(self.generator, tau), self.noise_sqrt, self.g,
                           self.b, self.nu, self._radius)


def build_system(grid, profile, eps, tau, kernel=None, g=np.sin, b=None, nu=0.5,
                 clip_tol=1e-12, noise_sqrt=None):
    gen = assemble_generator(grid, profile, eps, nu)
    if noise_sqrt is None:
        kernel = kernel if kernel is not None else _noise.SpectralKernel("gauss_pi")
        noise_sqrt = _noise.psd_sqrt(_noise.covariance_matrix_2d(kernel, grid), clip_tol)
    return Rda2dSystem(grid, profile, eps, tau, gen, matrix_exp(gen, tau), noise_sqrt, g, b, nu)


def _check_state(system, u, dB):
    u = np.asarray(u, dtype=float)
    dB = np.asarray(dB, dtype=float)
    if u.shape[0] != system.dim or dB.shape[0] != system.dim:
        raise ValueError(f"state/increment leading dimension must be {system.dim}")
    return u, dB


def _forcing(system, u, dB):
    # columns of u (and dB) are independent paths
    rhs = u + system.g(u) * (system.noise_sqrt @ dB)
    if system.b is not None:
        rhs = rhs + system.tau * system.b(u)
    return rhs


def step_exponential_euler(system, u, dB):
    """u_{n+1} = exp(L tau) (u_n + b(u_n) tau + g(u_n) F^{1/2} dB)."""
    u, dB = _check_state(system, u, dB)
    out = system.propagator @ _forcing(system, u, dB)
    if not np.all(np.isfinite(out)):
        raise NonFiniteStateError(0)
    return out


def step_euler_maruyama(system, u, dB):
    """u_{n+1} = u_n + tau L u_n + g(u_n) F^{1/2} dB."""
    u, dB = _check_state(system, u, dB)
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


def solve_path(system, u0, increments, scheme="exp-euler", store=False):
    """Iterate a scheme over the rows of ``increments`` (N, dim) or (N, dim, paths).

    Returns the final state, or the whole trajectory (N + 1, ...) if ``store``.
    """
    step = step_exponential_euler if scheme == "exp-euler" else step_euler_maruyama
    if scheme not in ("exp-euler", "euler-maruyama"):
        raise ValueError(f"unknown scheme {scheme!r}")
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
