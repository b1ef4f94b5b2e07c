"""Spatially homogeneous Wiener noise: kernels, covariances, square roots, streams."""

from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.special

from .dense_ops import check_matrix, sym_eig
from .graph_ops import DEFAULT_QUAD

__all__ = [
    "SpectralKernel",
    "SingularKernelError",
    "eval_kernel",
    "covariance_matrix_2d",
    "graph_kernel_bar",
    "graph_kernel_bar_double",
    "covariance_matrix_graph",
    "psd_sqrt",
    "NoiseStream",
    "coarsen",
    "kl_field_increment",
]


class SingularKernelError(ValueError):
    """The covariance function is infinite where it was asked to be evaluated."""


@dataclass(frozen=True)
class SpectralKernel:
    """Radial covariance Lambda of the driving field.

    ``family`` is one of ``riesz`` (0 < r < 2), ``bessel``, ``heat``,
    ``poisson`` (r > 0) or ``gauss_pi`` (exp(-|x|^2)/pi, no parameter).
    """

    family: str = "gauss_pi"
    r: float = 0.5

    def __post_init__(self):
        if self.family == "riesz":
            if not 0 < self.r < 2:
                raise ValueError("riesz kernel needs 0 < r < 2")
        elif self.family in ("bessel", "heat", "poisson"):
            if not self.r > 0:
                raise ValueError(f"{self.family} kernel needs r > 0")
        elif self.family != "gauss_pi":
            raise ValueError(f"unknown kernel family {self.family!r}")

    @property
    def finite_at_zero(self):
        if self.family == "riesz":
            return False
        if self.family == "bessel":
            return self.r > 2
        return True

    def radial(self, rho):
        """Lambda as a function of |x|."""
        rho = np.asarray(rho, dtype=float)
        fam, r = self.family, self.r
        if fam == "gauss_pi":
            return np.exp(-rho * rho) / np.pi
        if fam == "heat":
            return np.exp(-rho * rho / (2.0 * r)) / (2.0 * np.pi * r)
        if fam == "poisson":
            return 1.0 / (np.pi * r * (1.0 + (rho / r) ** 2))
        if np.any(rho == 0) and not self.finite_at_zero:
            raise SingularKernelError(f"{fam} kernel of order {r} is singular at 0")
        if fam == "riesz":
            c = scipy.special.gamma((2.0 - r) / 2.0) / (2.0 ** r * scipy.special.gamma(r / 2.0) * np.pi)
            return c * rho ** (r - 2.0)
        return _bessel_radial(rho, r)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.radial(np.hypot(x[..., 0], x[..., 1]))


def _bessel_radial(rho, r):
    # Lambda = (4 pi)^{r/2} Gamma(r/2) int_0^inf y^{(r-2)/2-1} e^{-y} e^{-rho^2/(4y)} dy
    pref = (4.0 * np.pi) ** (r / 2.0) * scipy.special.gamma(r / 2.0)
    uniq, inv = np.unique(rho.ravel(), return_inverse=True)
    vals = np.empty(uniq.size)
    for i, p in enumerate(uniq):
        def integrand(y, p=p):
            return y ** ((r - 2.0) / 2.0 - 1.0) * np.exp(-y - p * p / (4.0 * y))
        vals[i] = scipy.integrate.quad(integrand, 0.0, np.inf, limit=200)[0]
    return pref * vals[inv].reshape(rho.shape)


def eval_kernel(kernel, x):
    x = np.asarray(x, dtype=float)
    return kernel(x)


def covariance_matrix_2d(kernel, grid):
    """F[k, l] = Lambda(X_k - X_l) on the interior nodes of ``grid``."""
    if not kernel.finite_at_zero:
        raise SingularKernelError(f"{kernel.family} kernel cannot fill a covariance matrix")
    idx = grid.index_pairs()
    di = idx[:, None, 0] - idx[None, :, 0]
    dj = idx[:, None, 1] - idx[None, :, 1]
    return kernel.radial(grid.h * np.hypot(di, dj))


def graph_kernel_bar(kernel, profile, z, y, quad=DEFAULT_QUAD):
    """Average of Lambda between the level circles {H = z} and {H = y}.

    Because Lambda is radial the double angular average collapses to one
    average over the angle difference.
    """
    z, y = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(y, dtype=float))
    fz = np.asarray(profile.F(z))
    fy = np.asarray(profile.F(y))
    psi = quad.angles
    d2 = fz[..., None] + fy[..., None] - 2.0 * np.sqrt(fz * fy)[..., None] * np.cos(psi)
    d2 = np.maximum(d2, 0.0)
    if not kernel.finite_at_zero and np.any(d2 == 0.0):
        raise SingularKernelError("singular kernel on coincident circles")
    out = kernel.radial(np.sqrt(d2)).mean(axis=-1)
    return out if out.ndim else float(out)


def graph_kernel_bar_double(kernel, profile, z, y, quad=DEFAULT_QUAD):
    """Literal double angular average; reference for ``graph_kernel_bar``."""
    rz = np.sqrt(profile.F(z))
    ry = np.sqrt(profile.F(y))
    th = quad.angles
    dx = rz * np.cos(th)[:, None] - ry * np.cos(th)[None, :]
    dy = rz * np.sin(th)[:, None] - ry * np.sin(th)[None, :]
    return float(kernel.radial(np.hypot(dx, dy)).mean())


def covariance_matrix_graph(kernel, profile, grid, quad=DEFAULT_QUAD):
    """Q[k, l] = Lambda_bar(z_k, z_l) on the graph nodes."""
    if not kernel.finite_at_zero:
        raise SingularKernelError(f"{kernel.family} kernel cannot fill a covariance matrix")
    z = grid.z
    q = graph_kernel_bar(kernel, profile, z[:, None], z[None, :], quad)
    return 0.5 * (q + q.T)


def psd_sqrt(s, clip_tol=1e-12):
    """Symmetric square root R = V sqrt(max(w, 0)) V^T with small eigenvalues zeroed.

    Eigenvalues below ``clip_tol * max(w)`` are replaced by zero.
    """
    s = check_matrix(s, square=True)
    w, v = sym_eig(s)
    lam_max = max(w.max(), 0.0)
    w = np.where(w < clip_tol * lam_max, 0.0, w)
    return (v * np.sqrt(w)) @ v.T


_U53 = 2.0 ** -53


@dataclass(frozen=True)
class NoiseStream:
    """Addressable Brownian increments for one Monte Carlo path.

    Fine-level increment ``n`` is drawn from a Philox counter generator
    keyed by (seed, stream, path) with the step index in the counter, so
    any increment can be produced without generating its predecessors.
    Level ``m`` increments (stepsize 2^m tau_min) are built by repeated
    pairwise summation of the level below, so a level-m increment is the
    sum of the two level-(m-1) increments it covers, bit for bit.
    """

    seed: int
    tau_min: float
    dim: int
    n_fine: int
    path: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.dim < 0 or self.n_fine < 1 or not self.tau_min > 0:
            raise ValueError("invalid stream shape")
        if not 0 <= self.path < 2 ** 40 or not 0 <= self.stream < 2 ** 24:
            raise ValueError("path must be < 2^40 and stream < 2^24")

    @property
    def key(self):
        return np.array([self.seed % 2 ** 64, (self.stream << 40) | self.path], dtype=np.uint64)

    def _fine_one(self, n):
        bg = np.random.Philox(key=self.key, counter=np.array([0, n, 0, 0], dtype=np.uint64))
        raw = bg.random_raw(self.dim)
        u = ((raw >> np.uint64(11)).astype(float) + 0.5) * _U53
        return scipy.special.ndtri(u)

    def fine(self, n0=0, n1=None):
        """Fine increments n0 <= n < n1 as an array (n1 - n0, dim)."""
        n1 = self.n_fine if n1 is None else n1
        if not 0 <= n0 <= n1 <= self.n_fine:
            raise IndexError(f"fine steps [{n0}, {n1}) outside horizon {self.n_fine}")
        out = np.empty((n1 - n0, self.dim))
        for k, n in enumerate(range(n0, n1)):
            out[k] = self._fine_one(n)
        return out * np.sqrt(self.tau_min)

    def level(self, m, fine=None):
        """All level-m increments over the horizon, shape (n_fine / 2^m, dim)."""
        if m < 0 or self.n_fine % (2 ** m):
            raise IndexError(f"level {m} does not tile a horizon of {self.n_fine} steps")
        return coarsen(self.fine() if fine is None else fine, m)

    def increment(self, m, n):
        """Single level-m increment number n."""
        width = 2 ** m
        if m < 0 or not 0 <= n < self.n_fine // width:
            raise IndexError(f"increment ({m}, {n}) outside horizon")
        return coarsen(self.fine(n * width, (n + 1) * width), m)[0]


def coarsen(fine, m):
    """Pairwise-sum ``fine`` increments m times along axis 0."""
    inc = fine
    for _ in range(m):
        inc = inc[0::2] + inc[1::2]
    return inc


def kl_field_increment(modes, coefficients):
    """x -> sum_l mode_l(x) * coefficient_l."""
    coefficients = np.asarray(coefficients, dtype=float).ravel()
    if len(modes) != coefficients.size:
        raise ValueError(f"{len(modes)} modes but {coefficients.size} coefficients")

    def field(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for mode, c in zip(modes, coefficients):
            out = out + c * np.asarray(mode(x), dtype=float)
        return out

    return field
