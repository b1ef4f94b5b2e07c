"""Projections between the plane and the half-line graph, weights, and norms.

``wedge`` averages a planar function over the level circle {H = z};
``vee`` lifts a graph function back by composition with H. Circle averages
use the periodic trapezoid rule, which converges spectrally for smooth
integrands.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "WeightProfile",
    "AngularQuadrature",
    "wedge",
    "vee",
    "norm_sq_Hgamma_2d",
    "norm_sq_L2Agamma_1d",
    "norm_sq_L2Tgamma_1d",
    "hgamma_norm_sq",
    "hbar_gamma_norm_sq",
    "apply_limiting_generator",
    "apply_fast_generator",
    "weighted_period_integral",
]


@dataclass(frozen=True)
class WeightProfile:
    """Graph weight gamma(z) > 0.

    Families: ``exp_sqrt`` (exp(-sqrt z)), ``power_tail`` (c0 z^-lam for
    z >= z0), ``exp_tail`` (c0 exp(-lam (sqrt z - sqrt(2 z0))) for z >= z0),
    ``const_one`` and ``sqrt_of`` (square root of ``base``). Tails are
    continued below z0 by the constant gamma(z0) joined through a C1 cubic
    on [z0/2, z0].
    """

    family: str = "exp_sqrt"
    c0: float = 1.0
    lam: float = 2.0
    z0: float = 1.0
    base: Optional["WeightProfile"] = None

    def __post_init__(self):
        if self.family not in ("exp_sqrt", "power_tail", "exp_tail", "const_one", "sqrt_of"):
            raise ValueError(f"unknown weight family {self.family!r}")
        if self.family in ("power_tail", "exp_tail"):
            if not (self.c0 > 0 and self.lam > 0 and self.z0 > 0):
                raise ValueError("tail weights need c0, lam, z0 > 0")
        if self.family == "sqrt_of" and self.base is None:
            raise ValueError("sqrt_of needs a base weight")

    def sqrt(self):
        return WeightProfile("sqrt_of", base=self)

    def _tail(self, z):
        if self.family == "power_tail":
            return self.c0 * z ** (-self.lam)
        return self.c0 * np.exp(-self.lam * (np.sqrt(z) - np.sqrt(2.0 * self.z0)))

    def _tail_prime(self, z):
        if self.family == "power_tail":
            return -self.lam * self.c0 * z ** (-self.lam - 1.0)
        return self._tail(z) * (-self.lam / (2.0 * np.sqrt(z)))

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.family == "exp_sqrt":
            return np.exp(-np.sqrt(z))
        if self.family == "const_one":
            return np.ones_like(z)
        if self.family == "sqrt_of":
            return np.sqrt(self.base(z))
        z0 = self.z0
        g0 = float(self._tail(z0))
        s0 = float(self._tail_prime(z0))
        width = 0.5 * z0
        t = np.clip((z - 0.5 * z0) / width, 0.0, 1.0)
        # Hermite cubic: value g0 at both ends, slope 0 on the left, s0 on the right
        blend = g0 + s0 * width * (t ** 3 - t ** 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = self._tail(np.maximum(z, z0))
        return np.where(z >= z0, tail, blend)


@dataclass(frozen=True)
class AngularQuadrature:
    n_theta: int = 256

    def __post_init__(self):
        if self.n_theta < 4:
            raise ValueError("n_theta must be >= 4")

    @property
    def angles(self):
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta


DEFAULT_QUAD = AngularQuadrature()


def _circle_points(profile, z, quad):
    z = np.asarray(z, dtype=float)
    rad = np.sqrt(np.asarray(profile.F(z), dtype=float))
    th = quad.angles
    pts = np.empty(z.shape + (th.size, 2))
    pts[..., 0] = rad[..., None] * np.cos(th)
    pts[..., 1] = rad[..., None] * np.sin(th)
    return pts


def wedge(profile, phi, z, quad=DEFAULT_QUAD):
    """Average of ``phi`` over the level circle {H = z}.

    ``phi`` maps an array of points (..., 2) to values (...).
    """
    pts = _circle_points(profile, z, quad)
    vals = np.asarray(phi(pts), dtype=float)
    out = vals.mean(axis=-1)
    return out if out.ndim else float(out)


def vee(profile, f, x):
    """Lift of a graph function: f(H(x))."""
    return f(profile.H(x))


def _check_len(values, n, what):
    values = np.asarray(values, dtype=float)
    if values.shape != (n,):
        raise ValueError(f"expected {n} {what} values, got shape {values.shape}")
    return values


def norm_sq_Hgamma_2d(values, grid, gamma, profile):
    """Riemann sum of |v|^2 gamma(H) h^2 over the interior nodes."""
    v = _check_len(values, grid.n_interior, "interior-node")
    w = gamma(profile.H(grid.nodes))
    return float(np.sum(v * v * w) * grid.h ** 2)


def norm_sq_L2Agamma_1d(values, grid, gamma, profile):
    """Riemann sum of |v_i|^2 A(z_i) gamma(z_i) h over the graph nodes."""
    v = _check_len(values, grid.M, "graph-node")
    w = profile.A(grid.z) * gamma(grid.z)
    return float(np.sum(v * v * w) * grid.h)


def norm_sq_L2Tgamma_1d(values, grid, gamma, profile):
    """Riemann sum of |v_i|^2 T(z_i) gamma(z_i) h (the measure gamma T dz)."""
    v = _check_len(values, grid.M, "graph-node")
    w = profile.T(grid.z) * gamma(grid.z)
    return float(np.sum(v * v * w) * grid.h)


def _gauss_nodes(z_max, n_z):
    x, w = np.polynomial.legendre.leggauss(n_z)
    return 0.5 * z_max * (x + 1.0), 0.5 * z_max * w


def hgamma_norm_sq(profile, phi, gamma, z_max=40.0, n_z=400, quad=DEFAULT_QUAD):
    """Squared weighted planar norm of ``phi`` on {H <= z_max}.

    Uses the co-area identity dx = T(z)/(2 pi) d(theta) dz, so the planar
    integral becomes the integral of gamma T (phi^2)^wedge dz.
    """
    z, w = _gauss_nodes(z_max, n_z)
    sq = wedge(profile, lambda p: np.asarray(phi(p)) ** 2, z, quad)
    return float(np.sum(w * gamma(z) * profile.T(z) * sq))


def hbar_gamma_norm_sq(profile, f, gamma, z_max=40.0, n_z=400):
    """Squared norm of a graph function in L^2(gamma T dz) on [0, z_max]."""
    z, w = _gauss_nodes(z_max, n_z)
    return float(np.sum(w * gamma(z) * profile.T(z) * np.asarray(f(z)) ** 2))


def weighted_period_integral(weight, profile, z_max, n_z=2000):
    """Integral of gamma(z) T(z) over [0, z_max]."""
    z, w = _gauss_nodes(z_max, n_z)
    return float(np.sum(w * weight(z) * profile.T(z)))


def apply_limiting_generator(profile, f, z, h=1e-3):
    """alpha f'' + beta f' with central differences of step h."""
    z = np.asarray(z, dtype=float)
    fp, f0, fm = f(z + h), f(z), f(z - h)
    al, be = profile.graph_coefficients(z)
    return al * (fp - 2.0 * f0 + fm) / h ** 2 + be * (fp - fm) / (2.0 * h)


def apply_fast_generator(profile, eps, phi, x, h=1e-3, nu=0.5):
    """nu Lap(phi) + (1/eps) grad_perp(H) . grad(phi), central differences."""
    x = np.asarray(x, dtype=float)
    e1 = np.array([h, 0.0])
    e2 = np.array([0.0, h])
    p0 = phi(x)
    p1p, p1m = phi(x + e1), phi(x - e1)
    p2p, p2m = phi(x + e2), phi(x - e2)
    lap = (p1p + p1m + p2p + p2m - 4.0 * p0) / h ** 2
    gp = profile.grad_perp(x)
    adv = gp[..., 0] * (p1p - p1m) / (2 * h) + gp[..., 1] * (p2p - p2m) / (2 * h)
    return nu * lap + adv / eps
