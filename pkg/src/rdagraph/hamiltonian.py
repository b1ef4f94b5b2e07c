"""Radial Hamiltonians H(x) = |x|^2 + zeta(|x|^2) and their graph coefficients.

On the level set {H = z} the radius is sqrt(F(z)) with F the inverse of
y -> y + zeta(y). Everything the graph solvers need (period T, area A, the
limiting coefficients alpha = A/T and beta = A'/T) is a closed-form function
of F(z).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from ._kernels import EXP_DECAY, POWER_TAIL, InversionError

__all__ = [
    "ZetaProfile",
    "HamiltonianProfile",
    "ProfileReport",
    "InversionError",
    "validate_profile",
    "exp_decay",
    "power_tail",
]


@dataclass(frozen=True)
class ZetaProfile:
    """Perturbation zeta of the quadratic Hamiltonian.

    ``family`` is ``"exp_decay"`` (zeta = 1 - exp(-alpha0 z)),
    ``"power_tail"`` (zeta = beta0 (1+z)^alpha0 - beta0) or ``"custom"``.
    ``r0`` and ``r0_tilde`` bound zeta' from below/above: -r0 <= zeta' <= r0_tilde.
    """

    family: str
    alpha0: float = 0.5
    beta0: float = 1.0
    r0: float = 0.0
    r0_tilde: float = 0.5
    fn: Optional[Callable] = field(default=None, compare=False, repr=False)
    d1_fn: Optional[Callable] = field(default=None, compare=False, repr=False)
    d2_fn: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.family == "exp_decay":
            if not self.alpha0 > 0:
                raise ValueError("exp_decay needs alpha0 > 0")
        elif self.family == "power_tail":
            if not (0 < self.alpha0 < 1 and self.beta0 > 0):
                raise ValueError("power_tail needs 0 < alpha0 < 1 and beta0 > 0")
        elif self.family == "custom":
            if self.fn is None or self.d1_fn is None or self.d2_fn is None:
                raise ValueError("custom zeta needs fn, d1_fn and d2_fn")
        else:
            raise ValueError(f"unknown zeta family {self.family!r}")

    @classmethod
    def exp_decay(cls, alpha0=0.5):
        return cls("exp_decay", alpha0=alpha0, beta0=1.0, r0=0.0, r0_tilde=alpha0)

    @classmethod
    def power_tail(cls, alpha0=0.5, beta0=1.0):
        return cls("power_tail", alpha0=alpha0, beta0=beta0, r0=0.0, r0_tilde=alpha0 * beta0)

    @classmethod
    def custom(cls, fn, d1_fn, d2_fn, r0, r0_tilde):
        """Arbitrary zeta; used for experiments and deliberately broken test profiles."""
        return cls("custom", alpha0=np.nan, beta0=np.nan, r0=r0, r0_tilde=r0_tilde,
                   fn=fn, d1_fn=d1_fn, d2_fn=d2_fn)

    @property
    def code(self):
        return {"exp_decay": EXP_DECAY, "power_tail": POWER_TAIL}.get(self.family, -1)

    def __call__(self, y):
        if self.family == "custom":
            return np.asarray(self.fn(np.asarray(y, dtype=float)), dtype=float)
        return _kernels._zeta_np(np.asarray(y, dtype=float), self.code, self.alpha0, self.beta0)

    def d1(self, y):
        if self.family == "custom":
            return np.asarray(self.d1_fn(np.asarray(y, dtype=float)), dtype=float)
        return _kernels._dzeta_np(np.asarray(y, dtype=float), self.code, self.alpha0, self.beta0)

    def d2(self, y):
        if self.family == "custom":
            return np.asarray(self.d2_fn(np.asarray(y, dtype=float)), dtype=float)
        return _kernels._d2zeta_np(np.asarray(y, dtype=float), self.code, self.alpha0, self.beta0)


@dataclass(frozen=True)
class HamiltonianProfile:
    """H(x) = |x|^2 + zeta(|x|^2) with the derived level-set maps.

    All methods broadcast over numpy arrays. Points are arrays whose last
    axis has length 2.
    """

    zeta: ZetaProfile
    rtol: float = 1e-14
    maxiter: int = 50

    @property
    def closed_form_F(self):
        return self.zeta.family in ("exp_decay", "power_tail")

    # -- planar quantities -------------------------------------------------

    def H(self, x):
        x = np.asarray(x, dtype=float)
        r2 = x[..., 0] ** 2 + x[..., 1] ** 2
        return r2 + self.zeta(r2)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        r2 = x[..., 0] ** 2 + x[..., 1] ** 2
        c = 2.0 * (1.0 + self.zeta.d1(r2))
        return c[..., None] * x

    def grad_perp(self, x):
        """(-dH/dx2, dH/dx1)."""
        g = self.grad(x)
        return np.stack([-g[..., 1], g[..., 0]], axis=-1)

    def laplacian(self, x):
        x = np.asarray(x, dtype=float)
        r2 = x[..., 0] ** 2 + x[..., 1] ** 2
        return 4.0 * (1.0 + r2 * self.zeta.d2(r2) + self.zeta.d1(r2))

    # -- level-set quantities ----------------------------------------------

    def F(self, z):
        """Inverse of y -> y + zeta(y), so that {H = z} is the circle of radius sqrt(F(z))."""
        z = np.asarray(z, dtype=float)
        if np.any(z < 0):
            raise ValueError("F is defined for z >= 0")
        zt = self.zeta
        lo_fac = 1.0 / (1.0 + zt.r0_tilde)
        hi_fac = 1.0 / (1.0 - zt.r0)
        if zt.family == "custom":
            y, ok = _invert_generic(z, zt, lo_fac, hi_fac, self.rtol, self.maxiter)
        else:
            y, ok = _kernels.invert_F_dispatch(
                z, zt.code, zt.alpha0, zt.beta0, lo_fac, hi_fac, self.rtol, self.maxiter
            )
        if not ok:
            raise InversionError("level map inversion did not converge; is y + zeta(y) monotone?")
        return y if y.ndim else float(y)

    def F_prime(self, z):
        return 1.0 / (1.0 + self.zeta.d1(self.F(z)))

    def T(self, z):
        return np.pi / (1.0 + self.zeta.d1(self.F(z)))

    def T_prime(self, z):
        f = self.F(z)
        return -np.pi * self.zeta.d2(f) / (1.0 + self.zeta.d1(f)) ** 3

    def A(self, z):
        f = self.F(z)
        return 2.0 * np.pi * f * (1.0 + self.zeta.d1(f))

    def A_prime(self, z):
        f = self.F(z)
        d1 = self.zeta.d1(f)
        return 2.0 * np.pi + 2.0 * np.pi * f * self.zeta.d2(f) / (1.0 + d1)

    def alpha(self, z):
        return self.A(z) / self.T(z)

    def beta(self, z):
        return self.A_prime(z) / self.T(z)

    def graph_coefficients(self, z):
        """(alpha(z), beta(z)) from a single inversion."""
        f = np.asarray(self.F(z))
        d1 = self.zeta.d1(f)
        d2 = self.zeta.d2(f)
        return 2.0 * f * (1.0 + d1) ** 2, 2.0 * (1.0 + d1 + f * d2)

    @property
    def kernel_args(self):
        """Scalar description of the preset used by the jitted kernels."""
        zt = self.zeta
        if zt.family == "custom":
            raise TypeError("custom zeta profiles have no jitted kernel")
        return (zt.code, zt.alpha0, zt.beta0, 1.0 / (1.0 + zt.r0_tilde),
                1.0 / (1.0 - zt.r0), self.rtol, self.maxiter)


def exp_decay(alpha0=0.5, **kw):
    return HamiltonianProfile(ZetaProfile.exp_decay(alpha0), **kw)


def power_tail(alpha0=0.5, beta0=1.0, **kw):
    return HamiltonianProfile(ZetaProfile.power_tail(alpha0, beta0), **kw)


def _invert_generic(z, zt, lo_fac, hi_fac, rtol, maxiter):
    y = z / (1.0 + zt.d1(np.zeros_like(z)))
    scale = 1.0 + np.abs(z)
    done = z == 0.0
    y = np.where(done, 0.0, y)
    with np.errstate(all="ignore"):
        for _ in range(maxiter):
            res = y + zt(y) - z
            done = done | (np.abs(res) <= rtol * scale)
            if done.all():
                return y, True
            y = np.where(done, y, y - res / (1.0 + zt.d1(y)))
    lo = np.where(done, y, lo_fac * z)
    hi = np.where(done, y, hi_fac * z)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        res = mid + zt(mid) - z
        done = done | (np.abs(res) <= rtol * scale)
        if done.all():
            return mid, True
        lo = np.where(~done & (res <= 0.0), mid, lo)
        hi = np.where(~done & (res > 0.0), mid, hi)
    return 0.5 * (lo + hi), False


@dataclass
class ProfileReport:
    passed: bool
    first_violation: Optional[float] = None
    reason: str = ""
    zeta_prime_range: tuple = (np.nan, np.nan)
    zeta_second_sign: int = 0

    def __str__(self):
        if self.passed:
            return "profile ok"
        return f"profile violation at z={self.first_violation:.6g}: {self.reason}"


def validate_profile(profile, z_max, n_samples):
    """Spot-check the structural assumptions on zeta over [0, z_max].

    Checks -r0 <= zeta' <= r0_tilde with r0 < 1, constant nonzero sign of
    zeta'' and T'(z) != 0. Violations are reported, never raised.
    """
    if z_max <= 0 or n_samples < 2:
        raise ValueError("need z_max > 0 and n_samples >= 2")
    zt = profile.zeta
    ys = np.linspace(0.0, z_max, n_samples)
    d1 = zt.d1(ys)
    d2 = zt.d2(ys)
    report = ProfileReport(True, zeta_prime_range=(float(d1.min()), float(d1.max())))
    if not zt.r0 < 1.0:
        return ProfileReport(False, 0.0, "r0 >= 1 makes y + zeta(y) non-invertible",
                             report.zeta_prime_range)
    tol = 1e-12
    bad = np.flatnonzero((d1 < -zt.r0 - tol) | (d1 > zt.r0_tilde + tol) | (d1 <= -1.0))
    if bad.size:
        i = bad[0]
        return ProfileReport(False, float(ys[i]), f"zeta'={d1[i]:.6g} outside "
                             f"[{-zt.r0:.6g}, {zt.r0_tilde:.6g}]", report.zeta_prime_range)
    sign0 = np.sign(d2[0])
    bad = np.flatnonzero((np.sign(d2) != sign0) | (d2 == 0.0))
    if bad.size:
        i = bad[0]
        return ProfileReport(False, float(ys[i]), "zeta'' vanishes or changes sign",
                             report.zeta_prime_range, int(sign0))
    zs = ys + zt(ys)
    tp = profile.T_prime(zs)
    bad = np.flatnonzero(tp == 0.0)
    if bad.size:
        i = bad[0]
        return ProfileReport(False, float(zs[i]), "T'(z) = 0", report.zeta_prime_range, int(sign0))
    report.zeta_second_sign = int(sign0)
    return report
