"""Particle schemes and Monte Carlo estimators for the asymptotic error.

The fast process X_eps is stepped by Euler-Maruyama,

    X_{n+1} = X_n + (tau_p / eps) grad_perp H(X_n) + dB_n,

and the graph diffusion Y by the clipped scheme

    Y_{n+1} = Y_n + beta(Y_n^+) tau_p + sqrt(max(2 alpha(Y_n), 0)) dB_n,

where Y^+ = max(Y, 0) and the diffusion vanishes for Y <= 0. Noise modes
on the plane are radial, u_l = (u_l)^wedge o H, so the configuration only
carries the graph versions of psi and of the modes.

Random numbers are addressed through ``NoiseStream`` keys
(seed, stream, path): stream 1 feeds the planar particles, stream 2 the
graph particles and stream 3 the outer Brownian coefficients. The outer
sample index is the path index, so every outer sample draws fresh inner
paths, and the same draws are reused for every eps.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from . import _kernels
from .noise import NoiseStream
from .rda2d import NonFiniteStateError

__all__ = [
    "ParticleConfig",
    "em_particle_X",
    "scheme_Y",
    "mc_semigroup_2d",
    "mc_semigroup_graph",
    "evaluation_points",
    "outer_coefficients",
    "estimate_U_points",
    "estimate_barU_points",
    "asymptotic_error",
    "STREAM_X",
    "STREAM_Y",
    "STREAM_BETA",
]

STREAM_X = 1
STREAM_Y = 2
STREAM_BETA = 3


def _fig4_mode(z):
    return 10.0 * np.sin(z) + 6.0 * z


@dataclass(frozen=True)
class ParticleConfig:
    """Parameters of the particle estimators.

    ``psi`` and ``modes`` are graph functions (callables of the level z);
    ``psi=None`` means psi = 0. ``tau_p`` is the particle stepsize and must
    divide ``tau``; it defaults to ``tau``. ``gamma`` weights the spatial sum
    and defaults to 1.
    """

    profile: object
    eps: float
    tau: float
    N: int
    P: int = 500
    Q_outer: int = 20
    M1: int = 1
    M2: int = 5
    h: float = 2.0
    psi: Optional[Callable] = None
    modes: Tuple[Callable, ...] = (_fig4_mode,)
    tau_p: Optional[float] = None
    gamma: Optional[Callable] = None
    seed: int = 0
    clip_drift: bool = True
    substeps: int = field(init=False, repr=False, default=1)

    def __post_init__(self):
        if not (self.eps > 0 and self.tau > 0 and self.h > 0):
            raise ValueError("eps, tau and h must be positive")
        if min(self.N, self.P, self.Q_outer, self.M2) < 1 or self.M1 < 0:
            raise ValueError("N, P, Q_outer, M2 must be >= 1 and M1 >= 0")
        if len(self.modes) != self.M1:
            raise ValueError(f"M1={self.M1} but {len(self.modes)} modes given")
        tp = self.tau if self.tau_p is None else self.tau_p
        ratio = self.tau / tp
        sub = int(round(ratio))
        if not tp > 0 or sub < 1 or abs(ratio - sub) > 1e-9 * ratio:
            raise ValueError("tau_p must divide tau")
        object.__setattr__(self, "tau_p", float(tp))
        object.__setattr__(self, "substeps", sub)

    @property
    def T(self):
        return self.N * self.tau

    @property
    def n_particle_steps(self):
        return self.N * self.substeps

    def with_eps(self, eps):
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "substeps"}
        kw["eps"] = eps
        return ParticleConfig(**kw)


# ---------------------------------------------------------------------------
# single-path schemes


def _as_particles(x0):
    x0 = np.asarray(x0, dtype=float)
    single = x0.ndim == 1
    return np.atleast_2d(x0), single


def em_particle_X(config, x0, increments, eps=None, store=False):
    """Euler-Maruyama for the fast planar diffusion.

    ``x0`` is a point (2,) or a batch (n, 2); ``increments`` has shape
    (N, 2) or (N, n, 2). Returns the endpoint, or the whole trajectory when
    ``store`` is set.
    """
    eps = config.eps if eps is None else eps
    x, single = _as_particles(x0)
    dB = np.asarray(increments, dtype=float)
    if single:
        dB = dB[:, None, :]
    if dB.ndim != 3 or dB.shape[1:] != x.shape:
        raise ValueError(f"increments shape {np.shape(increments)} does not match x0")
    code, a0, b0 = config.profile.kernel_args[:3]
    traj, bad = _kernels.em_particles(x, dB, config.tau_p / eps, code, a0, b0)
    if bad >= 0:
        raise NonFiniteStateError(bad, "non-finite particle state")
    if single:
        traj = traj[:, 0]
    return traj if store else traj[-1]


def scheme_Y(config, z0, increments, store=False):
    """Clipped Euler scheme for the graph diffusion from level(s) ``z0``."""
    z = np.asarray(z0, dtype=float)
    if np.any(z < 0):
        raise ValueError("starting levels must be >= 0")
    single = z.ndim == 0
    z = np.atleast_1d(z)
    dB = np.asarray(increments, dtype=float)
    if single:
        dB = dB.reshape(-1, 1)
    if dB.ndim != 2 or dB.shape[1] != z.size:
        raise ValueError(f"increments shape {np.shape(increments)} does not match z0")
    traj, bad = _kernels.y_particles(z, dB, config.tau_p, *config.profile.kernel_args,
                                     clip_drift=config.clip_drift)
    if bad >= 0:
        raise NonFiniteStateError(bad, "non-finite particle state")
    if single:
        traj = traj[:, 0]
    return traj if store else traj[-1]


# ---------------------------------------------------------------------------
# semigroup estimators


def _steps_for(config, t):
    n = t / config.tau_p
    k = int(round(n))
    if k < 0 or abs(n - k) > 1e-9 * max(n, 1.0):
        raise ValueError("t must be a nonnegative multiple of the particle stepsize")
    return k


def _mean_se(values):
    values = np.asarray(values, dtype=float)
    m = values.mean(axis=0)
    if values.shape[0] < 2:
        return m, np.zeros_like(m)
    return m, values.std(axis=0, ddof=1) / np.sqrt(values.shape[0])


def _planar_noise(config, n_steps, n_particles, path):
    if n_steps == 0:
        return np.zeros((0, n_particles, 2))
    s = NoiseStream(config.seed, config.tau_p, 2 * n_particles, n_steps, path=path,
                    stream=STREAM_X)
    return s.fine().reshape(n_steps, n_particles, 2)


def _graph_noise(config, n_steps, n_particles, path):
    if n_steps == 0:
        return np.zeros((0, n_particles))
    s = NoiseStream(config.seed, config.tau_p, n_particles, n_steps, path=path,
                    stream=STREAM_Y)
    return s.fine()


def mc_semigroup_2d(config, phi, x, t, eps=None, path=0):
    """Monte Carlo estimate of E[phi(X^x(t))] over P paths: (mean, standard error)."""
    n = _steps_for(config, t)
    x = np.asarray(x, dtype=float)
    if n == 0:
        return float(phi(x)), 0.0
    x0 = np.broadcast_to(x, (config.P, 2))
    xt = em_particle_X(config, x0, _planar_noise(config, n, config.P, path), eps)
    m, se = _mean_se(np.asarray(phi(xt), dtype=float))
    return float(m), float(se)


def mc_semigroup_graph(config, f, z, t, path=0):
    """Monte Carlo estimate of E[f(Y^z(t))] over P paths: (mean, standard error)."""
    n = _steps_for(config, t)
    if n == 0:
        return float(f(np.asarray(z, dtype=float))), 0.0
    z0 = np.full(config.P, float(z))
    yt = scheme_Y(config, z0, _graph_noise(config, n, config.P, path))
    m, se = _mean_se(np.asarray(f(yt), dtype=float))
    return float(m), float(se)


# ---------------------------------------------------------------------------
# field estimators


def evaluation_points(config):
    """Points (i h, j h), |i|, |j| < M2, with i the fast index."""
    r = np.arange(1 - config.M2, config.M2) * config.h
    jj, ii = np.meshgrid(r, r, indexing="ij")
    return np.stack([ii.ravel(), jj.ravel()], axis=1)


def outer_coefficients(config, q):
    """Brownian coefficient increments (N, M1) of outer sample ``q``."""
    if config.M1 == 0:
        return np.zeros((config.N, 0))
    return NoiseStream(config.seed, config.tau, config.M1, config.N, path=q,
                       stream=STREAM_BETA).fine()


def _check_coeffs(config, dbeta):
    dbeta = np.asarray(dbeta, dtype=float)
    if dbeta.shape != (config.N, config.M1):
        raise ValueError(f"coefficients must have shape {(config.N, config.M1)}")
    return dbeta


def _snapshot_means(config, levels):
    """Per point: E[psi(.)] at t_N and E[mode_l(.)] at t_1..t_N from level snapshots.

    ``levels`` has shape (n_steps + 1, P, n_points).
    """
    snaps = levels[config.substeps::config.substeps]  # times t_1 .. t_N
    if config.psi is None:
        psi_mean = np.zeros(levels.shape[2])
    else:
        psi_mean = np.asarray(config.psi(snaps[-1]), dtype=float).mean(axis=0)
    mode_means = np.empty((config.N, levels.shape[2], config.M1))
    for l, mode in enumerate(config.modes):
        mode_means[:, :, l] = np.asarray(mode(snaps), dtype=float).mean(axis=1)
    return psi_mean, mode_means


def _assemble(config, psi_mean, mode_means, dbeta):
    # the r-th increment multiplies the snapshot at t_N - t_r, i.e. index N - r - 1
    weights = mode_means[::-1]
    return psi_mean + np.einsum("rnl,rl->n", weights, dbeta)


def estimate_U_points(config, eps, dbeta, q=0):
    """U^N at the evaluation points for one outer sample.

    Expectations use P planar particles per point, with snapshots of the
    same trajectories serving every (r, l) term.
    """
    dbeta = _check_coeffs(config, dbeta)
    pts = evaluation_points(config)
    npt = pts.shape[0]
    n = config.n_particle_steps
    x0 = np.repeat(pts[None], config.P, axis=0).reshape(-1, 2)
    dB = _planar_noise(config, n, config.P * npt, q)
    traj = em_particle_X(config, x0, dB, eps, store=True)
    levels = config.profile.H(traj).reshape(n + 1, config.P, npt)
    return _assemble(config, *_snapshot_means(config, levels), dbeta)


def estimate_barU_points(config, dbeta, q=0):
    """Graph counterpart of ``estimate_U_points`` started from H at each point."""
    dbeta = _check_coeffs(config, dbeta)
    z = config.profile.H(evaluation_points(config))
    npt = z.size
    n = config.n_particle_steps
    z0 = np.repeat(z[None], config.P, axis=0).reshape(-1)
    dB = _graph_noise(config, n, config.P * npt, q)
    levels = scheme_Y(config, z0, dB, store=True).reshape(n + 1, config.P, npt)
    return _assemble(config, *_snapshot_means(config, levels), dbeta)


def asymptotic_error(config, eps=None, barU_cache=None):
    """Weighted mean-square gap between the planar and graph field estimates.

    Returns (value, standard error) over Q_outer coefficient draws. Both
    estimators of an outer sample receive the same coefficient array.
    ``barU_cache`` (a dict keyed by q) lets an eps sweep reuse the graph side.
    """
    eps = config.eps if eps is None else eps
    pts = evaluation_points(config)
    z = config.profile.H(pts)
    w = (np.ones_like(z) if config.gamma is None else np.asarray(config.gamma(z))) * config.h ** 2
    errs = np.empty(config.Q_outer)
    for q in range(config.Q_outer):
        dbeta = outer_coefficients(config, q)
        if barU_cache is not None and q in barU_cache:
            ubar = barU_cache[q]
        else:
            ubar = estimate_barU_points(config, dbeta, q)
            if barU_cache is not None:
                barU_cache[q] = ubar
        u = estimate_U_points(config, eps, dbeta, q)
        errs[q] = float(np.sum((u - ubar) ** 2 * w))
    m, se = _mean_se(errs)
    return float(m), float(se)
