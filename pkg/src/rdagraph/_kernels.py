"""Hot inner loops, each in a numba and a numpy flavour.

Preset Hamiltonians are passed as ``(code, a0, b0)`` scalars so the jitted
code never touches Python objects:

* ``code == 0``: zeta(z) = 1 - exp(-a0 z)
* ``code == 1``: zeta(z) = b0 (1 + z)^a0 - b0

The public ``*_dispatch`` helpers pick the flavour from
``rdagraph._accel.USE_NUMBA`` at call time.
"""

import math

import numpy as np

from . import _accel
from ._accel import njit

EXP_DECAY = 0
POWER_TAIL = 1

# the inversion tolerance is relative to z; below this floor it is absolute
_TINY = 1e-290
# Newton steps this small relative to the iterate are rounding noise
_STEP_EPS = 8.0 * 2.0 ** -52


class InversionError(RuntimeError):
    """Raised when the level-map inversion fails to converge."""


# ---------------------------------------------------------------------------
# scalar zeta derivatives (numba)


@njit(cache=True)
def _zeta_nb(y, code, a0, b0):
    if code == EXP_DECAY:
        return -math.expm1(-a0 * y)
    return b0 * math.expm1(a0 * math.log1p(y))


@njit(cache=True)
def _dzeta_nb(y, code, a0, b0):
    if code == EXP_DECAY:
        return a0 * math.exp(-a0 * y)
    return b0 * a0 * (1.0 + y) ** (a0 - 1.0)


@njit(cache=True)
def _d2zeta_nb(y, code, a0, b0):
    if code == EXP_DECAY:
        return -a0 * a0 * math.exp(-a0 * y)
    return b0 * a0 * (a0 - 1.0) * (1.0 + y) ** (a0 - 2.0)


@njit(cache=True)
def _invert_scalar_nb(z, code, a0, b0, lo_fac, hi_fac, rtol, maxiter):
    if z == 0.0:
        return 0.0, True
    y = z / (1.0 + _dzeta_nb(0.0, code, a0, b0))
    scale = max(abs(z), _TINY)
    for _ in range(maxiter):
        res = y + _zeta_nb(y, code, a0, b0) - z
        if abs(res) <= rtol * scale:
            return y, True
        step = res / (1.0 + _dzeta_nb(y, code, a0, b0))
        y = y - step
        if abs(step) <= _STEP_EPS * abs(y):
            return y, True
    if z < 0.0:
        return y, False
    # bisection on the bracket guaranteed by the derivative bounds of zeta
    lo = lo_fac * z
    hi = hi_fac * z
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        res = mid + _zeta_nb(mid, code, a0, b0) - z
        if abs(res) <= rtol * scale:
            return mid, True
        if res > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi), False


@njit(cache=True, nogil=True)
def invert_F_nb(z, code, a0, b0, lo_fac, hi_fac, rtol, maxiter):
    out = np.empty(z.size)
    ok = True
    zf = z.ravel()
    for i in range(zf.size):
        y, conv = _invert_scalar_nb(zf[i], code, a0, b0, lo_fac, hi_fac, rtol, maxiter)
        out[i] = y
        ok = ok and conv
    return out.reshape(z.shape), ok


# ---------------------------------------------------------------------------
# numpy flavour


def _zeta_np(y, code, a0, b0):
    if code == EXP_DECAY:
        return -np.expm1(-a0 * y)
    return b0 * np.expm1(a0 * np.log1p(y))


def _dzeta_np(y, code, a0, b0):
    if code == EXP_DECAY:
        return a0 * np.exp(-a0 * y)
    return b0 * a0 * (1.0 + y) ** (a0 - 1.0)


def _d2zeta_np(y, code, a0, b0):
    if code == EXP_DECAY:
        return -a0 * a0 * np.exp(-a0 * y)
    return b0 * a0 * (a0 - 1.0) * (1.0 + y) ** (a0 - 2.0)


def invert_F_np(z, code, a0, b0, lo_fac, hi_fac, rtol, maxiter):
    z = np.asarray(z, dtype=float)
    y = z / (1.0 + _dzeta_np(0.0, code, a0, b0))
    scale = np.maximum(np.abs(z), _TINY)
    done = z == 0.0
    y = np.where(done, 0.0, y)
    for _ in range(maxiter):
        res = y + _zeta_np(y, code, a0, b0) - z
        done = done | (np.abs(res) <= rtol * scale)
        if done.all():
            return y, True
        step = res / (1.0 + _dzeta_np(y, code, a0, b0))
        y = np.where(done, y, y - step)
        done = done | (np.abs(step) <= _STEP_EPS * np.abs(y))
    if np.any(~done & (z < 0.0)):
        return y, False
    lo = np.where(done, y, lo_fac * z)
    hi = np.where(done, y, hi_fac * z)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        res = mid + _zeta_np(mid, code, a0, b0) - z
        done = done | (np.abs(res) <= rtol * scale)
        if done.all():
            return mid, True
        lo = np.where(~done & (res <= 0.0), mid, lo)
        hi = np.where(~done & (res > 0.0), mid, hi)
    return 0.5 * (lo + hi), False


# ---------------------------------------------------------------------------
# particle schemes


@njit(cache=True, nogil=True)
def em_particles_nb(x0, dB, ratio, code, a0, b0):
    """Euler-Maruyama for dX = ratio-scaled rot-grad H dt + dB.

    x0 has shape (n, 2), dB shape (N, n, 2). Returns the trajectory
    (N + 1, n, 2) and the first step that produced a non-finite state (-1
    if none); the trajectory is only filled up to and including that step.
    """
    nsteps = dB.shape[0]
    n = x0.shape[0]
    out = np.empty((nsteps + 1, n, 2))
    out[0] = x0
    # step-major so that the reported step is the earliest over all particles
    for k in range(nsteps):
        prev = out[k]
        nxt = out[k + 1]
        inc = dB[k]
        bad = False
        for p in range(n):
            x1 = prev[p, 0]
            x2 = prev[p, 1]
            c = 2.0 * (1.0 + _dzeta_nb(x1 * x1 + x2 * x2, code, a0, b0))
            nx1 = x1 - ratio * c * x2 + inc[p, 0]
            nx2 = x2 + ratio * c * x1 + inc[p, 1]
            if not (math.isfinite(nx1) and math.isfinite(nx2)):
                bad = True
            nxt[p, 0] = nx1
            nxt[p, 1] = nx2
        if bad:
            return out, k
    return out, -1


def em_particles_np(x0, dB, ratio, code, a0, b0):
    nsteps = dB.shape[0]
    out = np.empty((nsteps + 1,) + x0.shape)
    x = np.array(x0, dtype=float)
    out[0] = x
    for k in range(nsteps):
        c = 2.0 * (1.0 + _dzeta_np(x[:, 0] ** 2 + x[:, 1] ** 2, code, a0, b0))
        drift = np.empty_like(x)
        drift[:, 0] = -c * x[:, 1]
        drift[:, 1] = c * x[:, 0]
        x = x + ratio * drift + dB[k]
        if not np.all(np.isfinite(x)):
            return out, k
        out[k + 1] = x
    return out, -1


@njit(cache=True, nogil=True)
def y_particles_nb(z0, dB, tau, code, a0, b0, lo_fac, hi_fac, rtol, maxiter, clip_drift):
    """Clipped Euler scheme for the graph diffusion.

    Returns (N + 1, n) levels and the first non-finite step (-1 if none).
    """
    nsteps = dB.shape[0]
    n = z0.shape[0]
    out = np.empty((nsteps + 1, n))
    out[0] = z0
    for k in range(nsteps):
        bad = False
        for p in range(n):
            y = out[k, p]
            zd = y
            if clip_drift and zd < 0.0:
                zd = 0.0
            f, ok = _invert_scalar_nb(zd, code, a0, b0, lo_fac, hi_fac, rtol, maxiter)
            if not ok:
                raise InversionError("level inversion failed")
            d1 = _dzeta_nb(f, code, a0, b0)
            drift = 2.0 * (1.0 + d1 + f * _d2zeta_nb(f, code, a0, b0))
            diff = 0.0
            if y > 0.0:
                # zd == y here, so f is already F(y)
                diff = 4.0 * f * (1.0 + d1) * (1.0 + d1)
            y = y + drift * tau + math.sqrt(diff) * dB[k, p]
            if not math.isfinite(y):
                bad = True
            out[k + 1, p] = y
        if bad:
            return out, k
    return out, -1


def y_particles_np(z0, dB, tau, code, a0, b0, lo_fac, hi_fac, rtol, maxiter, clip_drift):
    nsteps = dB.shape[0]
    out = np.empty((nsteps + 1,) + z0.shape)
    y = np.array(z0, dtype=float)
    out[0] = y
    for k in range(nsteps):
        zd = np.maximum(y, 0.0) if clip_drift else y
        f, ok = invert_F_np(zd, code, a0, b0, lo_fac, hi_fac, rtol, maxiter)
        if not ok:
            raise InversionError("level inversion failed")
        drift = 2.0 * (1.0 + _dzeta_np(f, code, a0, b0) + f * _d2zeta_np(f, code, a0, b0))
        fpos = np.where(y > 0.0, f, 0.0)
        d1 = _dzeta_np(fpos, code, a0, b0)
        diff = 4.0 * fpos * (1.0 + d1) ** 2
        y = y + drift * tau + np.sqrt(diff) * dB[k]
        if not np.all(np.isfinite(y)):
            return out, k
        out[k + 1] = y
    return out, -1


# ---------------------------------------------------------------------------
# dispatch


def invert_F_dispatch(z, code, a0, b0, lo_fac, hi_fac, rtol, maxiter):
    z = np.asarray(z, dtype=float)
    flat = np.ascontiguousarray(z.ravel())
    if _accel.USE_NUMBA:
        y, ok = invert_F_nb(flat, code, a0, b0, lo_fac, hi_fac, rtol, maxiter)
    else:
        y, ok = invert_F_np(flat, code, a0, b0, lo_fac, hi_fac, rtol, maxiter)
    return y.reshape(z.shape), ok


def em_particles(x0, dB, ratio, code, a0, b0):
    x0 = np.ascontiguousarray(x0, dtype=float)
    dB = np.ascontiguousarray(dB, dtype=float)
    if _accel.USE_NUMBA:
        return em_particles_nb(x0, dB, float(ratio), code, a0, b0)
    return em_particles_np(x0, dB, float(ratio), code, a0, b0)


def y_particles(z0, dB, tau, code, a0, b0, lo_fac, hi_fac, rtol, maxiter, clip_drift=True):
    z0 = np.ascontiguousarray(z0, dtype=float)
    dB = np.ascontiguousarray(dB, dtype=float)
    args = (float(tau), code, a0, b0, lo_fac, hi_fac, rtol, maxiter, bool(clip_drift))
    if _accel.USE_NUMBA:
        return y_particles_nb(z0, dB, *args)
    return y_particles_np(z0, dB, *args)
