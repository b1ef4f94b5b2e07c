"""Compare the numba and pure-numpy flavours of the particle kernels.

    python3 benchmarks/bench_kernels.py [--particles N] [--steps S] [--repeat R]

Both flavours are called directly, so the environment flag does not
matter here. Results are checked for agreement before timing; the first
numba call (compilation) is excluded.
"""

import argparse
import time

import numpy as np

from rdagraph import _accel, _kernels
from rdagraph.hamiltonian import exp_decay, power_tail


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, steps, rng):
    for name, prof in (("exp_decay", exp_decay()), ("power_tail", power_tail())):
        code, a0, b0, lo, hi, rtol, maxiter = prof.kernel_args
        x0 = rng.normal(size=(n, 2))
        dBx = rng.normal(scale=0.03, size=(steps, n, 2))
        z0 = rng.uniform(0.0, 5.0, size=n)
        dBy = rng.normal(scale=0.03, size=(steps, n))
        zs = rng.uniform(0.0, 50.0, size=n * steps // 10)
        yield (f"em_particles[{name}]",
               lambda f, x0=x0, d=dBx, c=code, a=a0, b=b0: f(x0, d, 0.05, c, a, b),
               _kernels.em_particles_nb, _kernels.em_particles_np)
        yield (f"y_particles[{name}]",
               lambda f, z0=z0, d=dBy, args=(1e-3, code, a0, b0, lo, hi, rtol, maxiter, True):
               f(z0, d, *args),
               _kernels.y_particles_nb, _kernels.y_particles_np)
        yield (f"invert_F[{name}]",
               lambda f, z=zs, args=(code, a0, b0, lo, hi, rtol, maxiter): f(z, *args),
               _kernels.invert_F_nb, _kernels.invert_F_np)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--particles", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 0
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for label, call, nb, npf in cases(args.particles, args.steps, rng):
        a, b = call(nb), call(npf)  # also compiles the numba flavour
        np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-12)
        t_np = best_of(lambda: call(npf), args.repeat)
        t_nb = best_of(lambda: call(nb), args.repeat)
        print(f"{label:28s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
