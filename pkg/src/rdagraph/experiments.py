"""Experiment harnesses: strong convergence, asymptotic error, AP contrast.

Convergence runs compare solutions at consecutive dyadic stepsizes driven
by the same Brownian path: fine increments are drawn once per sample and
every coarser level is obtained by pairwise summation. Paths are processed
in fixed-size chunks, so results do not depend on the number of worker
threads.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from . import _accel, graph_ops, noise, particle_mc
from .config import ConfigError, config_items
from .graph1d import GraphGrid, assemble_generator_graph, build_graph_system, solve_path_graph
from .hamiltonian import HamiltonianProfile, ZetaProfile, validate_profile
from .dense_ops import matrix_exp
from .rda2d import Grid2D, NonFiniteStateError, assemble_generator, build_system, solve_path

__all__ = [
    "ErrorTable",
    "EXACT_FLOOR",
    "build_profile",
    "build_kernel",
    "build_weight",
    "run_convergence_2d",
    "run_convergence_graph",
    "run_asymptotics",
    "run_ap_compare",
    "kernel_table",
    "run_validate_profile",
    "fit_loglog_slope",
    "spearman_trend",
    "is_exact",
    "emit_outputs",
    "read_csv",
]

EXACT_FLOOR = 1e-8


@dataclass
class ErrorTable:
    """Rows (label, error, std_error) plus free-form metadata."""

    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = [tuple(float(v) for v in r) for r in self.rows]
        for lab, err, se in self.rows:
            if not (np.isfinite(lab) and np.isfinite(err) and np.isfinite(se)):
                raise ValueError("table entries must be finite")
            if err < 0 or se < 0:
                raise ValueError("errors and standard errors must be nonnegative")
        labs = np.array([r[0] for r in self.rows])
        if labs.size > 1:
            d = np.diff(labs)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise ValueError("labels must be strictly monotone")

    @property
    def labels(self):
        return np.array([r[0] for r in self.rows])

    @property
    def errors(self):
        return np.array([r[1] for r in self.rows])

    @property
    def std_errors(self):
        return np.array([r[2] for r in self.rows])

    def __len__(self):
        return len(self.rows)


# ---------------------------------------------------------------------------
# building blocks from a config


def build_profile(config):
    fam = config.hamiltonian_family
    if fam == "exp_decay":
        z = ZetaProfile.exp_decay(config.hamiltonian_alpha0)
    elif fam == "power_tail":
        z = ZetaProfile.power_tail(config.hamiltonian_alpha0, config.hamiltonian_beta0)
    else:
        raise ConfigError(f"unknown Hamiltonian family {fam!r}")
    return HamiltonianProfile(z)


def build_kernel(config):
    try:
        return noise.SpectralKernel(config.noise_kernel, config.noise_r)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_weight(config):
    try:
        return graph_ops.WeightProfile(config.weight_family, config.weight_c0,
                                       config.weight_lam, config.weight_z0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _g_fn(config):
    name = config.noise_g
    if name == "sin":
        return np.sin
    if name == "zero":
        return np.zeros_like
    if name == "one":
        return np.ones_like
    raise ConfigError(f"unknown noise.g {name!r} (sin, zero, one)")


def _psi_pair(config, profile):
    """(planar psi, graph psi); psi = psi_graph o H."""
    name = config.init_psi
    if name == "exp_neg_H":
        return (lambda x: np.exp(-profile.H(x))), (lambda z: np.exp(-np.asarray(z)))
    if name == "zero":
        return (lambda x: np.zeros(np.shape(x)[:-1])), (lambda z: np.zeros(np.shape(z)))
    raise ConfigError(f"unknown init.psi {name!r} (exp_neg_H, zero)")


def _chunks(n, size):
    return [(a, min(a + size, n)) for a in range(0, n, size)]


def _pool_map(fn, items, threads):
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _coupled_levels(fine, n_levels):
    """Increments at every level, coarse to fine, built by pairwise sums.

    Asserts that each coarse increment is the exact sum of the two finer
    ones it covers.
    """
    levels = [fine]
    for _ in range(n_levels - 1):
        prev = levels[-1]
        coarse = noise.coarsen(prev, 1)
        if not np.array_equal(coarse, prev[0::2] + prev[1::2]):  # pragma: no cover
            raise AssertionError("dyadic coupling broken")
        levels.append(coarse)
    return levels[::-1]


def _rms_rows(sq_by_level, taus):
    """Rows (tau_l, sqrt(mean sq), delta-method standard error)."""
    rows = []
    for tau, sq in zip(taus, sq_by_level):
        m = float(np.mean(sq))
        se_m = float(np.std(sq, ddof=1) / np.sqrt(sq.size)) if sq.size > 1 else 0.0
        e = np.sqrt(m)
        rows.append((tau, e, se_m / (2.0 * e) if e > 0 else 0.0))
    return rows


def _convergence(config, dim, make_system, u0, norm_sq, solve, threads):
    taus = config.taus
    fine_tau = taus[-1]
    n_fine = int(round(config.time_T / fine_tau))
    n_lev = len(taus)
    base = make_system(fine_tau)
    systems = [base.with_tau(t) for t in taus[:-1]] + [base]

    def run_chunk(bounds):
        p0, p1 = bounds
        incs = np.stack([noise.NoiseStream(config.mc_seed, fine_tau, dim, n_fine, path=p).fine()
                         for p in range(p0, p1)], axis=-1)
        levels = _coupled_levels(incs, n_lev)
        U0 = np.repeat(u0[:, None], p1 - p0, axis=1)
        finals = []
        for lev, (sysl, inc) in enumerate(zip(systems, levels)):
            try:
                finals.append(solve(sysl, U0, inc, scheme=config.scheme_name))
            except NonFiniteStateError as exc:
                raise NonFiniteStateError(exc.step, f"level {lev}, paths {p0}..{p1 - 1}: "
                                          "non-finite state") from None
        sq = np.empty((n_lev - 1, p1 - p0))
        for l in range(n_lev - 1):
            d = finals[l + 1] - finals[l]
            for j in range(p1 - p0):
                sq[l, j] = norm_sq(d[:, j])
        return sq

    parts = _pool_map(run_chunk, _chunks(config.mc_P, config.mc_chunk), threads)
    sq = np.concatenate(parts, axis=1)
    for l in range(sq.shape[0]):
        bad = np.flatnonzero(~np.isfinite(sq[l]))
        if bad.size:
            raise NonFiniteStateError(0, f"non-finite error at level {l}, sample {bad[0]}")
    rows = _rms_rows(list(sq), taus[:-1])
    meta = {"steps_per_row": ",".join(str(int(round(config.time_T / t))) for t in taus[:-1]),
            "finest_steps": n_fine}
    return ErrorTable(rows, meta)


def run_convergence_2d(config, threads=1):
    """Root-mean-square gap between consecutive stepsizes on the planar solver.

    Row l is labelled tau_l and holds E||u^{tau_{l+1}}(T) - u^{tau_l}(T)||^2
    under the weighted planar norm, square-rooted.
    """
    profile = build_profile(config)
    grid = Grid2D(config.grid_L, config.grid_M)
    kernel = build_kernel(config)
    gamma = build_weight(config)
    g = _g_fn(config)
    psi, _ = _psi_pair(config, profile)
    sqrt_cov = noise.psd_sqrt(noise.covariance_matrix_2d(kernel, grid), config.noise_clip_tol)

    def make_system(tau):
        return build_system(grid, profile, config.eps_value, tau, g=g, nu=config.scheme_nu,
                            noise_sqrt=sqrt_cov)

    table = _convergence(config, grid.n_interior, make_system, grid.sample(psi),
                         lambda v: graph_ops.norm_sq_Hgamma_2d(v, grid, gamma, profile),
                         solve_path, threads)
    table.metadata.update(_common_meta(config))
    return table


def run_convergence_graph(config, threads=1):
    """Graph counterpart of ``run_convergence_2d`` with the A gamma dz norm."""
    profile = build_profile(config)
    grid = GraphGrid(config.grid_L, config.grid_M)
    kernel = build_kernel(config)
    gamma = build_weight(config)
    g = _g_fn(config)
    _, psi_g = _psi_pair(config, profile)
    sqrt_cov = noise.psd_sqrt(noise.covariance_matrix_graph(kernel, profile, grid),
                              config.noise_clip_tol)

    def make_system(tau):
        return build_graph_system(grid, profile, tau, g=g, noise_sqrt=sqrt_cov)

    table = _convergence(config, grid.M, make_system, grid.sample(psi_g),
                         lambda v: graph_ops.norm_sq_L2Agamma_1d(v, grid, gamma, profile),
                         solve_path_graph, threads)
    table.metadata.update(_common_meta(config))
    return table


def _common_meta(config):
    meta = dict(config_items(config))
    meta["backend"] = _accel.backend_name()
    return meta


# ---------------------------------------------------------------------------
# asymptotic error (particle estimators)


def particle_config(config):
    profile = build_profile(config)
    _, psi_g = _psi_pair(config, profile)
    if config.asym_M1 != 1:
        raise ConfigError("only the single mode 10 sin z + 6 z is available (asymptotics.M1 = 1)")
    n = config.time_T / config.time_tau
    if abs(n - round(n)) > 1e-9 * n or round(n) < 1:
        raise ConfigError("time.T must be a multiple of time.tau")
    eps0 = config.eps_list[0] if config.eps_list else config.eps_value
    return particle_mc.ParticleConfig(
        profile, eps0, config.time_tau, int(round(n)), P=config.mc_P, Q_outer=config.mc_Q,
        M1=config.asym_M1, M2=config.asym_M2, h=config.asym_h,
        psi=None if config.init_psi == "zero" else psi_g,
        tau_p=config.time_tau_p or None, gamma=build_weight(config), seed=config.mc_seed)


def run_asymptotics(config, threads=1):
    """One row per eps with the weighted mean-square planar/graph gap."""
    pc = particle_config(config)
    eps_list = sorted(config.eps_list) if config.eps_list else [config.eps_value]
    cache = {}
    # graph side does not depend on eps: fill the cache once, in parallel
    qs = list(range(pc.Q_outer))
    ubars = _pool_map(lambda q: particle_mc.estimate_barU_points(
        pc, particle_mc.outer_coefficients(pc, q), q), qs, threads)
    cache.update(zip(qs, ubars))
    rows = []
    for eps in eps_list:
        v, se = particle_mc.asymptotic_error(pc, eps, cache)
        rows.append((eps, v, se))
    meta = _common_meta(config)
    meta.update(particle_steps=pc.n_particle_steps, tau_p=repr(pc.tau_p), N=pc.N)
    return ErrorTable(rows, meta)


# ---------------------------------------------------------------------------
# AP contrast (matrix solvers, exact expectation)


def _ap_mode(config, profile):
    if config.ap_mode == "x1_gauss":
        return lambda x: x[..., 0] * np.exp(-(x[..., 0] ** 2 + x[..., 1] ** 2))
    if config.ap_mode == "radial_gauss":
        return lambda x: np.exp(-(x[..., 0] ** 2 + x[..., 1] ** 2))
    raise ConfigError(f"unknown ap.mode {config.ap_mode!r} (x1_gauss, radial_gauss)")


def run_ap_compare(config):
    """One-step discrepancy ||U^1_eps - (Ubar^1)^vee||^2 for both schemes.

    Additive noise with a single mode u: a step reads
    U^1 = S psi + S' u dbeta with S, S' the scheme's linear maps, so the
    expected squared norm is ||mean gap||^2 + tau ||mode gap||^2 and no
    sampling is needed. The graph solution lives on a fine graph grid
    covering the planar window and is lifted by linear interpolation.
    Returns (exponential Euler table, Euler-Maruyama table).
    """
    profile = build_profile(config)
    grid = Grid2D(config.grid_L, config.grid_M)
    gamma = build_weight(config)
    tau = config.time_tau
    psi, psi_g = _psi_pair(config, profile)
    mode = _ap_mode(config, profile)
    levels = profile.H(grid.nodes)
    ggrid = GraphGrid(1.05 * float(levels.max()) + 1.0, config.grid_graph_M)
    lg = assemble_generator_graph(ggrid, profile)
    eg = matrix_exp(lg, tau)
    pg = ggrid.sample(psi_g)
    mg = graph_ops.wedge(profile, mode, ggrid.z)
    u0, m0 = grid.sample(psi), grid.sample(mode)

    def nsq(v):
        return graph_ops.norm_sq_Hgamma_2d(v, grid, gamma, profile)

    graph_exp = (ggrid.lift(eg @ pg, levels), ggrid.lift(eg @ mg, levels))
    graph_em = (ggrid.lift(pg + tau * (lg @ pg), levels), ggrid.lift(mg, levels))
    eps_list = sorted(config.eps_list) if config.eps_list else [config.eps_value]
    rows_exp, rows_em = [], []
    for eps in eps_list:
        gen = assemble_generator(grid, profile, eps, config.scheme_nu)
        e = matrix_exp(gen, tau)
        d_exp = nsq(e @ u0 - graph_exp[0]) + tau * nsq(e @ m0 - graph_exp[1])
        d_em = nsq(u0 + tau * (gen @ u0) - graph_em[0]) + tau * nsq(m0 - graph_em[1])
        rows_exp.append((eps, d_exp, 0.0))
        rows_em.append((eps, d_em, 0.0))
    meta = _common_meta(config)
    meta["graph_L"] = repr(ggrid.L)
    return ErrorTable(rows_exp, dict(meta, scheme="exp-euler")), \
        ErrorTable(rows_em, dict(meta, scheme="euler-maruyama"))


# ---------------------------------------------------------------------------
# small utilities


KERNEL_TABLE_RHO = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)


def kernel_table(config, rho=KERNEL_TABLE_RHO):
    """Values of every kernel family (parameter ``noise.r``) at radii ``rho``.

    Returns (header, rows); singular values are reported as ``inf``.
    """
    fams = ["riesz", "bessel", "heat", "poisson", "gauss_pi"]
    header = ["rho"] + fams
    rows = []
    for p in rho:
        row = [p]
        for fam in fams:
            r = config.noise_r
            if fam == "riesz" and not 0 < r < 2:
                row.append(float("nan"))
                continue
            try:
                row.append(float(noise.SpectralKernel(fam, r).radial(np.array([p]))[0]))
            except noise.SingularKernelError:
                row.append(float("inf"))
        rows.append(row)
    return header, rows


def run_validate_profile(config):
    return validate_profile(build_profile(config), config.validate_z_max, config.validate_samples)


def is_exact(table, floor=EXACT_FLOOR):
    """True when every error is below ``floor`` (nothing to regress)."""
    return len(table) > 0 and bool(np.all(table.errors < floor))


def fit_loglog_slope(table):
    """Least-squares slope of log2(error) on log2(label) and its 95% half-width."""
    if len(table) < 2:
        raise ValueError("need at least two rows to fit a slope")
    err = table.errors
    if np.any(err <= 0):
        raise ValueError("cannot fit a slope through nonpositive errors")
    x = np.log2(table.labels)
    y = np.log2(err)
    res = scipy.stats.linregress(x, y)
    n = x.size
    if n < 3:
        return float(res.slope), float("inf")
    half = scipy.stats.t.ppf(0.975, n - 2) * res.stderr
    return float(res.slope), float(half)


def spearman_trend(table):
    """Spearman rank correlation between label and error."""
    if len(table) < 2:
        raise ValueError("need at least two rows")
    return float(scipy.stats.spearmanr(table.labels, table.errors).statistic)


# ---------------------------------------------------------------------------
# output


CSV_HEADER = "label,error,std_error"


def _fmt(x):
    return f"{x:.17g}"


def write_csv(table, path):
    lines = [CSV_HEADER] + [",".join(_fmt(v) for v in row) for row in table.rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path} is not an error table")
    return ErrorTable([tuple(float(v) for v in ln.split(",")) for ln in lines[1:] if ln])


_PLOT_SCRIPT = '''"""Plot {csv} on log-log axes (needs matplotlib)."""
import csv
import matplotlib.pyplot as plt

with open("{csv}") as fh:
    rows = [tuple(map(float, r)) for r in list(csv.reader(fh))[1:]]
lab, err, se = zip(*rows) if rows else ((), (), ())
plt.errorbar(lab, err, yerr=se, marker="o")
plt.xscale("log", base=2)
plt.yscale("log", base=2)
plt.xlabel("{xlabel}")
plt.ylabel("error")
plt.savefig("{png}")
'''


def emit_outputs(table, config, out_dir, name=None, plot=False, extra_meta=None):
    """Write ``<name>.csv``, ``<name>.meta`` and optionally ``<name>_plot.py``.

    The sidecar echoes the resolved config (seed included) as key=value
    lines. Returns the list of written paths.
    """
    name = name or config.kind
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, name + ".csv")
    meta_path = os.path.join(out_dir, name + ".meta")
    write_csv(table, csv_path)
    meta = dict(config_items(config))
    meta.update(table.metadata)
    meta.update(extra_meta or {})
    with open(meta_path, "w", encoding="utf-8", newline="\n") as fh:
        for k in sorted(meta):
            fh.write(f"{k} = {meta[k]}\n")
    paths = [csv_path, meta_path]
    if plot:
        plot_path = os.path.join(out_dir, name + "_plot.py")
        xlabel = "eps" if config.kind in ("asymptotics", "ap-compare") else "tau"
        with open(plot_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_PLOT_SCRIPT.format(csv=name + ".csv", png=name + ".png", xlabel=xlabel))
        paths.append(plot_path)
    return paths
