"""Experiment configuration: typed defaults plus a flat ``key=value`` format.

A config file holds one ``section.name = value`` pair per line; blank lines
and lines starting with ``#`` are ignored. Lists are comma separated.
Unknown keys are rejected so that typos cannot silently fall back to a
default.
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Tuple

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "KINDS",
    "default_config",
    "parse_config_text",
    "load_config",
    "config_items",
]

KINDS = ("convergence-2d", "convergence-graph", "asymptotics", "ap-compare",
         "kernel-table", "validate-profile")
SCHEMES = ("exp-euler", "euler-maruyama")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "convergence-2d"
    # Hamiltonian
    hamiltonian_family: str = "exp_decay"
    hamiltonian_alpha0: float = 0.5
    hamiltonian_beta0: float = 1.0
    # driving noise
    noise_kernel: str = "gauss_pi"
    noise_r: float = 0.5
    noise_g: str = "sin"
    noise_clip_tol: float = 1e-12
    # graph weight
    weight_family: str = "exp_sqrt"
    weight_c0: float = 1.0
    weight_lam: float = 2.0
    weight_z0: float = 1.0
    # spatial grid
    grid_L: float = 1.0
    grid_M: int = 5
    grid_graph_M: int = 400
    # time
    time_T: float = 0.125
    time_tau_base: float = 2.0 ** -6
    time_level_min: int = 1
    time_level_max: int = 6
    time_tau: float = 2.0 ** -18
    time_tau_p: float = 0.0
    # fast advection
    eps_value: float = 1.0
    eps_list: Tuple[float, ...] = ()
    # Monte Carlo
    mc_P: int = 500
    mc_Q: int = 100
    mc_seed: int = 20240607
    mc_chunk: int = 50
    # particle estimator
    asym_M1: int = 1
    asym_M2: int = 5
    asym_h: float = 2.0
    # initial datum and extra mode
    init_psi: str = "exp_neg_H"
    ap_mode: str = "x1_gauss"
    # solver
    scheme_name: str = "exp-euler"
    scheme_nu: float = 0.5
    # profile validation
    validate_z_max: float = 20.0
    validate_samples: int = 200
    desk: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.scheme_name not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme_name!r}")
        if self.grid_L <= 0 or self.grid_M < 1:
            raise ConfigError("grid.L must be > 0 and grid.M >= 1")
        if self.time_level_min < 0 or self.time_level_max <= self.time_level_min:
            raise ConfigError("need 0 <= time.level_min < time.level_max")
        if self.mc_P < 1 or self.mc_Q < 1 or self.mc_chunk < 1:
            raise ConfigError("mc.P, mc.Q and mc.chunk must be >= 1")
        if not 0 <= self.mc_seed < 2 ** 64:
            raise ConfigError("mc.seed must fit in an unsigned 64-bit integer")
        if self.kind in ("convergence-2d", "convergence-graph"):
            for tau in self.taus:
                n = self.time_T / tau
                if abs(n - round(n)) > 1e-9 * n or round(n) < 1:
                    raise ConfigError(f"T={self.time_T} is not a multiple of tau={tau}")
        if any(e <= 0 for e in self.eps_list) or self.eps_value <= 0:
            raise ConfigError("eps values must be positive")

    @property
    def taus(self):
        """tau_l = tau_base 2^-l for l = level_min .. level_max (coarse to fine)."""
        return [self.time_tau_base * 2.0 ** -l
                for l in range(self.time_level_min, self.time_level_max + 1)]

    @property
    def seed(self):
        return self.mc_seed

    def replace(self, **kw):
        try:
            return dataclasses.replace(self, **kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
# dotted key -> field name; "asymptotics.*" reads better in files than "asym.*"
_ALIASES = {"asymptotics." + k: "asym_" + k for k in ("M1", "M2", "h")}


def _key_to_field(key):
    if key in _ALIASES:
        return _ALIASES[key]
    name = key.replace(".", "_", 1)
    if "." not in key or name not in _FIELDS or name in ("kind", "desk") or name.startswith("asym_"):
        raise ConfigError(f"unknown config key {key!r}")
    return name


def _convert(name, raw):
    default = _FIELDS[name].default
    try:
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false", "1", "0"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1")
        if isinstance(default, int):
            return int(raw, 0)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {name}") from None
    return raw


def parse_config_text(text):
    """Parse ``key=value`` lines into a dict of field overrides."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        name = _key_to_field(key)
        if name in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[name] = _convert(name, raw)
    return out


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


_PAPER = {
    "convergence-2d": dict(grid_L=1.0, grid_M=5, eps_value=1.0, mc_P=500),
    "convergence-graph": dict(grid_L=10.0, grid_M=100, mc_P=1000),
    "asymptotics": dict(time_T=2.0 ** -13, time_tau=2.0 ** -18, mc_P=5000, mc_Q=100,
                        init_psi="zero", weight_family="const_one",
                        eps_list=tuple(round(0.02 * k, 10) for k in range(1, 11))),
    "ap-compare": dict(grid_L=3.0, grid_M=20, time_tau=0.25, grid_graph_M=400,
                       eps_list=(0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5)),
    "kernel-table": {},
    "validate-profile": {},
}

_DESK = {
    "convergence-2d": dict(mc_P=100),
    "convergence-graph": dict(mc_P=200),
    "asymptotics": dict(mc_P=500, mc_Q=20, eps_list=(0.02, 0.06, 0.10, 0.14, 0.20)),
}


def default_config(kind, desk=False, overrides=None):
    """Paper-scale defaults for ``kind``; ``desk`` applies the reduced sizes.

    ``overrides`` (field name -> value) are applied last.
    """
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    kw = dict(_PAPER[kind])
    if desk:
        kw.update(_DESK.get(kind, {}))
    kw.update(overrides or {})
    return ExperimentConfig(kind=kind, desk=desk, **kw)


def config_items(config):
    """(dotted key, value) pairs echoing a resolved config."""
    rev = {v: k for k, v in _ALIASES.items()}
    items = []
    for name in _FIELDS:
        value = getattr(config, name)
        if isinstance(value, tuple):
            value = ",".join(repr(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        key = rev.get(name, name if name in ("kind", "desk") else name.replace("_", ".", 1))
        items.append((key, value))
    return items
