"""Declarative experiment configs: YAML schema, validation, and builders.

One config file describes one experiment: named kernel, domain, potential,
right-hand side, grid, solver settings, and a probe plan.  Validation happens
before any computation and reports the offending field path.  All paths in a
config are resolved relative to the config file.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import yaml

from .errors import ConfigError
from .funcspace import Grid
from .geometry import Domain
from .kernels import KernelSpec

DEFAULT_SEED = 0x5EED


@dataclass
class ExperimentConfig:
    name: str
    seed: int
    dimension: int
    domain: Domain
    kernel: KernelSpec
    rhs: Callable
    rhs_singularities: tuple
    potential: Optional[Callable]
    grid: Grid
    solver_tol: float
    solver_max_iter: int
    exterior_data: Optional[Callable]
    probes: list
    output: Path
    config_hash: str
    raw: dict = dc_field(repr=False, default_factory=dict)


def _need(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError(f"{path}.{key}", "missing required key")
    return d[key]


def _number(d: dict, key: str, path: str, default=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing required number")
        return default
    v = d[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {v!r}")
    return float(v)


def _build_domain(spec: dict, dim: int) -> Domain:
    kind = _need(spec, "type", "domain")
    if kind == "interval":
        a = _number(spec, "a", "domain")
        b = _number(spec, "b", "domain")
        if b <= a:
            raise ConfigError("domain.b", "interval needs b > a")
        return Domain.interval(a, b)
    if kind == "halfspace":
        return Domain.halfspace(dim)
    if kind == "ball":
        center = _need(spec, "center", "domain")
        return Domain.ball(center, _number(spec, "radius", "domain"))
    if kind == "box":
        return Domain.box(_need(spec, "lo", "domain"), _need(spec, "hi", "domain"))
    if kind == "graph":
        prof = _need(spec, "profile", "domain")
        if prof == "parabola":
            coef = _number(spec, "coefficient", "domain", default=0.5)
            return Domain.graph(lambda t: coef * np.asarray(t) ** 2, gamma=1.0,
                                dphi=lambda t: 2.0 * coef * np.asarray(t))
        if prof == "flat":
            return Domain.graph(lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                                gamma=1.0,
                                dphi=lambda t: np.zeros_like(np.asarray(t, dtype=float)))
        raise ConfigError("domain.profile",
                          f"unknown builtin graph profile {prof!r}")
    raise ConfigError("domain.type", f"unknown domain type {kind!r}")


def _build_kernel(spec: dict, dim: int) -> KernelSpec:
    kind = _need(spec, "type", "kernel")
    s = _number(spec, "s", "kernel")
    if not 0.0 < s < 1.0:
        raise ConfigError("kernel.s", f"order s must lie in (0,1), got {s}")
    if kind == "mu":
        dens = _number(spec, "density", "kernel", default=1.0)
        if dens <= 0.0:
            raise ConfigError("kernel.density", "density must be positive")
        return KernelSpec.mu(s, dim, density=dens)
    raise ConfigError("kernel.type",
                      f"unknown builtin kernel {kind!r} (library API supports more)")


def _build_scalar(spec: dict, path: str, s: float):
    """Scalar data (rhs or potential): callable, singular points, morrey tag."""
    kind = _need(spec, "type", path)
    if kind == "zero":
        return None, ()
    if kind == "constant":
        value = _number(spec, "value", path)
        return (lambda p: np.full(np.asarray(p).shape[0], value)), ()
    if kind == "power":
        center = _number(spec, "center", path, default=0.0)
        beta = _number(spec, "exponent", path)
        if beta <= 0.0:
            raise ConfigError(f"{path}.exponent",
                              "power singularity exponent must be positive")
        morrey_beta = _number(spec, "morrey_beta", path, default=beta)
        if morrey_beta >= 2.0 * s:
            raise ConfigError(f"{path}.morrey_beta",
                              f"beta = {morrey_beta} must be < 2s = {2 * s}")

        def f(p, c=center, b=beta):
            return np.abs(np.asarray(p)[:, 0] - c) ** (-b)

        return f, (center,)
    raise ConfigError(f"{path}.type", f"unknown scalar family {kind!r}")


def _build_exterior(spec: Optional[dict], s: float):
    if spec is None or spec.get("type", "zero") == "zero":
        return None
    kind = spec["type"]
    if kind == "affine":
        slope = _number(spec, "slope", "exterior", default=1.0)
        offset = _number(spec, "offset", "exterior", default=0.0)
        return lambda p: offset + slope * np.asarray(p)[:, 0]
    if kind == "halfspace_profile":
        power = _number(spec, "power", "exterior", default=s)
        return lambda p: np.maximum(np.asarray(p)[:, 0], 0.0) ** power
    raise ConfigError("exterior.type", f"unknown exterior data {kind!r}")


_PROBE_KINDS = {"boundary_growth", "interior_growth", "quotient", "q_curve",
                "liouville", "eta_scaling", "caccioppoli"}


def _check_probe(p: dict, i: int) -> dict:
    path = f"probes[{i}]"
    kind = _need(p, "kind", path)
    if kind not in _PROBE_KINDS:
        raise ConfigError(f"{path}.kind", f"unknown probe kind {kind!r}")
    return p


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_bytes()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("<file>", "top level must be a mapping")
    name = raw.get("name", path.stem)
    dim = int(_number(raw, "dimension", "<top>", default=1))
    if dim not in (1, 2):
        raise ConfigError("dimension", f"supported dimensions are 1 and 2, got {dim}")
    seed = raw.get("seed", DEFAULT_SEED)
    if not isinstance(seed, int):
        raise ConfigError("seed", f"seed must be an integer, got {seed!r}")
    kernel = _build_kernel(_need(raw, "kernel", "<top>"), dim)
    domain = _build_domain(_need(raw, "domain", "<top>"), dim)
    rhs, rhs_sing = _build_scalar(_need(raw, "rhs", "<top>"), "rhs", kernel.s)
    if rhs is None:
        rhs = lambda p: np.zeros(np.asarray(p).shape[0])
    pot, _ = _build_scalar(raw.get("potential", {"type": "zero"}),
                           "potential", kernel.s)
    gspec = _need(raw, "grid", "<top>")
    grid = Grid.make(_need(gspec, "lo", "grid"), _need(gspec, "hi", "grid"),
                     _number(gspec, "h", "grid"))
    if grid.dim != dim:
        raise ConfigError("grid.lo", "grid dimension disagrees with 'dimension'")
    sspec = raw.get("solver", {})
    tol = _number(sspec, "tol", "solver", default=1e-9)
    max_iter = int(_number(sspec, "max_iter", "solver", default=20000))
    exterior = _build_exterior(raw.get("exterior"), kernel.s)
    probes = [_check_probe(p, i) for i, p in enumerate(raw.get("probes", []))]
    out = raw.get("output", "out")
    output = (path.parent / out).resolve()
    return ExperimentConfig(
        name=name, seed=seed, dimension=dim, domain=domain, kernel=kernel,
        rhs=rhs, rhs_singularities=rhs_sing, potential=pot, grid=grid,
        solver_tol=tol, solver_max_iter=max_iter, exterior_data=exterior,
        probes=probes, output=output,
        config_hash=hashlib.sha256(text).hexdigest()[:16], raw=raw)
