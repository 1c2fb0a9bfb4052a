"""INI run configuration: parsing, validation and resolution to solver
objects.  Unknown sections or keys are rejected rather than ignored."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

import numpy as np

from .errors import InvalidValue, ParseError, UnknownKey
from .fixedpoint import Nonlinearity, make_nonlinearity
from .forward import data_norm
from .geometry import (
    CutoffProfile,
    GeometryConfig,
    WeightParams,
    default_carleman_s,
    validate_geometry,
)
from .grid import SpaceTimeGrid, build_grid


def _bump(xi):
    core = np.zeros_like(xi)
    inside = (xi > 0.0) & (xi < 1.0)
    u = xi[inside]
    core[inside] = np.exp(4.0 - 1.0 / (u * (1.0 - u)))
    return core


DATA_PROFILES = {
    "zero": lambda xi: np.zeros_like(xi),
    "sin_pi": lambda xi: np.sin(np.pi * xi),
    "sin_2pi": lambda xi: np.sin(2.0 * np.pi * xi),
    "x_one_minus_x": lambda xi: xi * (1.0 - xi),
    "bump": _bump,
    "one": lambda xi: np.where((xi > 0.0) & (xi < 1.0), 1.0, 0.0),
}


def evaluate_profile(name, grid: SpaceTimeGrid, amplitude=1.0):
    """Spatial slice from a named profile; tensor product across axes.

    Profiles are defined on normalized coordinates, so they vanish on the
    Dirichlet boundary by construction (except 'one', which is clipped).
    """
    if name not in DATA_PROFILES:
        raise InvalidValue(f"unknown data profile {name!r}; "
                           f"choose from {sorted(DATA_PROFILES)}")
    fn = DATA_PROFILES[name]
    out = np.ones(grid.full_shape)
    for ax, ((a, b), x) in enumerate(zip(grid.geometry.domain, grid.xs)):
        xi = (x - a) / (b - a)
        shape = [1] * grid.dim
        shape[ax] = len(x)
        out = out * fn(xi).reshape(shape)
    return amplitude * out


_SCHEMA = {
    "geometry": {"domain", "x0", "t", "delta", "strip_fraction"},
    "weights": {"beta", "lambda", "s", "s0", "m0", "normalization"},
    "grid": {"nx", "nt"},
    "data": {"u0", "u1", "u0_amplitude", "u1_amplitude"},
    "nonlinearity": {"name", "beta_star", "p", "a"},
    "solver": {"method", "epsilon", "tol", "max_iter", "class_kind"},
    "output": {"dir"},
}

_DEFAULTS = {
    "geometry": {"domain": "0,1", "x0": "-0.2", "t": "2.6", "delta": "0.08",
                 "strip_fraction": "0.25"},
    "weights": {"beta": "0.9", "lambda": "0.1", "s": "auto", "s0": "1.0",
                "m0": "auto", "normalization": "normalized"},
    "grid": {"nx": "32", "nt": "auto"},
    "data": {"u0": "sin_pi", "u1": "zero", "u0_amplitude": "1.0",
             "u1_amplitude": "1.0"},
    "nonlinearity": {"name": "zero", "beta_star": "0.05", "p": "1.0", "a": "1.0"},
    "solver": {"method": "direct", "epsilon": "auto", "tol": "1e-8",
               "max_iter": "25", "class_kind": "C_s"},
    "output": {"dir": "out"},
}


def _parse_axes(text):
    """'0,1' -> ((0,1),); '0,1;0,2' -> ((0,1),(0,2))."""
    try:
        axes = tuple(tuple(float(v) for v in part.split(",")) for part in text.split(";"))
    except ValueError as exc:
        raise InvalidValue(f"bad domain {text!r}") from exc
    if any(len(a) != 2 for a in axes):
        raise InvalidValue(f"bad domain {text!r}: each axis needs 'a,b'")
    return axes


def _parse_floats(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise InvalidValue(f"bad number list {text!r}") from exc


@dataclass(eq=False)
class RunConfig:
    """Validated key-value view of a run configuration file."""

    values: dict
    path: str = "<defaults>"

    def get(self, section, key):
        return self.values[section][key]

    def getfloat(self, section, key):
        try:
            return float(self.values[section][key])
        except ValueError as exc:
            raise InvalidValue(f"[{section}] {key} = "
                               f"{self.values[section][key]!r} is not a number") from exc


def parse_config(path=None, overrides=None) -> RunConfig:
    """Read an INI file (all sections optional) on top of the defaults.

    overrides is an optional {(section, key): value} mapping applied last,
    used by the CLI sweep command.
    """
    values = {sec: dict(kv) for sec, kv in _DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            read = parser.read(path)
        except configparser.Error as exc:
            raise ParseError(f"{path}: {exc}") from exc
        if not read:
            raise ParseError(f"cannot read config file {path}")
        for sec in parser.sections():
            if sec not in _SCHEMA:
                raise UnknownKey(f"{path}: unknown section [{sec}]")
            for key, val in parser.items(sec):
                if key not in _SCHEMA[sec]:
                    raise UnknownKey(f"{path}: unknown key {key!r} in [{sec}]")
                values[sec][key] = val
    for (sec, key), val in (overrides or {}).items():
        if sec not in _SCHEMA or key not in _SCHEMA[sec]:
            raise UnknownKey(f"override {sec}.{key} is not a known setting")
        values[sec][key] = str(val)
    return RunConfig(values=values, path=path or "<defaults>")


@dataclass(eq=False)
class ResolvedRun:
    """Everything a solve needs, built from a RunConfig."""

    config: RunConfig
    geometry: GeometryConfig
    partition: object
    grid: SpaceTimeGrid
    params: WeightParams
    cutoffs: CutoffProfile
    u0: np.ndarray
    u1: np.ndarray
    nonlinearity: Nonlinearity
    s: float
    epsilon: float | None
    solver: str
    tol: float
    max_iter: int
    class_kind: str
    out_dir: str

    def echo_lines(self):
        """resolved.cfg content: every effective setting, one per line."""
        lines = []
        for sec in _SCHEMA:
            lines.append(f"[{sec}]")
            for key in sorted(_SCHEMA[sec]):
                lines.append(f"{key} = {self.config.values[sec][key]}")
            lines.append("")
        lines.append("[resolved]")
        lines.append(f"dim = {self.geometry.dim}")
        lines.append(f"nt = {self.grid.nt}")
        lines.append(f"s = {self.s:.17g}")
        lines.append(f"m0 = {self.params.m0:.17g}")
        lines.append(f"epsilon = {'auto' if self.epsilon is None else repr(self.epsilon)}")
        lines.append(f"gamma1 = {','.join(self.partition.gamma1)}")
        return "\n".join(lines) + "\n"


def resolve_config(cfg: RunConfig) -> ResolvedRun:
    """Validate geometry, build the grid and data, fill auto defaults."""
    geo = GeometryConfig(
        domain=_parse_axes(cfg.get("geometry", "domain")),
        x0=_parse_floats(cfg.get("geometry", "x0")),
        T=cfg.getfloat("geometry", "t"),
        delta=cfg.getfloat("geometry", "delta"),
    )
    partition = validate_geometry(geo, strip_fraction=cfg.getfloat("geometry", "strip_fraction"))

    nx = tuple(int(v) for v in _parse_floats(cfg.get("grid", "nx")))
    nt_raw = cfg.get("grid", "nt")
    nt = int(round(max(nx) * geo.T)) if nt_raw == "auto" else int(nt_raw)
    grid = build_grid(geo, nx, nt)

    u0 = evaluate_profile(cfg.get("data", "u0"), grid,
                          cfg.getfloat("data", "u0_amplitude"))
    u1 = evaluate_profile(cfg.get("data", "u1"), grid,
                          cfg.getfloat("data", "u1_amplitude"))

    s0 = cfg.getfloat("weights", "s0")
    s_raw = cfg.get("weights", "s")
    s = default_carleman_s(s0, data_norm(grid, u0, u1)) if s_raw == "auto" else float(s_raw)
    m0_raw = cfg.get("weights", "m0")
    params = WeightParams(
        geometry=geo,
        beta=cfg.getfloat("weights", "beta"),
        lam=cfg.getfloat("weights", "lambda"),
        s=s, s0=s0,
        M0=None if m0_raw == "auto" else float(m0_raw),
        normalization=cfg.get("weights", "normalization"),
    )
    cutoffs = CutoffProfile(partition)

    nl = make_nonlinearity(
        cfg.get("nonlinearity", "name"),
        beta_star=cfg.getfloat("nonlinearity", "beta_star"),
        p=cfg.getfloat("nonlinearity", "p"),
        a=cfg.getfloat("nonlinearity", "a"),
    )

    method = cfg.get("solver", "method")
    if method not in ("direct", "cg"):
        raise InvalidValue(f"[solver] method must be direct or cg, got {method!r}")
    eps_raw = cfg.get("solver", "epsilon")
    epsilon = None if eps_raw == "auto" else float(eps_raw)
    class_kind = cfg.get("solver", "class_kind")
    if class_kind not in ("C_s", "C_tilde_s"):
        raise InvalidValue(f"[solver] class_kind must be C_s or C_tilde_s, got {class_kind!r}")

    out_dir = os.environ.get("WAVECTL_OUT", cfg.get("output", "dir"))
    max_iter = int(cfg.getfloat("solver", "max_iter"))
    if max_iter < 1:
        raise InvalidValue("[solver] max_iter must be >= 1")
    return ResolvedRun(
        config=cfg, geometry=geo, partition=partition, grid=grid, params=params,
        cutoffs=cutoffs, u0=u0, u1=u1, nonlinearity=nl, s=s, epsilon=epsilon,
        solver=method, tol=cfg.getfloat("solver", "tol"), max_iter=max_iter,
        class_kind=class_kind, out_dir=out_dir,
    )
