"""Geometric admissibility checks, Carleman weights and cut-off profiles.

Supported domains are intervals (a, b) and axis-aligned rectangles
(a1, b1) x (a2, b2).  All functions here are pure; they can be evaluated
concurrently on immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadDelta, PsiNonPositive, TimeTooShort, X0InsideDomain

FACES_1D = ("left", "right")
FACES_2D = ("x1min", "x1max", "x2min", "x2max")


def smoothstep(u):
    """Quintic C^2 ramp: 0 for u <= 0, 1 for u >= 1."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    return u ** 3 * (10.0 - 15.0 * u + 6.0 * u ** 2)


def _as_axes(domain):
    dom = tuple(domain)
    if len(dom) == 2 and np.isscalar(dom[0]):
        dom = (dom,)
    axes = tuple((float(a), float(b)) for a, b in dom)
    for a, b in axes:
        if not b > a:
            raise ValueError(f"degenerate axis ({a}, {b})")
    if len(axes) not in (1, 2):
        raise ValueError("only intervals and rectangles are supported")
    return axes


@dataclass(frozen=True, eq=False)
class GeometryConfig:
    """Domain, observation point x0, horizon T and cut-off margin delta."""

    domain: tuple
    x0: tuple
    T: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "domain", _as_axes(self.domain))
        x0 = (self.x0,) if np.isscalar(self.x0) else tuple(self.x0)
        object.__setattr__(self, "x0", tuple(float(v) for v in x0))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "delta", float(self.delta))
        if len(self.x0) != len(self.domain):
            raise ValueError("x0 dimension does not match the domain")

    @property
    def dim(self):
        return len(self.domain)

    @property
    def lengths(self):
        return tuple(b - a for a, b in self.domain)

    @property
    def volume(self):
        return math.prod(self.lengths)

    def x0_in_closure(self):
        return all(a <= c <= b for (a, b), c in zip(self.domain, self.x0))

    def dist2_range(self):
        """(min, max) of |x - x0|^2 over the closed domain."""
        lo = hi = 0.0
        for (a, b), c in zip(self.domain, self.x0):
            d_lo = 0.0 if a <= c <= b else min(abs(a - c), abs(b - c))
            d_hi = max(abs(a - c), abs(b - c))
            lo += d_lo ** 2
            hi += d_hi ** 2
        return lo, hi

    @property
    def faces(self):
        return FACES_1D if self.dim == 1 else FACES_2D


def _face_normal_value(cfg, face):
    """(x - x0).nu on a face; constant per face for boxes."""
    if cfg.dim == 1:
        a, b = cfg.domain[0]
        return (b - cfg.x0[0]) if face == "right" else (cfg.x0[0] - a)
    axis = 0 if face.startswith("x1") else 1
    a, b = cfg.domain[axis]
    return (b - cfg.x0[axis]) if face.endswith("max") else (cfg.x0[axis] - a)


def face_axis(face):
    """Axis a face is orthogonal to (1D faces sit on axis 0)."""
    if face in FACES_1D:
        return 0
    return 0 if face.startswith("x1") else 1


def face_sign(face):
    """Outward normal sign along the face axis."""
    return 1 if face in ("right", "x1max", "x2max") else -1


@dataclass(frozen=True, eq=False)
class GammaStrip:
    """Ramp segment of Gamma0 on a non-Gamma1 face, anchored at a corner."""

    face: str
    corner: str  # "lo" or "hi" end of the tangential axis
    length: float


@dataclass(frozen=True, eq=False)
class BoundaryPartition:
    """Control-support bookkeeping: Gamma1 and a fattened Gamma0."""

    gamma1: tuple
    gamma0_faces: tuple
    strips: tuple
    margin: float
    T_min: float
    geometry: GeometryConfig

    def psi_value(self, face, tau=0.0):
        """Boundary cut-off Psi at tangential coordinate tau on a face."""
        if face in self.gamma1:
            return 1.0
        val = 0.0
        ax = 1 - face_axis(face) if self.geometry.dim == 2 else 0
        a, b = self.geometry.domain[ax]
        for strip in self.strips:
            if strip.face != face:
                continue
            if strip.corner == "lo":
                u = (tau - a) / strip.length
            else:
                u = (b - tau) / strip.length
            val = max(val, float(1.0 - smoothstep(u)))
        return val


def validate_geometry(cfg: GeometryConfig, strip_fraction=0.25) -> BoundaryPartition:
    """Check the multiplier and time conditions, return the partition.

    In 2D, Gamma0 extends beyond the Gamma1 faces by ramp strips so that
    dist(Gamma1, boundary \\ Gamma0) stays positive.
    """
    if cfg.delta <= 0 or 2 * cfg.delta >= cfg.T:
        raise BadDelta(f"need 0 < delta and 2*delta < T, got delta={cfg.delta}, T={cfg.T}")
    if cfg.x0_in_closure():
        raise X0InsideDomain(f"x0={cfg.x0} lies in the closure of {cfg.domain}")
    _, hi2 = cfg.dist2_range()
    T_min = 2.0 * math.sqrt(hi2)
    if not cfg.T - 2 * cfg.delta > T_min:
        raise TimeTooShort(
            f"T - 2*delta = {cfg.T - 2 * cfg.delta:.6g} must exceed T_min = {T_min:.6g}"
        )
    gamma1 = tuple(f for f in cfg.faces if _face_normal_value(cfg, f) > 0)

    if cfg.dim == 1:
        # Gamma1 is a single endpoint; the opposite endpoint is uncontrolled.
        return BoundaryPartition(
            gamma1=gamma1,
            gamma0_faces=gamma1,
            strips=(),
            margin=cfg.lengths[0],
            T_min=T_min,
            geometry=cfg,
        )

    strips = []
    adjacency = {
        "x1min": ("x2min", "x2max"),
        "x1max": ("x2min", "x2max"),
        "x2min": ("x1min", "x1max"),
        "x2max": ("x1min", "x1max"),
    }
    for f in cfg.faces:
        if f in gamma1:
            continue
        tang_axis = 1 - face_axis(f)
        flen = cfg.lengths[tang_axis]
        length = min(strip_fraction * flen, flen / 3.0)
        lo_neighbor, hi_neighbor = adjacency[f]
        if lo_neighbor in gamma1:
            strips.append(GammaStrip(face=f, corner="lo", length=length))
        if hi_neighbor in gamma1:
            strips.append(GammaStrip(face=f, corner="hi", length=length))
    margin = min((s.length for s in strips), default=min(cfg.lengths))
    return BoundaryPartition(
        gamma1=gamma1,
        gamma0_faces=gamma1,
        strips=tuple(strips),
        margin=margin,
        T_min=T_min,
        geometry=cfg,
    )


@dataclass(frozen=True, eq=False)
class WeightParams:
    """Carleman weight parameters tied to a validated geometry.

    M0 is auto-selected when None so that psi >= 1 on the closure.
    """

    geometry: GeometryConfig
    beta: float = 0.9
    lam: float = 0.1
    s: float = 4.0
    s0: float = 1.0
    M0: float | None = None
    normalization: str = "normalized"

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0,1), got {self.beta}")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.s < self.s0:
            raise ValueError(f"s={self.s} below s0={self.s0}")
        if self.normalization not in ("normalized", "raw"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def m0(self):
        if self.M0 is not None:
            return float(self.M0)
        lo2, _ = self.geometry.dist2_range()
        return max(0.0, self.beta * (self.geometry.T / 2.0) ** 2 - lo2) + 1.0

    @property
    def psi_min(self):
        lo2, _ = self.geometry.dist2_range()
        return lo2 - self.beta * (self.geometry.T / 2.0) ** 2 + self.m0

    @property
    def psi_max(self):
        _, hi2 = self.geometry.dist2_range()
        return hi2 + self.m0

    @property
    def phi_min(self):
        return math.exp(self.lam * self.psi_min)

    @property
    def c(self):
        """sup of phi over the closed cylinder (attained at t = T/2)."""
        return math.exp(self.lam * self.psi_max)

    def psi(self, d2, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(d2, dtype=float) - self.beta * (t - self.geometry.T / 2.0) ** 2 + self.m0

    def phi(self, d2, t):
        return np.exp(self.lam * self.psi(d2, t))

    def rho(self, d2, t, s=None, normalized=None):
        s = self.s if s is None else float(s)
        if normalized is None:
            normalized = self.normalization == "normalized"
        shift = self.phi_min if normalized else 0.0
        return np.exp(-s * (self.phi(d2, t) - shift))

    def with_s(self, s):
        return WeightParams(
            geometry=self.geometry, beta=self.beta, lam=self.lam, s=float(s),
            s0=self.s0, M0=self.M0, normalization=self.normalization,
        )


def default_carleman_s(params_or_s0, data_norm):
    """Default s = max(s0, 1 + ln(1 + |(u0,u1)|_H))."""
    s0 = params_or_s0 if np.isscalar(params_or_s0) else params_or_s0.s0
    return max(float(s0), 1.0 + math.log1p(float(data_norm)))


def eval_weights(params: WeightParams, d2, t):
    """Pointwise psi, phi and both weight variants; raises if psi <= 0."""
    psi = params.psi(d2, t)
    if np.any(psi <= 0):
        raise PsiNonPositive(f"min psi = {float(np.min(psi)):.6g} <= 0; increase M0")
    phi = np.exp(params.lam * psi)
    rho_raw = np.exp(-params.s * phi)
    rho_norm = np.exp(-params.s * (phi - params.phi_min))
    return {"psi": psi, "phi": phi, "rho_raw": rho_raw, "rho_norm": rho_norm}


def weight_derivative_report(params: WeightParams, coords, t):
    """Empirical constants in |d rho^-1| <= C s^k rho^-1 via exact derivatives.

    coords: list of coordinate meshes (one per axis) broadcastable with t.
    The four bounds probed are d_t (k=1), d_tt (k=2), grad (k=1), lap (k=2).
    """
    cfg = params.geometry
    t = np.asarray(t, dtype=float)
    d2 = sum((np.asarray(x) - c) ** 2 for x, c in zip(coords, cfg.x0))
    lam, beta, s = params.lam, params.beta, params.s
    phi = params.phi(d2, t)
    psi_t = -2.0 * beta * (t - cfg.T / 2.0)
    phi_t = lam * psi_t * phi
    phi_tt = lam * phi * (-2.0 * beta + lam * psi_t ** 2)
    grad_psi2 = 4.0 * d2
    grad_phi = lam * phi * np.sqrt(grad_psi2)
    lap_phi = lam * phi * (2.0 * cfg.dim + lam * grad_psi2)
    # rho^-1 = exp(s phi): ratios below are |d rho^-1| / (s^k rho^-1)
    r_dt, r_dtt, r_grad, r_lap = np.broadcast_arrays(
        np.abs(phi_t),
        np.abs(phi_tt / s + phi_t ** 2),
        np.abs(grad_phi),
        np.abs(lap_phi / s + grad_phi ** 2),
    )
    return {
        "dt": float(np.max(r_dt)),
        "dtt": float(np.max(r_dtt)),
        "grad": float(np.max(r_grad)),
        "lap": float(np.max(r_lap)),
        "s": s,
    }


@dataclass(frozen=True, eq=False)
class CutoffProfile:
    """Time cut-off eta (C^2, plateau at 1) and boundary cut-off Psi."""

    partition: BoundaryPartition

    @property
    def T(self):
        return self.partition.geometry.T

    @property
    def delta(self):
        return self.partition.geometry.delta

    @property
    def plateau(self):
        return (2 * self.delta, self.T - 2 * self.delta)

    def eta(self, t):
        d, T = self.delta, self.T
        up = smoothstep((np.asarray(t, dtype=float) - d) / d)
        down = smoothstep((T - d - np.asarray(t, dtype=float)) / d)
        return up * down

    def psi_cut(self, face, tau=0.0):
        return self.partition.psi_value(face, tau)


def eval_cutoffs(ts, boundary_nodes, profile: CutoffProfile):
    """eta on the time nodes and Psi on the given boundary nodes."""
    eta = profile.eta(ts)
    psi = np.array([profile.psi_cut(b.face, b.tau) for b in boundary_nodes])
    return eta, psi
