"""Explicit leapfrog solver for the wave equation with Dirichlet control.

Deliberately a different discretization from the variational solve, so
that verify_control is a genuine cross-check.  The time step is chosen
independently of the control grid; boundary data are interpolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CFLViolation, NonFiniteState
from .grid import ScalarField, SpaceTimeGrid, laplacian_slice
from .norms import slice_norm_hr, slice_norm_l2

BLOWUP_THRESHOLD = 1e12
DEFAULT_CFL = 0.8
CFL_MAX = 0.95


def forward_time_steps(grid: SpaceTimeGrid, cfl=DEFAULT_CFL):
    """Smallest step count giving dt*sqrt(d)/h <= cfl."""
    return max(grid.nt, int(math.ceil(
        grid.geometry.T * math.sqrt(grid.dim) / (cfl * min(grid.h)))))


@dataclass(eq=False)
class ForwardProblem:
    grid: SpaceTimeGrid
    u0: np.ndarray                 # full spatial shape
    u1: np.ndarray
    B: object = None               # ScalarField | callable(t, *meshes) | None
    v: np.ndarray = None           # (nt+1, n_boundary) on the grid's time axis
    f: object = None               # pointwise nonlinearity or None
    nt_forward: int = None

    def __post_init__(self):
        self.u0 = np.broadcast_to(np.asarray(self.u0, dtype=float),
                                  self.grid.full_shape).copy()
        self.u1 = np.broadcast_to(np.asarray(self.u1, dtype=float),
                                  self.grid.full_shape).copy()
        if self.nt_forward is None:
            self.nt_forward = forward_time_steps(self.grid)
        dtf = self.grid.geometry.T / self.nt_forward
        if dtf * math.sqrt(self.grid.dim) / min(self.grid.h) > CFL_MAX:
            raise CFLViolation(
                f"dt*sqrt(d)/h = {dtf * math.sqrt(self.grid.dim) / min(self.grid.h):.3f} > {CFL_MAX}"
            )


@dataclass(eq=False)
class ForwardResult:
    grid: SpaceTimeGrid
    ts: np.ndarray
    trajectory: np.ndarray         # (nt_forward+1, *full_shape)
    yT: np.ndarray
    ytT: np.ndarray

    def energy_series(self):
        """Leapfrog invariant 0.5|dy/dt|^2 + 0.5<grad y^n, grad y^{n+1}>.

        This shifted-product form of the wave energy is conserved to
        round-off by the scheme at CFL < 1.
        """
        grid = self.grid
        dt = self.ts[1] - self.ts[0]
        hd = float(np.prod(grid.h))
        ys = self.trajectory
        energies = []
        for n in range(len(self.ts) - 1):
            kin = 0.5 * hd * np.sum(grid.interior_view((ys[n + 1] - ys[n]) ** 2)) / dt ** 2
            pot = -0.5 * hd * np.sum(laplacian_slice(grid, ys[n]) * grid.interior_view(ys[n + 1]))
            energies.append(kin + pot)
        return np.array(energies)


def _boundary_series(problem, ts_f):
    grid = problem.grid
    vf = np.zeros((len(ts_f), grid.n_boundary))
    if problem.v is not None:
        v = np.asarray(problem.v, dtype=float)
        for k in range(grid.n_boundary):
            vf[:, k] = np.interp(ts_f, grid.ts, v[:, k])
    return vf


def _source_at(problem, t, meshes):
    if problem.B is None:
        return 0.0
    if callable(problem.B):
        return np.broadcast_to(problem.B(t, *meshes), problem.grid.full_shape)
    Bv = problem.B.values if isinstance(problem.B, ScalarField) else np.asarray(problem.B)
    ts = problem.grid.ts
    j = min(max(int(np.searchsorted(ts, t) - 1), 0), len(ts) - 2)
    theta = (t - ts[j]) / (ts[j + 1] - ts[j])
    return (1.0 - theta) * Bv[j] + theta * Bv[j + 1]


def solve_forward(problem: ForwardProblem) -> ForwardResult:
    """Leapfrog time stepping with explicit source and nonlinearity."""
    grid = problem.grid
    ntf = problem.nt_forward
    dt = grid.geometry.T / ntf
    ts_f = np.linspace(0.0, grid.geometry.T, ntf + 1)
    meshes = grid.coord_meshes()
    vf = _boundary_series(problem, ts_f)
    f = problem.f if problem.f is not None else (lambda r: 0.0)

    def inject(slice_vals, n):
        for k, b in enumerate(grid.boundary):
            slice_vals[b.index] = vf[n, k]

    ys = np.zeros((ntf + 1,) + grid.full_shape)
    ys[0] = problem.u0
    inject(ys[0], 0)
    accel0 = np.zeros(grid.full_shape)
    src0 = _source_at(problem, 0.0, meshes)
    grid_in = tuple(slice(1, -1) for _ in grid.nx)
    accel0[grid_in] = laplacian_slice(grid, ys[0]) - \
        np.broadcast_to(np.asarray(f(ys[0]) + 0.0 * ys[0]), grid.full_shape)[grid_in] + \
        np.broadcast_to(np.asarray(src0 + 0.0 * ys[0]), grid.full_shape)[grid_in]
    ys[1] = problem.u0 + dt * problem.u1 + 0.5 * dt ** 2 * accel0
    inject(ys[1], 1)

    for n in range(1, ntf):
        src = _source_at(problem, ts_f[n], meshes)
        fn = np.broadcast_to(np.asarray(f(ys[n]) + 0.0 * ys[n]), grid.full_shape)
        srcn = np.broadcast_to(np.asarray(src + 0.0 * ys[n]), grid.full_shape)
        nxt = ys[n + 1]
        nxt[grid_in] = (
            2.0 * ys[n][grid_in] - ys[n - 1][grid_in]
            + dt ** 2 * (laplacian_slice(grid, ys[n]) - fn[grid_in] + srcn[grid_in])
        )
        inject(nxt, n + 1)
        mx = float(np.max(np.abs(nxt)))
        if not np.isfinite(mx) or mx > BLOWUP_THRESHOLD:
            raise NonFiniteState(f"blow-up at t = {ts_f[n + 1]:.4f}", level=n + 1)

    yT = ys[ntf].copy()
    ytT = (3.0 * ys[ntf] - 4.0 * ys[ntf - 1] + ys[ntf - 2]) / (2.0 * dt)
    return ForwardResult(grid=grid, ts=ts_f, trajectory=ys, yT=yT, ytT=ytT)


def data_norm(grid, u0, u1):
    """|(u0, u1)|_H = |u0|_{L2} + |u1|_{H^-1}."""
    u0 = np.broadcast_to(np.asarray(u0, dtype=float), grid.full_shape)
    u1 = np.broadcast_to(np.asarray(u1, dtype=float), grid.full_shape)
    return slice_norm_l2(grid, u0) + slice_norm_hr(grid, u1, 1.0)


def verify_control(pair, grid: SpaceTimeGrid, u0, u1, B=None, f=None,
                   nt_forward=None):
    """Forward-solve with the pair's control; relative final-state residual.

    Pass B for the linear problem, f for the final semilinear verdict.
    """
    problem = ForwardProblem(grid=grid, u0=u0, u1=u1, B=B, v=pair.v, f=f,
                             nt_forward=nt_forward)
    result = solve_forward(problem)
    absolute = slice_norm_l2(grid, result.yT) + slice_norm_hr(grid, result.ytT, 1.0)
    dn = data_norm(grid, u0, u1)
    residual = absolute / dn if dn > 0 else absolute
    return {
        "residual": float(residual),
        "absolute": float(absolute),
        "data_norm": float(dn),
        "result": result,
    }
