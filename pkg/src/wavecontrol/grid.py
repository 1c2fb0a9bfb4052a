"""Uniform space-time grids, grid functions, stencils and CSV round-trip."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridTooCoarse, NonSquareSliceMismatch
from .geometry import GeometryConfig, face_axis, face_sign

CSV_FMT = "%.17g"


@dataclass(frozen=True, eq=False)
class BoundaryNode:
    face: str
    index: tuple      # index into the full spatial array
    point: tuple
    tau: float        # tangential coordinate (0.0 in 1D)
    measure: float    # boundary quadrature weight of the node


@dataclass(frozen=True, eq=False)
class SpaceTimeGrid:
    """Tensor grid over Q = Omega x (0,T) with boundary bookkeeping."""

    geometry: GeometryConfig
    nx: tuple          # interior node counts per axis
    nt: int
    xs: tuple          # full coordinate arrays per axis, len nx_i + 2
    ts: np.ndarray
    h: tuple
    dt: float
    boundary: tuple    # BoundaryNode list (corners excluded in 2D)

    @property
    def dim(self):
        return self.geometry.dim

    @property
    def full_shape(self):
        return tuple(n + 2 for n in self.nx)

    @property
    def interior_shape(self):
        return self.nx

    @property
    def n_interior(self):
        return int(np.prod(self.nx))

    @property
    def n_nodes(self):
        return (self.nt + 1) * int(np.prod(self.full_shape))

    @property
    def cfl(self):
        return self.dt * np.sqrt(self.dim) / min(self.h)

    @property
    def n_boundary(self):
        return len(self.boundary)

    def coord_meshes(self, full=True):
        xs = self.xs if full else tuple(x[1:-1] for x in self.xs)
        return np.meshgrid(*xs, indexing="ij")

    def d2_mesh(self, full=True):
        """|x - x0|^2 on the spatial mesh."""
        meshes = self.coord_meshes(full=full)
        return sum((m - c) ** 2 for m, c in zip(meshes, self.geometry.x0))

    def space_weights(self, full=True):
        """Tensor trapezoid quadrature weights on the spatial mesh."""
        ws = []
        for n, h in zip(self.nx, self.h):
            w = np.full(n + 2, h)
            w[0] = w[-1] = h / 2.0
            ws.append(w if full else w[1:-1])
        out = ws[0]
        for w in ws[1:]:
            out = np.multiply.outer(out, w)
        return out

    def time_weights(self):
        wt = np.full(self.nt + 1, self.dt)
        wt[0] = wt[-1] = self.dt / 2.0
        return wt

    def interior_view(self, slice_values):
        idx = tuple(slice(1, -1) for _ in self.nx)
        return slice_values[idx]

    def boundary_values(self, slice_values):
        """Extract a slice field's values on the boundary node list."""
        return np.array([slice_values[b.index] for b in self.boundary])


def build_grid(cfg: GeometryConfig, nx, nt) -> SpaceTimeGrid:
    nx = (int(nx),) if np.isscalar(nx) else tuple(int(n) for n in nx)
    nt = int(nt)
    if len(nx) != cfg.dim:
        raise ValueError("nx dimension does not match the domain")
    if any(n < 4 for n in nx) or nt < 4:
        raise GridTooCoarse(f"nx={nx}, nt={nt}: all counts must be >= 4")
    xs = tuple(np.linspace(a, b, n + 2) for (a, b), n in zip(cfg.domain, nx))
    h = tuple((b - a) / (n + 1) for (a, b), n in zip(cfg.domain, nx))
    ts = np.linspace(0.0, cfg.T, nt + 1)
    dt = cfg.T / nt
    boundary = _boundary_nodes(cfg, nx, xs, h)
    return SpaceTimeGrid(
        geometry=cfg, nx=nx, nt=nt, xs=xs, ts=ts, h=h, dt=dt, boundary=tuple(boundary)
    )


def _boundary_nodes(cfg, nx, xs, h):
    nodes = []
    if cfg.dim == 1:
        a, b = cfg.domain[0]
        nodes.append(BoundaryNode("left", (0,), (a,), 0.0, 1.0))
        nodes.append(BoundaryNode("right", (nx[0] + 1,), (b,), 0.0, 1.0))
        return nodes
    for face in cfg.faces:
        ax = face_axis(face)
        tang = 1 - ax
        fixed = 0 if face.endswith("min") else nx[ax] + 1
        for j in range(1, nx[tang] + 1):
            idx = [0, 0]
            idx[ax] = fixed
            idx[tang] = j
            pt = (xs[0][idx[0]], xs[1][idx[1]])
            nodes.append(
                BoundaryNode(face, tuple(idx), pt, float(xs[tang][j]), h[tang])
            )
    return nodes


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Grid function on all space-time nodes, shape (nt+1, *full_shape)."""

    grid: SpaceTimeGrid
    values: np.ndarray

    def __post_init__(self):
        expected = (self.grid.nt + 1,) + self.grid.full_shape
        if self.values.shape != expected:
            raise NonSquareSliceMismatch(
                f"field shape {self.values.shape} != grid shape {expected}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.nt + 1,) + grid.full_shape))

    @classmethod
    def from_function(cls, grid, fn):
        """fn(t, *coord_meshes) -> values; evaluated slice by slice."""
        meshes = grid.coord_meshes()
        vals = np.stack([np.broadcast_to(fn(t, *meshes), grid.full_shape).astype(float)
                         for t in grid.ts])
        return cls(grid, vals)

    def interior(self):
        idx = (slice(None),) + tuple(slice(1, -1) for _ in self.grid.nx)
        return self.values[idx]


def apply_wave_operator(field: ScalarField, grid=None):
    """Centered L_h = D_tt - Lap_h on interior nodes, time levels 1..nt-1."""
    grid = grid or field.grid
    v = field.values
    dt2 = grid.dt ** 2
    wtt = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dt2
    mid = v[1:-1]
    core = tuple(slice(1, -1) for _ in grid.nx)
    lap = np.zeros_like(mid[(slice(None),) + core])
    for ax, h in enumerate(grid.h):
        lo = [slice(1, -1)] * grid.dim
        hi = [slice(1, -1)] * grid.dim
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        lap += (mid[(slice(None),) + tuple(hi)] - 2.0 * mid[(slice(None),) + core]
                + mid[(slice(None),) + tuple(lo)]) / h ** 2
    return wtt[(slice(None),) + core] - lap


def laplacian_slice(grid: SpaceTimeGrid, slice_values):
    """Centered Lap_h of one time slice on interior nodes."""
    core = tuple(slice(1, -1) for _ in grid.nx)
    out = np.zeros(grid.interior_shape)
    for ax, h in enumerate(grid.h):
        lo = [slice(1, -1)] * grid.dim
        hi = [slice(1, -1)] * grid.dim
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        out += (slice_values[tuple(hi)] - 2.0 * slice_values[core]
                + slice_values[tuple(lo)]) / h ** 2
    return out


def normal_trace(field: ScalarField, grid=None):
    """Second-order one-sided outward normal derivative on Sigma.

    Returns an array of shape (nt+1, n_boundary).
    """
    grid = grid or field.grid
    v = field.values
    out = np.empty((grid.nt + 1, grid.n_boundary))
    for k, b in enumerate(grid.boundary):
        ax = face_axis(b.face)
        sgn = face_sign(b.face)
        h = grid.h[ax]
        i0 = list(b.index)
        i1 = list(b.index)
        i2 = list(b.index)
        i1[ax] -= sgn
        i2[ax] -= 2 * sgn
        out[:, k] = (
            3.0 * v[(slice(None),) + tuple(i0)]
            - 4.0 * v[(slice(None),) + tuple(i1)]
            + v[(slice(None),) + tuple(i2)]
        ) / (2.0 * h)
    return out


def save_field(field: ScalarField, path):
    """Flat CSV with 17 significant digits; bit-exact decimal round-trip."""
    grid = field.grid
    dims = " ".join(f"nx{i + 1}={n}" for i, n in enumerate(grid.nx))
    header = f"# dim={grid.dim} {dims} nt={grid.nt}"
    cols = (["ix", "it"] if grid.dim == 1 else ["ix1", "ix2", "it"]) + ["value"]
    with open(path, "w") as fh:
        fh.write(header + "\n")
        fh.write(",".join(cols) + "\n")
        it_idx = np.arange(grid.nt + 1)
        for sp_idx in np.ndindex(grid.full_shape):
            for it in it_idx:
                val = CSV_FMT % field.values[(it,) + sp_idx]
                fh.write(",".join(str(i) for i in sp_idx) + f",{it},{val}\n")


def load_field(path, grid: SpaceTimeGrid) -> ScalarField:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# dim="):
            raise ValueError(f"{path}: missing grid header")
        fh.readline()  # column names
        vals = np.zeros((grid.nt + 1,) + grid.full_shape)
        for line in fh:
            parts = line.strip().split(",")
            *idx, it, val = parts
            vals[(int(it),) + tuple(int(i) for i in idx)] = float(val)
    return ScalarField(grid, vals)
