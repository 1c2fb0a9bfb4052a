"""Weighted space-time norms, including spectral fractional H^{-r} norms.

Fractional norms are realized through the eigen-decomposition of the
discrete Dirichlet Laplacian; the decomposition is cached per grid.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NonSquareSliceMismatch, UnknownNorm
from .grid import ScalarField, SpaceTimeGrid

_EIG_CACHE = {}

NORM_KINDS = ("L2Q", "LinfL2", "L2Sigma", "Hminus1slice", "L2HminusR", "H1slice")


def dirichlet_eigs(grid: SpaceTimeGrid):
    """Per-axis (eigenvalues, h-orthonormal eigenvectors) of -Lap_h."""
    axes = []
    for n, h in zip(grid.nx, grid.h):
        key = (n, h)
        hit = _EIG_CACHE.get(key)
        if hit is None:
            vals, vecs = eigh_tridiagonal(
                np.full(n, 2.0 / h ** 2), np.full(n - 1, -1.0 / h ** 2)
            )
            hit = (vals, vecs / np.sqrt(h))
            _EIG_CACHE[key] = hit
        axes.append(hit)
    return axes


def lambda_min(grid: SpaceTimeGrid):
    return sum(ax[0][0] for ax in dirichlet_eigs(grid))


def _slice_interior(grid, u):
    if u.shape == grid.full_shape:
        return grid.interior_view(u)
    if u.shape == grid.interior_shape:
        return u
    raise NonSquareSliceMismatch(
        f"slice shape {u.shape} matches neither {grid.full_shape} nor {grid.interior_shape}"
    )


def _spectral_coeffs(grid, u_int):
    axes = dirichlet_eigs(grid)
    hprod = float(np.prod(grid.h))
    if grid.dim == 1:
        c = axes[0][1].T @ u_int * hprod
        lam = axes[0][0]
    else:
        c = axes[0][1].T @ u_int @ axes[1][1] * hprod
        lam = axes[0][0][:, None] + axes[1][0][None, :]
    return c, lam


def slice_norm_hr(grid: SpaceTimeGrid, u, r):
    """|u|_{H^{-r}} of a spatial slice via lambda_k^{-r} spectral weights."""
    u_int = _slice_interior(grid, np.asarray(u, dtype=float))
    c, lam = _spectral_coeffs(grid, u_int)
    return float(np.sqrt(np.sum(lam ** (-r) * c ** 2)))


def slice_norm_l2(grid: SpaceTimeGrid, u):
    u = np.asarray(u, dtype=float)
    if u.shape == grid.interior_shape:
        return float(np.sqrt(np.prod(grid.h) * np.sum(u ** 2)))
    if u.shape != grid.full_shape:
        raise NonSquareSliceMismatch(f"bad slice shape {u.shape}")
    return float(np.sqrt(np.sum(grid.space_weights() * u ** 2)))


def slice_gradient(grid: SpaceTimeGrid, u):
    """FD gradient of a full spatial slice (centered inside, one-sided at ends)."""
    u = np.asarray(u, dtype=float)
    grads = []
    for ax, h in enumerate(grid.h):
        grads.append(np.gradient(u, h, axis=ax, edge_order=2))
    return grads


def time_derivative(grid: SpaceTimeGrid, values):
    """FD time derivative of (nt+1, ...) data, second-order at the ends."""
    return np.gradient(values, grid.dt, axis=0, edge_order=2)


def sigma_norm(grid: SpaceTimeGrid, boundary_values):
    """L^2(Sigma) norm of (nt+1, n_boundary) boundary data."""
    bv = np.asarray(boundary_values, dtype=float)
    if bv.shape != (grid.nt + 1, grid.n_boundary):
        raise NonSquareSliceMismatch(f"bad Sigma data shape {bv.shape}")
    wm = np.array([b.measure for b in grid.boundary])
    wt = grid.time_weights()
    return float(np.sqrt(np.einsum("t,b,tb->", wt, wm, bv ** 2)))


def weighted_norm(grid: SpaceTimeGrid, values, kind, r=None):
    """Trapezoidal space-time quadrature norms used by the estimates.

    kind L2Q/LinfL2/L2HminusR expect space-time data of shape
    (nt+1, *full_shape); Hminus1slice/H1slice expect one spatial slice;
    L2Sigma expects (nt+1, n_boundary) boundary data.
    """
    if isinstance(values, ScalarField):
        values = values.values
    values = np.asarray(values, dtype=float)
    if kind == "L2Sigma":
        return sigma_norm(grid, values)
    if kind == "Hminus1slice":
        return slice_norm_hr(grid, values, 1.0)
    if kind == "H1slice":
        grads = slice_gradient(grid, values)
        wsp = grid.space_weights()
        sq = np.sum(wsp * values ** 2) + sum(np.sum(wsp * g ** 2) for g in grads)
        return float(np.sqrt(sq))
    st_shape = (grid.nt + 1,) + grid.full_shape
    if values.shape != st_shape:
        raise NonSquareSliceMismatch(f"expected {st_shape}, got {values.shape}")
    if kind == "L2Q":
        wt = grid.time_weights()
        wsp = grid.space_weights()
        return float(np.sqrt(np.tensordot(wt, np.sum(values ** 2 * wsp, axis=tuple(range(1, values.ndim))), axes=1)))
    if kind == "LinfL2":
        return max(slice_norm_l2(grid, values[n]) for n in range(grid.nt + 1))
    if kind == "L2HminusR":
        if r is None:
            raise UnknownNorm("L2HminusR requires the exponent r")
        wt = grid.time_weights()
        sq = sum(w * slice_norm_hr(grid, values[n], r) ** 2 for n, w in enumerate(wt))
        return float(np.sqrt(sq))
    raise UnknownNorm(f"unknown norm kind {kind!r}; choose from {NORM_KINDS}")


def linf_hminus1(grid: SpaceTimeGrid, values):
    """max over time of the slice H^{-1} norm."""
    if isinstance(values, ScalarField):
        values = values.values
    return max(slice_norm_hr(grid, values[n], 1.0) for n in range(grid.nt + 1))


def linf_h1(grid: SpaceTimeGrid, values):
    if isinstance(values, ScalarField):
        values = values.values
    return max(weighted_norm(grid, values[n], "H1slice") for n in range(grid.nt + 1))


def gradient_l2q(grid: SpaceTimeGrid, values):
    """L^2(Q) norm of the spatial gradient of a space-time field."""
    if isinstance(values, ScalarField):
        values = values.values
    wt = grid.time_weights()
    wsp = grid.space_weights()
    total = 0.0
    for n, w in enumerate(wt):
        grads = slice_gradient(grid, values[n])
        total += w * sum(np.sum(wsp * g ** 2) for g in grads)
    return float(np.sqrt(total))
