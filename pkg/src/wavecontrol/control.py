"""Carleman-weighted variational solver for the linear control problem.

The dual state w minimizes the weighted quadratic form; the control and
trajectory are its algebraic images v = s eta^2 Psi rho^-2 dnu(w) and
y = rho^-2 L_h w.  Assembly is sparse and deterministic; solves use a
direct factorization (dense Cholesky below 5000 unknowns, sparse LU
above) with an optional diagonally preconditioned CG path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import OverflowRisk, RatioUndefined, SingularKKT, SolverStagnation
from .geometry import CutoffProfile, WeightParams
from .grid import ScalarField, SpaceTimeGrid, apply_wave_operator, normal_trace
from .norms import (
    gradient_l2q,
    linf_h1,
    linf_hminus1,
    sigma_norm,
    slice_norm_hr,
    slice_norm_l2,
    time_derivative,
    weighted_norm,
)

DENSE_LIMIT = 5000
SOLVE_RTOL = 1e-10


def spatial_laplacian(grid: SpaceTimeGrid):
    """Sparse Dirichlet Lap_h on interior nodes (negative definite)."""
    mats = []
    for n, h in zip(grid.nx, grid.h):
        mats.append(sp.diags(
            [np.full(n - 1, 1.0 / h ** 2), np.full(n, -2.0 / h ** 2), np.full(n - 1, 1.0 / h ** 2)],
            offsets=[-1, 0, 1], format="csr",
        ))
    if grid.dim == 1:
        return mats[0]
    return sp.kron(mats[0], sp.identity(grid.nx[1]), format="csr") + \
        sp.kron(sp.identity(grid.nx[0]), mats[1], format="csr")


def wave_operator_matrix(grid: SpaceTimeGrid):
    """Sparse L_h on the zero-trace subspace; maps (nt+1) levels of
    interior values to levels 1..nt-1."""
    nt, n_int = grid.nt, grid.n_interior
    dt2 = grid.dt ** 2
    rows = np.repeat(np.arange(nt - 1), 3)
    cols = (np.arange(nt - 1)[:, None] + np.array([0, 1, 2])[None, :]).ravel()
    vals = np.tile(np.array([1.0, -2.0, 1.0]) / dt2, nt - 1)
    t2 = sp.csr_matrix((vals, (rows, cols)), shape=(nt - 1, nt + 1))
    sel = sp.csr_matrix(
        (np.ones(nt - 1), (np.arange(nt - 1), np.arange(1, nt))), shape=(nt - 1, nt + 1)
    )
    lap = spatial_laplacian(grid)
    return sp.kron(t2, sp.identity(n_int), format="csr") - sp.kron(sel, lap, format="csr")


def trace_matrix(grid: SpaceTimeGrid):
    """Sparse outward normal trace on the zero-trace subspace,
    (nt+1)*n_bnd rows from (nt+1)*n_int unknowns."""
    from .geometry import face_axis, face_sign

    n_int = grid.n_interior
    int_shape = grid.interior_shape
    rows, cols, vals = [], [], []
    for k, b in enumerate(grid.boundary):
        ax = face_axis(b.face)
        sgn = face_sign(b.face)
        h = grid.h[ax]
        i1 = list(b.index)
        i2 = list(b.index)
        i1[ax] -= sgn
        i2[ax] -= 2 * sgn
        for idx, coef in ((i1, -4.0 / (2 * h)), (i2, 1.0 / (2 * h))):
            flat = np.ravel_multi_index(tuple(j - 1 for j in idx), int_shape)
            rows.append(k)
            cols.append(flat)
            vals.append(coef)
    tr = sp.csr_matrix((vals, (rows, cols)), shape=(grid.n_boundary, n_int))
    return sp.kron(sp.identity(grid.nt + 1), tr, format="csr")


@dataclass(eq=False)
class WeightedSystem:
    """Assembled Carleman-weighted operator plus everything needed to
    evaluate controls, trajectories and estimate ratios."""

    grid: SpaceTimeGrid
    params: WeightParams
    cutoffs: CutoffProfile
    s: float
    epsilon: float
    eps_eff: float
    normalized: bool
    D: sp.csr_matrix
    Btr: sp.csr_matrix
    A: sp.csr_matrix
    rho2inv: np.ndarray       # (nt+1, n_int) solver weight rho^-2 on interior nodes
    rho2inv_sigma: np.ndarray  # (nt+1, n_bnd)
    eta: np.ndarray           # (nt+1,)
    psi_b: np.ndarray         # (n_bnd,)
    wq: float                 # interior quadrature weight h^d * dt
    w_sigma: np.ndarray       # (n_bnd,) boundary measures
    wt: np.ndarray            # (nt+1,) trapezoid time weights
    mass_diag: np.ndarray     # (n_w,) space-time L2 mass diagonal
    _factor: object = field(default=None, repr=False)
    solver: str = "direct"

    @property
    def n_unknowns(self):
        return self.A.shape[0]

    @property
    def partition(self):
        return self.cutoffs.partition

    def solve(self, rhs):
        """Solve A x = rhs deterministically; caches the factorization."""
        if self.solver == "cg":
            return self._solve_cg(rhs)
        if self._factor is None:
            if self.n_unknowns < DENSE_LIMIT:
                cf = sla.cho_factor(self.A.toarray(), lower=True)
                self._factor = ("cho", cf)
            else:
                self._factor = ("splu", spla.splu(self.A.tocsc()))
        kind, fac = self._factor
        x = sla.cho_solve(fac, rhs) if kind == "cho" else fac.solve(rhs)
        # iterative refinement keeps the relative residual tight even when
        # the weight range makes the conditioning severe
        nrm = np.linalg.norm(rhs)
        for _ in range(10):
            r = rhs - self.A @ x
            if nrm == 0.0 or np.linalg.norm(r) <= 0.1 * SOLVE_RTOL * nrm:
                break
            x = x + (sla.cho_solve(fac, r) if kind == "cho" else fac.solve(r))
        return x

    def _solve_cg(self, rhs):
        n = self.n_unknowns
        cap = int(50 * math.sqrt(n)) + 10
        dinv = 1.0 / self.A.diagonal()
        pre = spla.LinearOperator((n, n), matvec=lambda u: dinv * u)
        x, info = spla.cg(self.A, rhs, rtol=SOLVE_RTOL, maxiter=cap, M=pre)
        if info != 0:
            res = float(np.linalg.norm(rhs - self.A @ x) / max(np.linalg.norm(rhs), 1e-300))
            raise SolverStagnation(f"CG hit the cap of {cap} iterations", residual=res)
        return x

    def rho_raw(self, d2, t):
        return self.params.rho(d2, t, s=self.s, normalized=False)


@dataclass(eq=False)
class StateControlPair:
    """Controlled trajectory, boundary control, dual state, diagnostics."""

    y: ScalarField
    v: np.ndarray             # (nt+1, n_boundary)
    w: ScalarField
    final_residual: float
    norm_report: list | None = None


def assemble_system(grid, params, cutoffs, s=None, epsilon=None, solver="direct",
                    rho_scale=1.0):
    """Build the symmetric operator of the weighted variational problem.

    epsilon defaults to h*dt; the regularization actually added is
    epsilon * geomean(rho^-2) * mass so that the state-control pair stays
    exactly invariant under constant rescaling of rho.  rho_scale applies
    such a constant factor kappa to rho (for the invariance check).
    """
    s = float(params.s if s is None else s)
    normalized = params.normalization == "normalized"
    nt = grid.nt
    d2_int = grid.d2_mesh(full=False).ravel()
    tcol = grid.ts[:, None]
    phi_int = params.phi(d2_int[None, :], tcol)
    shift = params.phi_min if normalized else 0.0
    log_kappa2 = 2.0 * math.log(float(rho_scale))
    log_r2inv = 2.0 * s * (phi_int - shift) - log_kappa2
    if float(np.max(log_r2inv)) > 690.0:  # exp(690) ~ 1e299
        raise OverflowRisk(
            f"max rho^-2 = exp({float(np.max(log_r2inv)):.1f}) exceeds 1e300; "
            "reduce s or lambda, or use normalization"
        )
    rho2inv = np.exp(log_r2inv)

    d2_b = np.array([sum((p - c) ** 2 for p, c in zip(b.point, grid.geometry.x0))
                     for b in grid.boundary])
    rho2inv_sigma = np.exp(2.0 * s * (params.phi(d2_b[None, :], tcol) - shift)
                           - log_kappa2)
    eta = cutoffs.eta(grid.ts)
    psi_b = np.array([cutoffs.psi_cut(b.face, b.tau) for b in grid.boundary])
    w_sigma = np.array([b.measure for b in grid.boundary])
    wt = grid.time_weights()
    wq = float(np.prod(grid.h)) * grid.dt

    D = wave_operator_matrix(grid)
    Btr = trace_matrix(grid)
    r_diag = (rho2inv[1:nt] * wq).ravel()
    s_diag = (s * eta[:, None] ** 2 * psi_b[None, :] * rho2inv_sigma
              * w_sigma[None, :] * wt[:, None]).ravel()
    A = (D.T @ sp.diags(r_diag) @ D + Btr.T @ sp.diags(s_diag) @ Btr).tocsr()

    epsilon = grid.dt * min(grid.h) if epsilon is None else float(epsilon)
    eps_eff = epsilon * float(np.exp(np.mean(log_r2inv)))
    mass_diag = (wt[:, None] * np.full(grid.n_interior, np.prod(grid.h))[None, :]).ravel()
    if eps_eff > 0:
        A = (A + eps_eff * sp.diags(mass_diag)).tocsr()
    A.sum_duplicates()
    return WeightedSystem(
        grid=grid, params=params, cutoffs=cutoffs, s=s, epsilon=epsilon,
        eps_eff=eps_eff, normalized=normalized, D=D, Btr=Btr, A=A,
        rho2inv=rho2inv, rho2inv_sigma=rho2inv_sigma, eta=eta, psi_b=psi_b,
        wq=wq, w_sigma=w_sigma, wt=wt, mass_diag=mass_diag, solver=solver,
    )


def _interior_slice(grid, u):
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = np.broadcast_to(u, grid.interior_shape)
    if u.shape == grid.full_shape:
        return grid.interior_view(u)
    return u.reshape(grid.interior_shape)


def load_vector(system: WeightedSystem, u0=None, u1=None, B=None):
    """Discrete right-hand side ell(z) = <u1, z(0)> - <u0, z_t(0)> + <B, z>."""
    grid = system.grid
    nt, n_int = grid.nt, grid.n_interior
    hd = float(np.prod(grid.h))
    ell = np.zeros((nt + 1, n_int))
    if u1 is not None:
        ell[0] += hd * _interior_slice(grid, u1).ravel()
    if u0 is not None:
        # z_t(0) by the second-order forward difference (-3z0+4z1-z2)/(2dt)
        u0i = hd * _interior_slice(grid, u0).ravel() / (2.0 * grid.dt)
        ell[0] += 3.0 * u0i
        ell[1] += -4.0 * u0i
        ell[2] += 1.0 * u0i
    if B is not None:
        Bv = B.values if isinstance(B, ScalarField) else np.asarray(B, dtype=float)
        Bi = Bv.reshape(nt + 1, *grid.full_shape)
        idx = (slice(None),) + tuple(slice(1, -1) for _ in grid.nx)
        ell += system.wt[:, None] * hd * Bi[idx].reshape(nt + 1, n_int)
    return ell.ravel()


def solve_dual(system: WeightedSystem, u0=None, u1=None, B=None) -> ScalarField:
    """Riesz representative of the data functional in the weighted space."""
    ell = load_vector(system, u0, u1, B)
    wvec = system.solve(ell)
    nrm = np.linalg.norm(ell)
    if nrm > 0:
        res = float(np.linalg.norm(ell - system.A @ wvec) / nrm)
        if res > SOLVE_RTOL:
            raise SolverStagnation(f"relative residual {res:.3e} above {SOLVE_RTOL}",
                                   residual=res)
    grid = system.grid
    full = np.zeros((grid.nt + 1,) + grid.full_shape)
    idx = (slice(None),) + tuple(slice(1, -1) for _ in grid.nx)
    full[idx] = wvec.reshape(grid.nt + 1, *grid.interior_shape)
    return ScalarField(grid, full)


def extract_pair(w: ScalarField, system: WeightedSystem) -> StateControlPair:
    """State-control pair y = rho^-2 L_h w, v = s eta^2 Psi rho^-2 dnu(w)."""
    grid = system.grid
    nt = grid.nt
    n_int = grid.n_interior
    wvec = w.interior().reshape(nt + 1, n_int).ravel()

    y_full = np.zeros((nt + 1,) + grid.full_shape)
    idx_in = tuple(slice(1, -1) for _ in grid.nx)
    mid = (system.D @ wvec).reshape(nt - 1, *grid.interior_shape)
    y_full[(slice(1, nt),) + idx_in] = system.rho2inv[1:nt].reshape(
        nt - 1, *grid.interior_shape) * mid

    # end levels by quadratic extrapolation from the variationally
    # controlled mid levels; the centered stencil does not reach them and
    # a one-sided D_tt of w there is an uncontrolled artifact
    y_full[0] = 3.0 * y_full[1] - 3.0 * y_full[2] + y_full[3]
    y_full[nt] = 3.0 * y_full[nt - 1] - 3.0 * y_full[nt - 2] + y_full[nt - 3]

    tr = (system.Btr @ wvec).reshape(nt + 1, grid.n_boundary)
    v = system.s * system.eta[:, None] ** 2 * system.psi_b[None, :] \
        * system.rho2inv_sigma * tr
    for k, b in enumerate(grid.boundary):
        y_full[(slice(None),) + b.index] = v[:, k]

    yT = y_full[nt]
    ytT = (3 * y_full[nt] - 4 * y_full[nt - 1] + y_full[nt - 2]) / (2 * grid.dt)
    final_residual = slice_norm_l2(grid, yT) + slice_norm_hr(grid, ytT, 1.0)
    return StateControlPair(
        y=ScalarField(grid, y_full), v=v, w=w, final_residual=float(final_residual)
    )


def solve_control(system, u0=None, u1=None, B=None) -> StateControlPair:
    return extract_pair(solve_dual(system, u0, u1, B), system)


# ---------------------------------------------------------------------------
# Carleman inequality probe


def make_random_dual_field(grid: SpaceTimeGrid, rng, n_space_modes=4, n_time_modes=4):
    """Random smooth field vanishing on the lateral boundary."""
    xi = [(grid.xs[a] - grid.geometry.domain[a][0]) / grid.geometry.lengths[a]
          for a in range(grid.dim)]
    T = grid.geometry.T
    vals = np.zeros((grid.nt + 1,) + grid.full_shape)
    for j in range(1, n_space_modes + 1):
        if grid.dim == 1:
            mode = np.sin(j * np.pi * xi[0])
        else:
            j2 = (j - 1) % n_space_modes + 1
            mode = np.outer(np.sin(j * np.pi * xi[0]), np.sin(j2 * np.pi * xi[1]))
        for k in range(n_time_modes):
            amp = rng.standard_normal() / (j + k + 1.0)
            tk = np.cos(k * np.pi * grid.ts / T) if k % 2 == 0 else np.sin(
                (k + 1) * np.pi * grid.ts / (2 * T))
            vals += amp * tk.reshape(-1, *([1] * grid.dim)) * mode[None, ...]
    return ScalarField(grid, vals)


def carleman_ratio(w_sample: ScalarField, system: WeightedSystem, s=None):
    """LHS/RHS of the weighted observability inequality on the grid.

    Uses the raw weight rho = exp(-s phi).  Convention: ratio 0 when both
    sides vanish; RatioUndefined when only the right-hand side does.
    """
    grid = system.grid
    s = system.s if s is None else float(s)
    params = system.params
    d2 = grid.d2_mesh()
    tcol = grid.ts.reshape(-1, *([1] * grid.dim))
    r2inv = np.exp(2.0 * s * params.phi(d2[None, ...], tcol))

    wv = w_sample.values
    wt_d = time_derivative(grid, wv)
    wsp = grid.space_weights()
    wtime = grid.time_weights()

    grad_sq = np.zeros_like(wv)
    for n in range(grid.nt + 1):
        for g in np.gradient(wv[n], *grid.h, axis=tuple(range(grid.dim)), edge_order=2) \
                if grid.dim > 1 else [np.gradient(wv[n], grid.h[0], edge_order=2)]:
            grad_sq[n] += g ** 2

    def qint(f):
        return float(np.tensordot(wtime, np.sum(f * wsp, axis=tuple(range(1, f.ndim))), axes=1))

    lhs = s * qint(r2inv * (wt_d ** 2 + grad_sq)) + s ** 3 * qint(r2inv * wv ** 2)
    lhs += s * float(np.sum(wsp * r2inv[0] * (wt_d[0] ** 2 + grad_sq[0])))
    lhs += s ** 3 * float(np.sum(wsp * r2inv[0] * wv[0] ** 2))

    lw = apply_wave_operator(w_sample)
    d2_int = grid.d2_mesh(full=False)
    r2inv_int = np.exp(2.0 * s * params.phi(
        d2_int[None, ...], grid.ts[1:-1].reshape(-1, *([1] * grid.dim))))
    rhs = float(np.sum(r2inv_int * lw ** 2)) * system.wq

    tr = normal_trace(w_sample)
    d2_b = np.array([sum((p - c) ** 2 for p, c in zip(b.point, grid.geometry.x0))
                     for b in grid.boundary])
    r2inv_b = np.exp(2.0 * s * params.phi(d2_b[None, :], grid.ts[:, None]))
    rhs += s * float(np.einsum(
        "t,b,tb->", wtime, system.w_sigma,
        system.eta[:, None] ** 2 * system.psi_b[None, :] * r2inv_b * tr ** 2))

    if rhs == 0.0:
        if lhs == 0.0:
            return 0.0
        raise RatioUndefined(f"carleman probe: RHS = 0 with LHS = {lhs:.3e}")
    return lhs / rhs


# ---------------------------------------------------------------------------
# Dense KKT oracle for the quadratic control functional


def dense_kkt_minimizer(system: WeightedSystem, u0=None, u1=None, B=None):
    """Solve the equality-constrained QP for (z, u) directly.

    Minimizes the weighted quadratic cost of (z, u) (plus the matching
    regularization slack) subject to the discrete transposition identity
    that encodes dynamics, initial data and zero final conditions.
    Returns (z, u, aux) with aux carrying the dense blocks for inspection.
    """
    grid = system.grid
    nt = grid.nt
    n_int = grid.n_interior
    n_w = (nt + 1) * n_int

    rho2_mid = 1.0 / system.rho2inv[1:nt].ravel()
    hz = system.wq * rho2_mid

    s_support = (system.eta[:, None] ** 2 * system.psi_b[None, :]).ravel() > 0
    w_sig_full = (system.w_sigma[None, :] * system.wt[:, None]).ravel()
    bweight = (system.s * system.eta[:, None] ** 2 * system.psi_b[None, :]
               * system.rho2inv_sigma).ravel()
    hu = np.where(s_support, w_sig_full / np.where(s_support, bweight, 1.0), 0.0)
    hu = hu[s_support]

    he = 1.0 / (system.eps_eff * system.mass_diag)

    Cz = (system.D.T @ sp.diags(system.wq * np.ones(system.D.shape[0]))).toarray()
    Cu_full = (system.Btr.T @ sp.diags(w_sig_full)).toarray()
    Cu = Cu_full[:, s_support]

    n_z, n_u = Cz.shape[1], Cu.shape[1]
    n_var = n_z + n_u + n_w
    K = np.zeros((n_var + n_w, n_var + n_w))
    K[np.arange(n_z), np.arange(n_z)] = hz
    K[np.arange(n_z, n_z + n_u), np.arange(n_z, n_z + n_u)] = hu
    K[np.arange(n_z + n_u, n_var), np.arange(n_z + n_u, n_var)] = he
    C = np.hstack([Cz, Cu, np.eye(n_w)])
    K[n_var:, :n_var] = C
    K[:n_var, n_var:] = C.T

    ell = load_vector(system, u0, u1, B)
    rhs = np.concatenate([np.zeros(n_var), ell])
    try:
        lu, piv = sla.lu_factor(K)
    except (ValueError, sla.LinAlgError) as exc:  # pragma: no cover
        raise SingularKKT(str(exc)) from exc
    if np.any(np.abs(np.diag(lu)) < 1e-300):
        raise SingularKKT("zero pivot in the dense KKT factorization")
    sol = sla.lu_solve((lu, piv), rhs)
    z = sol[:n_z].reshape(nt - 1, *grid.interior_shape)
    u = np.zeros((nt + 1) * grid.n_boundary)
    u[s_support] = sol[n_z:n_z + n_u]
    u = u.reshape(nt + 1, grid.n_boundary)
    aux = {"H_diag": np.concatenate([hz, hu, he]), "C": C, "ell": ell,
           "objective": float(sol[:n_var] ** 2 @ np.concatenate([hz, hu, he])),
           "support": s_support}
    return z, u, aux


def optimality_check(pair: StateControlPair, system: WeightedSystem,
                     u0=None, u1=None, B=None):
    """Relative L^2 discrepancy between the variational pair and the
    dense KKT minimizer; intended for grids below ~1500 unknowns."""
    grid = system.grid
    z, u, aux = dense_kkt_minimizer(system, u0, u1, B)
    y_mid = pair.y.interior()[1:grid.nt]
    num = system.wq * np.sum((z - y_mid) ** 2)
    den = system.wq * np.sum(y_mid ** 2)
    wm = system.w_sigma[None, :] * system.wt[:, None]
    num += np.sum(wm * (u - pair.v) ** 2)
    den += np.sum(wm * pair.v ** 2)
    disc = 0.0 if den == 0.0 and num == 0.0 else math.sqrt(num / max(den, 1e-300))
    return {"discrepancy": float(disc), "kkt": (z, u), "aux": aux}


# ---------------------------------------------------------------------------
# Estimate ratio report


def _rho_raw_fields(system):
    grid = system.grid
    params = system.params
    d2 = grid.d2_mesh()
    tcol = grid.ts.reshape(-1, *([1] * grid.dim))
    rho_q = params.rho(d2[None, ...], tcol, s=system.s, normalized=False)
    d2_b = np.array([sum((p - c) ** 2 for p, c in zip(b.point, grid.geometry.x0))
                     for b in grid.boundary])
    rho_b = params.rho(d2_b[None, :], grid.ts[:, None], s=system.s, normalized=False)
    rho_0 = params.rho(d2, 0.0, s=system.s, normalized=False)
    return rho_q, rho_b, rho_0


def estimate_report(pair: StateControlPair, system: WeightedSystem,
                    u0=None, u1=None, B=None, p=1.5):
    """LHS/RHS diagnostics for the two weighted a-priori estimates.

    Ratios are measurements, not assertions; raw rho is used throughout.
    The fractional row uses r = 3/2 - p.
    """
    grid = system.grid
    s = system.s
    r = 1.5 - float(p)
    rho_q, rho_b, rho_0 = _rho_raw_fields(system)
    rho_y = rho_q * pair.y.values
    rho_y_t = time_derivative(grid, rho_y)

    u0a = np.zeros(grid.full_shape) if u0 is None else np.asarray(u0, dtype=float)
    u1a = np.zeros(grid.full_shape) if u1 is None else np.asarray(u1, dtype=float)
    Bv = np.zeros((grid.nt + 1,) + grid.full_shape) if B is None else (
        B.values if isinstance(B, ScalarField) else np.asarray(B, dtype=float))

    # control norm with the 0/0-free formula rho v / (eta Psi^1/2)
    wvec = pair.w.interior().reshape(grid.nt + 1, grid.n_interior).ravel()
    tr = (system.Btr @ wvec).reshape(grid.nt + 1, grid.n_boundary)
    v_weighted = (s * system.eta[:, None] * np.sqrt(system.psi_b)[None, :]
                  * rho_b * system.rho2inv_sigma * tr)

    lhs1 = (
        weighted_norm(grid, rho_y, "L2Q")
        + s ** -0.5 * sigma_norm(grid, v_weighted)
        + s ** -2 * weighted_norm(grid, rho_y, "LinfL2")
        + s ** -2 * linf_hminus1(grid, rho_y_t)
    )
    rhs1 = (
        s ** (r - 1.5) * weighted_norm(grid, rho_q * Bv, "L2HminusR", r=r)
        + s ** -0.5 * slice_norm_l2(grid, rho_0 * u0a)
        + s ** -0.5 * slice_norm_hr(grid, rho_0 * u1a, 1.0)
    )
    rows = [{
        "name": "weighted_state_control", "lhs": float(lhs1), "rhs": float(rhs1),
        "ratio": float(lhs1 / rhs1) if rhs1 > 0 else 0.0, "s": s, "r": r,
    }]

    rho_v = rho_b * pair.v
    rho_v_t = time_derivative(grid, rho_v)
    denom = system.eta[:, None] * np.sqrt(system.psi_b)[None, :]
    mask = denom > 1e-12 * max(float(np.max(denom)), 1e-300)
    rv_t_weighted = np.where(mask, rho_v_t / np.where(mask, denom, 1.0), 0.0)
    wm = np.array([b.measure for b in grid.boundary])
    linf_h12 = max(
        float(np.sqrt(np.sum(wm * rho_v[n] ** 2))) for n in range(grid.nt + 1)
    )
    max_l2_rho_y_t = max(slice_norm_l2(grid, rho_y_t[n]) for n in range(grid.nt + 1))
    lhs2 = (
        weighted_norm(grid, rho_y_t, "L2Q")
        + s ** -0.5 * sigma_norm(grid, rv_t_weighted)
        + s ** -1 * gradient_l2q(grid, rho_y)
        + s ** -1.5 * linf_h12
        + s ** -2 * (linf_h1(grid, rho_y) + max_l2_rho_y_t)
    )
    grad_u0 = np.zeros(grid.full_shape)
    g = np.gradient(u0a, *grid.h, edge_order=2) if grid.dim > 1 else [
        np.gradient(u0a, grid.h[0], edge_order=2)]
    grad_u0 = np.sqrt(sum(gi ** 2 for gi in g))
    rhs2 = s ** -0.5 * (
        weighted_norm(grid, rho_q * Bv, "L2Q")
        + slice_norm_l2(grid, rho_0 * u1a)
        + s * slice_norm_l2(grid, rho_0 * u0a)
        + slice_norm_l2(grid, rho_0 * grad_u0)
    )
    rows.append({
        "name": "regular_state_control", "lhs": float(lhs2), "rhs": float(rhs2),
        "ratio": float(lhs2 / rhs2) if rhs2 > 0 else 0.0, "s": s, "r": 0.0,
    })
    return rows
