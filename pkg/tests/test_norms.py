import numpy as np
import pytest

from wavecontrol.errors import NonSquareSliceMismatch, UnknownNorm
from wavecontrol.geometry import GeometryConfig
from wavecontrol.grid import ScalarField, build_grid
from wavecontrol.norms import (
    dirichlet_eigs,
    lambda_min,
    linf_hminus1,
    sigma_norm,
    slice_norm_hr,
    slice_norm_l2,
    weighted_norm,
)


def grid_1d(nx=32, nt=10, T=2.0):
    geo = GeometryConfig(domain=(0.0, 1.0), x0=(-0.2,), T=T, delta=0.08)
    return build_grid(geo, nx, nt)


def grid_2d(nx=(8, 10), nt=6):
    geo = GeometryConfig(domain=((0.0, 1.0), (0.0, 1.0)), x0=(-0.2, -0.3),
                         T=4.0, delta=0.1)
    return build_grid(geo, nx, nt)


class TestDirichletEigs:
    def test_known_eigenvalues(self):
        grid = grid_1d(nx=16)
        vals, _ = dirichlet_eigs(grid)[0]
        h = grid.h[0]
        k = np.arange(1, 17)
        exact = 4.0 / h ** 2 * np.sin(k * np.pi * h / 2.0) ** 2
        assert np.allclose(np.sort(vals), np.sort(exact), rtol=1e-12)

    def test_h_orthonormal(self):
        grid = grid_1d(nx=12)
        _, vecs = dirichlet_eigs(grid)[0]
        gram = vecs.T @ vecs * grid.h[0]
        assert np.allclose(gram, np.eye(12), atol=1e-12)

    def test_lambda_min_2d_additive(self):
        grid = grid_2d()
        axes = dirichlet_eigs(grid)
        assert lambda_min(grid) == pytest.approx(axes[0][0][0] + axes[1][0][0])


class TestSliceNorms:
    def test_l2_of_sine(self):
        grid = grid_1d(nx=64)
        u = np.sin(np.pi * grid.xs[0])
        assert slice_norm_l2(grid, u) == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-3)

    def test_hminus1_of_sine(self):
        grid = grid_1d(nx=64)
        u = np.sin(np.pi * grid.xs[0])
        # discrete eigenfunction: H^-1 norm = lambda_1^{-1/2} L2 norm
        h = grid.h[0]
        lam1 = 4.0 / h ** 2 * np.sin(np.pi * h / 2.0) ** 2
        assert slice_norm_hr(grid, u, 1.0) == pytest.approx(
            slice_norm_l2(grid, u[1:-1].reshape(grid.interior_shape)) / np.sqrt(lam1),
            rel=1e-10)

    def test_r_zero_is_l2_interior(self):
        rng = np.random.default_rng(3)
        grid = grid_1d(nx=20)
        u = rng.standard_normal(20)
        assert slice_norm_hr(grid, u, 0.0) == pytest.approx(
            np.sqrt(grid.h[0] * np.sum(u ** 2)), rel=1e-12)

    def test_fractional_matches_dense_oracle(self):
        rng = np.random.default_rng(4)
        grid = grid_1d(nx=24)
        u = rng.standard_normal(24)
        h = grid.h[0]
        # dense oracle: assemble -Lap_h, full eigendecomposition, apply lam^-r
        A = (np.diag(np.full(24, 2.0)) - np.diag(np.ones(23), 1)
             - np.diag(np.ones(23), -1)) / h ** 2
        lam, V = np.linalg.eigh(A)
        c = V.T @ u * h / np.sqrt(h)
        expected = np.sqrt(np.sum(lam ** -0.25 * c ** 2))
        assert slice_norm_hr(grid, u, 0.25) == pytest.approx(expected, rel=1e-10)

    def test_fractional_2d_matches_dense_oracle(self):
        rng = np.random.default_rng(5)
        grid = grid_2d(nx=(6, 7))
        u = rng.standard_normal((6, 7))
        h1, h2 = grid.h
        def lap1d(n, h):
            return (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1)
                    - np.diag(np.ones(n - 1), -1)) / h ** 2
        A = np.kron(lap1d(6, h1), np.eye(7)) + np.kron(np.eye(6), lap1d(7, h2))
        lam, V = np.linalg.eigh(A)
        c = V.T @ u.ravel() * np.sqrt(h1 * h2)
        expected = np.sqrt(np.sum(lam ** -1.0 * c ** 2))
        assert slice_norm_hr(grid, u, 1.0) == pytest.approx(expected, rel=1e-10)

    def test_poincare_duality(self):
        rng = np.random.default_rng(6)
        grid = grid_1d(nx=30)
        for _ in range(5):
            u = rng.standard_normal(30)
            lhs = slice_norm_hr(grid, u, 1.0)
            rhs = lambda_min(grid) ** -0.5 * slice_norm_hr(grid, u, 0.0)
            assert lhs <= rhs * (1 + 1e-12)


class TestWeightedNorm:
    def test_constant_on_q(self):
        grid = grid_1d(nx=16, nt=10, T=2.0)
        f = np.ones((11,) + grid.full_shape)
        assert weighted_norm(grid, f, "L2Q") == pytest.approx(np.sqrt(2.0), rel=1e-12)

    def test_linf_l2(self):
        grid = grid_1d(nx=16, nt=5)
        f = ScalarField.from_function(grid, lambda t, x: (1.0 + t) * np.sin(np.pi * x))
        expected = (1.0 + grid.ts[-1]) * slice_norm_l2(grid, np.sin(np.pi * grid.xs[0]))
        assert weighted_norm(grid, f, "LinfL2") == pytest.approx(expected, rel=1e-12)

    def test_sigma_norm_constant(self):
        grid = grid_1d(nx=8, nt=10, T=2.0)
        bv = np.ones((11, 2))
        # two endpoints with unit measure integrated over (0, T)
        assert sigma_norm(grid, bv) == pytest.approx(2.0, rel=1e-12)

    def test_l2hminusr_requires_r(self):
        grid = grid_1d(nx=8, nt=5)
        f = np.zeros((6,) + grid.full_shape)
        with pytest.raises(UnknownNorm):
            weighted_norm(grid, f, "L2HminusR")

    def test_unknown_kind(self):
        grid = grid_1d(nx=8, nt=5)
        with pytest.raises(UnknownNorm):
            weighted_norm(grid, np.zeros((6,) + grid.full_shape), "L3Q")

    def test_shape_mismatch(self):
        grid = grid_1d(nx=8, nt=5)
        with pytest.raises(NonSquareSliceMismatch):
            weighted_norm(grid, np.zeros((4, 4)), "L2Q")

    def test_linf_hminus1_matches_max(self):
        grid = grid_1d(nx=12, nt=6)
        f = ScalarField.from_function(grid, lambda t, x: (1 + t) * np.sin(np.pi * x))
        vals = [slice_norm_hr(grid, f.values[n], 1.0) for n in range(7)]
        assert linf_hminus1(grid, f.values) == pytest.approx(max(vals))

    def test_h1slice_of_linear(self):
        grid = grid_1d(nx=40)
        u = grid.xs[0].copy()
        # |x|_{L2}^2 = 1/3, |1|_{L2}^2 = 1 on (0,1)
        assert weighted_norm(grid, u, "H1slice") == pytest.approx(
            np.sqrt(1.0 / 3.0 + 1.0), rel=1e-3)
