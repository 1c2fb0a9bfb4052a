import numpy as np
import pytest

from wavecontrol.errors import GridTooCoarse, NonSquareSliceMismatch
from wavecontrol.geometry import GeometryConfig
from wavecontrol.grid import (
    ScalarField,
    apply_wave_operator,
    build_grid,
    laplacian_slice,
    load_field,
    normal_trace,
    save_field,
)


def geo_1d(T=2.0):
    return GeometryConfig(domain=(0.0, 1.0), x0=(-0.2,), T=T, delta=0.08)


def geo_2d():
    return GeometryConfig(domain=((0.0, 1.0), (0.0, 1.0)), x0=(-0.2, -0.3),
                          T=4.0, delta=0.1)


class TestBuildGrid:
    def test_spacings(self):
        grid = build_grid(geo_1d(T=2.0), 4, 4)
        # h = |Omega|/(nx+1), dt = T/nt
        assert grid.h == (pytest.approx(0.2),)
        assert grid.dt == pytest.approx(0.5)

    def test_node_count_1d(self):
        grid = build_grid(geo_1d(), 7, 5)
        assert grid.n_nodes == (7 + 2) * (5 + 1)

    def test_too_coarse(self):
        with pytest.raises(GridTooCoarse):
            build_grid(geo_1d(), 3, 10)
        with pytest.raises(GridTooCoarse):
            build_grid(geo_1d(), 10, 3)

    def test_boundary_nodes_1d(self):
        grid = build_grid(geo_1d(), 6, 6)
        assert grid.n_boundary == 2
        assert {b.face for b in grid.boundary} == {"left", "right"}

    def test_boundary_nodes_2d_excludes_corners(self):
        grid = build_grid(geo_2d(), (5, 7), 10)
        # four faces minus the four duplicated corners
        assert grid.n_boundary == 2 * 5 + 2 * 7
        pts = [b.point for b in grid.boundary]
        assert len(set(pts)) == len(pts)

    def test_quadrature_weights(self):
        grid = build_grid(geo_2d(), (6, 4), 8)
        assert np.sum(grid.space_weights()) == pytest.approx(1.0)
        assert np.sum(grid.time_weights()) == pytest.approx(4.0)

    def test_cfl_recorded(self):
        grid = build_grid(geo_1d(T=2.0), 4, 4)
        assert grid.cfl == pytest.approx(0.5 / 0.2)


class TestScalarField:
    def test_shape_check(self):
        grid = build_grid(geo_1d(), 4, 4)
        with pytest.raises(NonSquareSliceMismatch):
            ScalarField(grid, np.zeros((5, 5)))

    def test_rejects_nan(self):
        grid = build_grid(geo_1d(), 4, 4)
        vals = np.zeros((5, 6))
        vals[0, 0] = np.nan
        with pytest.raises(ValueError):
            ScalarField(grid, vals)

    def test_from_function(self):
        grid = build_grid(geo_1d(), 4, 4)
        f = ScalarField.from_function(grid, lambda t, x: t + x)
        assert f.values[2, 3] == pytest.approx(grid.ts[2] + grid.xs[0][3])


class TestWaveOperator:
    def test_exact_on_t_squared(self):
        grid = build_grid(geo_1d(), 8, 10)
        w = ScalarField.from_function(grid, lambda t, x: t ** 2 + 0.0 * x)
        lw = apply_wave_operator(w)
        assert np.allclose(lw, 2.0, atol=1e-11)

    def test_exact_on_x_squared(self):
        grid = build_grid(geo_1d(), 8, 10)
        w = ScalarField.from_function(grid, lambda t, x: x ** 2 + 0.0 * t)
        assert np.allclose(apply_wave_operator(w), -2.0, atol=1e-11)

    def test_matches_loop_stencil_oracle(self):
        rng = np.random.default_rng(7)
        grid = build_grid(geo_1d(), 6, 7)
        w = ScalarField(grid, rng.standard_normal((8, 8)))
        lw = apply_wave_operator(w)
        v = w.values
        for n in range(1, 7):
            for i in range(1, 7):
                expected = (v[n + 1, i] - 2 * v[n, i] + v[n - 1, i]) / grid.dt ** 2 \
                    - (v[n, i + 1] - 2 * v[n, i] + v[n, i - 1]) / grid.h[0] ** 2
                assert lw[n - 1, i - 1] == pytest.approx(expected, rel=1e-13)

    def test_matches_loop_stencil_oracle_2d(self):
        rng = np.random.default_rng(8)
        grid = build_grid(geo_2d(), (4, 5), 5)
        w = ScalarField(grid, rng.standard_normal((6, 6, 7)))
        lw = apply_wave_operator(w)
        v = w.values
        h1, h2 = grid.h
        for n in range(1, 5):
            for i in range(1, 5):
                for j in range(1, 6):
                    wtt = (v[n + 1, i, j] - 2 * v[n, i, j] + v[n - 1, i, j]) / grid.dt ** 2
                    lap = (v[n, i + 1, j] - 2 * v[n, i, j] + v[n, i - 1, j]) / h1 ** 2 \
                        + (v[n, i, j + 1] - 2 * v[n, i, j] + v[n, i, j - 1]) / h2 ** 2
                    assert lw[n - 1, i - 1, j - 1] == pytest.approx(wtt - lap, rel=1e-12)

    def test_dalembert_mode_refinement_order(self):
        errs = []
        # dt != h on purpose: dt = h makes this mode superconvergent
        for nx in (8, 16, 32):
            grid = build_grid(geo_1d(T=2.0), nx, 3 * (nx + 1))
            w = ScalarField.from_function(
                grid, lambda t, x: np.sin(np.pi * x) * np.sin(np.pi * t))
            errs.append(float(np.max(np.abs(apply_wave_operator(w)))))
        order = np.log2(errs[0] / errs[1])
        assert 1.7 <= order <= 2.3

    def test_laplacian_slice_quadratic(self):
        grid = build_grid(geo_1d(), 8, 5)
        u = grid.xs[0] ** 2
        assert np.allclose(laplacian_slice(grid, u), 2.0, atol=1e-11)


class TestNormalTrace:
    def test_parabola_times_time_profile(self):
        grid = build_grid(geo_1d(), 32, 8)
        w = ScalarField.from_function(grid, lambda t, x: x * (1 - x) * (1 + t))
        tr = normal_trace(w)
        g = 1.0 + grid.ts
        # outward derivative of x(1-x) is -1 at both endpoints; quadratics exact
        for k, b in enumerate(grid.boundary):
            assert np.allclose(tr[:, k], -g, atol=1e-10)

    def test_zero_field(self):
        grid = build_grid(geo_1d(), 6, 5)
        assert np.all(normal_trace(ScalarField.zeros(grid)) == 0.0)

    def test_refinement_order_on_smooth_field(self):
        errs = []
        for nx in (8, 16, 32):
            grid = build_grid(geo_1d(), nx, 6)
            w = ScalarField.from_function(
                grid, lambda t, x: np.sin(np.pi * x) * (1 + 0 * t))
            tr = normal_trace(w)
            exact = np.array([np.pi * np.cos(0.0) * (-1), np.pi * np.cos(np.pi)])
            errs.append(float(np.max(np.abs(tr - exact[None, :]))))
        order = np.log2(errs[1] / errs[2])
        assert order >= 1.7

    def test_2d_trace_sign(self):
        grid = build_grid(geo_2d(), (6, 6), 5)
        w = ScalarField.from_function(
            grid, lambda t, x1, x2: np.sin(np.pi * x1) * np.sin(np.pi * x2) + 0 * t)
        tr = normal_trace(w)
        # field is positive inside, so the outward derivative is negative
        assert np.all(tr[0] < 0)


class TestCsvRoundTrip:
    def test_bit_exact(self, tmp_path):
        rng = np.random.default_rng(11)
        grid = build_grid(geo_1d(), 5, 6)
        f = ScalarField(grid, rng.standard_normal((7, 7)))
        path = tmp_path / "field.csv"
        save_field(f, path)
        g = load_field(path, grid)
        assert np.array_equal(f.values, g.values)

    def test_2d_round_trip(self, tmp_path):
        rng = np.random.default_rng(12)
        grid = build_grid(geo_2d(), (4, 5), 4)
        f = ScalarField(grid, rng.standard_normal((5, 6, 7)))
        path = tmp_path / "field.csv"
        save_field(f, path)
        assert np.array_equal(load_field(path, grid).values, f.values)

    def test_header_present(self, tmp_path):
        grid = build_grid(geo_1d(), 4, 4)
        path = tmp_path / "f.csv"
        save_field(ScalarField.zeros(grid), path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# dim=1 nx1=4 nt=4")
        assert lines[1] == "ix,it,value"
