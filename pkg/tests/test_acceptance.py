"""Acceptance gate: nine end-to-end checks of the control pipeline.

Each test prints a single pass/fail line (run pytest with -s to see
them all) and asserts the same condition.
"""

import numpy as np
import pytest

from wavecontrol.control import (
    assemble_system,
    carleman_ratio,
    make_random_dual_field,
    optimality_check,
    solve_control,
)
from wavecontrol.fixedpoint import (
    ClassSpec,
    class_saturating_field,
    make_nonlinearity,
    run_fixed_point,
    source_bound_check,
)
from wavecontrol.forward import ForwardProblem, solve_forward, verify_control
from wavecontrol.geometry import (
    CutoffProfile,
    GeometryConfig,
    WeightParams,
    validate_geometry,
)
from wavecontrol.grid import build_grid

GEO = GeometryConfig(domain=(0.0, 1.0), x0=(-0.2,), T=2.6, delta=0.08)
PART = validate_geometry(GEO)


def make_system(nx, s=4.0, lam=0.1, nt=None, rho_scale=1.0):
    grid = build_grid(GEO, nx, round(nx * GEO.T) if nt is None else nt)
    return assemble_system(grid, WeightParams(geometry=GEO, s=s, lam=lam),
                           CutoffProfile(PART), rho_scale=rho_scale)


def report(num, desc, ok, detail):
    print(f"[criterion {num}] {desc}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} ({desc}) failed: {detail}"


@pytest.fixture(scope="module")
def semilinear_run():
    # shared by the contraction and class-stability criteria
    system = make_system(32, s=4.0)
    u0 = np.sin(np.pi * system.grid.xs[0])
    f = make_nonlinearity("log_superlinear", beta_star=0.05, p=1.0)
    pair, trace = run_fixed_point(system, u0, 0.0, f, tol=1e-8, max_iter=25,
                                  spec=ClassSpec(kind="C_s", s=4.0))
    return system, u0, pair, trace


def test_criterion_1_linear_controllability():
    residuals = {}
    for nx in (64, 128):
        system = make_system(nx, s=4.0)
        u0 = np.sin(np.pi * system.grid.xs[0])
        pair = solve_control(system, u0=u0)
        residuals[nx] = verify_control(pair, system.grid, u0, 0.0)["residual"]
    ok = residuals[64] <= 5e-2 and residuals[128] <= 0.75 * residuals[64]
    report(1, "linear controllability residual and refinement", ok,
           f"res64={residuals[64]:.4g} res128={residuals[128]:.4g}")


def test_criterion_2_optimality_oracle():
    system = make_system(12, s=4.0, nt=12)
    u0 = np.sin(np.pi * system.grid.xs[0])
    pair = solve_control(system, u0=u0)
    disc = optimality_check(pair, system, u0=u0)["discrepancy"]
    report(2, "dense KKT optimality discrepancy <= 1e-6", disc <= 1e-6,
           f"discrepancy={disc:.3g}")


def test_criterion_3_scaling_invariance():
    nx = 16
    u0 = np.sin(np.pi * make_system(nx).grid.xs[0])
    base = solve_control(make_system(nx, s=4.0), u0=u0)
    worst = 0.0
    for kappa in (1e-3, 1e3):
        scaled = solve_control(make_system(nx, s=4.0, rho_scale=kappa), u0=u0)
        rel_y = np.linalg.norm(scaled.y.values - base.y.values) / \
            np.linalg.norm(base.y.values)
        rel_v = np.linalg.norm(scaled.v - base.v) / np.linalg.norm(base.v)
        worst = max(worst, rel_y, rel_v)
    report(3, "rho rescaling leaves (y, v) invariant", worst <= 1e-10,
           f"worst_rel_change={worst:.3g}")


def test_criterion_4_carleman_probe():
    maxes = {}
    for s in (2.0, 4.0, 8.0):
        system = make_system(16, s=s)
        rng = np.random.default_rng(42)
        ratios = [carleman_ratio(make_random_dual_field(system.grid, rng), system)
                  for _ in range(100)]
        assert all(np.isfinite(r) for r in ratios)
        maxes[s] = max(ratios)
    spread = max(maxes.values()) / min(maxes.values())
    report(4, "Carleman probe ratio spread < 10 across s", spread < 10.0,
           f"maxes={[f'{m:.3g}' for m in maxes.values()]} spread={spread:.3g}")


def test_criterion_5_banach_contraction(semilinear_run):
    system, u0, pair, trace = semilinear_run
    linear_pair = solve_control(system, u0=u0)
    lin_res = verify_control(linear_pair, system.grid, u0, 0.0)["residual"]
    f = make_nonlinearity("log_superlinear", beta_star=0.05, p=1.0)
    semi_res = verify_control(pair, system.grid, u0, 0.0, f=f)["residual"]
    ok = (trace.converged and len(trace.d) <= 25
          and all(r <= 0.9 for r in trace.ratios)
          and semi_res <= 2.0 * lin_res)
    report(5, "Picard contraction and semilinear residual", ok,
           f"iters={len(trace.d)} max_ratio="
           f"{max(trace.ratios) if trace.ratios else 0:.3g} "
           f"semi={semi_res:.4g} lin={lin_res:.4g}")


def test_criterion_6_s_trend():
    f = make_nonlinearity("log_superlinear", beta_star=0.05, p=1.0)
    svals = (2.0, 4.0, 8.0)
    means = []
    for s in svals:
        system = make_system(16, s=s, lam=0.4)
        u0 = np.sin(np.pi * system.grid.xs[0])
        _, trace = run_fixed_point(system, u0, 0.0, f, tol=0.0, max_iter=4,
                                   forward_each=False)
        means.append(float(np.mean(trace.ratios[:2])))
    slope = float(np.polyfit(np.log(svals), np.log(means), 1)[0])
    ok = means[2] < means[0] and -1.5 <= slope <= -0.5
    report(6, "contraction ratio decays with s, exponent in [-1.5,-0.5]", ok,
           f"means={[f'{m:.3g}' for m in means]} slope={slope:.3g}")


def test_criterion_7_class_stability(semilinear_run):
    system, u0, pair, trace = semilinear_run
    ok_cs = not trace.class_escapes and all(
        min(m.values()) > 0 for m in trace.margins)
    # H1-data variant: p = 3/2 nonlinearity in the differentiated class
    system2 = make_system(32, s=4.0)
    x = system2.grid.xs[0]
    f32 = make_nonlinearity("log_superlinear", beta_star=0.05, p=1.5)
    _, trace2 = run_fixed_point(system2, np.sin(np.pi * x), x * (1.0 - x), f32,
                                tol=1e-8, max_iter=25, forward_each=False,
                                spec=ClassSpec(kind="C_tilde_s", s=4.0))
    ok_ct = trace2.converged and not trace2.class_escapes and all(
        min(m.values()) > 0 for m in trace2.margins)
    report(7, "all iterates stay in C(s) and C~(s) with positive margins",
           ok_cs and ok_ct,
           f"min_margin_Cs={min(min(m.values()) for m in trace.margins):.3g} "
           f"min_margin_Cts={min(min(m.values()) for m in trace2.margins):.3g}")


def test_criterion_8_forward_solver_quality():
    errs = []
    for nx in (19, 39, 79):
        grid = build_grid(GEO, nx, 4 * (nx + 1))
        u0 = np.sin(np.pi * grid.xs[0])
        res = solve_forward(ForwardProblem(grid=grid, u0=u0, u1=0.0,
                                           nt_forward=26 * (nx + 1) // 5))
        exact = np.sin(np.pi * grid.xs[0]) * np.cos(np.pi * GEO.T)
        errs.append(float(np.max(np.abs(res.yT - exact))))
    orders = [float(np.log2(errs[i] / errs[i + 1])) for i in range(2)]
    grid = build_grid(GEO, 64, 100)
    ntf = int(np.ceil(GEO.T / (0.5 * grid.h[0])))
    res = solve_forward(ForwardProblem(grid=grid, u0=np.sin(np.pi * grid.xs[0]),
                                       u1=0.0, nt_forward=ntf))
    E = res.energy_series()
    drift = float(np.max(np.abs(E - E[0])) / E[0])
    ok = all(1.7 <= o <= 2.3 for o in orders) and drift <= 1e-6
    report(8, "leapfrog order 2 +- 0.3 and energy drift <= 1e-6", ok,
           f"orders={[f'{o:.3g}' for o in orders]} drift={drift:.3g}")


def test_criterion_9_source_bound_diagnostics():
    worst_spread = 0.0
    for name in ("log_superlinear", "log_superlinear_neg"):
        for p in (0.5, 1.0, 1.5):
            f = make_nonlinearity(name, beta_star=0.05, p=p)
            ratios = []
            for s in (2.0, 4.0, 8.0):
                system = make_system(16, s=s)
                probe = class_saturating_field(system)
                out = source_bound_check(probe, f, system)
                assert np.isfinite(out["ratio"]) and out["ratio"] > 0
                ratios.append(out["ratio"])
            worst_spread = max(worst_spread, max(ratios) / min(ratios))
    report(9, "source bound lhs/rhs stable within factor 10 across s",
           worst_spread <= 10.0, f"worst_spread={worst_spread:.3g}")
