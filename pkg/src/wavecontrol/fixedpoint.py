"""Nonlinearity registry, class membership checks, and the Picard/Banach
fixed-point iteration driving the semilinear control construction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .control import StateControlPair, WeightedSystem, extract_pair, solve_dual
from .errors import GrowthViolated
from .forward import verify_control
from .grid import ScalarField
from .norms import gradient_l2q, time_derivative, weighted_norm


def ln_plus_p(r, p):
    """(max(ln|r|, 0))^p with the convention ln_plus(0) = 0."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        ln = np.where(np.abs(r) > 0, np.log(np.abs(np.where(r == 0, 1.0, r))), 0.0)
    return np.maximum(ln, 0.0) ** p


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Pointwise nonlinearity with declared growth certificates.

    growth holds (alpha1, alpha2, beta_star) for the value bound
    |f(r)| <= alpha1 + |r| (alpha2 + beta_star ln_+^p r); growth_prime
    holds (alpha, beta_star) for |f'(r)| <= alpha + beta_star ln_+^p r.
    """

    name: str
    f: object
    fprime: object = None
    p: float = 0.0
    growth: tuple = (0.0, 0.0, 0.0)
    growth_prime: tuple = None

    def __call__(self, r):
        return self.f(np.asarray(r, dtype=float))


def _log_superlinear(beta_star, p, sign=1.0, name=None):
    """f(r) = sign * beta_star * r * ln(1+|r|)^p with certified constants.

    Uses ln(1+x) <= ln 2 + ln_+ x and (a+b)^p <= 2^p (a^p + b^p).
    """
    k = 2.0 ** p
    alpha2 = beta_star * k * math.log(2.0) ** p
    beta_decl = beta_star * k
    alpha = beta_star * (k * math.log(2.0) ** p + 2.0 * p * (1.0 + k))
    beta_decl_prime = beta_star * k * (1.0 + p)

    def f(r):
        return sign * beta_star * r * np.log1p(np.abs(r)) ** p

    def fprime(r):
        # d/dr [r ln(1+|r|)^p] = ln(1+|r|)^p + p |r| ln(1+|r|)^{p-1} / (1+|r|)
        a = np.abs(np.asarray(r, dtype=float))
        ln1p = np.log1p(a)
        safe = np.where(ln1p > 0, ln1p, 1.0)
        term = np.where(ln1p > 0, p * a * safe ** (p - 1.0) / (1.0 + a), 0.0)
        return sign * beta_star * (ln1p ** p + term)

    return Nonlinearity(
        name=name or f"log_superlinear_p{p}", f=f, fprime=fprime, p=p,
        growth=(0.0, alpha2, beta_decl),
        growth_prime=(alpha, beta_decl_prime),
    )


def make_nonlinearity(name, beta_star=0.05, p=1.0, a=1.0):
    """Built-in nonlinearities with certified growth parameters."""
    if name == "zero":
        return Nonlinearity(name="zero", f=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                            fprime=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                            p=0.0, growth=(0.0, 0.0, 1e-12), growth_prime=(0.0, 1e-12))
    if name == "linear":
        return Nonlinearity(name="linear", f=lambda r: a * np.asarray(r, dtype=float),
                            fprime=lambda r: a * np.ones_like(np.asarray(r, dtype=float)),
                            p=0.0, growth=(0.0, abs(a), 1e-12),
                            growth_prime=(abs(a), 1e-12))
    if name == "sin":
        return Nonlinearity(name="sin", f=lambda r: a * np.sin(np.asarray(r, dtype=float)),
                            fprime=lambda r: a * np.cos(np.asarray(r, dtype=float)),
                            p=0.0, growth=(abs(a), 1e-12, 1e-12),
                            growth_prime=(abs(a), 1e-12))
    if name == "log_superlinear":
        return _log_superlinear(beta_star, p, 1.0, "log_superlinear")
    if name == "log_superlinear_neg":
        return _log_superlinear(beta_star, p, -1.0, "log_superlinear_neg")
    raise KeyError(f"unknown nonlinearity {name!r}")


def verify_growth(nl: Nonlinearity, r_max=1e8, samples=2001):
    """Sample the declared growth certificates on a log-spaced grid.

    Returns the worst slack (bound - |f|, nonnegative when the
    certificate holds); raises GrowthViolated naming the violating r.
    """
    mag = np.concatenate([
        [0.0], np.linspace(1e-12, 1.0, samples // 4),
        np.logspace(0.0, math.log10(r_max), samples),
    ])
    rs = np.concatenate([mag, -mag])
    alpha1, alpha2, beta_star = nl.growth
    bound = alpha1 + np.abs(rs) * (alpha2 + beta_star * ln_plus_p(rs, nl.p))
    slack = bound - np.abs(nl(rs))
    worst = float(np.min(slack))
    if worst < -1e-12 * max(1.0, float(np.max(bound))):
        r_bad = float(rs[int(np.argmin(slack))])
        raise GrowthViolated(f"|f({r_bad:.6g})| exceeds the declared growth bound", r=r_bad)
    result = {"pass": True, "worst_slack": worst, "r_max": r_max}
    if nl.fprime is not None and nl.growth_prime is not None:
        alpha, beta_p = nl.growth_prime
        bound_p = alpha + beta_p * ln_plus_p(rs, nl.p)
        slack_p = bound_p - np.abs(nl.fprime(rs))
        worst_p = float(np.min(slack_p))
        if worst_p < -1e-12 * max(1.0, float(np.max(bound_p))):
            r_bad = float(rs[int(np.argmin(slack_p))])
            raise GrowthViolated(f"|f'({r_bad:.6g})| exceeds the declared bound", r=r_bad)
        result["worst_slack_prime"] = worst_p
    return result


@dataclass(frozen=True, eq=False)
class ClassSpec:
    """Weighted-norm ball: kind C_s uses (s, s^3) thresholds on
    (|rho y|_{L2Q}, |rho y|_{LinfL2}); C_tilde_s uses (s, s^2, s^3) on
    (|rho y|_{L2Q}, |(rho y)_t|_{L2Q}, |grad(rho y)|_{L2Q})."""

    kind: str
    s: float

    def __post_init__(self):
        if self.kind not in ("C_s", "C_tilde_s"):
            raise ValueError(f"unknown class kind {self.kind!r}")


def _rho_raw_on_grid(system: WeightedSystem):
    grid = system.grid
    d2 = grid.d2_mesh()
    tcol = grid.ts.reshape(-1, *([1] * grid.dim))
    return system.params.rho(d2[None, ...], tcol, s=system.s, normalized=False)


def check_class(y, spec: ClassSpec, system: WeightedSystem):
    """Membership and margins of y in C(s) or C~(s), raw rho weights."""
    grid = system.grid
    yv = y.values if isinstance(y, ScalarField) else np.asarray(y, dtype=float)
    rho_y = _rho_raw_on_grid(system) * yv
    s = spec.s
    if spec.kind == "C_s":
        vals = {
            "L2Q": weighted_norm(grid, rho_y, "L2Q"),
            "LinfL2": weighted_norm(grid, rho_y, "LinfL2"),
        }
        thresholds = {"L2Q": s, "LinfL2": s ** 3}
    else:
        vals = {
            "L2Q": weighted_norm(grid, rho_y, "L2Q"),
            "dt_L2Q": weighted_norm(grid, time_derivative(grid, rho_y), "L2Q"),
            "grad_L2Q": gradient_l2q(grid, rho_y),
        }
        thresholds = {"L2Q": s, "dt_L2Q": s ** 2, "grad_L2Q": s ** 3}
    margins = {k: thresholds[k] - vals[k] for k in vals}
    return {"member": all(m >= 0 for m in margins.values()),
            "values": vals, "thresholds": thresholds, "margins": margins}


def lambda_s(y_hat, u0, u1, f: Nonlinearity, system: WeightedSystem) -> StateControlPair:
    """One application of the fixed-point map: B = -f(y_hat), then the
    linear control solve."""
    yv = y_hat.values if isinstance(y_hat, ScalarField) else np.asarray(y_hat, dtype=float)
    B = ScalarField(system.grid, -f(yv))
    w = solve_dual(system, u0=u0, u1=u1, B=B)
    return extract_pair(w, system)


@dataclass(eq=False)
class IterationTrace:
    """Per-iteration distances, ratios, class margins and residuals."""

    d: list = field(default_factory=list)
    d_boundary: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    margins: list = field(default_factory=list)
    forward_residuals: list = field(default_factory=list)
    converged: bool = False
    diverged: bool = False
    class_escapes: list = field(default_factory=list)

    def rows(self):
        out = []
        for k in range(len(self.d)):
            out.append({
                "k": k + 1,
                "d_k": self.d[k],
                "d_boundary_k": self.d_boundary[k],
                "ratio": self.ratios[k - 1] if k >= 1 else float("nan"),
                "margins": self.margins[k] if k < len(self.margins) else {},
                "forward_residual": self.forward_residuals[k]
                if k < len(self.forward_residuals) else float("nan"),
            })
        return out


def _weighted_distance(system, y_a, y_b):
    rho = _rho_raw_on_grid(system)
    return weighted_norm(system.grid, rho * (y_a.values - y_b.values), "L2Q")


def _boundary_distance(system, v_a, v_b):
    grid = system.grid
    d2_b = np.array([sum((p - c) ** 2 for p, c in zip(b.point, grid.geometry.x0))
                     for b in grid.boundary])
    rho_b = system.params.rho(d2_b[None, :], grid.ts[:, None],
                              s=system.s, normalized=False)
    from .norms import sigma_norm
    return sigma_norm(grid, rho_b * (v_a - v_b))


def run_fixed_point(system: WeightedSystem, u0, u1, f: Nonlinearity,
                    tol=1e-8, max_iter=25, y0=None, spec: ClassSpec = None,
                    forward_each=True):
    """Picard iteration y_{k+1} = Lambda_s(y_k) with contraction tracking.

    Terminates on d_k <= tol, three consecutively increasing distances
    (divergence flag), or the iteration cap.  Returns the last pair and
    the full trace; the final pair is forward-verified semilinearly.
    """
    grid = system.grid
    spec = spec or ClassSpec(kind="C_s", s=system.s)
    trace = IterationTrace()
    if y0 is None:
        prev_pair = lambda_s(ScalarField.zeros(grid), u0, u1, f, system)
    else:
        prev_pair = lambda_s(y0, u0, u1, f, system) if isinstance(y0, ScalarField) else y0
    prev = prev_pair

    increases = 0
    for _ in range(max_iter):
        cur = lambda_s(prev.y, u0, u1, f, system)
        d_k = _weighted_distance(system, cur.y, prev.y)
        d_b = _boundary_distance(system, cur.v, prev.v)
        trace.d.append(d_k)
        trace.d_boundary.append(d_b)
        if len(trace.d) >= 2 and trace.d[-2] > 0:
            trace.ratios.append(trace.d[-1] / trace.d[-2])
        report = check_class(cur.y, spec, system)
        trace.margins.append(report["margins"])
        if not report["member"]:
            trace.class_escapes.append(len(trace.d))
        if forward_each:
            check = verify_control(cur, grid, u0, u1, f=f)
            trace.forward_residuals.append(check["residual"])
        prev = cur
        if d_k <= tol:
            trace.converged = True
            break
        if len(trace.d) >= 2 and trace.d[-1] > trace.d[-2]:
            increases += 1
            if increases >= 3:
                trace.diverged = True
                break
        else:
            increases = 0
    final_check = verify_control(prev, grid, u0, u1, f=f)
    trace.forward_residuals.append(final_check["residual"])
    return prev, trace


def contraction_report(trace: IterationTrace, f: Nonlinearity, s, c):
    """Observed ratios against the predicted shape s^{-p} alpha + beta* c^p."""
    ratios = [r for r in trace.ratios if np.isfinite(r)]
    alpha, beta_star = (f.growth_prime if f.growth_prime is not None
                        else (f.growth[1], f.growth[2]))
    shape = s ** (-f.p) * alpha + beta_star * c ** f.p
    out = {
        "ratios": ratios,
        "max_ratio": max(ratios) if ratios else 0.0,
        "mean_ratio": float(np.mean(ratios)) if ratios else 0.0,
        "predicted_shape": float(shape),
        "fitted_C": float(np.mean(ratios) / shape) if ratios and shape > 0 else 0.0,
    }
    return out


def class_saturating_field(system: WeightedSystem, fraction=1.0):
    """Smooth field with |rho y|_{L2Q} = fraction * s, saturating the
    first class constraint; used to probe the source bound sharply."""
    grid = system.grid
    xi = [(grid.xs[a] - grid.geometry.domain[a][0]) / grid.geometry.lengths[a]
          for a in range(grid.dim)]
    g = np.ones(grid.full_shape)
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = len(xi[ax])
        g = g * np.sin(np.pi * xi[ax]).reshape(shape)
    tmod = np.sin(np.pi * grid.ts / grid.geometry.T).reshape(-1, *([1] * grid.dim))
    base = tmod * g[None, ...]
    y = base / _rho_raw_on_grid(system)
    nrm = weighted_norm(grid, _rho_raw_on_grid(system) * y, "L2Q")
    return ScalarField(grid, y * (fraction * system.s / nrm))


def source_bound_check(y_hat, f: Nonlinearity, system: WeightedSystem, p=None):
    """lhs/rhs of the weighted source bound for B = f(y_hat).

    lhs is |rho f(y_hat)| in L^2(0,T; H^{p-3/2}) (plain L^2(Q) at p=3/2);
    rhs is the growth-certificate bracket without the generic constant.
    """
    grid = system.grid
    s = system.s
    p = f.p if p is None else float(p)
    yv = y_hat.values if isinstance(y_hat, ScalarField) else np.asarray(y_hat, dtype=float)
    rho = _rho_raw_on_grid(system)
    field_vals = rho * f(yv)
    if p >= 1.5:
        lhs = weighted_norm(grid, field_vals, "L2Q")
    else:
        lhs = weighted_norm(grid, field_vals, "L2HminusR", r=1.5 - p)
    alpha1, alpha2, beta_star = f.growth
    c = system.params.c
    T = grid.geometry.T
    vol = grid.geometry.volume
    if p >= 1.5:
        rhs = alpha1 * math.exp(-s) * math.sqrt(T * vol) + alpha2 * s \
            + beta_star * (c * s) ** 1.5 * s
    else:
        rhs = alpha1 * math.exp(-s) * math.sqrt(T * vol) + alpha2 * s \
            + beta_star * c ** p * s ** (1.0 + p)
    ratio = lhs / rhs if rhs > 0 else 0.0
    return {"lhs": float(lhs), "rhs": float(rhs), "ratio": float(ratio), "p": p, "s": s}
