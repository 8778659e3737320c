"""Initial conditions, refinement studies and per-step cost benchmarks."""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .grid import Field, Grid, l2_norm
from .potentials import Potential
from .schemes import (
    NonlinearSolver,
    Scheme,
    SchemeConfig,
    Stepper,
    max_stable_tau,
)
from .snapshots import load_snapshot, save_snapshot
from .solvers import NewtonConfig

# Refinement studies accumulate the per-point Newton residual over thousands
# of steps; at 1e-12 that floor (~5e-10) masks second-order cells.
STUDY_NEWTON = NewtonConfig(tol=1e-14)

# centres and radii of the eight-circles benchmark, (x, y, r)
EIGHT_CIRCLES = (
    (math.pi / 2, math.pi / 2, math.pi / 5),
    (math.pi / 4, 3 * math.pi / 4, math.pi / 10),
    (math.pi / 2, 5 * math.pi / 4, math.pi / 10),
    (math.pi, math.pi / 4, math.pi / 8),
    (49 * math.pi / 40, math.pi / 4, math.pi / 8),
    (math.pi, math.pi, math.pi / 4),
    (3 * math.pi / 2, 3 * math.pi / 2, math.pi / 4),
    (5.0, 3.0, 2 * math.pi / 15),
)


# ---------------------------------------------------------------- initial data


def ic_sinesine(grid: Grid, amplitude: float = 0.1) -> Field:
    """``0.1 sin(2 pi x) sin(2 pi y)`` sampled at the nodes."""
    if grid.dim != 2:
        raise ValueError("sin-sin initial data is two-dimensional")
    return grid.from_function(lambda x, y: amplitude * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y))


def _circle_bump(xi: np.ndarray, epsilon: float) -> np.ndarray:
    out = np.zeros_like(xi)
    inside = xi < 0
    out[inside] = 2.0 * np.exp(-(epsilon**2) / xi[inside] ** 2)
    return out


def ic_eight_circles(grid: Grid, epsilon: float) -> Field:
    """``-0.2 + 0.2 * sum_i g(|x - c_i| - r_i)`` on ``(0, 2 pi)^2``."""
    if grid.dim != 2:
        raise ValueError("eight-circles initial data is two-dimensional")
    if not math.isclose(grid.L, 2 * math.pi, rel_tol=1e-12):
        raise ValueError(f"eight-circles initial data needs L = 2*pi, got L = {grid.L}")
    x, y = grid.mesh()
    u = np.full(grid.shape, -0.2)
    for cx, cy, rad in EIGHT_CIRCLES:
        u += 0.2 * _circle_bump(np.hypot(x - cx, y - cy) - rad, epsilon)
    return Field(grid, u.ravel())


def ic_random(grid: Grid, amplitude: float, seed: int) -> Field:
    rng = np.random.default_rng(seed)
    return Field(grid, rng.uniform(-amplitude, amplitude, grid.size))


# ------------------------------------------------------------------- marching


def integrate(u0: Field, cfg: SchemeConfig, p: Potential, t_end: float) -> Field:
    """Advance to ``t_end`` without diagnostics."""
    st = Stepper(u0.grid, cfg, p)
    n = int(round(t_end / cfg.tau))
    data = u0.data
    for _ in range(n):
        data = st.step(data)
    return Field(u0.grid, data)


class ReferenceCache:
    """Reference solutions on disk, keyed by a hash of their parameters."""

    def __init__(self, directory: str | Path | None):
        self.directory = Path(directory) if directory is not None else None

    @staticmethod
    def key(params: dict) -> str:
        blob = json.dumps(params, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:20]

    def get_or_compute(self, params: dict, compute) -> Field:
        if self.directory is None:
            return compute()
        stem = self.directory / f"ref_{self.key(params)}"
        if stem.with_suffix(".bin").exists() and stem.with_suffix(".json").exists():
            ref, _ = load_snapshot(stem)
            return ref
        ref = compute()
        save_snapshot(stem, ref, time=params.get("t_end", 0.0), scheme=str(params.get("scheme", "")),
                      potential=str(params.get("potential", "")), params=params)
        return ref


def reference_solution(
    u0: Field,
    p: Potential,
    epsilon: float,
    t_end: float,
    tau_ref: float,
    *,
    kappa: float | None = None,
    cache: ReferenceCache | None = None,
    ic_label: str = "",
    newton: NewtonConfig = STUDY_NEWTON,
) -> Field:
    """SS2 solution at a small step, optionally cached."""
    cfg = SchemeConfig(Scheme.SS2, tau_ref, epsilon, kappa=kappa, newton=newton, enforce_thresholds=True)
    params = {
        "scheme": "ss2", "potential": p.token, "dim": u0.grid.dim, "M": u0.grid.M, "L": u0.grid.L,
        "eps": epsilon, "t_end": t_end, "tau": tau_ref, "kappa": cfg.resolved_kappa(p), "ic": ic_label,
        "newton_tol": newton.tol,
        "u0": hashlib.sha256(u0.data.tobytes()).hexdigest()[:16],
    }
    return (cache or ReferenceCache(None)).get_or_compute(params, lambda: integrate(u0, cfg, p, t_end))


# ------------------------------------------------------------------ refinement


def estimate_order(errors, controls=None) -> list[float]:
    """Observed orders ``log(e_k / e_{k+1}) / log(c_k / c_{k+1})``.

    Without ``controls`` the control value is assumed to halve between
    consecutive entries, giving plain ``log2`` error ratios.
    """
    errors = [float(e) for e in errors]
    if len(errors) < 2:
        raise ValueError("need at least two errors to estimate an order")
    if any(not (e > 0) for e in errors):
        raise ValueError(f"errors must be positive, got {errors}")
    if controls is None:
        return [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    return [
        math.log(a / b) / math.log(ca / cb)
        for a, b, ca, cb in zip(errors, errors[1:], controls, controls[1:])
    ]


@dataclass
class RefinementResult:
    control_values: list[float]
    errors: list[float]
    orders: list[float]
    skipped: list[float] = field(default_factory=list)
    control_name: str = "tau"

    def mean_order(self, last: int = 3) -> float:
        """Mean of the last ``last`` observed orders (the asymptotic cells)."""
        tail = [o for o in self.orders[-last:] if math.isfinite(o)]
        return float(np.mean(tail)) if tail else math.nan

    def to_csv(self) -> str:
        lines = [f"{self.control_name},error,order"]
        for k, (c, e) in enumerate(zip(self.control_values, self.errors)):
            o = "" if k == 0 else repr(self.orders[k - 1])
            lines.append(f"{c!r},{e!r},{o}")
        for c in self.skipped:
            lines.append(f"{c!r},skipped-unstable,")
        return "\n".join(lines) + "\n"


def _orders_or_nan(errors, controls) -> list[float]:
    if len(errors) < 2:
        return []
    if all(e > 0 for e in errors):
        return estimate_order(errors, controls)
    out = []
    for a, b, ca, cb in zip(errors, errors[1:], controls, controls[1:]):
        out.append(math.log(a / b) / math.log(ca / cb) if a > 0 and b > 0 else math.nan)
    return out


def temporal_refinement(
    scheme,
    p: Potential,
    grid: Grid,
    taus,
    t_end: float,
    reference: Field,
    *,
    u0: Field,
    epsilon: float,
    kappa: float | None = None,
    nonlinear_solver=NonlinearSolver.NEWTON,
    allow_unstable: bool = False,
    newton: NewtonConfig = STUDY_NEWTON,
) -> RefinementResult:
    """L2 errors at ``t_end`` against ``reference`` for each step in ``taus``.

    Steps above the scheme's stability bound are skipped (and listed in
    ``skipped``) unless ``allow_unstable``.
    """
    scheme = Scheme.parse(scheme)
    if reference.grid != grid or u0.grid != grid:
        raise ValueError("reference, initial data and grid must agree")
    base = SchemeConfig(scheme, float(taus[0]), epsilon, kappa=kappa, newton=newton,
                        nonlinear_solver=nonlinear_solver, enforce_thresholds=not allow_unstable)
    limit = max_stable_tau(scheme, grid, p, base.resolved_kappa(p), epsilon)
    ctrl, errs, skipped = [], [], []
    for tau in taus:
        tau = float(tau)
        if tau > limit * (1 + 1e-12) and not allow_unstable:
            skipped.append(tau)
            continue
        uT = integrate(u0, base.with_tau(tau), p, t_end)
        ctrl.append(tau)
        errs.append(l2_norm(uT - reference))
    return RefinementResult(ctrl, errs, _orders_or_nan(errs, ctrl), skipped, "tau")


def restrict(fine: Field, coarse_grid: Grid) -> Field:
    """Injection of a fine field onto the nested coarse nodes."""
    if fine.grid.dim != coarse_grid.dim or not math.isclose(fine.grid.L, coarse_grid.L):
        raise ValueError("grids do not share a domain")
    ratio, rem = divmod(fine.grid.M, coarse_grid.M)
    if rem or ratio < 1:
        raise ValueError(f"M={coarse_grid.M} does not nest in M={fine.grid.M}")
    sl = (slice(None, None, ratio),) * coarse_grid.dim
    return Field(coarse_grid, fine.array[sl].ravel().copy())


def _check_nesting(Ms, M_ref):
    for M in Ms:
        ratio, rem = divmod(M_ref, M)
        if rem or ratio & (ratio - 1):
            raise ValueError(f"M={M} does not nest in the reference grid M={M_ref} by a power of two")


def spatial_refinement(
    scheme,
    p: Potential,
    t_end: float,
    tau_fixed: float,
    Ms,
    *,
    M_ref: int,
    L: float = 1.0,
    epsilon: float = 0.01,
    dim: int = 2,
    ic=ic_sinesine,
    kappa: float | None = None,
    reference: Field | None = None,
    cache: ReferenceCache | None = None,
    newton: NewtonConfig = STUDY_NEWTON,
) -> RefinementResult:
    """Errors against a fine-grid run restricted to the coarse nodes.

    Every run uses the same ``tau_fixed``, which must be admissible on the
    finest grid.  ``ic`` maps a grid to its initial field.
    """
    scheme = Scheme.parse(scheme)
    Ms = sorted(int(m) for m in Ms)
    _check_nesting(Ms, M_ref)
    cfg = SchemeConfig(scheme, tau_fixed, epsilon, kappa=kappa, newton=newton)
    fine_grid = Grid(dim, M_ref, L)
    if reference is None:
        params = {"kind": "spatial", "scheme": scheme.value, "potential": p.token, "dim": dim, "M": M_ref, "L": L,
                  "eps": epsilon, "t_end": t_end, "tau": tau_fixed, "kappa": cfg.resolved_kappa(p), "newton_tol": newton.tol,
                  "ic": getattr(ic, "__name__", str(ic))}
        reference = (cache or ReferenceCache(None)).get_or_compute(
            params, lambda: integrate(ic(fine_grid), cfg, p, t_end)
        )
    hs, errs = [], []
    for M in Ms:
        g = Grid(dim, M, L)
        uT = integrate(ic(g), cfg, p, t_end)
        hs.append(g.h)
        errs.append(l2_norm(uT - restrict(reference, g)))
    return RefinementResult(hs, errs, _orders_or_nan(errs, hs), [], "h")


# ------------------------------------------------------------------ benchmarks


@dataclass
class BenchResult:
    sizes: list[int]
    per_step_ns: dict[str, list[float]]
    fitted_exponent: dict[str, float]
    dim: int = 2

    def to_csv(self) -> str:
        lines = ["M,scheme,ns_per_step"]
        for name, vals in self.per_step_ns.items():
            for M, v in zip(self.sizes, vals):
                lines.append(f"{M},{name},{v:.0f}")
        return "\n".join(lines) + "\n"

    def exponents_csv(self) -> str:
        lines = ["scheme,fitted_exponent"]
        lines += [f"{k},{v:.4f}" for k, v in self.fitted_exponent.items()]
        return "\n".join(lines) + "\n"


def fit_exponent(points, times) -> float:
    """Least-squares slope of ``log(time)`` against ``log(points)``."""
    slope, _ = np.polyfit(np.log(np.asarray(points, float)), np.log(np.asarray(times, float)), 1)
    return float(slope)


def bench_per_step(
    schemes,
    Ms,
    p: Potential,
    steps_per_cell: int = 5,
    *,
    dim: int = 2,
    L: float = 2 * math.pi,
    epsilon: float = 0.05,
    tau: float | None = None,
    warmup: int = 2,
    nonlinear_solver=NonlinearSolver.NEWTON,
    seed: int = 0,
) -> BenchResult:
    """Median wall time per step for each scheme and grid size.

    Schemes may carry a solver suffix, e.g. ``"ess1-adjoint:cardano"``.  When
    ``tau`` is omitted each cell uses half the smallest stability bound over
    all sizes, so every cell steps with the same tau.
    """
    if steps_per_cell < 5:
        raise ValueError("steps_per_cell must be >= 5")
    Ms = [int(m) for m in Ms]
    specs = []
    for token in schemes:
        name, _, solver = str(token).partition(":")
        specs.append((str(token), Scheme.parse(name), NonlinearSolver(solver) if solver else NonlinearSolver(nonlinear_solver)))
    kappa = p.kappa_default
    if tau is None:
        finest = Grid(dim, max(Ms), L)
        tau = 0.5 * min(
            max_stable_tau(s, finest, p, kappa, epsilon) for _, s, _ in specs if s is not Scheme.SSI1_BASELINE
        ) if any(s is not Scheme.SSI1_BASELINE for _, s, _ in specs) else 1e-2
    per_step: dict[str, list[float]] = {label: [] for label, _, _ in specs}
    for M in Ms:
        g = Grid(dim, M, L)
        u0 = ic_random(g, 0.5 * p.beta, seed)
        for label, scheme, solver in specs:
            st = Stepper(g, SchemeConfig(scheme, tau, epsilon, nonlinear_solver=solver), p)
            data = u0.data
            for _ in range(warmup):
                data = st.step(data)
            samples = []
            for _ in range(steps_per_cell):
                t0 = time.perf_counter_ns()
                data = st.step(data)
                samples.append(time.perf_counter_ns() - t0)
            per_step[label].append(float(np.median(samples)))
    points = [M**dim for M in Ms]
    fitted = {label: fit_exponent(points, v) for label, v in per_step.items()} if len(Ms) >= 2 else {}
    return BenchResult(Ms, per_step, fitted, dim)
