"""Saul'yev-type time steppers for the periodic Allen-Cahn equation.

``S(tau)`` (ESS1) treats the lower split of the Laplacian implicitly and is
resolved by one forward sweep with explicit point formulas.  Its adjoint
``S~(tau) = S^{-1}(-tau)`` (ESS1-adjoint) treats the upper split and the
nonlinearity implicitly and is resolved by one backward sweep with a scalar
root solve per point.  SS2 and SS2-adjoint compose the two at half steps.
SSI1 is the spectral stabilized semi-implicit baseline.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numpy as np

from . import _kernels
from .diagnostics import StepReport, discrete_energy, monitor
from .grid import Field, Grid, sup_norm
from .potentials import POLY, Potential, compute_kappa
from .solvers import DiscriminantError, InitialGuess, NewtonConfig, NewtonConvergenceError


class Scheme(str, Enum):
    ESS1 = "ess1"
    ESS1_ADJOINT = "ess1-adjoint"
    SS2 = "ss2"
    SS2_ADJOINT = "ss2-adjoint"
    SSI1_BASELINE = "ssi1"

    @classmethod
    def parse(cls, token: str | "Scheme") -> "Scheme":
        if isinstance(token, Scheme):
            return token
        t = token.strip().lower().replace("_", "-")
        aliases = {"ess1-adj": "ess1-adjoint", "ss2-adj": "ss2-adjoint", "ssi1-baseline": "ssi1"}
        try:
            return cls(aliases.get(t, t))
        except ValueError:
            raise ValueError(f"unknown scheme {token!r}; expected one of {[s.value for s in cls]}") from None


SWEEP_SCHEMES = (Scheme.ESS1, Scheme.ESS1_ADJOINT, Scheme.SS2, Scheme.SS2_ADJOINT)
NOMINAL_ORDER = {Scheme.ESS1: 1, Scheme.ESS1_ADJOINT: 1, Scheme.SS2: 2, Scheme.SS2_ADJOINT: 2, Scheme.SSI1_BASELINE: 1}


class NonlinearSolver(str, Enum):
    NEWTON = "newton"
    CARDANO = "cardano"


class ThresholdError(ValueError):
    """Time step or stabilization outside the range where DMP/energy results hold."""


@dataclass(frozen=True)
class SchemeConfig:
    scheme: Scheme
    tau: float
    epsilon: float
    kappa: float | None = None  # None: max |f'| on [-beta, beta]
    newton: NewtonConfig = NewtonConfig()
    nonlinear_solver: NonlinearSolver = NonlinearSolver.NEWTON
    enforce_thresholds: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        object.__setattr__(self, "nonlinear_solver", NonlinearSolver(self.nonlinear_solver))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.tau == 0 or not math.isfinite(self.tau):
            raise ValueError(f"tau must be finite and nonzero, got {self.tau}")
        if self.kappa is not None and self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")

    def resolved_kappa(self, p: Potential) -> float:
        return p.kappa_default if self.kappa is None else float(self.kappa)

    def with_tau(self, tau: float) -> "SchemeConfig":
        return replace(self, tau=tau)


def max_stable_tau(scheme, grid: Grid, potential: Potential, kappa: float, epsilon: float) -> float:
    """Largest step for which the DMP and energy results are guaranteed.

    ESS1: ``h^2 / (2 eps^2)``.  ESS1-adjoint: ``min(h^2/(kappa h^2 + 2 eps^2),
    1/(kappa + |f'|))``.  The SS2 variants allow twice the adjoint bound since
    each half step runs at ``tau/2``.  SSI1 is unconditional.
    """
    scheme = Scheme.parse(scheme)
    fp = compute_kappa(potential)
    if kappa < fp * (1.0 - 1e-12):
        raise ThresholdError(f"kappa={kappa} is below max|f'| = {fp} on [-beta, beta]")
    if scheme is Scheme.SSI1_BASELINE:
        return math.inf
    h2 = grid.h**2
    e2 = epsilon**2
    if scheme is Scheme.ESS1:
        return h2 / (2.0 * e2)
    adj = min(h2 / (kappa * h2 + 2.0 * e2), 1.0 / (kappa + fp) if kappa + fp > 0 else math.inf)
    if scheme is Scheme.ESS1_ADJOINT:
        return adj
    return 2.0 * adj


class Stepper:
    """One scheme bound to a grid and potential; advances flat arrays.

    ``step`` never mutates its argument.  ``last_iterations`` holds the
    largest Newton iteration count of the most recent step (0 for explicit
    or closed-form work).
    """

    def __init__(self, grid: Grid, cfg: SchemeConfig, p: Potential):
        self.grid = grid
        self.cfg = cfg
        self.p = p
        self.kappa = cfg.resolved_kappa(p)
        self.r = cfg.epsilon**2 / grid.h**2
        self.last_iterations = 0
        self.total_iterations = 0
        self.last_residual = 0.0
        if cfg.nonlinear_solver is NonlinearSolver.CARDANO and p.kind != POLY:
            raise ValueError("the Cardano solver only applies to the double-well potential")
        if cfg.enforce_thresholds:
            if cfg.tau <= 0:
                raise ThresholdError(f"tau must be positive when thresholds are enforced, got {cfg.tau}")
            limit = max_stable_tau(cfg.scheme, grid, p, self.kappa, cfg.epsilon)
            if cfg.tau > limit * (1.0 + 1e-12):
                raise ThresholdError(
                    f"tau={cfg.tau} exceeds the {cfg.scheme.value} bound {limit:.6g} "
                    f"(h={grid.h:.6g}, eps={cfg.epsilon}, kappa={self.kappa:.6g})"
                )
        self._plan = None
        if cfg.scheme is Scheme.SSI1_BASELINE:
            from .spectral import SpectralPlan

            self._plan = SpectralPlan(grid)

    # half steps ----------------------------------------------------------
    def forward(self, u: np.ndarray, tau: float) -> None:
        p = self.p
        _kernels.forward_sweep(u, self.grid.M, self.grid.dim, tau, self.r, self.kappa, p.code, p.theta, p.theta_c)

    def backward(self, u: np.ndarray, tau: float) -> int:
        p, cfg = self.p, self.cfg
        solver = _kernels.SOLVER_CARDANO if cfg.nonlinear_solver is NonlinearSolver.CARDANO else _kernels.SOLVER_NEWTON
        status, idx, max_it, tot_it, worst = _kernels.backward_sweep(
            u, self.grid.M, self.grid.dim, tau, self.r, self.kappa, p.code, p.theta, p.theta_c,
            p.beta, cfg.newton.tol, cfg.newton.max_iter, solver,
            cfg.newton.initial_guess_policy is InitialGuess.ZERO,
        )
        if status == _kernels.NEWTON_FAILED:
            raise NewtonConvergenceError(
                f"Newton failed at point {idx} after {max_it} iterations (residual {worst:.3e}); "
                f"is tau={tau} inside the step-size bound?",
                worst,
                max_it,
            )
        if status == _kernels.DISCRIMINANT_FAILED:
            raise DiscriminantError(f"cubic discriminant <= 0 at point {idx}; Cardano needs tau <= 1/(1+kappa)")
        self.total_iterations += tot_it
        self.last_residual = max(self.last_residual, worst)
        return max_it

    def step(self, data: np.ndarray, tau: float | None = None) -> np.ndarray:
        tau = self.cfg.tau if tau is None else tau
        u = np.array(data, dtype=np.float64, copy=True)
        scheme = self.cfg.scheme
        self.last_residual = 0.0
        iters = 0
        if scheme is Scheme.ESS1:
            self.forward(u, tau)
        elif scheme is Scheme.ESS1_ADJOINT:
            iters = self.backward(u, tau)
        elif scheme is Scheme.SS2:
            self.forward(u, 0.5 * tau)
            iters = self.backward(u, 0.5 * tau)
        elif scheme is Scheme.SS2_ADJOINT:
            iters = self.backward(u, 0.5 * tau)
            self.forward(u, 0.5 * tau)
        else:
            from .spectral import ssi1_update

            u = ssi1_update(u, self._plan, tau, self.cfg.epsilon, self.kappa, self.p)
        self.last_iterations = iters
        if not np.all(np.isfinite(u)):
            raise FloatingPointError(f"{scheme.value} produced non-finite values (tau={tau})")
        return u


def _check_bound(u: Field, cfg: SchemeConfig, p: Potential) -> None:
    if cfg.enforce_thresholds and sup_norm(u) > p.beta + 1e-12:
        raise ThresholdError(f"|u|_inf = {sup_norm(u)} exceeds beta = {p.beta}")


def _step(u: Field, cfg: SchemeConfig, p: Potential, scheme: Scheme) -> Field:
    if cfg.scheme is not scheme:
        cfg = replace(cfg, scheme=scheme)
    _check_bound(u, cfg, p)
    return Field(u.grid, Stepper(u.grid, cfg, p).step(u.data))


def step_ess1(u: Field, cfg: SchemeConfig, p: Potential) -> Field:
    """One ESS1 step (forward explicit sweep)."""
    return _step(u, cfg, p, Scheme.ESS1)


def step_ess1_adjoint(u: Field, cfg: SchemeConfig, p: Potential) -> Field:
    """One ESS1-adjoint step (backward sweep, scalar solve per point)."""
    return _step(u, cfg, p, Scheme.ESS1_ADJOINT)


def step_ss2(u: Field, cfg: SchemeConfig, p: Potential) -> Field:
    return _step(u, cfg, p, Scheme.SS2)


def step_ss2_adjoint(u: Field, cfg: SchemeConfig, p: Potential) -> Field:
    return _step(u, cfg, p, Scheme.SS2_ADJOINT)


def ss2_stages(u: Field, cfg: SchemeConfig, p: Potential, adjoint: bool = False) -> tuple[Field, Field]:
    """SS2 (or SS2-adjoint) step that also returns the intermediate half-step field."""
    cfg = replace(cfg, scheme=Scheme.SS2_ADJOINT if adjoint else Scheme.SS2)
    _check_bound(u, cfg, p)
    st = Stepper(u.grid, cfg, p)
    v = u.data.copy()
    half = 0.5 * cfg.tau
    if adjoint:
        st.backward(v, half)
    else:
        st.forward(v, half)
    mid = v.copy()
    if adjoint:
        st.forward(v, half)
    else:
        st.backward(v, half)
    return Field(u.grid, mid), Field(u.grid, v)


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    reports: list[StepReport] = field(default_factory=list)
    snapshots: list[tuple[float, Field]] = field(default_factory=list)
    final: Field | None = None
    initial_energy: float = math.nan

    @property
    def all_dmp_ok(self) -> bool:
        return all(r.dmp_ok for r in self.reports)

    @property
    def all_energy_decreasing(self) -> bool:
        return all(r.energy_decreasing for r in self.reports)


def simulate(
    u0: Field,
    cfg: SchemeConfig,
    p: Potential,
    t_end: float,
    snapshot_every: int = 0,
    sink: Callable[[int, float, Field], None] | None = None,
    *,
    strict: bool = False,
    diag_every: int = 1,
    on_report: Callable[[StepReport], None] | None = None,
) -> Trajectory:
    """March ``round(t_end / tau)`` steps from ``u0``.

    A :class:`StepReport` is recorded every ``diag_every`` steps (and at the
    last step).  Snapshots go to ``sink(step, t, field)`` when given, otherwise
    they are kept on the returned trajectory.  ``strict`` turns a violated
    DMP or energy flag into :class:`~saulyev_ac.diagnostics.MonitorViolation`.
    """
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if diag_every < 1:
        raise ValueError("diag_every must be >= 1")
    _check_bound(u0, cfg, p)
    stepper = Stepper(u0.grid, cfg, p)
    n_steps = int(round(t_end / cfg.tau))
    if n_steps < 1:
        raise ValueError(f"t_end={t_end} is shorter than one step of tau={cfg.tau}")

    traj = Trajectory()
    e_prev = discrete_energy(u0, p, cfg.epsilon)
    traj.initial_energy = e_prev
    prev = u0
    data = u0.data
    wall = 0
    iters = 0
    for n in range(1, n_steps + 1):
        t0 = _time.perf_counter_ns()
        data = stepper.step(data)
        wall += _time.perf_counter_ns() - t0
        iters = max(iters, stepper.last_iterations)
        t = n * cfg.tau
        if n % diag_every == 0 or n == n_steps:
            cur = Field(u0.grid, data)
            rep = monitor(
                prev, cur, p, cfg.epsilon,
                step_index=n, time=t, solver_iterations=iters, wall_time_ns=wall,
                prev_energy=e_prev, strict=strict,
            )
            traj.times.append(t)
            traj.reports.append(rep)
            if on_report is not None:
                on_report(rep)
            e_prev = rep.energy
            prev = cur
            wall = 0
            iters = 0
        if snapshot_every and n % snapshot_every == 0:
            snap = Field(u0.grid, data.copy())
            if sink is not None:
                sink(n, t, snap)
            else:
                traj.snapshots.append((t, snap))
    traj.final = Field(u0.grid, data)
    return traj
