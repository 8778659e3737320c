"""Discrete energy, kappa-norm and per-step DMP / energy monitors."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .grid import Field, forward_gradient, gradient_inner_product, inner_product, sup_norm
from .potentials import Potential

DMP_TOL = 1e-12
ENERGY_RTOL = 1e-10

CSV_HEADER = "step,t,energy,sup_norm,energy_delta,dmp_ok,energy_decreasing,newton_iters_max,wall_ns"


class MonitorViolation(RuntimeError):
    """A strict monitor saw the DMP bound or energy monotonicity break."""

    def __init__(self, message: str, report: "StepReport"):
        super().__init__(message)
        self.report = report


@dataclass
class StepReport:
    step_index: int
    time: float
    energy: float
    sup_norm: float
    energy_delta: float
    dmp_ok: bool
    energy_decreasing: bool
    solver_iterations_max: int = 0
    wall_time_ns: int = 0

    def csv_row(self) -> str:
        return (
            f"{self.step_index},{self.time!r},{self.energy!r},{self.sup_norm!r},"
            f"{self.energy_delta!r},{int(self.dmp_ok)},{int(self.energy_decreasing)},"
            f"{self.solver_iterations_max},{self.wall_time_ns}"
        )

    def as_dict(self) -> dict:
        return asdict(self)


def discrete_energy(u: Field, p: Potential, epsilon: float) -> float:
    """``(eps^2/2) |grad_h u|^2 + <F(u), 1>``."""
    g = forward_gradient(u)
    bulk = u.grid.cell_volume * float(np.sum(p.F(u.data)))
    return 0.5 * epsilon**2 * gradient_inner_product(g, g) + bulk


def kappa_norm(v: Field, epsilon: float, kappa: float) -> float:
    g = forward_gradient(v)
    return math.sqrt(0.5 * epsilon**2 * gradient_inner_product(g, g) + kappa * inner_product(v, v))


def energy_decreased(prev_energy: float, energy: float) -> bool:
    return energy - prev_energy <= ENERGY_RTOL * max(1.0, abs(prev_energy))


def monitor(
    prev: Field,
    next: Field,
    p: Potential,
    epsilon: float,
    *,
    step_index: int = 1,
    time: float = 0.0,
    solver_iterations: int = 0,
    wall_time_ns: int = 0,
    prev_energy: float | None = None,
    strict: bool = False,
) -> StepReport:
    """Build a :class:`StepReport` for the transition ``prev -> next``.

    ``prev_energy`` skips recomputing the energy of ``prev`` when the caller
    already has it.  With ``strict=True`` a violated flag raises
    :class:`MonitorViolation`.
    """
    sn = sup_norm(next)
    dmp_ok = sn <= p.beta + DMP_TOL
    try:
        e_next = discrete_energy(next, p, epsilon)
    except ValueError:
        # log potential outside (-1, 1): the bound is already broken
        e_next = math.inf
    if prev_energy is None:
        prev_energy = discrete_energy(prev, p, epsilon)
    delta = e_next - prev_energy
    report = StepReport(
        step_index=step_index,
        time=time,
        energy=e_next,
        sup_norm=sn,
        energy_delta=delta,
        dmp_ok=bool(dmp_ok),
        energy_decreasing=bool(math.isfinite(e_next) and energy_decreased(prev_energy, e_next)),
        solver_iterations_max=int(solver_iterations),
        wall_time_ns=int(wall_time_ns),
    )
    if strict and not (report.dmp_ok and report.energy_decreasing):
        what = "DMP bound" if not report.dmp_ok else "energy monotonicity"
        raise MonitorViolation(
            f"{what} violated at step {step_index} (t={time:g}): sup={sn:.16g}, beta={p.beta:.16g}, dE={delta:.3e}",
            report,
        )
    return report


def write_reports_csv(path, reports) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for rep in reports:
            fh.write(rep.csv_row() + "\n")


def read_reports_csv(path) -> list[StepReport]:
    out = []
    names = [f.name for f in fields(StepReport)]
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected diagnostics header: {header!r}")
        for line in fh:
            vals = line.strip().split(",")
            if len(vals) != len(names):
                continue
            out.append(
                StepReport(
                    int(vals[0]), float(vals[1]), float(vals[2]), float(vals[3]), float(vals[4]),
                    vals[5] == "1", vals[6] == "1", int(vals[7]), int(vals[8]),
                )
            )
    return out
