"""Scalar root finders for the implicit point equations.

The backward sweep reduces every grid point to one scalar equation that has a
unique root in ``[-beta, beta]`` under the step-size restriction.  Newton's
method with interval clamping finds it for any potential; for the double
well the equation is a depressed cubic with a closed-form real root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable


class InitialGuess(str, Enum):
    PREVIOUS_VALUE = "previous"
    ZERO = "zero"


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-12
    max_iter: int = 50
    initial_guess_policy: InitialGuess = InitialGuess.PREVIOUS_VALUE

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class SolveStats:
    iterations: int
    final_residual: float
    clamped: bool = False


class NewtonConvergenceError(RuntimeError):
    """Newton did not reach the residual tolerance within ``max_iter`` steps."""

    def __init__(self, message: str, residual: float = math.nan, iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DiscriminantError(ValueError):
    """Cubic has three real roots (or a repeated one); Cardano branch excluded."""


def newton_scalar(
    residual: Callable[[float], float],
    derivative: Callable[[float], float],
    xi0: float,
    cfg: NewtonConfig = NewtonConfig(),
    bound: float | None = None,
) -> tuple[float, SolveStats]:
    """Solve ``residual(xi) = 0`` by Newton iteration.

    If ``bound`` is given, every iterate that leaves ``[-bound, bound]`` is
    clamped back to the nearest endpoint and ``stats.clamped`` is set.
    """
    xi = float(xi0)
    g = residual(xi)
    clamped = False
    it = 0
    while abs(g) > cfg.tol:
        if it >= cfg.max_iter:
            raise NewtonConvergenceError(
                f"Newton failed after {it} iterations, residual {g:.3e}", abs(g), it
            )
        dg = derivative(xi)
        if dg == 0.0 or not math.isfinite(dg):
            raise NewtonConvergenceError(f"degenerate derivative {dg} at xi={xi}", abs(g), it)
        xi -= g / dg
        if bound is not None and abs(xi) > bound:
            xi = math.copysign(bound, xi)
            clamped = True
        g = residual(xi)
        it += 1
    return xi, SolveStats(it, abs(g), clamped)


def real_cbrt(x: float) -> float:
    return -((-x) ** (1.0 / 3.0)) if x < 0 else x ** (1.0 / 3.0)


def cardano_real_root(p: float, q: float) -> float:
    """Unique real root of ``xi^3 + p xi + q = 0`` when ``q^2/4 + p^3/27 > 0``."""
    disc = 0.25 * q * q + p * p * p / 27.0
    if not disc > 0.0:
        raise DiscriminantError(f"discriminant {disc} <= 0 for p={p}, q={q}")
    s = math.sqrt(disc)
    # Take the cube root of the larger-magnitude term and recover the other from
    # the product u*v = -p/3; the textbook sum cancels badly when |q| << p^1.5.
    a = -0.5 * q + s if q <= 0 else -0.5 * q - s
    u = real_cbrt(a)
    if u == 0.0:
        return 0.0
    return u - p / (3.0 * u)
