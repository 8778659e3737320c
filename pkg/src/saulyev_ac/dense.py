"""Dense-matrix reference solvers for small grids.

These build the split Laplacian matrices explicitly and solve the schemes in
their vectorized form, sharing nothing with the compiled sweeps.  They are
test oracles: cost is O(N^2) memory and O(N^2) work per step.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .grid import Field, difference_matrices, vectorized_operator
from .potentials import Potential

MAX_DENSE_POINTS = 4096


class DenseSizeError(ValueError):
    pass


def split_operators(grid) -> tuple[np.ndarray, np.ndarray]:
    """``(Lap_a, Lap_b)`` as dense ``N x N`` matrices on flat row-major fields."""
    if grid.size > MAX_DENSE_POINTS:
        raise DenseSizeError(f"{grid.size} points exceeds the dense limit of {MAX_DENSE_POINTS}")
    _, Da, Db = difference_matrices(grid.M, grid.h)
    return vectorized_operator(Da, grid.dim), vectorized_operator(Db, grid.dim)


def _bisect(func, lo, hi, xtol=1e-15, maxiter=200):
    flo, fhi = func(lo), func(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"no sign change on [{lo}, {hi}]: {flo}, {fhi}")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = func(mid)
        if fm == 0.0 or hi - lo < xtol:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def dense_triangular_oracle(u: Field, cfg, p: Potential, part: str = "ESS1", tau: float | None = None) -> Field:
    """Reference ESS1 or ESS1-adjoint step.

    ``part="ESS1"`` solves the lower-triangular system
    ``(I/tau + kappa I - eps^2 Lap_b) x = u/tau + eps^2 Lap_a u + f(u) + kappa u``.
    ``part="ESS1_ADJOINT"`` walks the points in decreasing order and solves
    each scalar equation of the implicit upper-split scheme by bisection.
    """
    tau = cfg.tau if tau is None else tau
    eps2 = cfg.epsilon**2
    kappa = cfg.resolved_kappa(p)
    A, B = split_operators(u.grid)
    x0 = u.data
    n = x0.size
    part = part.upper().replace("-", "_")
    if part == "ESS1":
        lhs = (1.0 / tau + kappa) * np.eye(n) - eps2 * B
        if np.any(np.triu(lhs, 1) != 0.0):
            raise AssertionError("implicit operator is not lower triangular")
        rhs = x0 / tau + eps2 * (A @ x0) + p.f(x0) + kappa * x0
        return Field(u.grid, solve_triangular(lhs, rhs, lower=True))
    if part != "ESS1_ADJOINT":
        raise ValueError(f"part must be ESS1 or ESS1_ADJOINT, got {part!r}")
    if np.any(np.tril(A, -1) != 0.0):
        raise AssertionError("implicit operator is not upper triangular")
    Bu = B @ x0
    x = np.zeros(n)
    beta = p.beta
    for k in range(n - 1, -1, -1):
        s = float(A[k, k + 1 :] @ x[k + 1 :])
        akk = A[k, k]
        uk = x0[k]

        def resid(xi):
            return (xi - uk) / tau - eps2 * (akk * xi + s + Bu[k]) - float(p.f(xi)) - kappa * (xi - uk)

        x[k] = _bisect(resid, -beta, beta)
    return Field(u.grid, x)
