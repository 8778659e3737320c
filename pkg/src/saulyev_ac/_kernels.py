"""Compiled sweep kernels.

Both sweeps update a single buffer in place.  Because the periodic splitting
puts every implicit neighbour earlier in the sweep order, reading neighbours
from the buffer being overwritten yields exactly the mixed time levels of the
scheme: the wrap neighbour at index 0 (forward) or M-1 (backward) is still
old when it is read, and the +1 / -1 wrap at the far end is already new.

Potential codes: 0 none, 1 poly, 2 log.  Solver codes: 0 Newton, 1 Cardano.
"""

import math

import numpy as np
from numba import njit

SOLVER_NEWTON = 0
SOLVER_CARDANO = 1

# kernel status codes
OK = 0
NEWTON_FAILED = 1
DISCRIMINANT_FAILED = 2


@njit(cache=True, inline="always")
def _f(kind, th, thc, x):
    if kind == 1:
        return x - x * x * x
    if kind == 2:
        return 0.5 * th * math.log((1.0 - x) / (1.0 + x)) + thc * x
    return 0.0


@njit(cache=True, inline="always")
def _fp(kind, th, thc, x):
    if kind == 1:
        return 1.0 - 3.0 * x * x
    if kind == 2:
        return thc - th / (1.0 - x * x)
    return 0.0


@njit(cache=True)
def forward_sweep(u, M, dim, tau, r, kappa, kind, th, thc):
    """Explicit Saul'yev sweep in increasing lexicographic order, in place."""
    dr = dim * r
    den = 1.0 + tau * (kappa + dr)
    a0 = (1.0 + tau * (kappa - dr)) / den
    af = tau / den
    an = tau * r / den
    if dim == 1:
        for i in range(M):
            im = i - 1 if i > 0 else M - 1
            ip = i + 1 if i < M - 1 else 0
            old = u[i]
            u[i] = a0 * old + af * _f(kind, th, thc, old) + an * (u[im] + u[ip])
    else:
        for i in range(M):
            im = i - 1 if i > 0 else M - 1
            ip = i + 1 if i < M - 1 else 0
            row = i * M
            rowm = im * M
            rowp = ip * M
            for j in range(M):
                jm = j - 1 if j > 0 else M - 1
                jp = j + 1 if j < M - 1 else 0
                k = row + j
                old = u[k]
                s = u[rowm + j] + u[rowp + j] + u[row + jm] + u[row + jp]
                u[k] = a0 * old + af * _f(kind, th, thc, old) + an * s


@njit(cache=True, inline="always")
def _solve_point(eta, c1, tau, kind, th, thc, guess, beta, tol, max_iter, solver, p_cubic):
    """Root of c1*xi + tau*f(xi) + eta = 0.  Returns (xi, iterations, residual, status)."""
    if solver == SOLVER_CARDANO:
        q = -eta / tau
        disc = 0.25 * q * q + p_cubic * p_cubic * p_cubic / 27.0
        if not disc > 0.0:
            return 0.0, 0, math.inf, DISCRIMINANT_FAILED
        s = math.sqrt(disc)
        a = -0.5 * q + s if q <= 0.0 else -0.5 * q - s
        ucb = math.copysign(abs(a) ** (1.0 / 3.0), a)
        xi = 0.0 if ucb == 0.0 else ucb - p_cubic / (3.0 * ucb)
        g = c1 * xi + tau * _f(kind, th, thc, xi) + eta
        return xi, 0, abs(g), OK
    xi = guess
    g = c1 * xi + tau * _f(kind, th, thc, xi) + eta
    it = 0
    while abs(g) > tol:
        if it >= max_iter:
            return xi, it, abs(g), NEWTON_FAILED
        dg = c1 + tau * _fp(kind, th, thc, xi)
        xi -= g / dg
        if xi > beta:
            xi = beta
        elif xi < -beta:
            xi = -beta
        g = c1 * xi + tau * _f(kind, th, thc, xi) + eta
        it += 1
    return xi, it, abs(g), OK


@njit(cache=True)
def backward_sweep(u, M, dim, tau, r, kappa, kind, th, thc, beta, tol, max_iter, solver, zero_guess):
    """Implicit adjoint sweep in decreasing lexicographic order, in place.

    Returns ``(status, failed_index, max_iterations, total_iterations, worst_residual)``.
    """
    dr = dim * r
    c1 = -1.0 + tau * (kappa - dr)
    c0 = 1.0 - tau * (kappa + dr)
    cn = tau * r
    # cubic coefficient for the double well: xi^3 + p xi + q = 0
    p_cubic = 1.0 / tau + dr - kappa - 1.0
    max_it = 0
    tot_it = 0
    worst = 0.0
    if dim == 1:
        for i in range(M - 1, -1, -1):
            im = i - 1 if i > 0 else M - 1
            ip = i + 1 if i < M - 1 else 0
            old = u[i]
            eta = c0 * old + cn * (u[im] + u[ip])
            guess = 0.0 if zero_guess else old
            xi, it, res, st = _solve_point(eta, c1, tau, kind, th, thc, guess, beta, tol, max_iter, solver, p_cubic)
            if st != OK:
                return st, i, max(max_it, it), tot_it + it, res
            u[i] = xi
            tot_it += it
            if it > max_it:
                max_it = it
            if res > worst:
                worst = res
    else:
        for i in range(M - 1, -1, -1):
            im = i - 1 if i > 0 else M - 1
            ip = i + 1 if i < M - 1 else 0
            row = i * M
            rowm = im * M
            rowp = ip * M
            for j in range(M - 1, -1, -1):
                jm = j - 1 if j > 0 else M - 1
                jp = j + 1 if j < M - 1 else 0
                k = row + j
                old = u[k]
                eta = c0 * old + cn * (u[rowm + j] + u[rowp + j] + u[row + jm] + u[row + jp])
                guess = 0.0 if zero_guess else old
                xi, it, res, st = _solve_point(eta, c1, tau, kind, th, thc, guess, beta, tol, max_iter, solver, p_cubic)
                if st != OK:
                    return st, k, max(max_it, it), tot_it + it, res
                u[k] = xi
                tot_it += it
                if it > max_it:
                    max_it = it
                if res > worst:
                    worst = res
    return OK, -1, max_it, tot_it, worst


def warmup():
    """Trigger compilation for both dimensions and all potential kinds."""
    for dim in (1, 2):
        u = np.zeros(4**dim)
        for kind in (0, 1, 2):
            forward_sweep(u, 4, dim, 1e-3, 1.0, 2.0, kind, 0.8, 1.6)
            backward_sweep(u, 4, dim, 1e-3, 1.0, 2.0, kind, 0.8, 1.6, 0.95, 1e-12, 50, 0, False)
