"""Stabilized semi-implicit baseline (SSI1) solved by FFT diagonalization.

    (u^{n+1} - u^n)/tau = eps^2 Lap_h u^{n+1} + f(u^n) - kappa (u^{n+1} - u^n)

The periodic 5-point Laplacian is diagonal in the discrete Fourier basis with
eigenvalues ``sum_axes (2 cos(2 pi k / M) - 2) / h^2``.
"""

from __future__ import annotations

import numpy as np

from .grid import Field, Grid
from .potentials import Potential


class SpectralPlan:
    """Laplacian eigenvalues laid out for ``numpy.fft.rfftn`` of a grid field."""

    def __init__(self, grid: Grid):
        self.grid = grid
        M, h = grid.M, grid.h
        full = (2.0 * np.cos(2.0 * np.pi * np.fft.fftfreq(M)) - 2.0) / h**2
        half = (2.0 * np.cos(2.0 * np.pi * np.fft.rfftfreq(M)) - 2.0) / h**2
        if grid.dim == 1:
            lam = half
        else:
            lam = full[:, None] + half[None, :]
        self.eigenvalues = lam

    def forward(self, data: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(data.reshape(self.grid.shape))

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(coeffs, s=self.grid.shape, axes=tuple(range(self.grid.dim))).ravel()


def ssi1_update(data: np.ndarray, plan: SpectralPlan, tau: float, epsilon: float, kappa: float, p: Potential) -> np.ndarray:
    rhs = (1.0 / tau + kappa) * data + p.f(data)
    denom = 1.0 / tau + kappa - epsilon**2 * plan.eigenvalues
    return plan.inverse(plan.forward(rhs) / denom)


def step_ssi1(u: Field, cfg, p: Potential, plan: SpectralPlan | None = None) -> Field:
    """One SSI1 step; ``cfg`` is a :class:`~saulyev_ac.schemes.SchemeConfig`."""
    plan = plan if plan is not None else SpectralPlan(u.grid)
    if plan.grid != u.grid:
        raise ValueError("spectral plan built for a different grid")
    kappa = cfg.resolved_kappa(p)
    return Field(u.grid, ssi1_update(u.data, plan, cfg.tau, cfg.epsilon, kappa, p))
