"""Periodic Saul'yev sweep schemes for the Allen-Cahn equation.

ESS1, ESS1-adjoint, SS2 and SS2-adjoint advance ``u_t = eps^2 Lap u + f(u)``
on periodic grids with O(N) work per step while keeping the discrete maximum
bound and the discrete energy decay.  An FFT-based stabilized semi-implicit
scheme (SSI1) is included as a baseline.
"""

__version__ = "0.1.0"

from .grid import Field, Grid, GradientField, forward_gradient, inner_product, l2_norm, laplacian, laplacian_split, sup_norm, wrap
from .potentials import Potential, compute_beta, compute_kappa
from .solvers import NewtonConfig, SolveStats, cardano_real_root, newton_scalar
from .schemes import (
    Scheme,
    SchemeConfig,
    Stepper,
    Trajectory,
    max_stable_tau,
    simulate,
    step_ess1,
    step_ess1_adjoint,
    step_ss2,
    step_ss2_adjoint,
)
from .spectral import SpectralPlan, step_ssi1
from .diagnostics import StepReport, discrete_energy, kappa_norm, monitor
