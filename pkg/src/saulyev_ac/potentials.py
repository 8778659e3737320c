"""Bulk potentials F, nonlinearities f = -F', the bound beta and kappa.

Two potentials are supported: the double well ``poly`` with
``F(u) = (u^2 - 1)^2 / 4`` and the Flory-Huggins ``log`` potential with
temperatures ``theta < theta_c``.  A third kind, ``none`` (f = 0), turns the
schemes into plain Saul'yev diffusion solvers and is mostly useful in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

POLY = "poly"
LOG = "log"
NONE = "none"

# integer codes understood by the compiled sweep kernels
KIND_CODES = {NONE: 0, POLY: 1, LOG: 2}

DEFAULT_THETA = 0.8
DEFAULT_THETA_C = 1.6


class PotentialDomainError(ValueError):
    """Logarithmic potential evaluated outside (-1, 1)."""


@dataclass(frozen=True)
class Potential:
    kind: str
    theta: float = 0.0
    theta_c: float = 0.0
    beta: float = 1.0
    kappa_default: float = 0.0

    @classmethod
    def poly(cls) -> "Potential":
        return cls(POLY, beta=1.0, kappa_default=2.0)

    @classmethod
    def log(cls, theta: float = DEFAULT_THETA, theta_c: float = DEFAULT_THETA_C) -> "Potential":
        if not (0.0 < theta < theta_c):
            raise ValueError(f"log potential needs 0 < theta < theta_c, got {theta}, {theta_c}")
        p = cls(LOG, float(theta), float(theta_c))
        beta = compute_beta(p)
        p = cls(LOG, float(theta), float(theta_c), beta)
        return cls(LOG, float(theta), float(theta_c), beta, compute_kappa(p))

    @classmethod
    def none(cls) -> "Potential":
        return cls(NONE, beta=1.0, kappa_default=0.0)

    @classmethod
    def parse(cls, token: str) -> "Potential":
        """Build from a CLI token: ``poly``, ``log`` or ``log:theta,theta_c``."""
        token = token.strip().lower()
        if token == POLY:
            return cls.poly()
        if token == NONE:
            return cls.none()
        if token == LOG:
            return cls.log()
        if token.startswith(LOG + ":"):
            try:
                theta, theta_c = (float(s) for s in token[len(LOG) + 1 :].split(","))
            except ValueError:
                raise ValueError(f"expected log:theta,theta_c, got {token!r}") from None
            return cls.log(theta, theta_c)
        raise ValueError(f"unknown potential {token!r}")

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    @property
    def token(self) -> str:
        if self.kind == LOG:
            return f"log:{self.theta!r},{self.theta_c!r}"
        return self.kind

    def f(self, xi):
        return f_eval(self, xi)

    def F(self, xi):
        return F_eval(self, xi)

    def fprime(self, xi):
        return f_prime(self, xi)


def _check_log_domain(xi) -> None:
    if np.any(np.abs(xi) >= 1.0) or np.any(np.isnan(xi)):
        bad = np.max(np.abs(xi))
        raise PotentialDomainError(f"log potential needs |u| < 1, got |u| = {bad}")


def f_eval(p: Potential, xi):
    """Nonlinearity f = -F'.  Works on scalars and arrays."""
    if p.kind == POLY:
        return xi - xi**3
    if p.kind == LOG:
        _check_log_domain(xi)
        return 0.5 * p.theta * np.log((1.0 - xi) / (1.0 + xi)) + p.theta_c * xi
    return 0.0 * xi


def F_eval(p: Potential, xi):
    if p.kind == POLY:
        return 0.25 * (xi * xi - 1.0) ** 2
    if p.kind == LOG:
        _check_log_domain(xi)
        return 0.5 * p.theta * ((1.0 + xi) * np.log1p(xi) + (1.0 - xi) * np.log1p(-xi)) - 0.5 * p.theta_c * xi * xi
    return 0.0 * xi


def f_prime(p: Potential, xi):
    if p.kind == POLY:
        return 1.0 - 3.0 * xi * xi
    if p.kind == LOG:
        _check_log_domain(xi)
        return p.theta_c - p.theta / (1.0 - xi * xi)
    return 0.0 * xi


def compute_beta(p: Potential) -> float:
    """Positive bound beta with f(beta) = 0.

    For the log potential the root lies in
    ``(sqrt(1 - theta/(2 theta_c - theta)), 1)``; it is bracketed by
    bisection down to 1e-14 and polished with a couple of Newton steps.
    """
    if p.kind != LOG:
        return 1.0
    th, thc = p.theta, p.theta_c

    def f(x):
        return 0.5 * th * math.log((1.0 - x) / (1.0 + x)) + thc * x

    lo = math.sqrt(1.0 - th / (2.0 * thc - th))
    if f(lo) <= 0.0:
        # f peaks at sqrt(1 - theta/theta_c) and is positive there
        lo = math.sqrt(1.0 - th / thc)
    hi = math.nextafter(1.0, 0.0)
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(3):
        d = thc - th / (1.0 - x * x)
        step = f(x) / d
        if not math.isfinite(step):
            break
        x -= step
    return x


def compute_kappa(p: Potential) -> float:
    """max |f'| on [-beta, beta].

    f' depends on xi only through xi^2 and is monotone in it for both
    potentials, so the extremes sit at the centre and the endpoints.
    """
    if p.kind == NONE:
        return 0.0
    if p.kind == POLY:
        return max(1.0, abs(1.0 - 3.0 * p.beta**2))
    return max(abs(p.theta_c - p.theta), abs(p.theta_c - p.theta / (1.0 - p.beta**2)))
