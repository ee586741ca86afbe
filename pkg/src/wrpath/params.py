"""Discretization parameters for the wavefront.

Strict mode follows the theoretical spacing bound delta = (eps')^(n^2) * eps' / (2*mu)
evaluated in high precision and rounded to float; it underflows for n beyond
roughly 10 and then raises. Practical mode substitutes the heuristic spacing
delta = epsilon / (2*n*mu*eta) and is the default for real inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath

from .mesh import MeshStats


class ParamUnderflowError(ValueError):
    """Strict-mode spacing fell below the smallest positive float."""


@dataclass(frozen=True)
class DiscretizationParams:
    epsilon: float
    delta: float  # angular ray spacing (radians)
    sigma: float  # linear spacing of critical-segment rays (length units)
    eps_prime: float
    mode: str  # "strict" | "practical"
    eta: float
    n: int
    mu: float

    def __post_init__(self):
        if not (self.delta > 0 and self.sigma > 0):
            raise ValueError("delta and sigma must be positive")


def error_budget(stats: MeshStats, epsilon: float, eta: float) -> float:
    """eps' = min(eps / (n^3 mu eta), l_min / (4 n w_max l_max))."""
    n = stats.n
    term_a = epsilon / (n**3 * stats.mu * eta)
    term_b = stats.l_min / (4.0 * n * stats.w_max * stats.l_max)
    return min(term_a, term_b)


def compute_params(stats: MeshStats, epsilon: float, mode: str = "practical") -> DiscretizationParams:
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    if mode not in ("strict", "practical"):
        raise ValueError(f"unknown mode {mode!r}")
    eta = 1.0 + 1.0 / math.cos(stats.theta_cm)
    eps_prime = error_budget(stats, epsilon, eta)
    if eps_prime <= 0.0:
        raise ValueError("error budget collapsed to zero")

    if mode == "practical":
        delta = epsilon / (2.0 * stats.n * stats.mu * eta)
    else:
        delta = strict_delta(stats.n, stats.mu, eps_prime)

    return DiscretizationParams(
        epsilon=epsilon,
        delta=delta,
        sigma=eps_prime,
        eps_prime=eps_prime,
        mode=mode,
        eta=eta,
        n=stats.n,
        mu=stats.mu,
    )


def strict_delta(n: int, mu: float, eps_prime: float) -> float:
    """(eps')^(n^2) * eps' / (2 mu), computed at high precision then rounded.

    Raises ParamUnderflowError when the value is not representable as a
    positive float (subnormal underflow), which happens for n >= ~10.
    """
    with mpmath.workdps(60):
        value = mpmath.mpf(eps_prime) ** (n * n + 1) / (2 * mpmath.mpf(mu))
        as_float = float(value)
    if as_float <= 0.0 or not math.isfinite(as_float):
        raise ParamUnderflowError(
            f"strict spacing (eps')^{n * n}*eps'/(2*mu) = {mpmath.nstr(value, 6)} "
            "underflows double precision; use practical mode"
        )
    return as_float
