"""Mean-variance and monotone mean-variance preference functionals.

The mean-variance score of a payoff is E[X] - (theta/2) Var[X]. Its monotone
envelope is the infimum of E[X q] + (E[q^2] - 1) / (2 theta) over unit-mean
non-negative densities q. On a finite space the inner infimum has an exact
solution: the optimal density is theta * (c - X)^+ where the truncation
level c is the unique root of E[(c - X)^+] = 1/theta, a strictly increasing
piecewise-linear equation solved here by bracketed root finding. The two
scores coincide exactly on payoffs whose upside is capped at E[X] + 1/theta,
which is the domain check exposed below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import market as mk
from .errors import InputError, NegativeDensity
from .kernels import Kernel

ROOT_TOL = 1e-12
DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class PreferenceParams:
    """Risk-aversion parameter for both preference families."""

    theta: float

    def __post_init__(self):
        if not np.isfinite(self.theta) or self.theta <= 0.0:
            raise InputError(f"theta must be a positive real, got {self.theta!r}")


@dataclass(frozen=True, eq=False)
class MmvEvaluation:
    value: float
    minimizer: Kernel
    truncation_level: float
    gini_index: float


@dataclass(frozen=True, eq=False)
class DomainCheck:
    in_domain: bool
    excess: float


def mv_utility(x: mk.Payoff, params: PreferenceParams) -> float:
    """E[X] - (theta/2) Var[X]."""
    return mk.expectation(x) - 0.5 * params.theta * mk.variance(x)


def truncation_root(x: mk.Payoff, params: PreferenceParams) -> float:
    """Unique c with E[(c - X)^+] = 1/theta.

    The left bracket end (min X) gives -1/theta, the right end
    (max X + 1/theta) gives max X - E[X] >= 0, so the root is bracketed and
    the piecewise-linear monotone residual is driven below 1e-12.
    """
    p = x.space.probabilities
    vals = x.values
    inv_theta = 1.0 / params.theta

    def residual(c: float) -> float:
        return float(np.dot(p, np.maximum(c - vals, 0.0))) - inv_theta

    lo = float(vals.min())
    hi = float(vals.max()) + inv_theta
    r_hi = residual(hi)
    if abs(r_hi) <= ROOT_TOL:
        return hi
    root = brentq(residual, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    # ride the final linear segment once in case brentq stopped on interval width
    r = residual(root)
    if abs(r) > ROOT_TOL:
        slope = float(np.dot(p, (vals < root).astype(float)))
        if slope > 0.0:
            root -= r / slope
    return float(root)


def mmv_utility(x: mk.Payoff, params: PreferenceParams) -> MmvEvaluation:
    """Monotone mean-variance score with its minimizing density.

    The reported value is the penalized expectation evaluated at the reported
    minimizer, so the value/minimizer pair is internally consistent to
    machine precision.
    """
    theta = params.theta
    c = truncation_root(x, params)
    density = theta * np.maximum(c - x.values, 0.0)
    p = x.space.probabilities
    mass = float(np.dot(p, density))
    density = density / mass  # mass is 1 within the root tolerance
    second = float(np.dot(p, density * density))
    minimizer = Kernel(mk.Payoff(x.space, density), second)
    gini = second - 1.0
    value = float(np.dot(p, x.values * density)) + gini / (2.0 * theta)
    return MmvEvaluation(value, minimizer, float(c), gini)


def penalized_expectation(x: mk.Payoff, q: Kernel, params: PreferenceParams) -> float:
    """E[X q] + (E[q^2] - 1) / (2 theta) for a given non-negative density."""
    if not q.density.space.matches(x.space):
        raise InputError("payoff and density live on different scenario spaces")
    qv = q.density.values
    if float(qv.min()) < -1e-12:
        raise NegativeDensity(
            f"density has a material negative entry ({float(qv.min()):.3e})"
        )
    p = x.space.probabilities
    second = float(np.dot(p, qv * qv))
    return float(np.dot(p, x.values * qv)) + (second - 1.0) / (2.0 * params.theta)


def monotone_domain_check(x: mk.Payoff, params: PreferenceParams) -> DomainCheck:
    """Is the upside capped at E[X] + 1/theta? Reports the excess either way."""
    excess = float(x.values.max()) - mk.expectation(x) - 1.0 / params.theta
    return DomainCheck(excess <= DOMAIN_TOL, excess)
