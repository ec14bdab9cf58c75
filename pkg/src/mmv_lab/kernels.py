"""Martingale-density solvers.

A martingale density for a market is a square-integrable g with E[g] = 1 and
E[g f] = 0 for every attainable excess payoff f. Two distinguished elements
are computed here:

* the variance-optimal signed density (least E[g^2] over the affine family),
  which stationarity places in span{1, basis}: writing g = a + sum_j c_j b_j
  against an orthonormal basis b_j of the generator span reduces the moment
  conditions to a dense (1+r)x(1+r) normal system whose solution is
  g = (1 - sum_j m_j b_j) / (1 - |m|^2) with m_j = E[b_j]; the family is
  empty exactly when the constant 1 lies in the span (|m| = 1);

* the variance-optimal non-negative density, the same least-norm problem with
  g >= 0 added, solved by a primal active-set method on the weighted
  coordinates u_i = sqrt(p_i) g_i (phase-1 feasibility via non-negative least
  squares). An exhaustive active-set enumeration doubles as fallback and as
  an independent oracle for small spaces.

Second moments of these densities are what the portfolio solvers consume:
E[g^2] of the signed solution prices the mean-variance problem, E[g^2] of
the non-negative one prices the monotone variant, and they agree exactly
when the signed solution happens to be non-negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from . import market as mk
from .errors import InfeasibleConstraints, InfeasibleQP, OptimizerStalled, ZeroMeanKernel

CONSTRAINT_TOL = 1e-9
COMP_SLACK_TOL = 1e-8
NEGATIVITY_TOL = 1e-9
CLAMP_TOL = 1e-12
ENUMERATION_LIMIT = 20


@dataclass(frozen=True, eq=False)
class Kernel:
    """Unit-mean pricing density together with its second moment."""

    density: mk.Payoff
    second_moment: float

    def __post_init__(self):
        mean = mk.expectation(self.density)
        if abs(mean - 1.0) > CONSTRAINT_TOL:
            raise ValueError(f"kernel density must have unit mean, got {mean!r}")
        p = self.density.space.probabilities
        second = float(np.dot(p, self.density.values ** 2))
        if abs(second - self.second_moment) > CONSTRAINT_TOL * max(1.0, second):
            raise ValueError("stored second moment disagrees with the density")
        if self.second_moment < 1.0 - 1e-12:
            raise ValueError("second moment of a unit-mean density cannot be below 1")


@dataclass(frozen=True, eq=False)
class KernelReport:
    kernel: Kernel
    min_density: float
    kkt_residual: float
    active_set_size: int


def _weighted_constraints(market: mk.MarketModel, basis: list[mk.Payoff]):
    """Rows of the moment conditions in weighted coordinates: C u = d."""
    sqrt_p = np.sqrt(market.space.probabilities)
    rows = [sqrt_p]
    for b in basis:
        rows.append(sqrt_p * b.values)
    c = np.vstack(rows)
    d = np.zeros(len(rows))
    d[0] = 1.0
    return c, d, sqrt_p


def _moment_residual(market: mk.MarketModel, basis: list[mk.Payoff], density: np.ndarray) -> float:
    p = market.space.probabilities
    res = abs(float(np.dot(p, density)) - 1.0)
    for b in basis:
        res = max(res, abs(float(np.dot(p, density * b.values))))
    return res


def solve_vsmm(market: mk.MarketModel) -> KernelReport:
    """Least-second-moment signed martingale density, by the normal equations.

    Raises InfeasibleConstraints when the constant payoff already lies in the
    generator span, in which case no density can have unit mean and price all
    generators at zero.
    """
    basis = mk.attainable_basis(market)
    p = market.space.probabilities
    if not basis:
        density = np.ones(market.space.n_atoms)
        kernel = Kernel(mk.Payoff(market.space, density), 1.0)
        return KernelReport(kernel, 1.0, 0.0, 0)
    bmat = np.column_stack([b.values for b in basis])
    means = bmat.T @ p  # E[b_j], the only data the normal system needs
    denom = 1.0 - float(means @ means)
    if denom <= 1e-12:
        raise InfeasibleConstraints(
            "no signed martingale density exists: the constant payoff lies in "
            "the generator span (projection residual "
            f"{max(denom, 0.0):.3e})",
            combination=means,
            residual=max(denom, 0.0),
        )
    density = (1.0 - bmat @ means) / denom
    second = float(np.dot(p, density * density))
    kkt = _moment_residual(market, basis, density)
    scale = float(np.max(np.abs(density)))
    active = int(np.count_nonzero(np.abs(density) <= CLAMP_TOL * max(scale, 1.0)))
    kernel = Kernel(mk.Payoff(market.space, density), second)
    return KernelReport(kernel, float(density.min()), kkt, active)


def _report_nonneg(
    market: mk.MarketModel,
    basis: list[mk.Payoff],
    density: np.ndarray,
    dual_violation: float,
    comp_slack: float,
) -> KernelReport:
    p = market.space.probabilities
    density = np.where(density <= CLAMP_TOL, 0.0, density)
    density = density / float(np.dot(p, density))  # restore exact unit mean after clamping
    second = float(np.dot(p, density * density))
    kkt = max(_moment_residual(market, basis, density), dual_violation, comp_slack)
    kernel = Kernel(mk.Payoff(market.space, density), second)
    active = int(np.count_nonzero(density == 0.0))
    return KernelReport(kernel, float(density.min()), kkt, active)


def solve_nonneg_kernel(market: mk.MarketModel) -> KernelReport:
    """Least-second-moment non-negative martingale density.

    Primal active-set iteration on min ||u||^2 s.t. C u = d, u >= 0 in
    weighted coordinates. Phase 1 (feasibility and starting point) is
    non-negative least squares on ||C u - d||; a positive phase-1 residual
    certifies that the market admits no non-negative martingale density.
    """
    basis = mk.attainable_basis(market)
    if not basis:
        density = np.ones(market.space.n_atoms)
        kernel = Kernel(mk.Payoff(market.space, density), 1.0)
        return KernelReport(kernel, 1.0, 0.0, 0)
    c, d, sqrt_p = _weighted_constraints(market, basis)
    n = market.space.n_atoms

    u, phase1_residual = nnls(c, d)
    if phase1_residual > CONSTRAINT_TOL:
        raise InfeasibleQP(
            "no non-negative martingale density exists for this market "
            f"(phase-1 residual {phase1_residual:.3e})",
            residual=float(phase1_residual),
        )

    working = u <= CLAMP_TOL
    max_iter = 100 + 20 * n
    for _ in range(max_iter):
        free = ~working
        c_free = c[:, free]
        # min-norm point of the constraint set with the working atoms pinned;
        # consistent by construction since the current iterate satisfies C u = d
        target_free, _, _, _ = np.linalg.lstsq(c_free, d, rcond=None)
        target = np.zeros(n)
        target[free] = target_free
        step = target - u
        if float(np.max(np.abs(step))) <= 1e-13:
            # stationary on the working set: check multiplier signs
            nu, _, _, _ = np.linalg.lstsq(c_free.T, u[free], rcond=None)
            reduced = c.T @ nu
            mu = -reduced[working]
            if mu.size == 0 or float(mu.min()) >= -1e-10:
                dual_violation = 0.0 if mu.size == 0 else max(0.0, -float(mu.min()))
                comp_slack = float(np.max(np.abs(u * (u - reduced))))
                density = u / sqrt_p
                return _report_nonneg(market, basis, density, dual_violation, comp_slack)
            drop = np.flatnonzero(working)[int(np.argmin(mu))]
            working[drop] = False
            continue
        blocking = (step < 0.0) & free
        if np.any(blocking):
            ratios = -u[blocking] / step[blocking]
            alpha = min(1.0, float(ratios.min()))
        else:
            alpha = 1.0
        u = np.maximum(u + alpha * step, 0.0)
        if alpha < 1.0:
            idx = np.flatnonzero(blocking)
            u[idx[np.argmin(ratios)]] = 0.0
            working = u <= CLAMP_TOL
    if n <= ENUMERATION_LIMIT:
        density, _ = enumerate_nonneg_kernel(market)
        return _report_nonneg(market, basis, density, 0.0, 0.0)
    raise OptimizerStalled(
        "active-set iteration did not converge",
        diagnostics={"iterations": max_iter, "atoms": n},
    )


def enumerate_nonneg_kernel(market: mk.MarketModel) -> tuple[np.ndarray, float]:
    """Exhaustive active-set oracle: try all 2^n pinned-to-zero patterns.

    Returns the best feasible density and its second moment. Only sensible
    for small atom counts; used as the fallback and as the test oracle.
    """
    basis = mk.attainable_basis(market)
    n = market.space.n_atoms
    if n > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration limited to {ENUMERATION_LIMIT} atoms, got {n}")
    if not basis:
        return np.ones(n), 1.0
    c, d, sqrt_p = _weighted_constraints(market, basis)
    best_obj = np.inf
    best_u = None
    for mask in range(1 << n):
        free = np.array([(mask >> i) & 1 == 0 for i in range(n)])
        if not free.any():
            continue
        c_free = c[:, free]
        u_free, _, _, _ = np.linalg.lstsq(c_free, d, rcond=None)
        if float(np.linalg.norm(c_free @ u_free - d)) > CONSTRAINT_TOL:
            continue
        if u_free.size and float(u_free.min()) < -NEGATIVITY_TOL:
            continue
        obj = float(u_free @ u_free)
        if obj < best_obj - 1e-15:
            best_obj = obj
            u = np.zeros(n)
            u[free] = np.maximum(u_free, 0.0)
            best_u = u
    if best_u is None:
        raise InfeasibleQP("no non-negative martingale density exists for this market")
    return best_u / sqrt_p, best_obj


def normalize(raw: mk.Payoff) -> tuple[Kernel, float, float]:
    """Scale a raw kernel to unit mean; returns (kernel, mean, variance)."""
    m1 = mk.expectation(raw)
    scale = float(np.dot(raw.space.probabilities, np.abs(raw.values)))
    if abs(m1) <= 1e-12 * max(scale, 1.0):
        raise ZeroMeanKernel("raw kernel has zero mean and cannot be normalized")
    m2 = mk.variance(raw)
    density = mk.Payoff(raw.space, raw.values / m1)
    p = raw.space.probabilities
    second = float(np.dot(p, density.values ** 2))
    return Kernel(density, second), m1, m2
