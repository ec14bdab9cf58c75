"""Jump-diffusion market: consistency threshold and Monte Carlo verification.

The risky asset carries drift mu, volatility sigma and compound-Poisson jumps
with intensity lam and a finite relative-jump-size law Q. The candidate
pricing kernel over [0, T] is

    M(T) = exp(-a sigma B(T) - a^2 sigma^2 T / 2 + a lam xi1 T)
           * prod_i (1 - a Q_i),

with loading a = (mu - r + lam xi1) / (sigma^2 + lam xi2) where xi1 = E[Q]
and xi2 = E[Q^2]. Its mean is 1 and its second moment is
exp(a^2 (sigma^2 + lam xi2) T) in closed form. A jump factor 1 - a Q_i goes
negative exactly when Q_i exceeds the threshold 1/a, so the kernel's sign is
(-1)^(number of above-threshold jumps): the fraction of negative-kernel
paths is an odd-count probability, (1 - exp(-2 lam w T)) / 2 with w the
Q-mass above the threshold. The simulator estimates the kernel moments, the
budget identity E[M(T) X(T)] = e^{rT} x0 for the candidate optimal wealth
X(T) = e^{rT} x0 + E[M(T)^2]/theta - M(T)/theta, and the sign statistics,
against those closed forms.

Reproducibility: each path owns a counter-based Philox stream keyed by
(seed, path index), paths are processed in fixed-size chunks whatever the
worker count, and every reduction runs over full preallocated arrays, so
reports are bit-identical across worker counts.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMarket, InputError, ZeroRiskPremium

CHUNK = 4096
STEP_GUARD = 64  # warn when dt exceeds horizon / STEP_GUARD
THREADS_ENV = "MMV_LAB_THREADS"


@dataclass(frozen=True, eq=False)
class JumpDiffusionParams:
    """Market coefficients and the finite jump-size law."""

    r: float
    mu: float
    sigma: float
    intensity: float
    jump_sizes: np.ndarray
    jump_weights: np.ndarray
    horizon: float

    def __post_init__(self):
        sizes = np.asarray(self.jump_sizes, dtype=float)
        weights = np.asarray(self.jump_weights, dtype=float)
        if sizes.ndim != 1 or weights.shape != sizes.shape:
            raise InputError("jump sizes and weights must be matching vectors")
        if sizes.size == 0:
            raise InputError("the jump law needs at least one atom")
        if not (np.all(np.isfinite(sizes)) and np.all(np.isfinite(weights))):
            raise InputError("jump law entries must be finite")
        if np.any(sizes <= -1.0):
            raise InputError("jump sizes must stay above -1 (limited liability)")
        if np.any(weights <= 0.0):
            raise InputError("jump weights must be strictly positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise InputError("jump weights must sum to 1 within 1e-12")
        if self.sigma < 0.0:
            raise InputError("sigma must be non-negative")
        if self.intensity < 0.0:
            raise InputError("intensity must be non-negative")
        if self.horizon <= 0.0:
            raise InputError("horizon must be positive")
        sizes = sizes.copy()
        weights = weights.copy()
        sizes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "jump_sizes", sizes)
        object.__setattr__(self, "jump_weights", weights)

    @property
    def xi1(self) -> float:
        """E[Q], first moment of the jump-size law."""
        return float(np.dot(self.jump_weights, self.jump_sizes))

    @property
    def xi2(self) -> float:
        """E[Q^2], second moment of the jump-size law."""
        return float(np.dot(self.jump_weights, self.jump_sizes ** 2))

    @property
    def has_positive_premium(self) -> bool:
        return self.mu - self.r + self.intensity * self.xi1 > 0.0


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    n_steps: int
    seed: int

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise InputError("n_paths and n_steps must be at least 1")


@dataclass(frozen=True)
class ValueWithError:
    value: float
    se: float


@dataclass(frozen=True, eq=True)
class SimReport:
    kernel_mean: ValueWithError
    kernel_second_moment: ValueWithError
    frac_negative_kernel: float
    budget_check: ValueWithError
    mv_value_estimate: ValueWithError
    kernel_loading: float
    jump_threshold: float | None
    analytic_second_moment: float
    sign_oracle_frac: float
    sign_oracle_prob: float
    n_paths: int
    n_steps: int
    seed: int
    warnings: tuple[str, ...] = ()
    path_kernel: np.ndarray | None = field(default=None, compare=False)
    path_wealth: np.ndarray | None = field(default=None, compare=False)


def kernel_loading(params: JumpDiffusionParams) -> float:
    """a = (mu - r + lam xi1) / (sigma^2 + lam xi2)."""
    denom = params.sigma ** 2 + params.intensity * params.xi2
    if denom == 0.0:
        raise DegenerateMarket("no diffusion and no jump variance: loading undefined")
    return (params.mu - params.r + params.intensity * params.xi1) / denom


def jump_threshold(params: JumpDiffusionParams) -> float:
    """Largest consistent jump size, (sigma^2 + lam xi2)/(mu - r + lam xi1).

    A jump atom strictly above this value flips the kernel's sign and breaks
    the equivalence of the two preference optima.
    """
    premium = params.mu - params.r + params.intensity * params.xi1
    if premium == 0.0:
        raise ZeroRiskPremium("adjusted risk premium is zero: threshold undefined")
    return (params.sigma ** 2 + params.intensity * params.xi2) / premium


def analytic_second_moment(params: JumpDiffusionParams) -> float:
    a = kernel_loading(params)
    return math.exp(
        a * a * (params.sigma ** 2 + params.intensity * params.xi2) * params.horizon
    )


def negative_sign_probability(params: JumpDiffusionParams) -> float:
    """P(odd number of above-threshold jumps) = (1 - exp(-2 lam w T)) / 2."""
    a = kernel_loading(params)
    flip_mass = float(params.jump_weights[1.0 - a * params.jump_sizes < 0.0].sum())
    if flip_mass == 0.0:
        return 0.0
    rate = 2.0 * params.intensity * flip_mass * params.horizon
    return 0.5 * (1.0 - math.exp(-rate))


def _resolve_workers(requested: int | None) -> int:
    cap = os.environ.get(THREADS_ENV)
    cap_value = None
    if cap is not None:
        try:
            cap_value = max(1, int(cap))
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {cap!r}")
    if requested is None:
        return cap_value or 1
    workers = max(1, int(requested))
    if cap_value is not None:
        workers = min(workers, cap_value)
    return workers


def _simulate_chunk(
    params: JumpDiffusionParams,
    config: SimConfig,
    lo: int,
    hi: int,
    a: float,
    out_kernel: np.ndarray,
    out_flips: np.ndarray,
) -> None:
    dt = params.horizon / config.n_steps
    diff_scale = a * params.sigma * math.sqrt(dt)
    drift = (
        -0.5 * a * a * params.sigma ** 2 + a * params.intensity * params.xi1
    ) * params.horizon
    lam_dt = params.intensity * dt
    cum_w = np.cumsum(params.jump_weights)
    cum_w[-1] = 1.0
    factors = 1.0 - a * params.jump_sizes
    seed = np.uint64(config.seed % (1 << 64))
    for idx in range(lo, hi):
        bitgen = np.random.Philox(key=np.array([seed, np.uint64(idx)], dtype=np.uint64))
        rng = np.random.Generator(bitgen)
        z = rng.standard_normal(config.n_steps)
        counts = rng.poisson(lam_dt, config.n_steps)
        total = int(counts.sum())
        log_part = drift - diff_scale * float(z.sum())
        jump_part = 1.0
        flips = 0
        if total:
            u = rng.random(total)
            marks = np.searchsorted(cum_w, u, side="right")
            f = factors[marks]
            jump_part = float(np.prod(f))
            flips = int(np.count_nonzero(f < 0.0))
        out_kernel[idx] = math.exp(log_part) * jump_part
        out_flips[idx] = flips


def simulate(
    params: JumpDiffusionParams,
    config: SimConfig,
    x0: float,
    pref_params,
    workers: int | None = None,
    collect_paths: bool = False,
) -> SimReport:
    """Monte Carlo check of the kernel moments, budget and sign statistics.

    Deterministic for a given (params, config, x0, theta): worker count only
    changes who fills which chunk of the preallocated arrays.
    """
    theta = pref_params.theta
    a = kernel_loading(params)
    m2 = analytic_second_moment(params)
    try:
        threshold = jump_threshold(params)
    except ZeroRiskPremium:
        threshold = None

    warnings: list[str] = []
    dt = params.horizon / config.n_steps
    if dt > params.horizon / STEP_GUARD:
        warnings.append(
            f"coarse grid: dt = {dt:g} exceeds horizon/{STEP_GUARD}; "
            "kernel statistics are exact in law but path detail is crude"
        )
    if not params.has_positive_premium:
        warnings.append("adjusted risk premium is not positive; loading flips sign")

    n = config.n_paths
    kernel = np.empty(n)
    flips = np.empty(n, dtype=np.int64)
    n_workers = _resolve_workers(workers)
    bounds = [(lo, min(lo + CHUNK, n)) for lo in range(0, n, CHUNK)]
    if n_workers == 1 or len(bounds) == 1:
        for lo, hi in bounds:
            _simulate_chunk(params, config, lo, hi, a, kernel, flips)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            futures = [
                pool.submit(_simulate_chunk, params, config, lo, hi, a, kernel, flips)
                for lo, hi in bounds
            ]
            for fut in futures:
                fut.result()

    growth = math.exp(params.r * params.horizon) * x0
    wealth = growth + m2 / theta - kernel / theta
    sqrt_n = math.sqrt(n)

    def with_se(sample: np.ndarray) -> ValueWithError:
        return ValueWithError(float(sample.mean()), float(sample.std(ddof=1) / sqrt_n))

    kernel_sq = kernel * kernel
    budget = with_se(kernel * wealth)
    mean_w = float(wealth.mean())
    var_w = float(wealth.var(ddof=1))
    mv_value = mean_w - 0.5 * theta * var_w
    # delta-method standard error for E[X] - theta/2 Var[X] via (X, X^2) moments
    g1 = 1.0 + theta * mean_w
    g2 = -0.5 * theta
    cov = np.cov(np.stack([wealth, wealth * wealth]), ddof=1)
    mv_var = g1 * g1 * cov[0, 0] + 2.0 * g1 * g2 * cov[0, 1] + g2 * g2 * cov[1, 1]
    mv_se = math.sqrt(max(mv_var, 0.0)) / sqrt_n

    negative = kernel < 0.0
    predicted = (flips % 2 == 1) & (kernel != 0.0)
    report = SimReport(
        kernel_mean=with_se(kernel),
        kernel_second_moment=with_se(kernel_sq),
        frac_negative_kernel=float(np.count_nonzero(negative) / n),
        budget_check=budget,
        mv_value_estimate=ValueWithError(mv_value, float(mv_se)),
        kernel_loading=a,
        jump_threshold=threshold,
        analytic_second_moment=m2,
        sign_oracle_frac=float(np.count_nonzero(predicted) / n),
        sign_oracle_prob=negative_sign_probability(params),
        n_paths=n,
        n_steps=config.n_steps,
        seed=config.seed,
        warnings=tuple(warnings),
        path_kernel=kernel if collect_paths else None,
        path_wealth=wealth if collect_paths else None,
    )
    return report
