"""Portfolio selection under mean-variance and monotone mean-variance
preferences on finite-scenario markets, with a jump-diffusion consistency
checker. See the README for the CLI and service entry points."""

__version__ = "0.1.0"

from .errors import (
    DegenerateMarket,
    DimensionMismatch,
    InfeasibleConstraints,
    InfeasibleQP,
    InputError,
    MmvLabError,
    ModelError,
    NegativeDensity,
    NonPositiveKernel,
    NotAMartingaleDensity,
    OptimizerStalled,
    ZeroMeanKernel,
    ZeroRiskPremium,
)
from .jumps import JumpDiffusionParams, SimConfig, SimReport, simulate
from .kernels import Kernel, KernelReport, solve_nonneg_kernel, solve_vsmm
from .market import (
    MarketModel,
    Payoff,
    ScenarioSpace,
    attainable_basis,
    expectation,
    is_attainable,
    load_market,
    load_payoff,
    variance,
)
from .preferences import (
    MmvEvaluation,
    PreferenceParams,
    mmv_utility,
    monotone_domain_check,
    mv_utility,
    penalized_expectation,
)
from .solvers import (
    ConsistencyReport,
    MmvSolution,
    MvSolution,
    bound_via_kernel,
    check_consistency,
    solve_complete_mv,
    solve_mmv,
    solve_mv,
    solve_quadratic_hedge,
)

__all__ = [
    "__version__",
    "MmvLabError",
    "InputError",
    "ModelError",
    "DimensionMismatch",
    "NonPositiveKernel",
    "ZeroMeanKernel",
    "NegativeDensity",
    "NotAMartingaleDensity",
    "InfeasibleConstraints",
    "InfeasibleQP",
    "ZeroRiskPremium",
    "DegenerateMarket",
    "OptimizerStalled",
    "ScenarioSpace",
    "Payoff",
    "MarketModel",
    "expectation",
    "variance",
    "attainable_basis",
    "is_attainable",
    "load_market",
    "load_payoff",
    "Kernel",
    "KernelReport",
    "solve_vsmm",
    "solve_nonneg_kernel",
    "PreferenceParams",
    "MmvEvaluation",
    "mv_utility",
    "mmv_utility",
    "penalized_expectation",
    "monotone_domain_check",
    "MvSolution",
    "MmvSolution",
    "ConsistencyReport",
    "solve_complete_mv",
    "solve_quadratic_hedge",
    "solve_mv",
    "solve_mmv",
    "check_consistency",
    "bound_via_kernel",
    "JumpDiffusionParams",
    "SimConfig",
    "SimReport",
    "simulate",
]
