"""Shared request handlers: the CLI calls these in-process, the HTTP app
exposes them as endpoints. Only pydantic and the core package are imported
here so the CLI stays light."""

from __future__ import annotations

import numpy as np

from .. import jumps, market as mk, preferences as pref, solvers
from . import schemas


def _market_from_payload(payload: schemas.MarketPayload) -> mk.MarketModel:
    return mk.load_market(payload.model_dump(by_alias=True))


def _mv_report(solution: solvers.MvSolution) -> schemas.MvReport:
    lagrange = None
    if solution.lagrange is not None:
        lagrange = schemas.LagrangeModel(
            d_star=solution.lagrange.d_star,
            lambda1=solution.lagrange.lambda1,
            lambda2=solution.lagrange.lambda2,
        )
    strategy = None if solution.strategy is None else [float(v) for v in solution.strategy]
    return schemas.MvReport(
        value=solution.value,
        wealth=[float(v) for v in solution.wealth.values],
        strategy=strategy,
        lambda_star=solution.lambda_star,
        lagrange=lagrange,
    )


def _mmv_report(solution: solvers.MmvSolution) -> schemas.MmvReport:
    return schemas.MmvReport(
        value=solution.value,
        wealth=[float(v) for v in solution.wealth.values],
        strategy=[float(v) for v in solution.strategy],
        kappa=solution.kappa,
        duality_residual=solution.duality_residual,
        kernel=[float(v) for v in solution.kernel.density.values],
        kernel_second_moment=solution.kernel.second_moment,
    )


def solve_mv(request: schemas.SolveMvRequest) -> schemas.SolveMvResponse:
    market = _market_from_payload(request.market)
    params = pref.PreferenceParams(request.theta)
    return schemas.SolveMvResponse(mv=_mv_report(solvers.solve_mv(market, params)))


def solve_mmv(request: schemas.SolveMmvRequest) -> schemas.SolveMmvResponse:
    market = _market_from_payload(request.market)
    params = pref.PreferenceParams(request.theta)
    return schemas.SolveMmvResponse(mmv=_mmv_report(solvers.solve_mmv(market, params)))


def check_consistency(request: schemas.ConsistencyRequest) -> schemas.ConsistencyResponse:
    market = _market_from_payload(request.market)
    params = pref.PreferenceParams(request.theta)
    mv = solvers.solve_mv(market, params)
    mmv = solvers.solve_mmv(market, params)
    report = solvers.check_consistency(market, params)
    return schemas.ConsistencyResponse(
        mv=_mv_report(mv),
        mmv=_mmv_report(mmv),
        consistency=schemas.ConsistencyModel(
            consistent=report.consistent,
            vsmm_min=report.vsmm_min,
            gap=report.gap,
            indeterminate_by_theorem=report.indeterminate_by_theorem,
        ),
    )


def eval_preference(request: schemas.EvalPreferenceRequest) -> schemas.PreferenceResponse:
    payoff = mk.load_payoff(request.payoff.model_dump(by_alias=True))
    params = pref.PreferenceParams(request.theta)
    mv_value = pref.mv_utility(payoff, params)
    evaluation = pref.mmv_utility(payoff, params)
    domain = pref.monotone_domain_check(payoff, params)
    return schemas.PreferenceResponse(
        mv_value=mv_value,
        mmv_value=evaluation.value,
        truncation_level=evaluation.truncation_level,
        gini_index=evaluation.gini_index,
        minimizer=[float(v) for v in evaluation.minimizer.density.values],
        monotone_domain=schemas.MonotoneDomainModel(
            in_domain=domain.in_domain, excess=domain.excess
        ),
    )


def simulate_jump(
    request: schemas.SimulateJumpRequest,
) -> tuple[schemas.SimulateJumpResponse, jumps.SimReport]:
    params = jumps.JumpDiffusionParams(
        r=request.r,
        mu=request.mu,
        sigma=request.sigma,
        intensity=request.intensity,
        jump_sizes=np.array([atom.size for atom in request.jumps]),
        jump_weights=np.array([atom.weight for atom in request.jumps]),
        horizon=request.horizon,
    )
    config = jumps.SimConfig(request.paths, request.steps, request.seed)
    report = jumps.simulate(
        params,
        config,
        request.x0,
        pref.PreferenceParams(request.theta),
        workers=request.workers,
        collect_paths=request.collect_paths,
    )
    response = schemas.SimulateJumpResponse(
        kernel_mean=schemas.ValueSE(value=report.kernel_mean.value, se=report.kernel_mean.se),
        kernel_second_moment=schemas.ValueSE(
            value=report.kernel_second_moment.value, se=report.kernel_second_moment.se
        ),
        frac_negative_kernel=report.frac_negative_kernel,
        budget_check=schemas.ValueSE(
            value=report.budget_check.value, se=report.budget_check.se
        ),
        mv_value_estimate=schemas.ValueSE(
            value=report.mv_value_estimate.value, se=report.mv_value_estimate.se
        ),
        kernel_loading=report.kernel_loading,
        jump_threshold=report.jump_threshold,
        analytic_second_moment=report.analytic_second_moment,
        sign_oracle=schemas.SignOracleModel(
            frac=report.sign_oracle_frac, prob=report.sign_oracle_prob
        ),
        n_paths=report.n_paths,
        n_steps=report.n_steps,
        seed=report.seed,
        warnings=list(report.warnings),
    )
    return response, report
