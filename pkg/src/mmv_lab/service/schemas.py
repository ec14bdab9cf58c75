"""Request and response models for the service API.

These are the wire types: the CLI builds the same requests in-process that
the HTTP endpoints accept, and every report the tool emits is one of the
response models below serialized to JSON with a "schema": 1 marker.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class MarketPayload(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=1, alias="schema")
    probabilities: list[float]
    generators: list[list[float]] = Field(default_factory=list)
    x0: float


class PayoffPayload(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=1, alias="schema")
    probabilities: list[float]
    payoff: list[float]


class SolveMvRequest(BaseModel):
    market: MarketPayload
    theta: float = Field(gt=0)


class SolveMmvRequest(BaseModel):
    market: MarketPayload
    theta: float = Field(gt=0)


class ConsistencyRequest(BaseModel):
    market: MarketPayload
    theta: float = Field(gt=0)


class EvalPreferenceRequest(BaseModel):
    payoff: PayoffPayload
    theta: float = Field(gt=0)


class JumpAtom(BaseModel):
    size: float
    weight: float = Field(gt=0)


class SimulateJumpRequest(BaseModel):
    r: float
    mu: float
    sigma: float = Field(ge=0)
    intensity: float = Field(ge=0)
    jumps: list[JumpAtom]
    horizon: float = Field(gt=0)
    paths: int = Field(ge=1)
    steps: int = Field(ge=1)
    seed: int
    theta: float = Field(gt=0)
    x0: float
    workers: int | None = None
    collect_paths: bool = False


class LagrangeModel(BaseModel):
    d_star: float
    lambda1: float
    lambda2: float


class MvReport(BaseModel):
    value: float
    wealth: list[float]
    strategy: list[float] | None = None
    lambda_star: float | None = None
    lagrange: LagrangeModel | None = None


class MmvReport(BaseModel):
    value: float
    wealth: list[float]
    strategy: list[float]
    kappa: float
    duality_residual: float
    kernel: list[float]
    kernel_second_moment: float


class ConsistencyModel(BaseModel):
    consistent: bool
    vsmm_min: float
    gap: float
    indeterminate_by_theorem: bool = False


class SolveMvResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=1, alias="schema")
    mv: MvReport


class SolveMmvResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=1, alias="schema")
    mmv: MmvReport


class ConsistencyResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=1, alias="schema")
    mv: MvReport
    mmv: MmvReport
    consistency: ConsistencyModel


class MonotoneDomainModel(BaseModel):
    in_domain: bool
    excess: float


class PreferenceResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=1, alias="schema")
    mv_value: float
    mmv_value: float
    truncation_level: float
    gini_index: float
    minimizer: list[float]
    monotone_domain: MonotoneDomainModel


class ValueSE(BaseModel):
    value: float
    se: float


class SignOracleModel(BaseModel):
    frac: float
    prob: float


class SimulateJumpResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=1, alias="schema")
    kernel_mean: ValueSE
    kernel_second_moment: ValueSE
    frac_negative_kernel: float
    budget_check: ValueSE
    mv_value_estimate: ValueSE
    kernel_loading: float
    jump_threshold: float | None
    analytic_second_moment: float
    sign_oracle: SignOracleModel
    n_paths: int
    n_steps: int
    seed: int
    warnings: list[str] = Field(default_factory=list)


class HealthResponse(BaseModel):
    status: str
    version: str
