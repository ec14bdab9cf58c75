"""HTTP facade over the handlers.

Input that fails validation comes back 400 (malformed payloads are caught by
FastAPI itself as 422 before reaching us); structurally sound models that
are degenerate or infeasible come back 422 with the error class named, so
clients can distinguish "fix your file" from "your market has no kernel".
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import InputError, ModelError
from . import handlers, schemas

app = FastAPI(title="mmv-lab", version=__version__)


@app.exception_handler(InputError)
async def _input_error(request: Request, exc: InputError) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.exception_handler(ModelError)
async def _model_error(request: Request, exc: ModelError) -> JSONResponse:
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/solve-mv", response_model=schemas.SolveMvResponse)
def solve_mv(request: schemas.SolveMvRequest) -> schemas.SolveMvResponse:
    return handlers.solve_mv(request)


@app.post("/solve-mmv", response_model=schemas.SolveMmvResponse)
def solve_mmv(request: schemas.SolveMmvRequest) -> schemas.SolveMmvResponse:
    return handlers.solve_mmv(request)


@app.post("/check-consistency", response_model=schemas.ConsistencyResponse)
def check_consistency(request: schemas.ConsistencyRequest) -> schemas.ConsistencyResponse:
    return handlers.check_consistency(request)


@app.post("/eval-preference", response_model=schemas.PreferenceResponse)
def eval_preference(request: schemas.EvalPreferenceRequest) -> schemas.PreferenceResponse:
    return handlers.eval_preference(request)


@app.post("/simulate-jump", response_model=schemas.SimulateJumpResponse)
def simulate_jump(request: schemas.SimulateJumpRequest) -> schemas.SimulateJumpResponse:
    response, _ = handlers.simulate_jump(request)
    return response
