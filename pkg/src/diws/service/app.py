"""FastAPI wrapper around the experiment handlers.

Every endpoint accepts an :class:`ExperimentRequest` (config + overrides) and
returns the handler's result document unchanged, so a thin client can write
the same files the CLI writes locally.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import handlers
from ..errors import ConfigError, NumericalError, UsageError
from .schemas import DocumentResponse, ExperimentRequest, HealthResponse

app = FastAPI(title="diws", description="Disturbance-immune weight-sharing experiments")

_HANDLERS = {
    "train": handlers.handle_train,
    "compare-pd": handlers.handle_compare_pd,
    "ktau": handlers.handle_ktau,
    "gt-tau": handlers.handle_gt_tau,
    "check": handlers.handle_check,
    "gen-data": handlers.handle_gen_data,
}


def _dispatch(name: str, request: ExperimentRequest) -> DocumentResponse:
    try:
        cfg = request.resolve()
        return DocumentResponse(document=_HANDLERS[name](cfg))
    except (ConfigError, UsageError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None
    except NumericalError as exc:
        raise HTTPException(status_code=500, detail=f"numerical failure: {exc}") from None


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", format=handlers.DOC_FORMAT)


@app.post("/train", response_model=DocumentResponse)
def train(request: ExperimentRequest) -> DocumentResponse:
    return _dispatch("train", request)


@app.post("/compare-pd", response_model=DocumentResponse)
def compare_pd(request: ExperimentRequest) -> DocumentResponse:
    return _dispatch("compare-pd", request)


@app.post("/ktau", response_model=DocumentResponse)
def ktau(request: ExperimentRequest) -> DocumentResponse:
    return _dispatch("ktau", request)


@app.post("/gt-tau", response_model=DocumentResponse)
def gt_tau(request: ExperimentRequest) -> DocumentResponse:
    return _dispatch("gt-tau", request)


@app.post("/check", response_model=DocumentResponse)
def check(request: ExperimentRequest) -> DocumentResponse:
    return _dispatch("check", request)


@app.post("/gen-data", response_model=DocumentResponse)
def gen_data(request: ExperimentRequest) -> DocumentResponse:
    return _dispatch("gen-data", request)
