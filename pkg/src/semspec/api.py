"""HTTP service exposing the pipeline for multi-client use.

Thin wrapper: request models mirror the flat configuration keys, every
endpoint delegates to the pipeline layer and returns its summary.
Run with: uvicorn semspec.api:app
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import pipeline
from .errors import DivergenceError, ValidationError
from .gradcheck import run_all

app = FastAPI(title="semspec", description="Semantic specialization of word vector spaces")


class HealthResponse(BaseModel):
    status: str


class DatasetSpec(BaseModel):
    format: str = Field(description="plain3col or simlex_tsv")
    path: str
    score_column: str = "SimLex999"


class EvaluateRequest(BaseModel):
    vectors: str
    datasets: list[DatasetSpec]
    header_policy: str = "auto"


class SimilarityReport(BaseModel):
    dataset: str
    rho: float
    pairs_used: int
    pairs_total: int
    coverage: float


class EvaluateResponse(BaseModel):
    reports: list[SimilarityReport]


class StageRequest(BaseModel):
    config: dict[str, str] = Field(
        description="flat pipeline configuration, same keys as the config file"
    )


class StageResponse(BaseModel):
    config_hash: str
    summary: dict


class PipelineResponse(BaseModel):
    config_hash: str
    stages: dict


class GradcheckRequest(BaseModel):
    inject_fault: bool = False


class GradcheckReport(BaseModel):
    name: str
    max_rel_err: float
    tol: float
    passed: bool


class GradcheckResponse(BaseModel):
    passed: bool
    reports: list[GradcheckReport]


class SynthRequest(BaseModel):
    kind: str = Field(description="cluster or linear")
    out_dir: str
    seed: int = 7
    clusters: int = 4
    words_per_cluster: int = 5
    dim: int = 16
    noise: float = 0.1
    words: int = 500


class SynthResponse(BaseModel):
    files: dict[str, str]


def _translate(exc: Exception) -> HTTPException:
    if isinstance(exc, FileNotFoundError):
        return HTTPException(status_code=404, detail=str(exc))
    if isinstance(exc, (ValidationError, ValueError)):
        return HTTPException(status_code=422, detail=str(exc))
    if isinstance(exc, DivergenceError):
        return HTTPException(status_code=500, detail=str(exc))
    raise exc


def _build(config: dict[str, str]):
    return pipeline.build_pipeline_config(config), pipeline.config_hash(config)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok")


@app.post("/evaluate", response_model=EvaluateResponse)
def evaluate(request: EvaluateRequest) -> EvaluateResponse:
    specs = [(d.format, d.path, d.score_column) for d in request.datasets]
    try:
        reports = pipeline.evaluate_space_file(request.vectors, specs, request.header_policy)
    except Exception as exc:
        raise _translate(exc) from exc
    return EvaluateResponse(reports=[SimilarityReport(**r) for r in reports])


def _stage_endpoint(request: StageRequest, stage) -> StageResponse:
    try:
        cfg, cfg_hash = _build(request.config)
        summary = stage(cfg, cfg_hash)
    except Exception as exc:
        raise _translate(exc) from exc
    return StageResponse(config_hash=cfg_hash, summary=summary)


@app.post("/specialize", response_model=StageResponse)
def specialize(request: StageRequest) -> StageResponse:
    return _stage_endpoint(request, pipeline.stage_specialize)


@app.post("/postspec", response_model=StageResponse)
def postspec(request: StageRequest) -> StageResponse:
    return _stage_endpoint(request, pipeline.stage_postspec)


@app.post("/map", response_model=StageResponse)
def map_space(request: StageRequest) -> StageResponse:
    return _stage_endpoint(request, pipeline.stage_map)


@app.post("/pipeline", response_model=PipelineResponse)
def run_pipeline(request: StageRequest) -> PipelineResponse:
    try:
        cfg, cfg_hash = _build(request.config)
        stages = pipeline.run_pipeline(cfg, cfg_hash)
    except Exception as exc:
        raise _translate(exc) from exc
    return PipelineResponse(config_hash=cfg_hash, stages=stages)


@app.post("/gradcheck", response_model=GradcheckResponse)
def gradcheck(request: GradcheckRequest) -> GradcheckResponse:
    reports = run_all(corrupt=request.inject_fault)
    return GradcheckResponse(
        passed=all(r["pass"] for r in reports),
        reports=[
            GradcheckReport(
                name=r["name"], max_rel_err=r["max_rel_err"], tol=r["tol"], passed=r["pass"]
            )
            for r in reports
        ],
    )


@app.post("/synth", response_model=SynthResponse)
def synth(request: SynthRequest) -> SynthResponse:
    try:
        files = pipeline.write_synth_fixture(
            request.kind,
            request.out_dir,
            request.seed,
            clusters=request.clusters,
            words_per_cluster=request.words_per_cluster,
            dim=request.dim,
            noise=request.noise,
            words=request.words,
        )
    except Exception as exc:
        raise _translate(exc) from exc
    return SynthResponse(files=files)
