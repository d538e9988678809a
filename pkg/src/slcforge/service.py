"""HTTP facade over the conversion pipeline.

Every error leaves as the same envelope: {"code", "message", "details"},
with the HTTP status derived from the error's stable code. The service
holds no per-request model state; the tagger and extractor are wired in
once at app construction (baseline implementations or remote clients).
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field
from starlette.exceptions import HTTPException as StarletteHTTPException
from starlette.staticfiles import StaticFiles

from .core import SlcError
from .extraction import DEFAULT_STRIDE, DEFAULT_WINDOW, SpanExtractor
from .pipeline import ConversionPipeline, job_to_dict
from .tagging import Tagger

# HTTP status per error code; anything unlisted is a 400.
_STATUS_BY_CODE = {
    "EMPTY_DOCUMENT": 400,
    "INVALID_EDIT": 400,
    "INVALID_STRIDE": 400,
    "INVALID_PATTERN": 400,
    "MALFORMED_TAG": 400,
    "UNBALANCED_BRACES": 400,
    "NESTED_BRACES": 400,
    "EMPTY_VARIABLE_NAME": 400,
    "MODEL_SYNTAX": 400,
    "JSON_SYNTAX": 400,
    "LIBRARY_LAYOUT": 400,
    "UNKNOWN_JOB": 404,
    "UNKNOWN_TEMPLATE": 404,
    "UNKNOWN_CLASS": 404,
    "UNKNOWN_LABEL": 404,
    "UNKNOWN_VERSION": 404,
    "INVALID_STATE": 409,
    "DUPLICATE_VARIABLE": 409,
    "OVERLAPPING_MARKS": 409,
    "DUPLICATE_NAME": 409,
    "DUPLICATE_ID": 409,
    "DUPLICATE_DECLARATION": 409,
    "DUPLICATE_FIELD": 409,
    "DUPLICATE_VERSION": 409,
    "DUPLICATE_LABEL": 409,
    "EMPTY_INDEX": 409,
    "PROVENANCE_MISMATCH": 409,
    "VALIDATION_FAILED": 422,
    "UNKNOWN_FIELD": 422,
    "MISALIGNED_SPAN": 422,
    "REMOTE_UNAVAILABLE": 502,
    "PROTOCOL_VIOLATION": 502,
}


def _error_response(status: int, code: str, message: str, details: dict | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "details": details or {}},
    )


class CreateJobBody(BaseModel):
    text: str


class SelectTemplateBody(BaseModel):
    template_id: str


class AutoMarkBody(BaseModel):
    threshold: float | None = Field(default=None, ge=0.0, le=1.0)


class MarksPatchBody(BaseModel):
    edits: list[dict]


class ExtractBody(BaseModel):
    window: int = DEFAULT_WINDOW
    stride: int = DEFAULT_STRIDE


class ValuePatchBody(BaseModel):
    field: str
    value: Any


class OutputBody(BaseModel):
    force: bool = False


class ContributeBody(BaseModel):
    job_id: str
    name: str


def create_app(
    pipeline: ConversionPipeline,
    tagger: Tagger,
    extractor: SpanExtractor,
    default_threshold: float = 0.5,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="slcforge", docs_url=None, redoc_url=None)

    @app.exception_handler(SlcError)
    async def handle_slc_error(request: Request, exc: SlcError) -> JSONResponse:
        status = _STATUS_BY_CODE.get(exc.code, 400)
        details = {k: v for k, v in exc.details.items()}
        return _error_response(status, exc.code, exc.message, details)

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError) -> JSONResponse:
        return _error_response(422, "INVALID_BODY", "request body failed validation", {"errors": exc.errors()})

    @app.exception_handler(StarletteHTTPException)
    async def handle_http(request: Request, exc: StarletteHTTPException) -> JSONResponse:
        code = "NOT_FOUND" if exc.status_code == 404 else "HTTP_ERROR"
        return _error_response(exc.status_code, code, str(exc.detail), {})

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "templates": len(pipeline.index),
            "jobs": len(pipeline.jobs()),
        }

    @app.post("/jobs")
    def create_job(body: CreateJobBody) -> dict:
        return job_to_dict(pipeline.create_job(body.text))

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str) -> dict:
        return job_to_dict(pipeline.get_job(job_id))

    @app.get("/jobs/{job_id}/templates")
    def suggest(job_id: str, n: int = 5) -> dict:
        ranked = pipeline.suggest_templates(job_id, top_n=n)
        return {
            "suggestions": [
                {"id": r.id, "name": r.name, "score": score, "metadata": r.metadata}
                for r, score in ranked
            ]
        }

    @app.put("/jobs/{job_id}/template")
    def select_template(job_id: str, body: SelectTemplateBody) -> dict:
        return job_to_dict(pipeline.select_template(job_id, body.template_id))

    @app.post("/jobs/{job_id}/marks:auto")
    def auto_mark(job_id: str, body: AutoMarkBody | None = None) -> dict:
        threshold = default_threshold
        if body is not None and body.threshold is not None:
            threshold = body.threshold
        return job_to_dict(pipeline.auto_mark(job_id, tagger, threshold))

    @app.patch("/jobs/{job_id}/marks")
    def update_marks(job_id: str, body: MarksPatchBody) -> dict:
        return job_to_dict(pipeline.update_marks(job_id, body.edits))

    @app.post("/jobs/{job_id}/extract")
    def extract(job_id: str, body: ExtractBody | None = None) -> dict:
        window = body.window if body else DEFAULT_WINDOW
        stride = body.stride if body else DEFAULT_STRIDE
        return job_to_dict(pipeline.auto_extract(job_id, extractor, window, stride))

    @app.patch("/jobs/{job_id}/values")
    def update_value(job_id: str, body: ValuePatchBody) -> dict:
        return job_to_dict(pipeline.update_value(job_id, body.field, body.value))

    @app.post("/jobs/{job_id}/output")
    def emit(job_id: str, body: OutputBody | None = None) -> dict:
        force = body.force if body else False
        return pipeline.emit_output(job_id, force=force).to_dict()

    @app.post("/templates")
    def contribute(body: ContributeBody) -> dict:
        return pipeline.contribute(body.job_id, body.name).to_dict()

    @app.get("/templates")
    def list_templates() -> dict:
        return {
            "templates": [
                {"id": r.id, "name": r.name, "metadata": r.metadata}
                for r in pipeline.index.records()
            ]
        }

    if ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
