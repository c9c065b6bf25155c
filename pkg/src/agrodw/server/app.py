"""HTTP facade over the Engine.

Handlers are plain functions (the framework runs them on worker threads);
reads operate on store snapshots so they never block, while mutating
endpoints serialize inside the engine. The /query endpoint returns the
library's canonical grid bytes untouched, so a CLI `--format json` dump and
a server response for the same store state compare equal byte for byte.
"""

import socket

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from ..engine import Engine
from ..errors import (
    AgrodwError,
    BindError,
    DuplicateFactKey,
    DuplicateKey,
    ParseError,
    ReferentialViolation,
    SemanticError,
    UnknownTable,
)
from ..olap import grid_to_json_bytes
from ..storage import PARTITIONS
from .models import (
    ApiError,
    BuildCubesRequest,
    CubeInfo,
    ERROR_STATUS,
    IngestResponse,
    MergeDeltaRequest,
    MergeDeltaResponse,
    QualityResponse,
    QueryRequest,
    SchemaResponse,
    schema_response,
)


def _classify(exc: AgrodwError) -> ApiError:
    detail = None
    if isinstance(exc, ParseError):
        code = "parse_error"
        detail = {"line": exc.line, "column": exc.column}
    elif isinstance(exc, UnknownTable):
        code = "not_found"
    elif isinstance(exc, (DuplicateKey, DuplicateFactKey)):
        code = "conflict"
    elif isinstance(exc, ReferentialViolation):
        code = "conflict"
        detail = {"dimension": exc.dimension, "value": exc.value}
    else:
        # semantic/shape problems with an otherwise well-formed request
        code = "semantic_error"
    return ApiError(code=code, message=str(exc), detail=detail)


def _error_response(error: ApiError) -> JSONResponse:
    return JSONResponse(
        status_code=ERROR_STATUS[error.code],
        content=error.model_dump(exclude_none=True),
    )


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="agrodw", docs_url=None, redoc_url=None)
    # browser clients (e.g. the bundled explorer page) are served from
    # elsewhere; the API itself carries no credentials or cookies
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(AgrodwError)
    def on_domain_error(request: Request, exc: AgrodwError):
        return _error_response(_classify(exc))

    @app.exception_handler(RequestValidationError)
    def on_validation_error(request: Request, exc: RequestValidationError):
        return _error_response(
            ApiError(code="parse_error", message="invalid request body",
                     detail={"errors": [str(e["msg"]) for e in exc.errors()]})
        )

    @app.exception_handler(Exception)
    def on_internal_error(request: Request, exc: Exception):
        return _error_response(ApiError(code="internal", message=str(exc)))

    @app.get("/schema", response_model=SchemaResponse)
    def get_schema():
        return schema_response(engine.schema)

    @app.post("/query")
    def post_query(body: QueryRequest) -> Response:
        grid = engine.query(body.q)
        return Response(content=grid_to_json_bytes(grid), media_type="application/json")

    @app.post("/ingest", response_model=IngestResponse)
    async def post_ingest(
        request: Request,
        table: str = Query(...),
        partition: str = Query("base"),
    ):
        if partition not in PARTITIONS:
            raise SemanticError(f"unknown partition {partition!r}")
        body = await request.body()
        outcome = await run_in_threadpool(engine.ingest, table, body, partition)
        return outcome.to_json_dict()

    @app.get("/cubes", response_model=list[CubeInfo])
    def get_cubes():
        return engine.cubes_info()

    @app.post("/cubes/build", response_model=CubeInfo)
    def post_cubes_build(body: BuildCubesRequest):
        engine.build_cubes(body.fact, policy=body.policy)
        return next(c for c in engine.cubes_info() if c["fact"] == body.fact)

    @app.post("/cubes/merge-delta", response_model=MergeDeltaResponse)
    def post_merge_delta(body: MergeDeltaRequest):
        return MergeDeltaResponse(absorbed=engine.merge_delta(body.fact))

    @app.get("/quality", response_model=QualityResponse)
    def get_quality():
        return engine.quality().to_json_dict()

    return app


def serve(engine: Engine, host: str = "127.0.0.1", port: int = 8765) -> None:
    """Run the service until interrupted; raises BindError on a busy port."""
    import uvicorn

    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
        probe.close()
    except OSError as exc:
        raise BindError(f"cannot bind {host}:{port}: {exc}") from exc
    uvicorn.run(create_app(engine), host=host, port=port, log_level="warning")


__all__ = ["create_app", "serve"]
