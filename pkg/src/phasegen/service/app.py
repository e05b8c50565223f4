"""FastAPI application wrapping the generator, validator and oracle."""

from __future__ import annotations

import base64
import io
import os
import time

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .. import __version__
from ..coherence import build_coherence, factorize
from ..config import class_grid
from ..dataio import iter_batches, write_batch
from ..generator import gen_batch
from ..srp import evaluate_batches
from ..validation import run_suite
from .models import (
    BenchRequest,
    BenchResponse,
    CheckModel,
    EstimateRequest,
    EstimateResponse,
    FrameRecord,
    GenerateRequest,
    HealthResponse,
    ValidateRequest,
    ValidateResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="phasegen", version=__version__)

    @app.exception_handler(ValueError)
    async def value_error_handler(_request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post(
        "/batches",
        response_class=Response,
        responses={200: {"content": {"application/octet-stream": {}}}},
    )
    def generate_one_batch(req: GenerateRequest) -> Response:
        geom = req.geometry.to_geometry()
        dists = req.distributions.to_distributions()
        factors = factorize(build_coherence(geom))
        batch = gen_batch(
            req.seed,
            req.batch_index,
            req.batch_size,
            dists,
            geom,
            factors,
            frames_per_scenario=req.frames_per_scenario,
            workers=req.workers,
        )
        sink = io.BytesIO()
        write_batch(batch, sink)
        return Response(
            content=sink.getvalue(),
            media_type="application/octet-stream",
            headers={
                "X-Phasegen-Batch-Index": str(req.batch_index),
                "X-Phasegen-Samples": str(req.batch_size),
            },
        )

    @app.post("/validate", response_model=ValidateResponse)
    def validate(req: ValidateRequest) -> ValidateResponse:
        geom = req.geometry.to_geometry()
        dists = req.distributions.to_distributions()
        report = run_suite(geom, n_draws=req.n_draws, seed=req.seed, dists=dists)
        return ValidateResponse(
            passed=report.passed,
            n_draws=report.n_draws,
            seed=report.seed,
            checks=[
                CheckModel(
                    check=c.check,
                    target=c.target,
                    estimate=c.estimate,
                    tolerance=c.tolerance,
                    passed=c.passed,
                )
                for c in report.checks
            ],
        )

    @app.post("/estimate", response_model=EstimateResponse, response_model_exclude_none=True)
    def estimate(req: EstimateRequest) -> EstimateResponse:
        geom = req.geometry.to_geometry()
        data = base64.b64decode(req.dataset_b64, validate=True)
        batches = list(iter_batches(io.BytesIO(data)))
        if not batches:
            raise ValueError("dataset is empty: no containers found")
        report, records = evaluate_batches(
            batches,
            geom,
            class_grid(*req.classes),
            r_ref=req.r_ref,
            block_size=req.block_size,
            include_records=req.include_records,
        )
        return EstimateResponse(
            mae=report["mae"],
            pacc=report["pacc"],
            mae50=report["mae50"],
            pacc50=report["pacc50"],
            n_frames=int(report["n_frames"]),
            n_blocks=int(report["n_blocks"]),
            records=[FrameRecord(**r) for r in records] if req.include_records else None,
        )

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest) -> BenchResponse:
        geom = req.geometry.to_geometry()
        dists = req.distributions.to_distributions()
        workers = req.workers if req.workers is not None else (os.cpu_count() or 1)

        t0 = time.perf_counter()
        factors = factorize(build_coherence(geom))
        factorize_s = time.perf_counter() - t0

        total_s = 0.0
        for index in range(req.batches):
            t_batch = time.perf_counter()
            gen_batch(
                req.seed,
                index,
                req.batch_size,
                dists,
                geom,
                factors,
                frames_per_scenario=req.frames_per_scenario,
                workers=workers,
            )
            total_s += time.perf_counter() - t_batch

        n_samples = req.batches * req.batch_size
        return BenchResponse(
            batches=req.batches,
            batch_size=req.batch_size,
            workers=workers,
            factorize_ms=1e3 * factorize_s,
            total_s=total_s,
            samples_per_sec=n_samples / total_s,
            per_sample_us=1e6 * total_s / n_samples,
            per_batch_ms=1e3 * total_s / req.batches,
        )

    return app
