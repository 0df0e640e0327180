"""HTTP facade over assets, sessions and the pipeline.

All payloads are JSON; binary assets travel as raw uploads referenced by
content id afterwards. Handlers are stateless; session mutation is
serialized per session id; expensive work runs as jobs.
"""

from __future__ import annotations

import os
import secrets
import threading
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from pydantic import BaseModel, Field

from matcast import session as sessions
from matcast.errors import (
    BackendError,
    InvalidInputError,
    ManifestError,
    MatcastError,
    PlanError,
    StorageError,
)
from matcast.evaluation import DatasetManifest, IdentityPipeline, run_benchmark
from matcast.generation import GenerationParams, Pipeline
from matcast.imaging import decode_depth, decode_image, decode_mask
from matcast.perception import RegionPrompt, load_registry, segment_regions
from matcast.service.jobs import JobScheduler
from matcast.session import EditStep, SessionStore
from matcast.store import AssetStore

ENV_STORAGE = "MATCAST_STORAGE"
ENV_BACKENDS = "MATCAST_BACKENDS"
ENV_LISTEN = "MATCAST_LISTEN"

_DECODERS = {
    "image": decode_image,
    "exemplar": decode_image,
    "mask": decode_mask,
    "depth": decode_depth,
}


class CreateSessionBody(BaseModel):
    base_image: str


class PromptBody(BaseModel):
    kind: str
    x: int | None = None
    y: int | None = None
    x1: int | None = None
    y1: int | None = None
    text: str | None = None

    def to_prompt(self) -> RegionPrompt:
        return RegionPrompt(kind=self.kind, x=self.x, y=self.y, x1=self.x1, y1=self.y1, text=self.text)


class SegmentBody(BaseModel):
    prompts: list[PromptBody]
    backend: str | None = None


class ParamsBody(BaseModel):
    seed: str | None = None
    steps: int | None = None
    guidance_scale: float | None = None
    material_scale: float | None = None
    geometry_scale: float | None = None
    init_mode: str | None = None
    working_size: int | None = None

    def to_params(self) -> GenerationParams:
        record = {k: v for k, v in self.model_dump().items() if v is not None}
        if "seed" not in record:
            record["seed"] = str(secrets.randbits(63))
        return GenerationParams.from_record(record)


class ExemplarBody(BaseModel):
    image: str
    crop: tuple[int, int, int, int] | None = None
    scale_hint: float | None = None
    text_hint: str | None = None


class StepBody(BaseModel):
    mask: str
    exemplar: ExemplarBody
    params: ParamsBody = Field(default_factory=ParamsBody)
    feather: int | None = None


class ApplyBody(BaseModel):
    up_to: int | None = None


class ReorderBody(BaseModel):
    order: list[int]


class RollbackBody(BaseModel):
    to: int


class RerollBody(BaseModel):
    seed: str | None = None


class BenchmarkBody(BaseModel):
    manifest_path: str
    pipeline: str = "mock"
    params: ParamsBody = Field(default_factory=ParamsBody)
    metric_region: str = "full"
    jobs: int = 1


def _http_error(exc: MatcastError) -> HTTPException:
    if isinstance(exc, StorageError):
        return HTTPException(status_code=404, detail=str(exc))
    if isinstance(exc, (InvalidInputError, ManifestError, PlanError)):
        return HTTPException(status_code=400, detail=str(exc))
    if isinstance(exc, BackendError):
        return HTTPException(status_code=503, detail=str(exc))
    return HTTPException(status_code=500, detail=str(exc))


def create_app(
    storage_root: str | Path | None = None,
    backend_config: str | Path | None = None,
    workers: int = 2,
) -> FastAPI:
    """Build the service. Configuration falls back to MATCAST_STORAGE and
    MATCAST_BACKENDS environment variables."""
    storage_root = Path(storage_root or os.environ.get(ENV_STORAGE, "matcast-data"))
    backend_config = backend_config or os.environ.get(ENV_BACKENDS) or None
    registry = load_registry(backend_config)
    store = AssetStore(storage_root)
    session_store = SessionStore(storage_root, assets=store)
    pipeline = Pipeline(registry=registry)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.scheduler = JobScheduler(workers=workers)
        yield
        app.state.scheduler.shutdown()

    app = FastAPI(title="matcast", lifespan=lifespan)
    app.state.store = store
    app.state.sessions = session_store
    app.state.registry = registry
    app.state.pipeline = pipeline
    session_locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def session_lock(session_id: str) -> threading.Lock:
        with locks_guard:
            return session_locks.setdefault(session_id, threading.Lock())

    def load_session(session_id: str) -> sessions.SessionState:
        try:
            return session_store.load(session_id)
        except MatcastError as exc:
            raise _http_error(exc) from exc

    def session_view(state: sessions.SessionState) -> dict:
        return {
            "id": state.id,
            "created": state.created,
            "updated": state.updated,
            "base_image": state.base_image,
            "current_image": state.current_image_id(),
            "steps": [s.to_record() for s in state.steps],
            "history": list(state.history),
            "segmentation_masks": state.extras.get("segmentation_masks", []),
        }

    @app.post("/assets", status_code=201)
    async def upload_asset(request: Request, kind: str = "image"):
        if kind not in _DECODERS:
            raise HTTPException(status_code=400, detail=f"cannot upload assets of kind {kind!r}")
        payload = await request.body()
        if not payload:
            raise HTTPException(status_code=400, detail="empty asset payload")
        try:
            _DECODERS[kind](payload)
        except InvalidInputError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        record = store.put_bytes(payload, kind, "image/png")
        return record.__dict__

    @app.get("/assets/{asset_id}")
    def get_asset(asset_id: str):
        try:
            record = store.get_record(asset_id)
            data = store.get_bytes(asset_id)
        except StorageError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return Response(content=data, media_type=record.media_type)

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            record = store.get_record(body.base_image)
        except StorageError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        if record.kind not in ("image", "exemplar"):
            raise HTTPException(status_code=400, detail="base_image must be an image asset")
        state = sessions.new_session(body.base_image)
        session_store.save(state)
        return session_view(state)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return session_view(load_session(session_id))

    @app.post("/sessions/{session_id}/segment", status_code=202)
    def request_segmentation(session_id: str, body: SegmentBody):
        state = load_session(session_id)
        if not body.prompts:
            raise HTTPException(status_code=400, detail="at least one prompt is required")
        base = store.load_image(state.base_image)
        prompts = [p.to_prompt() for p in body.prompts]
        try:
            for prompt in prompts:
                prompt.validate_bounds(base.width, base.height)
        except InvalidInputError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        backend = body.backend or "mock-segment"

        def run(set_progress) -> dict:
            masks = segment_regions(base, prompts, backend, registry)
            set_progress(0.8)
            with session_lock(session_id):
                current = session_store.load(session_id)
                ids = []
                for mask in masks:
                    ids.append(store.put_mask(mask).id)
                attached = current.extras.setdefault("segmentation_masks", [])
                attached.extend(i for i in ids if i not in attached)
                current.touch()
                session_store.save(current)
            return {"masks": ids}

        return app.state.scheduler.submit("segment", run).to_record()

    def _submit_apply(session_id: str, up_to: int | None, kind: str) -> dict:
        def run(set_progress) -> dict:
            with session_lock(session_id):
                state = session_store.load(session_id)
                target = len(state.steps) - 1 if up_to is None else up_to
                sessions.apply_plan(
                    state,
                    pipeline,
                    store,
                    up_to=target,
                    progress=lambda stage, fraction: set_progress(fraction),
                )
                session_store.save(state)
                if 0 <= target < len(state.steps):
                    step = state.steps[target]
                    if step.status == sessions.FAILED:
                        raise InvalidInputError(f"step {target} failed: {step.error}")
                    return {
                        "step": target,
                        "result": step.result,
                        "current_image": state.current_image_id(),
                    }
                return {"current_image": state.current_image_id()}

        return app.state.scheduler.submit(kind, run).to_record()

    @app.post("/sessions/{session_id}/steps", status_code=202)
    def submit_edit(session_id: str, body: StepBody):
        with session_lock(session_id):
            state = load_session(session_id)
            for label, asset_id in (("mask", body.mask), ("exemplar image", body.exemplar.image)):
                if not store.exists(asset_id):
                    raise HTTPException(status_code=400, detail=f"{label} asset {asset_id!r} not found")
            try:
                step = EditStep(
                    region=body.mask,
                    exemplar_image=body.exemplar.image,
                    params=body.params.to_params(),
                    crop=body.exemplar.crop,
                    scale_hint=body.exemplar.scale_hint,
                    text_hint=body.exemplar.text_hint,
                    feather=body.feather if body.feather is not None else 8,
                )
            except MatcastError as exc:
                raise _http_error(exc) from exc
            sessions.add_step(state, step)
            session_store.save(state)
            index = len(state.steps) - 1
        return _submit_apply(session_id, index, "transfer")

    @app.post("/sessions/{session_id}/apply", status_code=202)
    def submit_plan(session_id: str, body: ApplyBody):
        state = load_session(session_id)
        if body.up_to is not None and not 0 <= body.up_to < len(state.steps):
            raise HTTPException(status_code=400, detail=f"up_to must index one of {len(state.steps)} steps")
        return _submit_apply(session_id, body.up_to, "apply-plan")

    @app.post("/sessions/{session_id}/reorder")
    def reorder(session_id: str, body: ReorderBody):
        with session_lock(session_id):
            state = load_session(session_id)
            try:
                sessions.reorder_steps(state, body.order)
            except MatcastError as exc:
                raise _http_error(exc) from exc
            session_store.save(state)
            return session_view(state)

    @app.post("/sessions/{session_id}/steps/{index}/reroll")
    def reroll_seed(session_id: str, index: int, body: RerollBody):
        with session_lock(session_id):
            state = load_session(session_id)
            try:
                seed = int(body.seed) if body.seed is not None else secrets.randbits(63)
            except ValueError:
                raise HTTPException(status_code=400, detail="seed must be a decimal string")
            try:
                sessions.reroll_step(state, index, seed)
            except MatcastError as exc:
                raise _http_error(exc) from exc
            session_store.save(state)
            return session_view(state)

    @app.post("/sessions/{session_id}/rollback")
    def rollback(session_id: str, body: RollbackBody):
        with session_lock(session_id):
            state = load_session(session_id)
            try:
                sessions.rollback(state, body.to)
            except MatcastError as exc:
                raise _http_error(exc) from exc
            session_store.save(state)
            return session_view(state)

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = app.state.scheduler.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no job with id {job_id!r}")
        return job.to_record()

    @app.post("/benchmarks", status_code=202)
    def submit_benchmark(body: BenchmarkBody):
        try:
            manifest = DatasetManifest.load(body.manifest_path)
            params = body.params.to_params()
        except MatcastError as exc:
            raise _http_error(exc) from exc
        bench_pipeline = IdentityPipeline() if body.pipeline == "identity" else pipeline

        def run(set_progress) -> dict:
            report = run_benchmark(
                manifest,
                bench_pipeline,
                params,
                metric_region=body.metric_region,
                registry=registry,
                jobs=body.jobs,
            )
            record = store.put_json(report.to_dict(), kind="result")
            return {
                "report_asset": record.id,
                "aggregates": report.aggregates,
                "valid": report.valid,
                "failure_count": report.failure_count,
            }

        return app.state.scheduler.submit("benchmark", run).to_record()

    return app
