"""HTTP service for interactive scene generation.

POST /generate accepts a scene request and returns PNG bytes; GET /palette,
/model-info, and /health are lightweight metadata endpoints. Generation runs
on a single-worker executor so concurrent requests are serialized against the
shared read-only model, while metadata endpoints never queue behind it.
"""
from __future__ import annotations

import asyncio
import re
import time as time_mod
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .colors import PALETTE_NAMES, palette_rgb8
from .errors import DomainError
from .pipeline import GeneratorBundle, encode_png, generate_image, model_summary
from .scenegraph import (
    SECONDS_PER_DAY,
    BBox,
    EntityClass,
    GraphVariant,
    SceneEntity,
    declared_color_feature,
    encode_time,
)

SCHEMA_VERSION = 1
_TIME_RE = re.compile(r"^([01]\d|2[0-3]):([0-5]\d)$")
_CLASS_NAMES = tuple(c.value for c in EntityClass if c is not EntityClass.GRID)


class EntitySpec(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    class_name: str = Field(alias="class")
    bbox: tuple[float, float, float, float]  # (center-x, center-y, w, h), normalized
    color: str | tuple[float, float, float]

    @field_validator("class_name")
    @classmethod
    def _known_class(cls, v: str) -> str:
        if v not in _CLASS_NAMES:
            raise ValueError(f"unknown entity class {v!r}; choose one of {_CLASS_NAMES}")
        return v

    @field_validator("bbox")
    @classmethod
    def _valid_bbox(cls, v: tuple[float, float, float, float]):
        if any(not 0.0 <= c <= 1.0 for c in v):
            raise ValueError("bbox components (center-x, center-y, w, h) must lie in [0, 1]")
        if v[2] <= 0 or v[3] <= 0:
            raise ValueError("bbox width and height must be positive")
        return v

    @field_validator("color")
    @classmethod
    def _known_color(cls, v):
        if isinstance(v, str) and v not in PALETTE_NAMES:
            raise ValueError(
                f"unknown palette color {v!r}; palette is {', '.join(PALETTE_NAMES)}"
            )
        return v


class SceneRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    version: int = SCHEMA_VERSION
    entities: list[EntitySpec] = Field(default_factory=list)
    time_of_day: str | None = None
    time_seconds: float | None = None
    seed: int = 0
    variant: str | None = None

    @field_validator("version")
    @classmethod
    def _known_version(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {v}; this service speaks {SCHEMA_VERSION}")
        return v

    @field_validator("time_of_day")
    @classmethod
    def _valid_time(cls, v: str | None) -> str | None:
        if v is not None and not _TIME_RE.match(v):
            raise ValueError(f"time_of_day must be 'HH:MM' (24h), got {v!r}")
        return v

    @field_validator("time_seconds")
    @classmethod
    def _valid_seconds(cls, v: float | None) -> float | None:
        if v is not None and not 0 <= v <= SECONDS_PER_DAY:
            raise ValueError(f"time_seconds must lie in [0, {SECONDS_PER_DAY}], got {v}")
        return v

    @field_validator("variant")
    @classmethod
    def _known_variant(cls, v: str | None) -> str | None:
        if v is not None and v not in (g.value for g in GraphVariant):
            raise ValueError(f"unknown variant {v!r}; choose 'cluster' or 'discrete'")
        return v

    @model_validator(mode="after")
    def _one_time(self) -> "SceneRequest":
        if (self.time_of_day is None) == (self.time_seconds is None):
            raise ValueError("provide exactly one of time_of_day or time_seconds")
        return self

    def seconds(self) -> float:
        if self.time_seconds is not None:
            return float(self.time_seconds)
        h, m = self.time_of_day.split(":")
        return float(int(h) * 3600 + int(m) * 60)


def request_entities(req: SceneRequest, variant: GraphVariant) -> list[SceneEntity]:
    entities = []
    for spec in req.entities:
        x, y, w, h = spec.bbox
        entities.append(
            SceneEntity(
                entity_class=EntityClass(spec.class_name),
                bbox=BBox(x=x, y=y, w=w, h=h),
                color=declared_color_feature(spec.color, variant),
            )
        )
    return entities


def _field_error(loc: list, msg: str) -> JSONResponse:
    return JSONResponse(
        status_code=422,
        content={"detail": [{"loc": ["body"] + loc, "msg": msg, "type": "value_error"}]},
    )


def create_app(bundle: GeneratorBundle | None) -> FastAPI:
    app = FastAPI(title="junctiongen", version="1.0")
    app.state.bundle = bundle
    app.state.executor = ThreadPoolExecutor(max_workers=1)
    app.state.queue_slots = asyncio.Semaphore(32)

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        errors = exc.errors()
        # Undecodable body is a malformed request, not a validation failure.
        if any(e.get("type") == "json_invalid" for e in errors):
            return JSONResponse(status_code=400, content={"detail": "malformed JSON body"})
        for e in errors:
            e.pop("input", None)
            e.pop("url", None)
            e.pop("ctx", None)
        return JSONResponse(status_code=422, content={"detail": errors})

    @app.get("/health")
    async def health():
        return {"status": "ok", "model_loaded": app.state.bundle is not None}

    @app.get("/palette")
    async def palette():
        return {
            "names": list(PALETTE_NAMES),
            "rgb": [[int(c) for c in rgb] for rgb in palette_rgb8()],
        }

    @app.get("/model-info")
    async def model_info():
        if app.state.bundle is None:
            return JSONResponse(status_code=503, content={"detail": "model not loaded"})
        return model_summary(app.state.bundle)

    @app.post("/generate")
    async def generate(req: SceneRequest):
        b: GeneratorBundle | None = app.state.bundle
        if b is None:
            return JSONResponse(status_code=503, content={"detail": "model not loaded"})
        model_variant = b.config.model.variant
        if req.variant is not None and req.variant != model_variant.value:
            return _field_error(
                ["variant"],
                f"loaded model uses variant {model_variant.value!r}, got {req.variant!r}",
            )
        try:
            entities = request_entities(req, model_variant)
            time = encode_time(req.seconds())
        except DomainError as exc:
            return _field_error(["entities"], str(exc))

        def run() -> np.ndarray:
            return generate_image(b, entities, time, seed=req.seed)

        start = time_mod.perf_counter()
        async with app.state.queue_slots:
            loop = asyncio.get_running_loop()
            image = await loop.run_in_executor(app.state.executor, run)
        latency_ms = (time_mod.perf_counter() - start) * 1000.0
        return Response(
            content=encode_png(image),
            media_type="image/png",
            headers={
                "X-Generation-Seed": str(req.seed),
                "X-Generation-Latency-Ms": f"{latency_ms:.2f}",
                "X-Image-Size": f"{image.shape[1]}x{image.shape[0]}",
            },
        )

    return app
