"""The transfer core: material encoding, the four-condition generation
call, the end-to-end pipeline and seed-locked lighting-aware pairs.

The generator consumes exactly four conditions -- material embedding,
depth map, init image and foreground mask -- plus generation parameters.
Only :func:`transfer_material` ever touches the raw input image, for
preprocessing and paste-back.

A fully deterministic mock encoder/generator pair is a first-class
backend: it makes every pipeline property testable without accelerators.
Real model bindings are separately installed packages selected through
the backend registry; the engine never assumes they exist.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from matcast import kernels
from matcast.errors import (
    BackendError,
    ContractError,
    EmptyMaskError,
    InferenceError,
    InvalidInputError,
)
from matcast.imaging import (
    DEFAULT_FEATHER,
    DepthMap,
    ForegroundMask,
    InitMode,
    RasterImage,
    compose_init_image,
    fit_field,
    fit_to_generation_size,
    invert_placement,
    paste_back,
)
from matcast.perception import (
    KIND_ENCODER,
    KIND_GENERATOR,
    MOCK_DEPTH,
    BackendDescriptor,
    BackendRegistry,
    backend_gate,
    estimate_depth,
    get_default_registry,
)

MOCK_ENCODER = "mock-encoder"
MOCK_GENERATOR = "mock-generator"

#: Mock generator noise: uniform integer steps on the 8-bit grid,
#: +-5/255 (~0.02 amplitude). Integer steps keep the noise recoverable
#: exactly from quantized outputs.
MOCK_NOISE_STEPS = 5

ProgressFn = Callable[[str, float], None]


@dataclass(frozen=True, eq=False)
class MaterialExemplar:
    """An image whose surface appearance is to be transferred.

    ``crop`` (x0, y0, x1, y1) selects the patch actually encoded;
    ``scale_hint`` and ``text_hint`` ride along for backends that use them.
    """

    image: RasterImage
    crop: tuple[int, int, int, int] | None = None
    scale_hint: float | None = None
    text_hint: str | None = None

    def __post_init__(self):
        if self.crop is not None:
            x0, y0, x1, y1 = self.crop
            if not (0 <= x0 < x1 <= self.image.width and 0 <= y0 < y1 <= self.image.height):
                raise InvalidInputError(f"crop {self.crop} outside exemplar bounds {self.image.extent}")
            object.__setattr__(self, "crop", (int(x0), int(y0), int(x1), int(y1)))
        if self.scale_hint is not None and not self.scale_hint > 0:
            raise InvalidInputError("scale_hint must be positive")

    def cropped(self) -> RasterImage:
        if self.crop is None:
            return self.image
        x0, y0, x1, y1 = self.crop
        return RasterImage(np.ascontiguousarray(self.image.data[y0:y1, x0:x1]))

    def digest(self) -> str:
        """Content hash of the cropped exemplar pixels."""
        region = self.cropped()
        h = hashlib.sha256()
        h.update(b"exemplar")
        h.update(repr(region.data.shape).encode())
        h.update(region.data.tobytes())
        return h.hexdigest()


@dataclass(frozen=True, eq=False)
class MaterialEmbedding:
    """Latent feature sequence extracted from an exemplar."""

    vectors: np.ndarray
    backend_id: str
    source_digest: str

    def __post_init__(self):
        arr = np.asarray(self.vectors, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInputError(f"embedding vectors must be (n, width), got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise InvalidInputError("embedding contains non-finite entries")
        object.__setattr__(self, "vectors", np.ascontiguousarray(arr))

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(b"embedding")
        h.update(self.backend_id.encode())
        h.update(self.source_digest.encode())
        h.update(repr(self.vectors.shape).encode())
        h.update(self.vectors.tobytes())
        return h.hexdigest()


_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class GenerationParams:
    """One transfer invocation's knobs, all documented defaults.

    material_scale and geometry_scale expose the conditioning strengths of
    the exemplar and depth adapters; seeds serialize as decimal strings so
    every component agrees on their width.
    """

    seed: int = 0
    steps: int = 30
    guidance_scale: float = 5.0
    material_scale: float = 1.0
    geometry_scale: float = 1.0
    init_mode: InitMode = InitMode.FOREGROUND_GRAYSCALE
    working_size: int = 1024

    def __post_init__(self):
        if not (0 <= int(self.seed) <= _MAX_SEED):
            raise InvalidInputError("seed must fit in 64 bits")
        if self.steps < 1:
            raise InvalidInputError("steps must be >= 1")
        if not (np.isfinite(self.guidance_scale) and self.guidance_scale >= 0):
            raise InvalidInputError("guidance_scale must be finite and >= 0")
        for name in ("material_scale", "geometry_scale"):
            value = getattr(self, name)
            if not (np.isfinite(value) and 0.0 <= value <= 1.0):
                raise InvalidInputError(f"{name} must lie in [0, 1]")
        if self.working_size < 8 or self.working_size % 8:
            raise InvalidInputError("working_size must be a positive multiple of 8")
        object.__setattr__(self, "init_mode", InitMode(self.init_mode))

    def to_record(self) -> dict:
        """Flat key-value form used in metadata and the service API."""
        return {
            "seed": str(self.seed),
            "steps": self.steps,
            "guidance_scale": self.guidance_scale,
            "material_scale": self.material_scale,
            "geometry_scale": self.geometry_scale,
            "init_mode": self.init_mode.value,
            "working_size": self.working_size,
        }

    @classmethod
    def from_record(cls, record: dict) -> "GenerationParams":
        known = {}
        for key in ("steps", "working_size"):
            if key in record:
                known[key] = int(record[key])
        for key in ("guidance_scale", "material_scale", "geometry_scale"):
            if key in record:
                known[key] = float(record[key])
        if "seed" in record:
            known["seed"] = int(str(record["seed"]))
        if "init_mode" in record:
            known["init_mode"] = InitMode(record["init_mode"])
        return cls(**known)


@dataclass(frozen=True, eq=False)
class EditResult:
    """One finished transfer: the image plus everything needed to rerun it."""

    image: RasterImage
    request_digest: str
    params: GenerationParams
    backend_ids: dict[str, str]
    timings: dict[str, float] = field(default_factory=dict)
    condition_digests: dict[str, str] = field(default_factory=dict)
    pair_id: str | None = None


# --- mock backends ----------------------------------------------------------


class MockMaterialEncoder:
    """Embedding = (mean R, mean G, mean B, luma std) over the crop."""

    def encode(self, exemplar: MaterialExemplar) -> MaterialEmbedding:
        region = exemplar.cropped()
        rgb = region.data[:, :, :3] / 255.0
        mean = rgb.mean(axis=(0, 1))
        spread = float(kernels.luma_bt601(region.data).std())
        vectors = np.array([[mean[0], mean[1], mean[2], spread]])
        return MaterialEmbedding(
            vectors=vectors, backend_id=MOCK_ENCODER, source_digest=exemplar.digest()
        )


def mock_modulation(mean_channel: float, init_luma: np.ndarray) -> np.ndarray:
    """The mock generator's noise-free masked-region value, on the 8-bit grid."""
    return np.rint(mean_channel * init_luma * 255.0)


class MockGenerator:
    """Masked region = embedding mean color x init luma + seeded noise.

    The noise field depends only on (seed, canvas extent), never on pixel
    content, so paired generations with a shared seed carry identical
    noise. Unmasked pixels are copied from the init image untouched.
    """

    compatible_encoders = (MOCK_ENCODER,)

    def generate(
        self,
        embedding: MaterialEmbedding,
        depth: DepthMap,
        init: RasterImage,
        mask: ForegroundMask,
        params: GenerationParams,
    ) -> RasterImage:
        mean_color = embedding.vectors[0][:3]
        luma = kernels.luma_bt601(init.data)
        rng = np.random.default_rng(params.seed)
        noise = rng.integers(-MOCK_NOISE_STEPS, MOCK_NOISE_STEPS + 1, size=(init.height, init.width, 3))
        masked = mask.binary_view.astype(bool)
        out = init.data.copy()
        for c in range(3):
            values = np.clip(mock_modulation(mean_color[c], luma) + noise[:, :, c], 0.0, 255.0)
            out[:, :, c] = np.where(masked, values.astype(np.uint8), init.data[:, :, c])
        return RasterImage(out)


def register_generation_mocks(registry: BackendRegistry) -> None:
    registry.register(
        BackendDescriptor(kind=KIND_ENCODER, id=MOCK_ENCODER), lambda d: MockMaterialEncoder()
    )
    registry.register(
        BackendDescriptor(kind=KIND_GENERATOR, id=MOCK_GENERATOR), lambda d: MockGenerator()
    )


# --- operations -------------------------------------------------------------


def _backend(registry: BackendRegistry | None, backend_id: str, kind: str):
    registry = registry or get_default_registry()
    instance = registry.resolve(backend_id, kind=kind)
    return registry.descriptor(backend_id), instance, backend_gate(registry, backend_id)


def encode_material(
    exemplar: MaterialExemplar,
    backend: str | BackendDescriptor = MOCK_ENCODER,
    registry: BackendRegistry | None = None,
) -> MaterialEmbedding:
    """Encode the (cropped) exemplar; deterministic for a fixed backend."""
    backend_id = backend.id if isinstance(backend, BackendDescriptor) else backend
    descriptor, instance, gate = _backend(registry, backend_id, KIND_ENCODER)
    try:
        with gate:
            embedding = instance.encode(exemplar)
    except BackendError:
        raise
    except Exception as exc:
        raise InferenceError(
            f"encoder backend {descriptor.id!r} failed: {exc}", backend_id=descriptor.id
        ) from exc
    if embedding.source_digest != exemplar.digest():
        raise ContractError(
            f"encoder backend {descriptor.id!r} returned an embedding whose source digest "
            "does not match the exemplar"
        )
    return embedding


def generate(
    embedding: MaterialEmbedding,
    depth: DepthMap,
    init: RasterImage,
    mask: ForegroundMask,
    params: GenerationParams,
    backend: str | BackendDescriptor = MOCK_GENERATOR,
    registry: BackendRegistry | None = None,
) -> RasterImage:
    """Run the four-condition inpainting call at working resolution.

    Where the mask is 0 the output may still differ from init after a real
    backend; the paste-back in transfer_material is what restores the
    background exactly.
    """
    backend_id = backend.id if isinstance(backend, BackendDescriptor) else backend
    descriptor, instance, gate = _backend(registry, backend_id, KIND_GENERATOR)
    size = (params.working_size, params.working_size)
    for name, extent in (("depth", (depth.data.shape[1], depth.data.shape[0])),
                         ("init", init.extent),
                         ("mask", (mask.width, mask.height))):
        if extent != size:
            raise InvalidInputError(f"{name} extent {extent} != working size {size}")
    compatible = getattr(instance, "compatible_encoders", None)
    if compatible is not None and embedding.backend_id not in compatible:
        raise ContractError(
            f"embedding from {embedding.backend_id!r} is not compatible with "
            f"generator {descriptor.id!r}"
        )
    try:
        with gate:
            image = instance.generate(embedding, depth, init, mask, params)
    except BackendError:
        raise
    except Exception as exc:
        raise InferenceError(
            f"generator backend {descriptor.id!r} failed: {exc}", backend_id=descriptor.id
        ) from exc
    if image.extent != size:
        raise InferenceError(
            f"generator backend {descriptor.id!r} returned wrong extent", backend_id=descriptor.id
        )
    return image


def _request_digest(
    input_image: RasterImage,
    mask: ForegroundMask,
    exemplar: MaterialExemplar,
    params: GenerationParams,
    backend_ids: dict[str, str],
    feather: int,
) -> str:
    record = {
        "input": input_image.digest(),
        "mask": mask.digest(),
        "exemplar": exemplar.digest(),
        "crop": exemplar.crop,
        "scale_hint": exemplar.scale_hint,
        "text_hint": exemplar.text_hint,
        "params": params.to_record(),
        "backends": backend_ids,
        "feather": feather,
    }
    payload = json.dumps(record, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def _tag_stage(exc: BackendError, stage: str) -> BackendError:
    if exc.stage is None:
        exc.stage = stage
    return exc


def transfer_material(
    input_image: RasterImage,
    mask: ForegroundMask,
    exemplar: MaterialExemplar,
    params: GenerationParams,
    *,
    encoder: str = MOCK_ENCODER,
    depth_backend: str = MOCK_DEPTH,
    generator: str = MOCK_GENERATOR,
    registry: BackendRegistry | None = None,
    feather: int = DEFAULT_FEATHER,
    progress: ProgressFn | None = None,
    embedding: MaterialEmbedding | None = None,
) -> EditResult:
    """End-to-end transfer: encode, estimate depth, compose the init image,
    fit to working resolution, generate, and paste back.

    The background outside the feathered mask support is bit-identical to
    the input. Pass ``embedding`` to reuse a previously encoded exemplar
    (lighting-aware pairs do this).
    """
    if not input_image.same_extent(mask):
        raise InvalidInputError(
            f"input extent {input_image.data.shape[:2]} != mask extent {mask.data.shape[:2]}"
        )
    if mask.is_empty():
        raise EmptyMaskError("mask selects no pixels; nothing to edit")
    backend_ids = {"encoder": encoder, "depth": depth_backend, "generator": generator}
    timings: dict[str, float] = {}

    def tick(stage: str, fraction: float, started: float) -> None:
        timings[stage] = time.perf_counter() - started
        if progress is not None:
            progress(stage, fraction)

    t0 = time.perf_counter()
    try:
        if embedding is None:
            embedding = encode_material(exemplar, encoder, registry)
        elif embedding.source_digest != exemplar.digest():
            raise ContractError("provided embedding does not match the exemplar")
    except BackendError as exc:
        raise _tag_stage(exc, "encode")
    tick("encode", 0.15, t0)

    t0 = time.perf_counter()
    try:
        depth = estimate_depth(input_image, depth_backend, registry)
    except BackendError as exc:
        raise _tag_stage(exc, "depth")
    tick("depth", 0.30, t0)

    t0 = time.perf_counter()
    init = compose_init_image(input_image, mask, params.init_mode, seed=params.seed)
    tick("compose", 0.40, t0)

    t0 = time.perf_counter()
    target = (params.working_size, params.working_size)
    init_fit, placement = fit_to_generation_size(init, target)
    depth_fit = DepthMap(fit_field(depth.data, placement, pad="edge"))
    mask_fit = ForegroundMask(fit_field(mask.data, placement, pad="zero"))
    tick("fit", 0.50, t0)

    t0 = time.perf_counter()
    try:
        raw = generate(embedding, depth_fit, init_fit, mask_fit, params, generator, registry)
    except BackendError as exc:
        raise _tag_stage(exc, "generate")
    tick("generate", 0.90, t0)

    t0 = time.perf_counter()
    returned = invert_placement(raw, placement)
    composed = paste_back(input_image, returned, mask, feather)
    tick("paste", 1.0, t0)

    return EditResult(
        image=composed,
        request_digest=_request_digest(input_image, mask, exemplar, params, backend_ids, feather),
        params=params,
        backend_ids=backend_ids,
        timings=timings,
        condition_digests={
            "input": input_image.digest(),
            "mask": mask.digest(),
            "embedding": embedding.digest(),
            "depth": depth.digest(),
            "init": init.digest(),
        },
    )


def transfer_lighting_aware(
    render_a: RasterImage,
    render_b: RasterImage,
    mask_a: ForegroundMask,
    mask_b: ForegroundMask,
    exemplar: MaterialExemplar,
    params: GenerationParams,
    *,
    params_b: GenerationParams | None = None,
    chain_from_first: bool = False,
    encoder: str = MOCK_ENCODER,
    depth_backend: str = MOCK_DEPTH,
    generator: str = MOCK_GENERATOR,
    registry: BackendRegistry | None = None,
    feather: int = DEFAULT_FEATHER,
) -> tuple[EditResult, EditResult]:
    """Transfer the same material onto two renders of one object under
    different illumination, reusing the seed and the embedding so texture
    stays consistent while shading follows each render.

    By default pass B's init derives from render B; ``chain_from_first``
    instead feeds pass A's output in as pass B's input image.
    """
    if render_a.data.shape[:2] != render_b.data.shape[:2]:
        raise InvalidInputError("lighting-aware renders must share an extent")
    if params_b is None:
        params_b = params
    if params_b.seed != params.seed:
        raise ContractError("lighting-aware pair requires the identical seed for both passes")
    embedding = encode_material(exemplar, encoder, registry)
    kwargs = dict(
        encoder=encoder,
        depth_backend=depth_backend,
        generator=generator,
        registry=registry,
        feather=feather,
        embedding=embedding,
    )
    result_a = transfer_material(render_a, mask_a, exemplar, params, **kwargs)
    input_b = result_a.image if chain_from_first else render_b
    result_b = transfer_material(input_b, mask_b, exemplar, params_b, **kwargs)
    pair_id = hashlib.sha256(
        (result_a.request_digest + result_b.request_digest).encode()
    ).hexdigest()[:32]
    return replace(result_a, pair_id=pair_id), replace(result_b, pair_id=pair_id)


@dataclass(frozen=True)
class Pipeline:
    """A registry plus the backend ids of one transfer configuration."""

    registry: BackendRegistry | None = None
    encoder: str = MOCK_ENCODER
    depth: str = MOCK_DEPTH
    generator: str = MOCK_GENERATOR
    feather: int = DEFAULT_FEATHER

    def transfer(
        self,
        input_image: RasterImage,
        mask: ForegroundMask,
        exemplar: MaterialExemplar,
        params: GenerationParams,
        progress: ProgressFn | None = None,
    ) -> EditResult:
        return transfer_material(
            input_image,
            mask,
            exemplar,
            params,
            encoder=self.encoder,
            depth_backend=self.depth,
            generator=self.generator,
            registry=self.registry,
            feather=self.feather,
            progress=progress,
        )

    def describe(self) -> dict:
        return {
            "encoder": self.encoder,
            "depth": self.depth,
            "generator": self.generator,
            "feather": self.feather,
        }
