"""Backend contracts and deterministic mocks for the estimators the
pipeline consumes: monocular depth, single-foreground extraction and
promptable multi-region segmentation.

Backends are registered by descriptor in a :class:`BackendRegistry` and
resolved at call time, so the library, CLI, service and tests share one
registry. Every mock is a pure function of its inputs.
"""

from __future__ import annotations

import importlib
import json
import os
import threading
import warnings
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from matcast import kernels
from matcast.errors import (
    BackendError,
    BackendUnavailableError,
    InferenceError,
    InvalidInputError,
)
from matcast.imaging import DepthMap, ForegroundMask, RasterImage, normalize_depth, to_grayscale

KIND_DEPTH = "depth"
KIND_FOREGROUND = "foreground"
KIND_SEGMENTATION = "promptable-segmentation"
KIND_ENCODER = "material-encoder"
KIND_GENERATOR = "generator"
KIND_PERCEPTUAL = "perceptual-metric"
KIND_IMAGE_EMBEDDING = "image-embedding"

_TRUTHY = {"1", "true", "yes", "on"}


class EmptyMaskWarning(UserWarning):
    """Foreground extraction produced an empty mask."""


@dataclass(frozen=True)
class BackendDescriptor:
    """Identity and capabilities of one registered backend."""

    kind: str
    id: str
    version: str = "1"
    deterministic: bool = True
    max_concurrency: int | None = None
    options: Mapping[str, str] = field(default_factory=dict)

    def option_flag(self, name: str) -> bool:
        return str(self.options.get(name, "")).lower() in _TRUTHY


@dataclass(frozen=True)
class RegionPrompt:
    """A point, box or free-text request for one segmentation mask."""

    kind: str
    x: int | None = None
    y: int | None = None
    x1: int | None = None
    y1: int | None = None
    text: str | None = None

    @classmethod
    def point(cls, x: int, y: int) -> "RegionPrompt":
        return cls(kind="point", x=x, y=y)

    @classmethod
    def box(cls, x0: int, y0: int, x1: int, y1: int) -> "RegionPrompt":
        return cls(kind="box", x=x0, y=y0, x1=x1, y1=y1)

    @classmethod
    def label(cls, text: str) -> "RegionPrompt":
        return cls(kind="label", text=text)

    def validate_bounds(self, width: int, height: int) -> None:
        if self.kind == "point":
            if not (0 <= self.x < width and 0 <= self.y < height):
                raise InvalidInputError(f"point prompt ({self.x}, {self.y}) outside {width}x{height}")
        elif self.kind == "box":
            if not (0 <= self.x < self.x1 <= width and 0 <= self.y < self.y1 <= height):
                raise InvalidInputError(
                    f"box prompt ({self.x}, {self.y}, {self.x1}, {self.y1}) outside {width}x{height}"
                )
        elif self.kind != "label":
            raise InvalidInputError(f"unknown prompt kind {self.kind!r}")


class BackendRegistry:
    """Maps backend ids to descriptors and lazily constructed instances."""

    def __init__(self):
        self._descriptors: dict[str, BackendDescriptor] = {}
        self._factories: dict[str, Callable[[BackendDescriptor], object]] = {}
        self._instances: dict[str, object] = {}
        self._gates: dict[str, threading.Semaphore] = {}
        self._lock = threading.Lock()

    def register(self, descriptor: BackendDescriptor, factory: Callable[[BackendDescriptor], object]) -> None:
        if descriptor.id in self._descriptors:
            raise InvalidInputError(f"backend id {descriptor.id!r} already registered")
        self._descriptors[descriptor.id] = descriptor
        self._factories[descriptor.id] = factory
        if descriptor.max_concurrency:
            self._gates[descriptor.id] = threading.Semaphore(descriptor.max_concurrency)

    def ids(self, kind: str | None = None) -> list[str]:
        return [d.id for d in self._descriptors.values() if kind is None or d.kind == kind]

    def descriptor(self, backend_id: str) -> BackendDescriptor:
        try:
            return self._descriptors[backend_id]
        except KeyError:
            raise BackendUnavailableError(
                f"no backend registered with id {backend_id!r}", backend_id=backend_id
            ) from None

    def resolve(self, backend_id: str, kind: str | None = None) -> object:
        desc = self.descriptor(backend_id)
        if kind is not None and desc.kind != kind:
            raise BackendUnavailableError(
                f"backend {backend_id!r} has kind {desc.kind!r}, expected {kind!r}",
                backend_id=backend_id,
            )
        with self._lock:
            if backend_id not in self._instances:
                try:
                    self._instances[backend_id] = self._factories[backend_id](desc)
                except BackendError:
                    raise
                except Exception as exc:
                    raise BackendUnavailableError(
                        f"backend {backend_id!r} failed to load: {exc}", backend_id=backend_id
                    ) from exc
            return self._instances[backend_id]

    def gate(self, backend_id: str):
        """Concurrency gate for backends that declared max_concurrency."""
        return self._gates.get(backend_id)


def _env_overrides(backend_id: str) -> dict[str, str]:
    prefix = "MATCAST_BACKEND_" + backend_id.upper().replace("-", "_") + "_"
    found = {}
    for key, value in os.environ.items():
        if key.startswith(prefix):
            found[key[len(prefix):].lower()] = value
    return found


def _apply_env(descriptor: BackendDescriptor) -> BackendDescriptor:
    overrides = _env_overrides(descriptor.id)
    if not overrides:
        return descriptor
    merged = dict(descriptor.options)
    merged.update(overrides)
    return BackendDescriptor(
        kind=descriptor.kind,
        id=descriptor.id,
        version=descriptor.version,
        deterministic=descriptor.deterministic,
        max_concurrency=descriptor.max_concurrency,
        options=merged,
    )


def _import_factory(spec: str) -> Callable[[BackendDescriptor], object]:
    module_name, _, attr = spec.partition(":")

    def factory(descriptor: BackendDescriptor) -> object:
        try:
            module = importlib.import_module(module_name)
            maker = getattr(module, attr) if attr else module
        except Exception as exc:
            raise BackendUnavailableError(
                f"cannot import backend factory {spec!r}: {exc}", backend_id=descriptor.id
            ) from exc
        return maker(descriptor)

    return factory


# --- mock backends ---------------------------------------------------------


class MockDepthBackend:
    """Depth = normalized luma: deterministic and monotone with studio lighting."""

    def estimate(self, image: RasterImage) -> DepthMap:
        return normalize_depth(to_grayscale(image).data)


def _otsu_threshold(counts: np.ndarray) -> int | None:
    """Threshold maximizing inter-class variance; None for flat histograms."""
    total = counts.sum()
    levels = np.arange(256, dtype=np.float64)
    weighted = counts * levels
    best_t, best_var = None, 0.0
    cum_n, cum_sum = 0.0, 0.0
    grand = weighted.sum()
    for t in range(255):
        cum_n += counts[t]
        cum_sum += weighted[t]
        n_fg = total - cum_n
        if cum_n == 0 or n_fg == 0:
            continue
        mean_bg = cum_sum / cum_n
        mean_fg = (grand - cum_sum) / n_fg
        var = cum_n * n_fg * (mean_bg - mean_fg) ** 2
        if var > best_var:
            best_var, best_t = var, t
    return best_t


class MockForegroundBackend:
    """Alpha channel when present, Otsu on luma otherwise.

    Ambiguous images (flat histogram) produce an empty mask plus an
    EmptyMaskWarning; whether that aborts the edit is the caller's call.
    """

    def extract(self, image: RasterImage) -> ForegroundMask:
        if image.channels == 4:
            return ForegroundMask(image.data[:, :, 3] / 255.0)
        luma_bytes = np.clip(
            np.rint(kernels.luma_bt601(image.data) * 255.0), 0, 255
        ).astype(np.uint8)
        counts = np.bincount(luma_bytes.ravel(), minlength=256).astype(np.float64)
        threshold = _otsu_threshold(counts)
        if threshold is None:
            warnings.warn("foreground extraction found no separable object", EmptyMaskWarning)
            return ForegroundMask.empty(image.height, image.width)
        return ForegroundMask((luma_bytes > threshold).astype(np.float64))


class MockSegmentationBackend:
    """Point prompts flood-fill the connected region of identical color;
    box prompts select the box. Free-text labels are not supported."""

    def segment(self, image: RasterImage, prompts: list[RegionPrompt]) -> list[ForegroundMask]:
        masks = []
        for prompt in prompts:
            if prompt.kind == "point":
                seed_color = image.data[prompt.y, prompt.x, :3]
                same = np.all(image.data[:, :, :3] == seed_color, axis=2).astype(np.uint8)
                component = kernels.connected_component(same, prompt.y, prompt.x)
                masks.append(ForegroundMask(component.astype(np.float64)))
            elif prompt.kind == "box":
                data = np.zeros((image.height, image.width))
                data[prompt.y : prompt.y1, prompt.x : prompt.x1] = 1.0
                masks.append(ForegroundMask(data))
            else:
                raise BackendError("labels unsupported by mock", backend_id=MOCK_SEGMENTATION)
        return masks


MOCK_DEPTH = "mock-depth"
MOCK_FOREGROUND = "mock-foreground"
MOCK_SEGMENTATION = "mock-segment"


def register_perception_mocks(registry: BackendRegistry) -> None:
    registry.register(
        BackendDescriptor(kind=KIND_DEPTH, id=MOCK_DEPTH), lambda d: MockDepthBackend()
    )
    registry.register(
        BackendDescriptor(kind=KIND_FOREGROUND, id=MOCK_FOREGROUND),
        lambda d: MockForegroundBackend(),
    )
    registry.register(
        BackendDescriptor(kind=KIND_SEGMENTATION, id=MOCK_SEGMENTATION),
        lambda d: MockSegmentationBackend(),
    )


def load_registry(config_path: str | Path | None = None) -> BackendRegistry:
    """Build a registry with all mocks plus backends from a config file.

    The config is JSON: ``{"backends": [{"kind", "id", "version?",
    "deterministic?", "max_concurrency?", "import?", "options?"}, ...]}``.
    Entries with an ``import`` dotted path ("pkg.module:factory") load
    lazily; per-backend environment variables
    ``MATCAST_BACKEND_<ID>_<OPTION>`` override options at load time.
    """
    from matcast.evaluation import register_metric_mocks
    from matcast.generation import register_generation_mocks

    registry = BackendRegistry()
    register_perception_mocks(registry)
    register_generation_mocks(registry)
    register_metric_mocks(registry)
    if config_path is None:
        return registry
    try:
        config = json.loads(Path(config_path).read_text())
    except FileNotFoundError:
        raise InvalidInputError(f"backend config not found: {config_path}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"backend config is not valid JSON: {exc}") from exc
    for entry in config.get("backends", []):
        descriptor = BackendDescriptor(
            kind=entry["kind"],
            id=entry["id"],
            version=str(entry.get("version", "1")),
            deterministic=bool(entry.get("deterministic", False)),
            max_concurrency=entry.get("max_concurrency"),
            options={str(k): str(v) for k, v in entry.get("options", {}).items()},
        )
        descriptor = _apply_env(descriptor)
        if "import" not in entry:
            raise InvalidInputError(
                f"backend {descriptor.id!r}: non-mock config entries need an 'import' path"
            )
        registry.register(descriptor, _import_factory(entry["import"]))
    return registry


_default_registry: BackendRegistry | None = None
_default_lock = threading.Lock()


def get_default_registry() -> BackendRegistry:
    """Process-wide registry holding the mock backends."""
    global _default_registry
    with _default_lock:
        if _default_registry is None:
            _default_registry = load_registry(None)
        return _default_registry


# --- operations ------------------------------------------------------------


def _resolve(registry: BackendRegistry | None, backend: str | BackendDescriptor, kind: str):
    registry = registry or get_default_registry()
    backend_id = backend.id if isinstance(backend, BackendDescriptor) else backend
    instance = registry.resolve(backend_id, kind=kind)
    return registry.descriptor(backend_id), instance, backend_gate(registry, backend_id)


def backend_gate(registry: BackendRegistry, backend_id: str):
    """Per-backend serialization: a no-op unless the backend declared a
    max-concurrency, in which case callers queue on its semaphore."""
    gate = registry.gate(backend_id)
    return gate if gate is not None else nullcontext()


def estimate_depth(
    image: RasterImage,
    backend: str | BackendDescriptor = MOCK_DEPTH,
    registry: BackendRegistry | None = None,
) -> DepthMap:
    """Monocular depth at the image extent, normalized to [0, 1], near = 1.

    Backends whose raw convention is far = 1 set the ``flip_depth`` option
    (or the MATCAST_BACKEND_<ID>_FLIP_DEPTH variable).
    """
    descriptor, instance, gate = _resolve(registry, backend, KIND_DEPTH)
    descriptor = _apply_env(descriptor)
    try:
        with gate:
            depth = instance.estimate(image)
    except BackendError:
        raise
    except Exception as exc:
        raise InferenceError(
            f"depth backend {descriptor.id!r} failed: {exc}", backend_id=descriptor.id
        ) from exc
    if depth.data.shape != image.data.shape[:2]:
        raise InferenceError(
            f"depth backend {descriptor.id!r} returned wrong extent", backend_id=descriptor.id
        )
    if descriptor.option_flag("flip_depth"):
        depth = depth.flipped()
    return depth


def extract_foreground(
    image: RasterImage,
    backend: str | BackendDescriptor = MOCK_FOREGROUND,
    registry: BackendRegistry | None = None,
) -> ForegroundMask:
    """Soft mask of the dominant foreground object."""
    descriptor, instance, gate = _resolve(registry, backend, KIND_FOREGROUND)
    try:
        with gate:
            mask = instance.extract(image)
    except BackendError:
        raise
    except Exception as exc:
        raise InferenceError(
            f"foreground backend {descriptor.id!r} failed: {exc}", backend_id=descriptor.id
        ) from exc
    if mask.data.shape != image.data.shape[:2]:
        raise InferenceError(
            f"foreground backend {descriptor.id!r} returned wrong extent",
            backend_id=descriptor.id,
        )
    return mask


def segment_regions(
    image: RasterImage,
    prompts: list[RegionPrompt],
    backend: str | BackendDescriptor = MOCK_SEGMENTATION,
    registry: BackendRegistry | None = None,
) -> list[ForegroundMask]:
    """One mask per prompt, in prompt order. Masks may overlap; callers
    resolve overlaps by edit order."""
    if not prompts:
        raise InvalidInputError("segment_regions requires at least one prompt")
    for prompt in prompts:
        prompt.validate_bounds(image.width, image.height)
    descriptor, instance, gate = _resolve(registry, backend, KIND_SEGMENTATION)
    try:
        with gate:
            masks = instance.segment(image, prompts)
    except BackendError:
        raise
    except Exception as exc:
        raise InferenceError(
            f"segmentation backend {descriptor.id!r} failed: {exc}", backend_id=descriptor.id
        ) from exc
    if len(masks) != len(prompts):
        raise InferenceError(
            f"segmentation backend {descriptor.id!r} returned {len(masks)} masks "
            f"for {len(prompts)} prompts",
            backend_id=descriptor.id,
        )
    return masks
