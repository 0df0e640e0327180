"""Benchmark harness: dataset manifests, PSNR/LPIPS-style/CLIP-style
metrics, and report assembly.

PSNR is computed in-repo against an oracle-tested kernel; the perceptual
and image-embedding metrics are backend contracts with documented offline
mocks -- they are fixed external measures, not something to reimplement.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from matcast import kernels
from matcast.errors import (
    BackendError,
    InvalidInputError,
    ManifestError,
    MatcastError,
)
from matcast.generation import (
    EditResult,
    GenerationParams,
    MaterialExemplar,
    Pipeline,
)
from matcast.imaging import ForegroundMask, RasterImage, load_image, load_mask
from matcast.perception import (
    KIND_IMAGE_EMBEDDING,
    KIND_PERCEPTUAL,
    MOCK_FOREGROUND,
    BackendDescriptor,
    BackendRegistry,
    extract_foreground,
    get_default_registry,
)

#: Identical images report this instead of infinity so aggregates stay finite.
PSNR_CAP_DB = 100.0

MOCK_PERCEPTUAL = "mock-perceptual"
MOCK_CLIP = "mock-clip"


def _check_pair(a: RasterImage, b: RasterImage) -> None:
    if a.data.shape != b.data.shape:
        raise InvalidInputError(f"image shapes differ: {a.data.shape} vs {b.data.shape}")


def psnr(a: RasterImage, b: RasterImage, region: np.ndarray | None = None) -> float:
    """Peak signal-to-noise ratio in dB on [0, 1] intensities, capped at 100.

    ``region`` restricts the mean squared error to a binary pixel set.
    """
    _check_pair(a, b)
    if region is None:
        mse = kernels.mse(a.data, b.data)
    else:
        region = np.asarray(region, dtype=np.uint8)
        if region.shape != a.data.shape[:2]:
            raise InvalidInputError("metric region extent does not match the images")
        if not region.any():
            raise InvalidInputError("metric region is empty")
        mse = kernels.mse_masked(a.data, b.data, region)
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)


class MockPerceptualBackend:
    """Mean absolute difference of average-pooled luma (up to 8x8 cells)."""

    @staticmethod
    def _pooled(image: RasterImage) -> np.ndarray:
        luma = kernels.luma_bt601(image.data)
        rows = np.array_split(luma, min(8, luma.shape[0]), axis=0)
        cells = [np.array_split(r, min(8, luma.shape[1]), axis=1) for r in rows]
        return np.array([[c.mean() for c in row] for row in cells])

    def distance(self, a: RasterImage, b: RasterImage) -> float:
        return float(np.abs(self._pooled(a) - self._pooled(b)).mean())


class MockClipBackend:
    """Image embedding = 64-bin RGB color histogram (4 levels per channel)."""

    def embed(self, image: RasterImage) -> np.ndarray:
        rgb = image.data[:, :, :3] // 64
        bins = rgb[:, :, 0].astype(np.int64) * 16 + rgb[:, :, 1] * 4 + rgb[:, :, 2]
        return np.bincount(bins.ravel(), minlength=64).astype(np.float64)


def register_metric_mocks(registry: BackendRegistry) -> None:
    registry.register(
        BackendDescriptor(kind=KIND_PERCEPTUAL, id=MOCK_PERCEPTUAL),
        lambda d: MockPerceptualBackend(),
    )
    registry.register(
        BackendDescriptor(kind=KIND_IMAGE_EMBEDDING, id=MOCK_CLIP), lambda d: MockClipBackend()
    )


def perceptual_distance(
    a: RasterImage,
    b: RasterImage,
    backend: str = MOCK_PERCEPTUAL,
    registry: BackendRegistry | None = None,
) -> float:
    """Backend-defined perceptual distance; 0 for identical images."""
    _check_pair(a, b)
    registry = registry or get_default_registry()
    instance = registry.resolve(backend, kind=KIND_PERCEPTUAL)
    return float(instance.distance(a, b))


def clip_similarity(
    a: RasterImage,
    b: RasterImage,
    backend: str = MOCK_CLIP,
    registry: BackendRegistry | None = None,
) -> float:
    """Cosine similarity of unit-normalized image embeddings, in [-1, 1]."""
    _check_pair(a, b)
    registry = registry or get_default_registry()
    instance = registry.resolve(backend, kind=KIND_IMAGE_EMBEDDING)
    emb_a = np.asarray(instance.embed(a), dtype=np.float64)
    emb_b = np.asarray(instance.embed(b), dtype=np.float64)
    if np.array_equal(emb_a, emb_b):
        return 1.0
    norm_a = np.linalg.norm(emb_a)
    norm_b = np.linalg.norm(emb_b)
    if norm_a == 0.0 or norm_b == 0.0:
        raise BackendError(f"embedding backend {backend!r} returned a zero vector", backend_id=backend)
    value = float(np.dot(emb_a / norm_a, emb_b / norm_b))
    return min(1.0, max(-1.0, value))


# --- dataset manifests -------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    exemplar: str
    input: str
    truth: str
    mask: str | None = None
    material: str | None = None
    mesh: str | None = None
    digests: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class DatasetManifest:
    """Benchmark inputs: relative asset paths plus optional digests."""

    root: Path
    entries: tuple[ManifestEntry, ...]
    metadata: dict
    digest: str

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        try:
            raw = path.read_bytes()
            doc = json.loads(raw)
        except FileNotFoundError:
            raise ManifestError(f"manifest not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or "entries" not in doc:
            raise ManifestError("manifest must be an object with an 'entries' list")
        entries = []
        root = path.parent
        for index, item in enumerate(doc["entries"]):
            for key in ("exemplar", "input", "truth"):
                if key not in item:
                    raise ManifestError(f"entry {index}: missing field {key!r}")
            entry = ManifestEntry(
                exemplar=item["exemplar"],
                input=item["input"],
                truth=item["truth"],
                mask=item.get("mask"),
                material=item.get("material"),
                mesh=item.get("mesh"),
                digests={str(k): str(v) for k, v in item.get("digests", {}).items()},
            )
            for key in ("exemplar", "input", "truth", "mask"):
                rel = getattr(entry, key)
                if rel is not None and not (root / rel).exists():
                    raise ManifestError(f"entry {index}: asset {rel!r} not found under {root}")
            entries.append(entry)
        metadata = doc.get("metadata", {})
        materials = metadata.get("materials")
        meshes = metadata.get("meshes")
        if materials is not None and meshes is not None:
            if int(materials) * int(meshes) != len(entries):
                raise ManifestError(
                    f"synthetic manifest declares {materials} materials x {meshes} meshes "
                    f"but has {len(entries)} entries"
                )
        return cls(
            root=root,
            entries=tuple(entries),
            metadata=dict(metadata),
            digest=hashlib.sha256(raw).hexdigest(),
        )


class IdentityPipeline:
    """Echoes the input image; used to calibrate the harness itself."""

    def transfer(self, input_image, mask, exemplar, params, progress=None) -> EditResult:
        return EditResult(
            image=input_image,
            request_digest=hashlib.sha256(
                (input_image.digest() + str(params.seed)).encode()
            ).hexdigest(),
            params=params,
            backend_ids={"pipeline": "identity"},
        )

    def describe(self) -> dict:
        return {"pipeline": "identity"}


@dataclass(frozen=True)
class EvalReport:
    pipeline: dict
    manifest_digest: str
    params: dict
    metric_region: str
    entries: tuple[dict, ...]
    aggregates: dict
    failure_count: int
    valid: bool
    timestamp: str
    breakdowns: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "manifest_digest": self.manifest_digest,
            "params": self.params,
            "metric_region": self.metric_region,
            "entries": list(self.entries),
            "aggregates": self.aggregates,
            "failure_count": self.failure_count,
            "valid": self.valid,
            "timestamp": self.timestamp,
            "breakdowns": self.breakdowns,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def render_table(self) -> str:
        """Text table with the standard metric columns."""
        lines = [
            f"{'pipeline':<28} {'PSNR^':>8} {'LPIPS_v':>8} {'CLIP^':>8}  entries",
            "-" * 64,
        ]
        name = self.pipeline.get("pipeline") or self.pipeline.get("generator", "pipeline")
        agg = self.aggregates
        count = len(self.entries) - self.failure_count
        lines.append(
            f"{name:<28} {agg.get('psnr_db', float('nan')):>8.2f} "
            f"{agg.get('lpips', float('nan')):>8.3f} "
            f"{agg.get('clip_sim', float('nan')):>8.3f}  {count}/{len(self.entries)}"
        )
        if not self.valid:
            lines.append("report INVALID: more than half the entries failed")
        return "\n".join(lines) + "\n"


def _masked_out(image: RasterImage, region: np.ndarray) -> RasterImage:
    data = image.data.copy()
    data[region == 0] = 0
    return RasterImage(data)


def _entry_metrics(
    result: RasterImage,
    truth: RasterImage,
    mask: ForegroundMask | None,
    metric_region: str,
    perceptual_backend: str,
    clip_backend: str,
    registry: BackendRegistry | None,
) -> dict:
    region = None
    a, b = result, truth
    if metric_region == "masked" and mask is not None:
        region = mask.binary_view
        a, b = _masked_out(result, region), _masked_out(truth, region)
    return {
        "psnr_db": psnr(result, truth, region=region),
        "lpips": perceptual_distance(a, b, perceptual_backend, registry),
        "clip_sim": clip_similarity(a, b, clip_backend, registry),
    }


def run_benchmark(
    manifest: DatasetManifest,
    pipeline: Pipeline | IdentityPipeline,
    params: GenerationParams,
    *,
    metric_region: str = "full",
    perceptual_backend: str = MOCK_PERCEPTUAL,
    clip_backend: str = MOCK_CLIP,
    foreground_backend: str = MOCK_FOREGROUND,
    registry: BackendRegistry | None = None,
    jobs: int = 1,
) -> EvalReport:
    """Transfer every entry, score against ground truth, aggregate.

    Per-entry failures are recorded and excluded from aggregates; a report
    with more than half its entries failed is marked invalid. Entries
    without a mask asset fall back to foreground extraction.
    """
    if metric_region not in ("full", "masked"):
        raise InvalidInputError("metric_region must be 'full' or 'masked'")

    def check_digest(entry: ManifestEntry, key: str, rel: str) -> None:
        expected = entry.digests.get(key)
        if expected:
            actual = hashlib.sha256((manifest.root / rel).read_bytes()).hexdigest()
            if actual != expected:
                raise ManifestError(f"asset {rel!r} digest mismatch")

    def run_entry(index: int, entry: ManifestEntry) -> dict:
        record = {"index": index, "material": entry.material, "mesh": entry.mesh,
                  "psnr_db": None, "lpips": None, "clip_sim": None, "error": None}
        try:
            for key in ("exemplar", "input", "truth", "mask"):
                rel = getattr(entry, key)
                if rel is not None:
                    check_digest(entry, key, rel)
            input_image = load_image(manifest.root / entry.input)
            truth = load_image(manifest.root / entry.truth)
            exemplar = MaterialExemplar(image=load_image(manifest.root / entry.exemplar))
            if entry.mask is not None:
                mask = load_mask(manifest.root / entry.mask)
            else:
                mask = extract_foreground(input_image, foreground_backend, registry)
            result = pipeline.transfer(input_image, mask, exemplar, params)
            record.update(
                _entry_metrics(result.image, truth, mask, metric_region,
                               perceptual_backend, clip_backend, registry)
            )
        except (MatcastError, OSError) as exc:
            record["error"] = f"{type(exc).__name__}: {exc}"
        return record

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(lambda pair: run_entry(*pair), enumerate(manifest.entries)))
    else:
        records = [run_entry(i, e) for i, e in enumerate(manifest.entries)]

    succeeded = [r for r in records if r["error"] is None]
    failures = len(records) - len(succeeded)
    aggregates = {}
    if succeeded:
        for key in ("psnr_db", "lpips", "clip_sim"):
            aggregates[key] = float(np.mean([r[key] for r in succeeded]))

    def breakdown(label: str) -> dict:
        groups: dict[str, list[dict]] = {}
        for r in succeeded:
            if r[label] is not None:
                groups.setdefault(r[label], []).append(r)
        return {
            name: {key: float(np.mean([r[key] for r in rows]))
                   for key in ("psnr_db", "lpips", "clip_sim")}
            for name, rows in sorted(groups.items())
        }

    breakdowns = {}
    for label in ("material", "mesh"):
        grouped = breakdown(label)
        if grouped:
            breakdowns[f"by_{label}"] = grouped

    return EvalReport(
        pipeline=pipeline.describe(),
        manifest_digest=manifest.digest,
        params=params.to_record(),
        metric_region=metric_region,
        entries=tuple(records),
        aggregates=aggregates,
        failure_count=failures,
        valid=failures * 2 <= len(records),
        timestamp=datetime.now(timezone.utc).isoformat(),
        breakdowns=breakdowns,
    )
