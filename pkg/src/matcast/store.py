"""Content-addressed asset storage.

Asset ids are the SHA-256 of the stored bytes, so identical uploads and
identical re-generated results deduplicate by construction. Records are
immutable after creation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from matcast.errors import StorageError
from matcast.imaging import (
    ForegroundMask,
    RasterImage,
    decode_image,
    decode_mask,
    encode_image,
    encode_mask,
)

ASSET_KINDS = ("image", "mask", "depth", "exemplar", "result")


@dataclass(frozen=True)
class AssetRecord:
    id: str
    kind: str
    media_type: str
    byte_size: int
    created: str


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class AssetStore:
    """Flat directory of objects plus one metadata sidecar per object."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "objects").mkdir(parents=True, exist_ok=True)

    def _object_path(self, asset_id: str) -> Path:
        return self.root / "objects" / asset_id

    def _meta_path(self, asset_id: str) -> Path:
        return self.root / "objects" / (asset_id + ".meta.json")

    def put_bytes(self, data: bytes, kind: str, media_type: str = "application/octet-stream") -> AssetRecord:
        if kind not in ASSET_KINDS:
            raise StorageError(f"unknown asset kind {kind!r}")
        asset_id = hashlib.sha256(data).hexdigest()
        meta_path = self._meta_path(asset_id)
        if meta_path.exists():
            return self.get_record(asset_id)
        record = AssetRecord(
            id=asset_id, kind=kind, media_type=media_type, byte_size=len(data), created=_now()
        )
        self._object_path(asset_id).write_bytes(data)
        meta_path.write_text(json.dumps(asdict(record), indent=2))
        return record

    def exists(self, asset_id: str) -> bool:
        return self._meta_path(asset_id).exists()

    def get_record(self, asset_id: str) -> AssetRecord:
        try:
            meta = json.loads(self._meta_path(asset_id).read_text())
        except FileNotFoundError:
            raise StorageError(f"no asset with id {asset_id!r}") from None
        return AssetRecord(**meta)

    def get_bytes(self, asset_id: str) -> bytes:
        try:
            return self._object_path(asset_id).read_bytes()
        except FileNotFoundError:
            raise StorageError(f"no asset with id {asset_id!r}") from None

    def put_image(self, image: RasterImage, kind: str = "image") -> AssetRecord:
        return self.put_bytes(encode_image(image), kind, "image/png")

    def load_image(self, asset_id: str) -> RasterImage:
        return decode_image(self.get_bytes(asset_id))

    def put_mask(self, mask: ForegroundMask) -> AssetRecord:
        return self.put_bytes(encode_mask(mask), "mask", "image/png")

    def load_mask(self, asset_id: str) -> ForegroundMask:
        return decode_mask(self.get_bytes(asset_id))

    def put_json(self, payload: dict, kind: str = "result") -> AssetRecord:
        data = json.dumps(payload, indent=2, sort_keys=True).encode()
        return self.put_bytes(data, kind, "application/json")
