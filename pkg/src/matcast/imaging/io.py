"""PNG persistence for images, masks and depth maps.

Images are 8-bit RGB/RGBA PNG. Masks are 8-bit single-channel PNG. Depth
maps are 16-bit single-channel PNG with the near=1 convention recorded in
a JSON sidecar next to the file.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np
from PIL import Image

from matcast.errors import InvalidInputError
from matcast.imaging.types import DepthMap, ForegroundMask, RasterImage

DEPTH_SIDE_CAR = {"kind": "depth", "convention": "near=1", "bit_depth": 16}


def decode_image(data: bytes) -> RasterImage:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise InvalidInputError(f"payload is not a decodable image: {exc}") from exc
    if img.mode == "RGBA" or (img.mode == "P" and "transparency" in img.info):
        img = img.convert("RGBA")
    else:
        img = img.convert("RGB")
    return RasterImage(np.asarray(img))


def encode_image(image: RasterImage) -> bytes:
    mode = "RGBA" if image.channels == 4 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(image.data, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def decode_mask(data: bytes) -> ForegroundMask:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise InvalidInputError(f"payload is not a decodable image: {exc}") from exc
    if img.mode != "L":
        raise InvalidInputError(f"mask must be 8-bit single-channel PNG, got mode {img.mode}")
    return ForegroundMask(np.asarray(img) / 255.0)


def encode_mask(mask: ForegroundMask) -> bytes:
    data = np.clip(np.rint(mask.data * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(data, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_depth(data: bytes) -> DepthMap:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise InvalidInputError(f"payload is not a decodable image: {exc}") from exc
    if img.mode not in ("I;16", "I"):
        raise InvalidInputError(f"depth must be 16-bit single-channel PNG, got mode {img.mode}")
    arr = np.asarray(img, dtype=np.float64)
    return DepthMap(arr / 65535.0)


def encode_depth(depth: DepthMap) -> bytes:
    data = np.clip(np.rint(depth.data * 65535.0), 0, 65535).astype(np.uint16)
    buf = io.BytesIO()
    Image.fromarray(data).save(buf, format="PNG")
    return buf.getvalue()


def load_image(path: str | Path) -> RasterImage:
    return decode_image(Path(path).read_bytes())


def save_image(image: RasterImage, path: str | Path) -> None:
    Path(path).write_bytes(encode_image(image))


def load_mask(path: str | Path) -> ForegroundMask:
    return decode_mask(Path(path).read_bytes())


def save_mask(mask: ForegroundMask, path: str | Path) -> None:
    Path(path).write_bytes(encode_mask(mask))


def load_depth(path: str | Path) -> DepthMap:
    return decode_depth(Path(path).read_bytes())


def save_depth(depth: DepthMap, path: str | Path) -> None:
    """Write the 16-bit PNG plus the convention sidecar."""
    path = Path(path)
    path.write_bytes(encode_depth(depth))
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps(DEPTH_SIDE_CAR, indent=2) + "\n")
