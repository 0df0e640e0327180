"""Pixel-domain operations: grayscale init composites, mask morphology,
depth normalization, working-resolution adaptation and result paste-back.

Everything here is a pure function over immutable inputs; the per-pixel
loops live in :mod:`matcast.kernels`.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from matcast import kernels
from matcast.errors import InvalidInputError
from matcast.imaging.types import (
    DepthMap,
    ForegroundMask,
    GrayscaleImage,
    InitMode,
    PlacementRecord,
    RasterImage,
)

#: Default feather width (pixels) for paste-back; hides inpainting seams
#: without visibly eroding the preserved background.
DEFAULT_FEATHER = 8


def to_grayscale(image: RasterImage) -> GrayscaleImage:
    """BT.601 luma of an RGB/RGBA image; alpha is ignored."""
    return GrayscaleImage(kernels.luma_bt601(image.data))


def compose_init_image(
    image: RasterImage,
    mask: ForegroundMask,
    mode: InitMode = InitMode.FOREGROUND_GRAYSCALE,
    seed: int = 0,
) -> RasterImage:
    """Build the image the inpainting run starts from.

    foreground-grayscale blends each foreground pixel toward its luma with
    the soft mask weight (out = F*gray + (1-F)*image); original-image
    passes the input through; foreground-noise replaces the masked region
    with uniform noise drawn from ``seed``.
    """
    if not image.same_extent(mask):
        raise InvalidInputError(
            f"image extent {image.data.shape[:2]} != mask extent {mask.data.shape[:2]}"
        )
    mode = InitMode(mode)
    if mode is InitMode.ORIGINAL_IMAGE:
        return image
    if mode is InitMode.FOREGROUND_GRAYSCALE:
        return RasterImage(kernels.compose_grayscale(image.data, mask.data))
    rng = np.random.default_rng(seed)
    noise = rng.integers(0, 256, size=image.data.shape, dtype=np.uint8)
    if image.channels == 4:
        noise[:, :, 3] = image.data[:, :, 3]
    return RasterImage(kernels.blend_masked(image.data, noise, mask.data))


def dilate_mask(mask: ForegroundMask, radius: int) -> ForegroundMask:
    """Dilate the mask's binary view with a disc; radius 0 is the identity."""
    if radius < 0:
        raise InvalidInputError("dilation radius must be >= 0")
    if radius == 0:
        return mask
    dilated = kernels.binary_dilate(mask.binary_view, int(radius))
    return ForegroundMask(dilated.astype(np.float64))


def normalize_depth(raw: np.ndarray) -> DepthMap:
    """Affine-map an arbitrary single-channel field onto [0, 1].

    Constant fields map to 0.5 everywhere so degenerate scenes still pass
    through the pipeline.
    """
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"depth field must be HxW, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidInputError("depth field contains NaN or Inf")
    lo = float(arr.min())
    hi = float(arr.max())
    if hi == lo:
        return DepthMap(np.full(arr.shape, 0.5))
    return DepthMap((arr - lo) / (hi - lo))


def _require_working_size(target: tuple[int, int]) -> tuple[int, int]:
    tw, th = int(target[0]), int(target[1])
    if tw < 8 or th < 8 or tw % 8 or th % 8:
        raise InvalidInputError(f"working size must be positive multiples of 8, got {target}")
    return tw, th


def _placement(width: int, height: int, target: tuple[int, int]) -> PlacementRecord:
    tw, th = _require_working_size(target)
    scale = min(tw / width, th / height)
    sw = min(tw, max(1, round(width * scale)))
    sh = min(th, max(1, round(height * scale)))
    return PlacementRecord(
        source_width=width,
        source_height=height,
        target_width=tw,
        target_height=th,
        scale=scale,
        scaled_width=sw,
        scaled_height=sh,
        offset_x=(tw - sw) // 2,
        offset_y=(th - sh) // 2,
    )


def _resize_u8(data: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    mode = "RGBA" if data.shape[2] == 4 else "RGB"
    resized = Image.fromarray(data, mode=mode).resize(size, Image.BILINEAR)
    return np.asarray(resized)


def _resize_field(data: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    resized = Image.fromarray(data.astype(np.float32), mode="F").resize(size, Image.BILINEAR)
    return np.clip(np.asarray(resized, dtype=np.float64), 0.0, 1.0)


def fit_to_generation_size(
    image: RasterImage, target: tuple[int, int]
) -> tuple[RasterImage, PlacementRecord]:
    """Aspect-preserving resize plus edge-replicate padding to the target.

    The returned PlacementRecord maps results back to the source extent;
    padding replicates edges rather than cropping so no object geometry is
    lost to the depth branch.
    """
    rec = _placement(image.width, image.height, target)
    data = image.data
    if (rec.scaled_width, rec.scaled_height) != (image.width, image.height):
        data = _resize_u8(data, (rec.scaled_width, rec.scaled_height))
    pads = (
        (rec.offset_y, rec.target_height - rec.scaled_height - rec.offset_y),
        (rec.offset_x, rec.target_width - rec.scaled_width - rec.offset_x),
        (0, 0),
    )
    return RasterImage(np.pad(data, pads, mode="edge")), rec


def fit_field(
    data: np.ndarray, record: PlacementRecord, pad: str = "edge"
) -> np.ndarray:
    """Apply an existing placement to a float field (mask or depth plane).

    Masks pad with zeros so padding never becomes editable region; depth
    pads edge-replicate like the image.
    """
    field = np.asarray(data, dtype=np.float64)
    if field.shape != (record.source_height, record.source_width):
        raise InvalidInputError("field extent does not match placement source extent")
    if (record.scaled_width, record.scaled_height) != (record.source_width, record.source_height):
        field = _resize_field(field, (record.scaled_width, record.scaled_height))
    pads = (
        (record.offset_y, record.target_height - record.scaled_height - record.offset_y),
        (record.offset_x, record.target_width - record.scaled_width - record.offset_x),
    )
    if pad == "zero":
        return np.pad(field, pads, mode="constant", constant_values=0.0)
    return np.pad(field, pads, mode="edge")


def invert_placement(generated: RasterImage, record: PlacementRecord) -> RasterImage:
    """Map a working-canvas result back onto the source extent."""
    if (generated.width, generated.height) != (record.target_width, record.target_height):
        raise InvalidInputError("generated extent does not match placement target extent")
    data = generated.data[
        record.offset_y : record.offset_y + record.scaled_height,
        record.offset_x : record.offset_x + record.scaled_width,
    ]
    if (record.scaled_width, record.scaled_height) != (record.source_width, record.source_height):
        data = _resize_u8(np.ascontiguousarray(data), (record.source_width, record.source_height))
    return RasterImage(np.ascontiguousarray(data))


def paste_back(
    original: RasterImage,
    generated: RasterImage,
    mask: ForegroundMask,
    feather: int = DEFAULT_FEATHER,
) -> RasterImage:
    """Recompose the generated foreground onto the untouched original.

    The blend weight is 1 inside the mask's binary view and falls off
    linearly to 0 over ``feather`` pixels of Euclidean distance; pixels
    with weight 0 are bit-identical to the original.
    """
    if feather < 0:
        raise InvalidInputError("feather must be >= 0")
    if not (original.same_extent(generated) and original.same_extent(mask)):
        raise InvalidInputError("paste_back requires equal extents")
    if original.channels != generated.channels:
        raise InvalidInputError("paste_back requires equal channel counts")
    alpha = kernels.feather_alpha(mask.binary_view, int(feather))
    return RasterImage(kernels.blend_masked(original.data, generated.data, alpha))
