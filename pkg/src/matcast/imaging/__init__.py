"""Pixel-domain types, math and PNG persistence."""

from matcast.imaging.io import (
    decode_depth,
    decode_image,
    decode_mask,
    encode_depth,
    encode_image,
    encode_mask,
    load_depth,
    load_image,
    load_mask,
    save_depth,
    save_image,
    save_mask,
)
from matcast.imaging.ops import (
    DEFAULT_FEATHER,
    compose_init_image,
    dilate_mask,
    fit_field,
    fit_to_generation_size,
    invert_placement,
    normalize_depth,
    paste_back,
    to_grayscale,
)
from matcast.imaging.types import (
    BINARY_THRESHOLD,
    DepthMap,
    ForegroundMask,
    GrayscaleImage,
    InitMode,
    PlacementRecord,
    RasterImage,
)

__all__ = [
    "BINARY_THRESHOLD",
    "DEFAULT_FEATHER",
    "DepthMap",
    "ForegroundMask",
    "GrayscaleImage",
    "InitMode",
    "PlacementRecord",
    "RasterImage",
    "compose_init_image",
    "decode_depth",
    "decode_image",
    "decode_mask",
    "dilate_mask",
    "encode_depth",
    "encode_image",
    "encode_mask",
    "fit_field",
    "fit_to_generation_size",
    "invert_placement",
    "load_depth",
    "load_image",
    "load_mask",
    "normalize_depth",
    "paste_back",
    "save_depth",
    "save_image",
    "save_mask",
    "to_grayscale",
]
