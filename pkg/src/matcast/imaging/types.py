"""Pixel-domain value types.

Images are stored 8-bit and interpreted on the [0, 1] scale for math;
masks, depth maps and grayscale planes are float64 fields on [0, 1].
All types are immutable in spirit: operations never mutate their inputs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np

from matcast.errors import InvalidInputError


class InitMode(str, Enum):
    """Which image the inpainting run denoises from."""

    FOREGROUND_GRAYSCALE = "foreground-grayscale"
    ORIGINAL_IMAGE = "original-image"
    FOREGROUND_NOISE = "foreground-noise"


def _digest_array(kind: str, data: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(kind.encode())
    h.update(repr(data.shape).encode())
    h.update(np.ascontiguousarray(data).tobytes())
    return h.hexdigest()


@dataclass(frozen=True, eq=False)
class RasterImage:
    """8-bit RGB or RGBA image, shape (height, width, channels)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] not in (3, 4):
            raise InvalidInputError(f"image must be HxWx3 or HxWx4, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInputError("image extent must be at least 1x1")
        if arr.dtype != np.uint8:
            raise InvalidInputError(f"image data must be uint8, got {arr.dtype}")
        object.__setattr__(self, "data", np.ascontiguousarray(arr))

    @classmethod
    def from_float(cls, values: np.ndarray) -> "RasterImage":
        """Quantize a float array on [0, 1] to 8-bit storage."""
        values = np.asarray(values, dtype=np.float64)
        if np.isnan(values).any():
            raise InvalidInputError("image values contain NaN")
        data = np.clip(np.rint(values * 255.0), 0.0, 255.0).astype(np.uint8)
        return cls(data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def extent(self) -> tuple[int, int]:
        """(width, height)."""
        return (self.width, self.height)

    def to_float(self) -> np.ndarray:
        return self.data / 255.0

    def digest(self) -> str:
        return _digest_array("image", self.data)

    def same_extent(self, other) -> bool:
        return self.data.shape[:2] == other.data.shape[:2]


def _check_unit_field(data: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"{what} must be a single-channel HxW field, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{what} extent must be at least 1x1")
    if not np.isfinite(arr).all():
        raise InvalidInputError(f"{what} contains NaN or Inf")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise InvalidInputError(f"{what} values must lie in [0, 1]")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True, eq=False)
class GrayscaleImage:
    """Single-channel luma plane on [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_unit_field(self.data, "grayscale image"))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def digest(self) -> str:
        return _digest_array("gray", self.data)


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Normalized depth on [0, 1]; larger values are nearer the camera."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_unit_field(self.data, "depth map"))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def flipped(self) -> "DepthMap":
        """Reverse the near/far convention."""
        return DepthMap(1.0 - self.data)

    def digest(self) -> str:
        return _digest_array("depth", self.data)


#: Threshold separating foreground from background in a soft mask.
BINARY_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class ForegroundMask:
    """Soft alpha selecting the object being edited."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_unit_field(self.data, "mask"))

    @classmethod
    def full(cls, height: int, width: int) -> "ForegroundMask":
        return cls(np.ones((height, width)))

    @classmethod
    def empty(cls, height: int, width: int) -> "ForegroundMask":
        return cls(np.zeros((height, width)))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def binary_view(self) -> np.ndarray:
        """0/1 uint8 view thresholded at BINARY_THRESHOLD."""
        return (self.data >= BINARY_THRESHOLD).astype(np.uint8)

    def is_empty(self) -> bool:
        """True when no pixel crosses the binary threshold."""
        return not bool(self.binary_view.any())

    def digest(self) -> str:
        return _digest_array("mask", self.data)

    def same_extent(self, other) -> bool:
        return self.data.shape[:2] == other.data.shape[:2]


@dataclass(frozen=True)
class PlacementRecord:
    """How an image was fitted into the generator's working canvas.

    ``scale`` maps source pixels to canvas pixels; the scaled content sits
    at (offset_x, offset_y) and the remaining border is padding.
    """

    source_width: int
    source_height: int
    target_width: int
    target_height: int
    scale: float
    scaled_width: int
    scaled_height: int
    offset_x: int
    offset_y: int

    @property
    def is_identity(self) -> bool:
        return (
            self.scale == 1.0
            and self.offset_x == 0
            and self.offset_y == 0
            and (self.source_width, self.source_height)
            == (self.target_width, self.target_height)
        )
