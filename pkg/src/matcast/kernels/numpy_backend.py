"""Pure numpy/scipy implementations of the hot pixel kernels.

This is the fallback selected when the compiled extension is missing, and
the reference the extension is tested against: every function here must be
bit-identical to its native counterpart. Float work is ordered exactly as
in the native code (divide by 255, weighted sum left to right, blend as
``f*y + (1-f)*v``) so both paths round identically.
"""

import numpy as np
from scipy import ndimage

NAME = "numpy"

# ITU-R BT.601 luma weights, the documented grayscale convention.
_WR, _WG, _WB = 0.299, 0.587, 0.114


def luma_bt601(image: np.ndarray) -> np.ndarray:
    """Per-pixel luma of an 8-bit RGB/RGBA image, as float64 in [0, 1]."""
    r = image[:, :, 0] / 255.0
    g = image[:, :, 1] / 255.0
    b = image[:, :, 2] / 255.0
    return _WR * r + _WG * g + _WB * b


def compose_grayscale(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Blend each RGB channel toward the pixel's luma, weighted by the mask.

    out = f*y + (1-f)*v computed in float64 and quantized once; an alpha
    channel passes through untouched.
    """
    y = luma_bt601(image)
    out = np.empty_like(image)
    inv = 1.0 - mask
    for c in range(3):
        v = image[:, :, c] / 255.0
        blended = mask * y + inv * v
        out[:, :, c] = np.clip(np.rint(blended * 255.0), 0.0, 255.0).astype(np.uint8)
    if image.shape[2] == 4:
        out[:, :, 3] = image[:, :, 3]
    return out


def blend_masked(base: np.ndarray, overlay: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Alpha-blend overlay onto base; alpha 0 and 1 copy source bytes exactly."""
    out = np.empty_like(base)
    inv = 1.0 - alpha
    for c in range(base.shape[2]):
        b = base[:, :, c] / 255.0
        o = overlay[:, :, c] / 255.0
        blended = alpha * o + inv * b
        channel = np.clip(np.rint(blended * 255.0), 0.0, 255.0).astype(np.uint8)
        channel = np.where(alpha == 0.0, base[:, :, c], channel)
        channel = np.where(alpha == 1.0, overlay[:, :, c], channel)
        out[:, :, c] = channel
    return out


def _disc(radius: int) -> np.ndarray:
    span = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    return (dy * dy + dx * dx) <= radius * radius


def binary_dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Dilate a 0/1 mask with a disc of the given integer radius."""
    if radius == 0:
        return mask.copy()
    dilated = ndimage.binary_dilation(mask.astype(bool), structure=_disc(radius))
    return dilated.astype(np.uint8)


def feather_alpha(mask: np.ndarray, feather: int) -> np.ndarray:
    """Linear falloff from 1 inside the mask to 0 at `feather` pixels out.

    Uses the exact Euclidean distance to the nearest set pixel; feather 0
    returns the mask itself as float.
    """
    if feather == 0:
        return mask.astype(np.float64)
    if not mask.any():
        return np.zeros(mask.shape, dtype=np.float64)
    dist = ndimage.distance_transform_edt(1 - mask)
    alpha = 1.0 - dist / float(feather)
    return np.clip(alpha, 0.0, 1.0)


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared error of two 8-bit images on the [0, 1] intensity scale.

    Accumulated in integers so the result is exact.
    """
    diff = a.astype(np.int64) - b.astype(np.int64)
    total = int(np.sum(diff * diff))
    return total / (diff.size * 65025.0)


def mse_masked(a: np.ndarray, b: np.ndarray, region: np.ndarray) -> float:
    """MSE restricted to pixels where region is set. Region must be nonempty."""
    sel = region.astype(bool)
    diff = a[sel].astype(np.int64) - b[sel].astype(np.int64)
    total = int(np.sum(diff * diff))
    return total / (diff.size * 65025.0)


def connected_component(field: np.ndarray, y: int, x: int) -> np.ndarray:
    """4-connected component of set pixels containing (y, x), as a 0/1 mask."""
    if not field[y, x]:
        return np.zeros(field.shape, dtype=np.uint8)
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    labels, _ = ndimage.label(field.astype(bool), structure=structure)
    return (labels == labels[y, x]).astype(np.uint8)
