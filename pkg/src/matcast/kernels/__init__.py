"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy backend is
the fallback and the reference. ``MATCAST_KERNELS=numpy|native`` forces a
choice (``native`` raises if the extension is missing). Both backends are
exercised against each other in the test suite and in
``benchmarks/bench_kernels.py``.
"""

import os

from matcast.kernels import numpy_backend

try:
    from matcast.kernels import _native
except ImportError:
    _native = None

_FORCED = os.environ.get("MATCAST_KERNELS", "auto").lower()
if _FORCED == "numpy":
    _impl = numpy_backend
elif _FORCED == "native":
    if _native is None:
        raise ImportError(
            "MATCAST_KERNELS=native but the matcast.kernels._native extension "
            "is not built; install with the Cython build or unset the variable"
        )
    _impl = _native
else:
    _impl = _native if _native is not None else numpy_backend


def active_backend() -> str:
    """Name of the backend serving kernel calls: 'native' or 'numpy'."""
    return _impl.NAME


def available_backends() -> tuple[str, ...]:
    return ("native", "numpy") if _native is not None else ("numpy",)


def get_backend(name: str):
    """Fetch a backend module by name, for cross-checking and benchmarks."""
    if name == "numpy":
        return numpy_backend
    if name == "native":
        if _native is None:
            raise ImportError("native kernel extension is not built")
        return _native
    raise ValueError(f"unknown kernel backend {name!r}")


def luma_bt601(image):
    return _impl.luma_bt601(image)


def compose_grayscale(image, mask):
    return _impl.compose_grayscale(image, mask)


def blend_masked(base, overlay, alpha):
    return _impl.blend_masked(base, overlay, alpha)


def binary_dilate(mask, radius):
    return _impl.binary_dilate(mask, radius)


def feather_alpha(mask, feather):
    return _impl.feather_alpha(mask, feather)


def mse(a, b):
    return _impl.mse(a, b)


def mse_masked(a, b, region):
    return _impl.mse_masked(a, b, region)


def connected_component(field, y, x):
    return _impl.connected_component(field, y, x)
