"""Kernel backends: the compiled extension must match the numpy fallback
bit for bit, and both must match brute-force oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matcast import kernels
from matcast.kernels import get_backend, numpy_backend

needs_native = pytest.mark.skipif(
    "native" not in kernels.available_backends(), reason="native extension not built"
)

backends = [numpy_backend]
if "native" in kernels.available_backends():
    backends.append(get_backend("native"))


def _pair(rng, h, w, c):
    a = rng.integers(0, 256, (h, w, c), dtype=np.uint8)
    b = rng.integers(0, 256, (h, w, c), dtype=np.uint8)
    return a, b


# --- oracles -----------------------------------------------------------------


def dilate_oracle(mask: np.ndarray, radius: int) -> np.ndarray:
    h, w = mask.shape
    out = np.zeros_like(mask)
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            for yy in range(h):
                for xx in range(w):
                    if (yy - y) ** 2 + (xx - x) ** 2 <= radius * radius:
                        out[yy, xx] = 1
    return out


def edt_oracle(mask: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance to the nearest set pixel, brute force."""
    h, w = mask.shape
    seeds = [(y, x) for y in range(h) for x in range(w) if mask[y, x]]
    out = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            out[y, x] = math.sqrt(min((y - sy) ** 2 + (x - sx) ** 2 for sy, sx in seeds))
    return out


# --- cross-backend equality ---------------------------------------------------


@needs_native
@settings(max_examples=60, deadline=None)
@given(
    h=st.integers(1, 24),
    w=st.integers(1, 24),
    c=st.sampled_from([3, 4]),
    seed=st.integers(0, 2**32 - 1),
    radius=st.integers(0, 5),
    feather=st.integers(0, 9),
)
def test_backends_bit_identical(h, w, c, seed, radius, feather):
    native = get_backend("native")
    rng = np.random.default_rng(seed)
    a, b = _pair(rng, h, w, c)
    soft = rng.random((h, w))
    binary = (rng.random((h, w)) < 0.25).astype(np.uint8)

    assert np.array_equal(native.luma_bt601(a), numpy_backend.luma_bt601(a))
    assert np.array_equal(
        native.compose_grayscale(a, soft), numpy_backend.compose_grayscale(a, soft)
    )
    assert np.array_equal(
        native.blend_masked(a, b, soft), numpy_backend.blend_masked(a, b, soft)
    )
    assert np.array_equal(
        native.binary_dilate(binary, radius), numpy_backend.binary_dilate(binary, radius)
    )
    assert np.array_equal(
        native.feather_alpha(binary, feather), numpy_backend.feather_alpha(binary, feather)
    )
    assert native.mse(a, b) == numpy_backend.mse(a, b)
    if binary.any():
        assert native.mse_masked(a, b, binary) == numpy_backend.mse_masked(a, b, binary)
        ys, xs = np.nonzero(binary)
        y, x = int(ys[0]), int(xs[0])
        assert np.array_equal(
            native.connected_component(binary, y, x),
            numpy_backend.connected_component(binary, y, x),
        )


# --- per-kernel oracle checks --------------------------------------------------


@pytest.mark.parametrize("impl", backends, ids=lambda m: m.NAME)
def test_dilate_matches_bruteforce(impl, rng):
    for _ in range(20):
        mask = (rng.random((7, 9)) < 0.2).astype(np.uint8)
        radius = int(rng.integers(0, 4))
        assert np.array_equal(impl.binary_dilate(mask, radius), dilate_oracle(mask, radius))


@pytest.mark.parametrize("impl", backends, ids=lambda m: m.NAME)
def test_feather_alpha_matches_edt_oracle(impl, rng):
    for _ in range(20):
        mask = (rng.random((8, 8)) < 0.2).astype(np.uint8)
        if not mask.any():
            continue
        feather = int(rng.integers(1, 6))
        expected = np.clip(1.0 - edt_oracle(mask) / feather, 0.0, 1.0)
        assert np.array_equal(impl.feather_alpha(mask, feather), expected)


@pytest.mark.parametrize("impl", backends, ids=lambda m: m.NAME)
def test_feather_alpha_edges(impl):
    mask = np.zeros((5, 5), dtype=np.uint8)
    assert np.array_equal(impl.feather_alpha(mask, 3), np.zeros((5, 5)))
    mask[2, 2] = 1
    alpha = impl.feather_alpha(mask, 0)
    assert np.array_equal(alpha, mask.astype(np.float64))
    alpha = impl.feather_alpha(mask, 2)
    assert alpha[2, 2] == 1.0
    assert alpha[2, 3] == 0.5
    assert alpha[0, 0] == 0.0


@pytest.mark.parametrize("impl", backends, ids=lambda m: m.NAME)
def test_mse_exact_integers(impl):
    a = np.zeros((4, 4, 3), dtype=np.uint8)
    b = np.full((4, 4, 3), 255, dtype=np.uint8)
    assert impl.mse(a, b) == 1.0
    assert impl.mse(a, a) == 0.0


@pytest.mark.parametrize("impl", backends, ids=lambda m: m.NAME)
def test_connected_component_shapes(impl):
    field = np.array(
        [
            [1, 1, 0, 1],
            [0, 1, 0, 1],
            [0, 0, 0, 1],
            [1, 0, 1, 1],
        ],
        dtype=np.uint8,
    )
    left = impl.connected_component(field, 0, 0)
    assert left.sum() == 3 and left[0, 0] and left[0, 1] and left[1, 1]
    right = impl.connected_component(field, 0, 3)
    assert right.sum() == 5
    assert impl.connected_component(field, 1, 0).sum() == 0


def test_backend_selection_api():
    assert kernels.active_backend() in kernels.available_backends()
    with pytest.raises(ValueError):
        kernels.get_backend("cuda")
