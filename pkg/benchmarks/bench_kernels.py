#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the numpy fallback.

Asserts bit-identical outputs first, then times each kernel at a few
canvas sizes. Run with:

    python benchmarks/bench_kernels.py [--sizes 256,512,1024] [--repeats 5]
"""

import argparse
import time

import numpy as np

from matcast import kernels


def make_inputs(rng, size):
    image = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
    other = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
    soft = rng.random((size, size))
    binary = np.zeros((size, size), dtype=np.uint8)
    span = size // 3
    binary[span : 2 * span, span : 2 * span] = 1
    return image, other, soft, binary


def cases(image, other, soft, binary):
    yield "luma_bt601", lambda impl: impl.luma_bt601(image)
    yield "compose_grayscale", lambda impl: impl.compose_grayscale(image, soft)
    yield "blend_masked", lambda impl: impl.blend_masked(image, other, soft)
    yield "binary_dilate(r=4)", lambda impl: impl.binary_dilate(binary, 4)
    yield "feather_alpha(f=8)", lambda impl: impl.feather_alpha(binary, 8)
    yield "mse", lambda impl: impl.mse(image, other)
    yield "connected_component", lambda impl: impl.connected_component(
        binary, binary.shape[0] // 2, binary.shape[1] // 2
    )


def best_of(fn, impl, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(impl)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="256,512,1024")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    available = kernels.available_backends()
    if "native" not in available:
        print("native extension not built; nothing to compare (numpy fallback only)")
        return
    native = kernels.get_backend("native")
    fallback = kernels.get_backend("numpy")
    rng = np.random.default_rng(0)

    print(f"{'kernel':<24} {'size':>6} {'numpy':>12} {'native':>12} {'speedup':>9}")
    print("-" * 68)
    for size in (int(s) for s in args.sizes.split(",")):
        inputs = make_inputs(rng, size)
        for name, fn in cases(*inputs):
            a = fn(native)
            b = fn(fallback)
            if isinstance(a, np.ndarray):
                assert np.array_equal(a, b), f"{name}@{size}: backends disagree"
            else:
                assert a == b, f"{name}@{size}: backends disagree"
            t_numpy = best_of(fn, fallback, args.repeats)
            t_native = best_of(fn, native, args.repeats)
            print(
                f"{name:<24} {size:>6} {t_numpy * 1e3:>10.2f}ms {t_native * 1e3:>10.2f}ms "
                f"{t_numpy / t_native:>8.1f}x"
            )


if __name__ == "__main__":
    main()
