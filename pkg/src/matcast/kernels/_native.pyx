# cython: language_level=3
"""Compiled implementations of the hot pixel kernels.

Mirrors ``numpy_backend`` operation for operation; float expressions keep
the same shape and order (and the extension is built with
``-ffp-contract=off``) so both backends produce bit-identical output.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport rint, sqrt

cnp.import_array()

NAME = "native"

cdef double WR = 0.299
cdef double WG = 0.587
cdef double WB = 0.114

# Sentinel for "no seed in this column"; larger than any real squared
# distance but still exact in double arithmetic.
cdef double FAR = 1e6


def luma_bt601(const unsigned char[:, :, ::1] image not None):
    cdef Py_ssize_t h = image.shape[0], w = image.shape[1]
    out = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] y = out
    cdef Py_ssize_t i, j
    cdef double r, g, b
    for i in range(h):
        for j in range(w):
            r = image[i, j, 0] / 255.0
            g = image[i, j, 1] / 255.0
            b = image[i, j, 2] / 255.0
            y[i, j] = WR * r + WG * g + WB * b
    return out


cdef inline unsigned char _quantize(double value):
    cdef double q = rint(value * 255.0)
    if q < 0.0:
        q = 0.0
    elif q > 255.0:
        q = 255.0
    return <unsigned char> q


def compose_grayscale(const unsigned char[:, :, ::1] image not None,
                      const double[:, ::1] mask not None):
    cdef Py_ssize_t h = image.shape[0], w = image.shape[1], c = image.shape[2]
    out = np.empty((h, w, c), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double r, g, b, y, f, inv, v
    for i in range(h):
        for j in range(w):
            r = image[i, j, 0] / 255.0
            g = image[i, j, 1] / 255.0
            b = image[i, j, 2] / 255.0
            y = WR * r + WG * g + WB * b
            f = mask[i, j]
            inv = 1.0 - f
            for k in range(3):
                v = image[i, j, k] / 255.0
                o[i, j, k] = _quantize(f * y + inv * v)
            if c == 4:
                o[i, j, 3] = image[i, j, 3]
    return out


def blend_masked(const unsigned char[:, :, ::1] base not None,
                 const unsigned char[:, :, ::1] overlay not None,
                 const double[:, ::1] alpha not None):
    cdef Py_ssize_t h = base.shape[0], w = base.shape[1], c = base.shape[2]
    out = np.empty((h, w, c), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double a, inv, bv, ov
    for i in range(h):
        for j in range(w):
            a = alpha[i, j]
            if a == 0.0:
                for k in range(c):
                    o[i, j, k] = base[i, j, k]
            elif a == 1.0:
                for k in range(c):
                    o[i, j, k] = overlay[i, j, k]
            else:
                inv = 1.0 - a
                for k in range(c):
                    bv = base[i, j, k] / 255.0
                    ov = overlay[i, j, k] / 255.0
                    o[i, j, k] = _quantize(a * ov + inv * bv)
    return out


def binary_dilate(const unsigned char[:, ::1] mask not None, int radius):
    cdef Py_ssize_t h = mask.shape[0], w = mask.shape[1]
    out = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef int dy, dx, yy, xx, r2 = radius * radius
    if radius == 0:
        for i in range(h):
            for j in range(w):
                o[i, j] = mask[i, j]
        return out
    for i in range(h):
        for j in range(w):
            if mask[i, j]:
                for dy in range(-radius, radius + 1):
                    yy = <int> i + dy
                    if yy < 0 or yy >= h:
                        continue
                    for dx in range(-radius, radius + 1):
                        if dy * dy + dx * dx > r2:
                            continue
                        xx = <int> j + dx
                        if xx < 0 or xx >= w:
                            continue
                        o[yy, xx] = 1
    return out


cdef void _dt1d(double* f, double* d, int* v, double* z, Py_ssize_t n) noexcept nogil:
    """1D squared distance transform (lower envelope of parabolas)."""
    cdef Py_ssize_t q
    cdef int k = 0
    cdef double s
    v[0] = 0
    z[0] = -1e30
    z[1] = 1e30
    for q in range(1, n):
        s = ((f[q] + q * q) - (f[v[k]] + <double>(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + <double>(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k])
        k += 1
        v[k] = <int> q
        z[k] = s
        z[k + 1] = 1e30
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d[q] = (q - v[k]) * (q - v[k]) + f[v[k]]


def feather_alpha(const unsigned char[:, ::1] mask not None, int feather):
    cdef Py_ssize_t h = mask.shape[0], w = mask.shape[1]
    cdef Py_ssize_t i, j
    out = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] o = out

    if feather == 0:
        for i in range(h):
            for j in range(w):
                o[i, j] = <double> mask[i, j]
        return out

    cdef bint any_set = False
    for i in range(h):
        for j in range(w):
            if mask[i, j]:
                any_set = True
                break
        if any_set:
            break
    if not any_set:
        out[:] = 0.0
        return out

    # Pass 1: per-column vertical distances to the nearest set pixel.
    g_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] g = g_arr
    cdef double acc
    for j in range(w):
        acc = FAR
        for i in range(h):
            if mask[i, j]:
                acc = 0.0
            elif acc < FAR:
                acc = acc + 1.0
            g[i, j] = acc
        acc = FAR
        for i in range(h - 1, -1, -1):
            if mask[i, j]:
                acc = 0.0
            elif acc < FAR:
                acc = acc + 1.0
            if acc < g[i, j]:
                g[i, j] = acc

    # Pass 2: exact squared EDT per row, then the linear falloff.
    f_arr = np.empty(w, dtype=np.float64)
    d_arr = np.empty(w, dtype=np.float64)
    v_arr = np.empty(w, dtype=np.int32)
    z_arr = np.empty(w + 1, dtype=np.float64)
    cdef double[::1] fv = f_arr
    cdef double[::1] dv = d_arr
    cdef int[::1] vv = v_arr
    cdef double[::1] zv = z_arr
    cdef double dist, a, ff = feather
    for i in range(h):
        for j in range(w):
            fv[j] = g[i, j] * g[i, j]
        _dt1d(&fv[0], &dv[0], &vv[0], &zv[0], w)
        for j in range(w):
            dist = sqrt(dv[j])
            a = 1.0 - dist / ff
            if a < 0.0:
                a = 0.0
            elif a > 1.0:
                a = 1.0
            o[i, j] = a
    return out


def mse(const unsigned char[:, :, ::1] a not None,
        const unsigned char[:, :, ::1] b not None):
    cdef Py_ssize_t h = a.shape[0], w = a.shape[1], c = a.shape[2]
    cdef Py_ssize_t i, j, k
    cdef long long total = 0, diff
    for i in range(h):
        for j in range(w):
            for k in range(c):
                diff = <long long> a[i, j, k] - <long long> b[i, j, k]
                total += diff * diff
    return total / (<double>(h * w * c) * 65025.0)


def mse_masked(const unsigned char[:, :, ::1] a not None,
               const unsigned char[:, :, ::1] b not None,
               const unsigned char[:, ::1] region not None):
    cdef Py_ssize_t h = a.shape[0], w = a.shape[1], c = a.shape[2]
    cdef Py_ssize_t i, j, k
    cdef long long total = 0, count = 0, diff
    for i in range(h):
        for j in range(w):
            if region[i, j]:
                count += c
                for k in range(c):
                    diff = <long long> a[i, j, k] - <long long> b[i, j, k]
                    total += diff * diff
    return total / (<double> count * 65025.0)


def connected_component(const unsigned char[:, ::1] field not None, int y, int x):
    cdef Py_ssize_t h = field.shape[0], w = field.shape[1]
    out = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] o = out
    if not field[y, x]:
        return out
    stack_arr = np.empty(h * w, dtype=np.int64)
    cdef long long[::1] stack = stack_arr
    cdef Py_ssize_t top = 0
    cdef long long pos
    cdef Py_ssize_t cy, cx
    stack[top] = <long long> y * w + x
    top += 1
    o[y, x] = 1
    while top > 0:
        top -= 1
        pos = stack[top]
        cy = <Py_ssize_t> (pos // w)
        cx = <Py_ssize_t> (pos % w)
        if cy > 0 and field[cy - 1, cx] and not o[cy - 1, cx]:
            o[cy - 1, cx] = 1
            stack[top] = pos - w
            top += 1
        if cy < h - 1 and field[cy + 1, cx] and not o[cy + 1, cx]:
            o[cy + 1, cx] = 1
            stack[top] = pos + w
            top += 1
        if cx > 0 and field[cy, cx - 1] and not o[cy, cx - 1]:
            o[cy, cx - 1] = 1
            stack[top] = pos - 1
            top += 1
        if cx < w - 1 and field[cy, cx + 1] and not o[cy, cx + 1]:
            o[cy, cx + 1] = 1
            stack[top] = pos + 1
            top += 1
    return out
