# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-bin percentile kernel.

Counting-sorts points into their flat bins, orders every bin segment by
(height, source index) with an in-place quicksort, and extracts evenly
spaced order statistics.  Must stay bitwise-compatible with the numpy
fallback in ``_binned``; the rank and interpolation arithmetic below is
written to match it operation for operation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


cdef inline bint _less(double ha, cnp.int64_t sa, double hb, cnp.int64_t sb) noexcept nogil:
    # ties in height are broken by source index; keys are therefore distinct
    return ha < hb or (ha == hb and sa < sb)


cdef inline void _swap(double* h, cnp.int64_t* s, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    cdef double th = h[a]
    cdef cnp.int64_t ts = s[a]
    h[a] = h[b]
    s[a] = s[b]
    h[b] = th
    s[b] = ts


cdef void _insertion_sort(double* h, cnp.int64_t* s, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double kh
    cdef cnp.int64_t ks
    for i in range(lo + 1, hi):
        kh = h[i]
        ks = s[i]
        j = i - 1
        while j >= lo and _less(kh, ks, h[j], s[j]):
            h[j + 1] = h[j]
            s[j + 1] = s[j]
            j -= 1
        h[j + 1] = kh
        s[j + 1] = ks


cdef void _sort_segment(double* h, cnp.int64_t* s, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    # iterative quicksort, median-of-three pivot, insertion sort below 16;
    # the larger partition is deferred so the stack stays O(log n)
    cdef Py_ssize_t stack_lo[64]
    cdef Py_ssize_t stack_hi[64]
    cdef int top = 1
    cdef Py_ssize_t l, r, mid, i, j
    cdef double ph
    cdef cnp.int64_t ps
    stack_lo[0] = lo
    stack_hi[0] = hi
    while top > 0:
        top -= 1
        l = stack_lo[top]
        r = stack_hi[top]
        while r - l > 16:
            mid = l + (r - l) // 2
            if _less(h[mid], s[mid], h[l], s[l]):
                _swap(h, s, l, mid)
            if _less(h[r - 1], s[r - 1], h[l], s[l]):
                _swap(h, s, l, r - 1)
            if _less(h[r - 1], s[r - 1], h[mid], s[mid]):
                _swap(h, s, mid, r - 1)
            ph = h[mid]
            ps = s[mid]
            i = l - 1
            j = r
            while True:
                i += 1
                while _less(h[i], s[i], ph, ps):
                    i += 1
                j -= 1
                while _less(ph, ps, h[j], s[j]):
                    j -= 1
                if i >= j:
                    break
                _swap(h, s, i, j)
            if (j + 1 - l) > (r - j - 1):
                stack_lo[top] = l
                stack_hi[top] = j + 1
                top += 1
                l = j + 1
            else:
                stack_lo[top] = j + 1
                stack_hi[top] = r
                top += 1
                r = j + 1
        _insertion_sort(h, s, l, r)


def bin_percentiles(bin_ids, heights, Py_ssize_t n_bins, int layers,
                    bint nearest_rank, double fill):
    """Compiled twin of :func:`gridshape._binned.bin_percentiles`."""
    if layers < 1:
        raise ValueError("layers must be >= 1")
    ids_arr = np.ascontiguousarray(bin_ids, dtype=np.int64)
    h_arr = np.ascontiguousarray(heights, dtype=np.float64)
    if ids_arr.shape != h_arr.shape or ids_arr.ndim != 1:
        raise ValueError("bin_ids and heights must be 1D arrays of equal length")

    values_arr = np.full((n_bins, layers), fill, dtype=np.float64)
    mask_arr = np.zeros(n_bins, dtype=np.uint8)
    source_arr = np.full((n_bins, layers), -1, dtype=np.int64) if nearest_rank else None
    if ids_arr.size == 0:
        return values_arr, mask_arr.view(np.bool_), source_arr
    if ids_arr.min() < 0 or ids_arr.max() >= n_bins:
        raise ValueError("bin id out of range")

    cdef cnp.int64_t[::1] bid = ids_arr
    cdef double[::1] hin = h_arr
    cdef double[:, ::1] out_v = values_arr
    cdef cnp.uint8_t[::1] out_m = mask_arr
    cdef cnp.int64_t[:, ::1] out_s
    if nearest_rank:
        out_s = source_arr

    cdef Py_ssize_t n = bid.shape[0]
    offsets_arr = np.zeros(n_bins + 1, dtype=np.int64)
    cursor_arr = np.zeros(n_bins, dtype=np.int64)
    bucket_h_arr = np.empty(n, dtype=np.float64)
    bucket_s_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] offsets = offsets_arr
    cdef cnp.int64_t[::1] cursor = cursor_arr
    cdef double[::1] bh = bucket_h_arr
    cdef cnp.int64_t[::1] bs = bucket_s_arr

    cdef Py_ssize_t i, b, k, start, end, m, qlo, qhi, q
    cdef double rank, frac
    cdef int nr = 1 if nearest_rank else 0

    with nogil:
        for i in range(n):
            offsets[bid[i] + 1] += 1
        for b in range(n_bins):
            offsets[b + 1] += offsets[b]
            cursor[b] = offsets[b]
        for i in range(n):
            b = bid[i]
            bh[cursor[b]] = hin[i]
            bs[cursor[b]] = i
            cursor[b] += 1
        for b in range(n_bins):
            start = offsets[b]
            end = offsets[b + 1]
            m = end - start
            if m == 0:
                continue
            out_m[b] = 1
            if m > 1:
                _sort_segment(&bh[0], &bs[0], start, end)
            for k in range(layers):
                if layers == 1:
                    rank = 0.0
                else:
                    rank = <double>((m - 1) * k) / <double>(layers - 1)
                if nr:
                    q = <Py_ssize_t>floor(rank + 0.5)
                    out_v[b, k] = bh[start + q]
                    out_s[b, k] = bs[start + q]
                else:
                    qlo = <Py_ssize_t>floor(rank)
                    qhi = qlo + 1
                    if qhi > m - 1:
                        qhi = m - 1
                    frac = rank - <double>qlo
                    out_v[b, k] = bh[start + qlo] + frac * (bh[start + qhi] - bh[start + qlo])

    return values_arr, mask_arr.view(np.bool_), source_arr
