# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Each function mirrors one in ``_pykernels`` bit for bit."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def diffuse_fill(double[:, :, ::1] values, unsigned char[:, ::1] known):
    """Fill unknown pixels from known 4-neighbours, one frontier per pass.

    ``values`` and ``known`` are updated in place.  Returns the pass count.
    """
    cdef Py_ssize_t h = values.shape[0], w = values.shape[1], nc = values.shape[2]
    cdef Py_ssize_t y, x, c, n_front
    cdef int cnt, passes = 0
    cdef double s
    cdef unsigned char[:, ::1] front = np.zeros((h, w), dtype=np.uint8)
    while True:
        n_front = 0
        for y in range(h):
            for x in range(w):
                if known[y, x]:
                    continue
                cnt = 0
                if y > 0 and known[y - 1, x]:
                    cnt += 1
                if y < h - 1 and known[y + 1, x]:
                    cnt += 1
                if x > 0 and known[y, x - 1]:
                    cnt += 1
                if x < w - 1 and known[y, x + 1]:
                    cnt += 1
                if cnt == 0:
                    continue
                for c in range(nc):
                    s = 0.0
                    if y > 0 and known[y - 1, x]:
                        s += values[y - 1, x, c]
                    if y < h - 1 and known[y + 1, x]:
                        s += values[y + 1, x, c]
                    if x > 0 and known[y, x - 1]:
                        s += values[y, x - 1, c]
                    if x < w - 1 and known[y, x + 1]:
                        s += values[y, x + 1, c]
                    values[y, x, c] = s / cnt
                front[y, x] = 1
                n_front += 1
        if n_front == 0:
            break
        passes += 1
        for y in range(h):
            for x in range(w):
                if front[y, x]:
                    known[y, x] = 1
                    front[y, x] = 0
    return passes


def smooth_masked(double[:, :, ::1] values, unsigned char[:, ::1] mask, int passes):
    """Replace masked pixels by the mean of themselves and their 4-neighbours."""
    cdef Py_ssize_t h = values.shape[0], w = values.shape[1], nc = values.shape[2]
    cdef Py_ssize_t y, x, c
    cdef int p, cnt
    cdef double s
    cdef double[:, :, ::1] prev = np.empty_like(np.asarray(values))
    for p in range(passes):
        prev[...] = values
        for y in range(h):
            for x in range(w):
                if not mask[y, x]:
                    continue
                cnt = 1 + (y > 0) + (y < h - 1) + (x > 0) + (x < w - 1)
                for c in range(nc):
                    s = prev[y, x, c]
                    if y > 0:
                        s += prev[y - 1, x, c]
                    if y < h - 1:
                        s += prev[y + 1, x, c]
                    if x > 0:
                        s += prev[y, x - 1, c]
                    if x < w - 1:
                        s += prev[y, x + 1, c]
                    values[y, x, c] = s / cnt


def positive_rank_sum(double[::1] sorted_scores, long[::1] sorted_labels):
    """Sum of mid-ranks (1-based, ties averaged) of the positive entries."""
    cdef Py_ssize_t n = sorted_scores.shape[0], i = 0, j, k
    cdef double total = 0.0, mid
    cdef long npos
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        mid = (i + j + 2) / 2.0
        npos = 0
        for k in range(i, j + 1):
            npos += sorted_labels[k]
        total += mid * npos
        i = j + 1
    return total
